#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "semloc/error.hpp"
#include "semloc/geometry.hpp"
#include "semloc/matching.hpp"
#include "semloc/ransac.hpp"
#include "semloc/semantic.hpp"

namespace semloc {

struct RetrievalCandidate {
  int image_id = -1;
  double global_distance = 0.0;
  CandidateScore score;
  std::optional<Mat3> homography;
  std::optional<Pose> pose_estimate;
  double mu = 1.0;
};

struct DatabaseDescriptor {
  int image_id = -1;
  Eigen::VectorXd values;
};

// k nearest database images by global-descriptor distance, ascending;
// distance ties break on the lower image id.
inline std::vector<RetrievalCandidate> Retrieve(
    const Eigen::VectorXd& query_gd, const std::vector<DatabaseDescriptor>& db,
    int k) {
  if (k < 0 || k > static_cast<int>(db.size())) {
    throw Error(ErrorCode::kInvalidArgument,
                "k must be in [0, database size]");
  }
  std::vector<RetrievalCandidate> all;
  all.reserve(db.size());
  for (const DatabaseDescriptor& d : db) {
    if (d.values.size() != query_gd.size()) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "global descriptor dims differ");
    }
    RetrievalCandidate c;
    c.image_id = d.image_id;
    c.global_distance = (d.values - query_gd).norm();
    all.push_back(c);
  }
  std::sort(all.begin(), all.end(),
            [](const RetrievalCandidate& a, const RetrievalCandidate& b) {
              if (a.global_distance != b.global_distance) {
                return a.global_distance < b.global_distance;
              }
              return a.image_id < b.image_id;
            });
  all.resize(k);
  return all;
}

struct VerifyResult {
  std::optional<Mat3> homography;
  int s_c = 0;
  std::vector<int> inlier_indices;  // indices into the match list
};

// Homography consensus between query pixels and candidate pixels; the inlier
// count is the S_c of the SCW. Fewer than 4 matches (or a consensus failure)
// yields s_c = 0 and no homography.
inline VerifyResult GeometricVerify(const std::vector<Pixel>& query_px,
                                    const std::vector<Pixel>& cand_px,
                                    const std::vector<Match>& matches,
                                    const RansacConfig& cfg) {
  VerifyResult result;
  if (matches.size() < 4) return result;

  std::vector<Pixel> src, dst;
  src.reserve(matches.size());
  dst.reserve(matches.size());
  for (const Match& m : matches) {
    src.push_back(query_px[m.query_idx]);
    dst.push_back(cand_px[m.train_idx]);
  }
  try {
    const HomographyAdapter adapter(src, dst);
    const auto hypothesis =
        Consensus(adapter, UniformSamples(static_cast<int>(matches.size())),
                  cfg, ConsensusMode::kStandard);
    result.homography = hypothesis.model;
    result.s_c = static_cast<int>(hypothesis.inlier_indices.size());
    result.inlier_indices = hypothesis.inlier_indices;
  } catch (const Error&) {
    result = VerifyResult{};
  }
  return result;
}

// Sort candidates by SCW descending (ties: higher s_c, then lower image id),
// keep the best `keep`, and assign each kept candidate its reduction ratio
// via NormalizeScw over the kept set.
inline std::vector<RetrievalCandidate> Rerank(
    std::vector<RetrievalCandidate> candidates, const ScwParams& params,
    int keep, double mu_min = 0.25) {
  params.Validate();
  for (RetrievalCandidate& c : candidates) {
    c.score.s_r = Scw(c.score.s_c, c.score.s_f, params);
  }
  std::sort(candidates.begin(), candidates.end(),
            [](const RetrievalCandidate& a, const RetrievalCandidate& b) {
              if (a.score.s_r != b.score.s_r) return a.score.s_r > b.score.s_r;
              if (a.score.s_c != b.score.s_c) return a.score.s_c > b.score.s_c;
              return a.image_id < b.image_id;
            });
  if (static_cast<int>(candidates.size()) > keep) candidates.resize(keep);
  if (!candidates.empty()) {
    std::vector<double> scores;
    scores.reserve(candidates.size());
    for (const RetrievalCandidate& c : candidates) scores.push_back(c.score.s_r);
    const std::vector<double> mu = NormalizeScw(scores, mu_min);
    for (size_t i = 0; i < candidates.size(); ++i) candidates[i].mu = mu[i];
  }
  return candidates;
}

struct CandidateRejectionConfig {
  double min_inlier_ratio = 0.15;  // s_c / matches acceptance floor
  double min_overlap_area_frac = 0.01;
};

// Accepts candidates whose homography explains at least min_inlier_ratio of
// their matches and maps the query frame onto a non-degenerate overlap
// region. Candidates without a homography are rejected outright.
inline std::vector<RetrievalCandidate> ClusterCandidateRejection(
    const std::vector<RetrievalCandidate>& candidates,
    const std::vector<int>& match_counts, int image_width, int image_height,
    const CandidateRejectionConfig& cfg = {}) {
  if (candidates.size() != match_counts.size()) {
    throw Error(ErrorCode::kLengthMismatch,
                "match_counts does not match candidates");
  }
  std::vector<RetrievalCandidate> accepted;
  for (size_t i = 0; i < candidates.size(); ++i) {
    const RetrievalCandidate& c = candidates[i];
    if (!c.homography.has_value() || match_counts[i] <= 0) continue;
    const double ratio = static_cast<double>(c.score.s_c) /
                         static_cast<double>(match_counts[i]);
    if (ratio < cfg.min_inlier_ratio) continue;

    // Image corners through H; reject mappings that collapse or blow up.
    const Mat3& h = *c.homography;
    const double w = static_cast<double>(image_width);
    const double hh = static_cast<double>(image_height);
    const std::array<Vec3, 4> corners = {Vec3(0, 0, 1), Vec3(w, 0, 1),
                                         Vec3(w, hh, 1), Vec3(0, hh, 1)};
    bool finite = true;
    std::array<Vec2, 4> mapped;
    for (int j = 0; j < 4; ++j) {
      const Vec3 p = h * corners[j];
      if (std::abs(p.z()) < 1e-9) {
        finite = false;
        break;
      }
      mapped[j] = Vec2(p.x() / p.z(), p.y() / p.z());
    }
    if (!finite) continue;
    double area2 = 0.0;  // shoelace, twice the signed area
    for (int j = 0; j < 4; ++j) {
      const Vec2& a = mapped[j];
      const Vec2& b = mapped[(j + 1) % 4];
      area2 += a.x() * b.y() - b.x() * a.y();
    }
    if (std::abs(area2) * 0.5 < cfg.min_overlap_area_frac * w * hh) continue;
    accepted.push_back(c);
  }
  return accepted;
}

struct PoseCluster {
  std::vector<int> member_ids;  // indices into the input estimate list
  Pose centroid_pose;           // medoid member
  double trans_radius = 0.0;    // max center distance medoid -> member
  double rot_radius = 0.0;      // max rotation angle medoid -> member, degrees
};

// Connected-components clustering of pose estimates: two poses link when
// their delta is within (trans_eps, rot_eps_deg). Returns the largest
// component; equal sizes break on lower mean pairwise translation distance,
// then on lexicographically smaller member ids.
inline PoseCluster ClusterPoses(const std::vector<Pose>& estimates,
                                double trans_eps, double rot_eps_deg) {
  const int n = static_cast<int>(estimates.size());
  if (n == 0) {
    throw Error(ErrorCode::kInvalidArgument, "need at least one estimate");
  }

  std::vector<int> component(n, -1);
  int n_components = 0;
  for (int i = 0; i < n; ++i) {
    if (component[i] >= 0) continue;
    const int id = n_components++;
    std::vector<int> stack = {i};
    component[i] = id;
    while (!stack.empty()) {
      const int cur = stack.back();
      stack.pop_back();
      for (int j = 0; j < n; ++j) {
        if (component[j] >= 0) continue;
        const PoseDelta d = ComputePoseDelta(estimates[cur], estimates[j]);
        if (d.translation <= trans_eps && d.rotation_deg <= rot_eps_deg) {
          component[j] = id;
          stack.push_back(j);
        }
      }
    }
  }

  std::vector<std::vector<int>> members(n_components);
  for (int i = 0; i < n; ++i) members[component[i]].push_back(i);

  const auto mean_pairwise = [&](const std::vector<int>& ids) {
    if (ids.size() < 2) return 0.0;
    double sum = 0.0;
    int count = 0;
    for (size_t a = 0; a < ids.size(); ++a) {
      for (size_t b = a + 1; b < ids.size(); ++b) {
        sum += ComputePoseDelta(estimates[ids[a]], estimates[ids[b]]).translation;
        ++count;
      }
    }
    return sum / static_cast<double>(count);
  };

  int best = 0;
  double best_spread = mean_pairwise(members[0]);
  for (int c = 1; c < n_components; ++c) {
    const double spread = mean_pairwise(members[c]);
    if (members[c].size() > members[best].size() ||
        (members[c].size() == members[best].size() &&
         (spread < best_spread ||
          (spread == best_spread && members[c] < members[best])))) {
      best = c;
      best_spread = spread;
    }
  }

  PoseCluster cluster;
  cluster.member_ids = members[best];

  // Medoid: member with the lowest mean translation distance to the rest.
  int medoid = cluster.member_ids.front();
  double medoid_cost = kInfinity;
  for (int candidate : cluster.member_ids) {
    double cost = 0.0;
    for (int other : cluster.member_ids) {
      cost += ComputePoseDelta(estimates[candidate], estimates[other]).translation;
    }
    if (cost < medoid_cost) {
      medoid_cost = cost;
      medoid = candidate;
    }
  }
  cluster.centroid_pose = estimates[medoid];
  for (int member : cluster.member_ids) {
    const PoseDelta d = ComputePoseDelta(cluster.centroid_pose, estimates[member]);
    cluster.trans_radius = std::max(cluster.trans_radius, d.translation);
    cluster.rot_radius = std::max(cluster.rot_radius, d.rotation_deg);
  }
  return cluster;
}

}  // namespace semloc
