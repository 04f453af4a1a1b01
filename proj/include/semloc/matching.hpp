#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "semloc/error.hpp"
#include "semloc/geometry.hpp"

namespace semloc {

struct Keypoint {
  double u = 0.0;
  double v = 0.0;
  double score = 1.0;   // detection / descriptor confidence in [0,1]
  std::string family;   // extractor identifier
  int label = -1;       // semantic class id, -1 = unlabeled

  Pixel AsPixel() const { return Pixel{u, v}; }
};

struct Descriptor {
  Eigen::VectorXd values;
  std::string family;
};

// Scales every component by the detection score (d' = d * s). The enhanced
// norm equals s, so low-confidence descriptors sit near the origin and lose
// nearest-neighbor contests against confident ones.
inline Descriptor EnhanceDescriptor(const Descriptor& d, double score) {
  if (!(score >= 0.0) || !(score <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "score must be in [0,1]");
  }
  return Descriptor{d.values * score, d.family};
}

struct Match {
  int query_idx = 0;
  int train_idx = 0;
  double distance = 0.0;
  double weight = 0.0;  // consistency weight, filled by the pipeline
};

struct MatcherOptions {
  double ratio = 0.85;  // Lowe ratio, pair kept iff d1/d2 < ratio
  bool mutual = true;   // require the reverse nearest neighbor to agree
};

// Exact nearest-neighbor matching with ratio test. With mutual=true the
// ratio test runs in both directions and the reverse nearest neighbor must
// point back, which makes the output symmetric in (query, train).
// Zero-norm descriptors never participate. One match per query keypoint,
// sorted by query index.
inline std::vector<Match> MatchDescriptors(const std::vector<Descriptor>& query,
                                           const std::vector<Descriptor>& train,
                                           const MatcherOptions& opts = {}) {
  if (!(opts.ratio > 0.0) || !(opts.ratio <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "ratio must be in (0,1]");
  }
  for (const Descriptor& d : query) {
    if (!train.empty() && d.family != train.front().family) {
      throw Error(ErrorCode::kFamilyMismatch,
                  "query family '" + d.family + "' vs train family '" +
                      train.front().family + "'");
    }
  }
  std::vector<Match> matches;
  if (query.empty() || train.empty()) return matches;

  const int nq = static_cast<int>(query.size());
  const int nt = static_cast<int>(train.size());
  const int dim = static_cast<int>(query.front().values.size());
  for (const Descriptor& d : train) {
    if (d.values.size() != dim) {
      throw Error(ErrorCode::kDimensionMismatch, "descriptor dims differ");
    }
  }

  Eigen::MatrixXd q(dim, nq), t(dim, nt);
  std::vector<char> q_ok(nq, 1), t_ok(nt, 1);
  for (int i = 0; i < nq; ++i) {
    if (query[i].values.size() != dim) {
      throw Error(ErrorCode::kDimensionMismatch, "descriptor dims differ");
    }
    q.col(i) = query[i].values;
    if (query[i].values.norm() < 1e-12) q_ok[i] = 0;
  }
  for (int j = 0; j < nt; ++j) {
    t.col(j) = train[j].values;
    if (train[j].values.norm() < 1e-12) t_ok[j] = 0;
  }

  // Squared distances via the expansion |a-b|^2 = |a|^2 + |b|^2 - 2 a.b.
  const Eigen::VectorXd qn = q.colwise().squaredNorm();
  const Eigen::VectorXd tn = t.colwise().squaredNorm();
  Eigen::MatrixXd d2 = (-2.0 * (q.transpose() * t));
  d2.colwise() += qn;
  d2.rowwise() += tn.transpose();
  d2 = d2.cwiseMax(0.0);

  struct TwoBest {
    int best = -1;
    double d1 = kInfinity;
    double d2 = kInfinity;
  };
  std::vector<TwoBest> fwd(nq), rev(nt);
  for (int i = 0; i < nq; ++i) {
    if (!q_ok[i]) continue;
    for (int j = 0; j < nt; ++j) {
      if (!t_ok[j]) continue;
      const double d = d2(i, j);
      if (d < fwd[i].d1) {
        fwd[i].d2 = fwd[i].d1;
        fwd[i].d1 = d;
        fwd[i].best = j;
      } else if (d < fwd[i].d2) {
        fwd[i].d2 = d;
      }
      if (d < rev[j].d1) {
        rev[j].d2 = rev[j].d1;
        rev[j].d1 = d;
        rev[j].best = i;
      } else if (d < rev[j].d2) {
        rev[j].d2 = d;
      }
    }
  }

  const auto ratio_ok = [&opts](const TwoBest& b) {
    if (b.best < 0) return false;
    if (!std::isfinite(b.d2)) return true;  // single candidate
    const double d1 = std::sqrt(b.d1);
    const double d2v = std::sqrt(b.d2);
    if (d2v == 0.0) return false;  // tied at zero distance
    return d1 / d2v < opts.ratio;
  };

  for (int i = 0; i < nq; ++i) {
    if (!ratio_ok(fwd[i])) continue;
    const int j = fwd[i].best;
    if (opts.mutual) {
      if (rev[j].best != i || !ratio_ok(rev[j])) continue;
    }
    // Exact recomputation; the matmul expansion above leaves ~1e-8 residue
    // on identical descriptors.
    const double distance = (query[i].values - train[j].values).norm();
    matches.push_back(Match{i, j, distance, 0.0});
  }
  return matches;
}

// A 2D-3D correspondence lifted through the map: a query keypoint paired with
// a map point, annotated with everything downstream stages consume.
struct PointMatch {
  int query_idx = 0;        // index into the query keypoint list
  std::int64_t point_id = 0;
  Pixel pixel;              // query keypoint location
  WorldPoint xyz = WorldPoint::Zero();
  double distance = 0.0;    // descriptor distance
  double mu = 1.0;          // reduction ratio inherited from the candidate
  double weight = 1.0;      // bias-sampling weight
  int query_label = -1;
  int point_label = -1;
  int source_image = -1;    // candidate image the match came from
};

// Removes near-duplicates: two matches collapse when they reference the same
// 3D point and their query keypoints are within dedupe_radius; the
// lower-distance one survives. Order of survivors follows the input.
inline std::vector<PointMatch> DedupePointMatches(
    const std::vector<PointMatch>& matches, double dedupe_radius) {
  std::vector<PointMatch> result;
  std::map<std::int64_t, std::vector<int>> kept_by_point;
  std::vector<char> removed(matches.size(), 0);

  // Pick winners per (point, neighborhood) by distance; ties keep the
  // earlier entry.
  std::vector<int> order(matches.size());
  for (size_t i = 0; i < matches.size(); ++i) order[i] = static_cast<int>(i);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return matches[a].distance < matches[b].distance;
  });

  for (int idx : order) {
    const PointMatch& m = matches[idx];
    auto& kept = kept_by_point[m.point_id];
    bool duplicate = false;
    for (int other : kept) {
      if (m.pixel.DistanceTo(matches[other].pixel) <= dedupe_radius) {
        duplicate = true;
        break;
      }
    }
    if (duplicate) {
      removed[idx] = 1;
    } else {
      kept.push_back(idx);
    }
  }
  for (size_t i = 0; i < matches.size(); ++i) {
    if (!removed[i]) result.push_back(matches[i]);
  }
  return result;
}

// Union of per-family match lists with duplicate collapse. Families are
// concatenated in key order, so the output is deterministic.
inline std::vector<PointMatch> MergeFamilies(
    const std::map<std::string, std::vector<PointMatch>>& per_family,
    double dedupe_radius) {
  std::vector<PointMatch> all;
  for (const auto& [family, matches] : per_family) {
    all.insert(all.end(), matches.begin(), matches.end());
  }
  return DedupePointMatches(all, dedupe_radius);
}

// Fraction of matches whose train keypoint lands within each threshold of the
// ground-truth homography applied to the query keypoint. Empty input yields 0
// at every threshold.
inline std::vector<double> MeanMatchingAccuracy(
    const std::vector<Pixel>& query, const std::vector<Pixel>& train,
    const std::vector<Match>& matches, const Mat3& h_true,
    const std::vector<double>& thresholds) {
  std::vector<double> mma(thresholds.size(), 0.0);
  if (matches.empty()) return mma;
  std::vector<double> errors;
  errors.reserve(matches.size());
  for (const Match& m : matches) {
    const Vec3 p = h_true * Vec3(query[m.query_idx].u, query[m.query_idx].v, 1.0);
    if (std::abs(p.z()) < 1e-12) {
      errors.push_back(kInfinity);
      continue;
    }
    errors.push_back(std::hypot(p.x() / p.z() - train[m.train_idx].u,
                                p.y() / p.z() - train[m.train_idx].v));
  }
  for (size_t t = 0; t < thresholds.size(); ++t) {
    int hits = 0;
    for (double e : errors) {
      if (e <= thresholds[t]) ++hits;
    }
    mma[t] = static_cast<double>(hits) / static_cast<double>(matches.size());
  }
  return mma;
}

}  // namespace semloc
