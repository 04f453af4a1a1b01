#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "semloc/config.hpp"
#include "semloc/depth.hpp"
#include "semloc/error.hpp"
#include "semloc/geometry.hpp"
#include "semloc/io.hpp"
#include "semloc/map.hpp"
#include "semloc/matching.hpp"
#include "semloc/ransac.hpp"
#include "semloc/retrieval.hpp"
#include "semloc/rng.hpp"
#include "semloc/semantic.hpp"
#include "semloc/solvers.hpp"

namespace semloc {

struct StageDiagnostics {
  int retrieved = 0;
  int rejected_candidates = 0;
  int kept_candidates = 0;
  int matches_raw = 0;        // lifted matches over all kept candidates
  int matches_post_scc = 0;
  int matches_merged = 0;     // after cross-candidate dedupe
  int matches_post_dcv = 0;
  int dcv_removed = 0;
  bool dcv_reverted = false;
  int cluster_size = 0;
  std::vector<double> mu_values;   // per kept candidate
  std::vector<double> scw_scores;  // per kept candidate
  int final_inliers = 0;
};

struct LocalizationResult {
  std::string name;
  LocalizationStatus status = LocalizationStatus::kConsensusFailed;
  std::optional<Pose> pose;
  int inlier_count = 0;
  StageDiagnostics diag;

  ResultRecord ToRecord() const {
    ResultRecord record;
    record.name = name;
    record.status = status;
    record.pose = pose.value_or(Pose());
    record.inliers = inlier_count;
    record.diagnostics.emplace_back("retrieved", std::to_string(diag.retrieved));
    record.diagnostics.emplace_back("rejected_candidates",
                                    std::to_string(diag.rejected_candidates));
    record.diagnostics.emplace_back("kept_candidates",
                                    std::to_string(diag.kept_candidates));
    record.diagnostics.emplace_back("matches_raw",
                                    std::to_string(diag.matches_raw));
    record.diagnostics.emplace_back("matches_post_scc",
                                    std::to_string(diag.matches_post_scc));
    record.diagnostics.emplace_back("matches_merged",
                                    std::to_string(diag.matches_merged));
    record.diagnostics.emplace_back("matches_post_dcv",
                                    std::to_string(diag.matches_post_dcv));
    record.diagnostics.emplace_back("dcv_removed",
                                    std::to_string(diag.dcv_removed));
    record.diagnostics.emplace_back("dcv_reverted", diag.dcv_reverted ? "1" : "0");
    record.diagnostics.emplace_back("cluster_size",
                                    std::to_string(diag.cluster_size));
    const auto join = [](const std::vector<double>& values) {
      std::string out;
      for (double v : values) {
        if (!out.empty()) out += ',';
        out += io::FormatDouble(v);
      }
      return out.empty() ? std::string("-") : out;
    };
    record.diagnostics.emplace_back("mu", join(diag.mu_values));
    record.diagnostics.emplace_back("scw", join(diag.scw_scores));
    return record;
  }
};

// ---------------------------------------------------------------------------
// Map construction from an asset bundle
// ---------------------------------------------------------------------------

// Loads the SfM skeleton (images, points, tracks) and the per-image database
// assets, then derives what localization needs: a semantic label per point
// (majority vote over its track, ties to the most recent image), one
// representative descriptor per family (highest keypoint score, ties to the
// lowest image id) and per-image global descriptors.
inline Map BuildMap(const std::filesystem::path& assets_root,
                    const PipelineConfig& cfg = PipelineConfig::Default()) {
  const AssetBundle bundle = LoadAssetBundle(assets_root);
  if (!bundle.sfm_path.has_value()) {
    throw Error(ErrorCode::kMissingAsset,
                "asset bundle has no SFM entry in its manifest");
  }
  Map map = LoadMap(*bundle.sfm_path);
  map.class_table = bundle.class_table;

  std::map<int, const ImageAssets*> db_assets;
  for (const ImageAssets& img : bundle.images) {
    if (img.role == ImageRole::kDatabase) db_assets[img.id] = &img;
  }

  for (MapImage& img : map.images) {
    const auto it = db_assets.find(img.id);
    if (it == db_assets.end()) {
      throw Error(ErrorCode::kMissingAsset,
                  "map image " + std::to_string(img.id) +
                      " has no database assets in the bundle");
    }
    if (it->second->global_descriptor.size() > 0) {
      img.global_descriptor = it->second->global_descriptor;
    }
  }

  for (MapPoint& point : map.points) {
    // Majority label over observations; ties go to the most recent
    // (highest-id) database image.
    std::map<int, std::pair<int, int>> votes;  // label -> (count, newest image)
    for (const TrackObservation& obs : point.track) {
      const auto it = db_assets.find(obs.image_id);
      if (it == db_assets.end()) {
        throw Error(ErrorCode::kInvariantViolation,
                    "point " + std::to_string(point.id) +
                        " tracks missing image " + std::to_string(obs.image_id));
      }
      const ImageAssets& assets = *it->second;
      if (obs.keypoint_idx < 0 ||
          obs.keypoint_idx >= static_cast<int>(assets.keypoints.size())) {
        throw Error(ErrorCode::kInvariantViolation,
                    "point " + std::to_string(point.id) +
                        " tracks missing keypoint " +
                        std::to_string(obs.keypoint_idx) + " of image " +
                        std::to_string(obs.image_id));
      }
      const Keypoint& kp = assets.keypoints[obs.keypoint_idx];
      auto& vote = votes[kp.label];
      ++vote.first;
      vote.second = std::max(vote.second, obs.image_id);
    }
    int best_label = -1;
    std::pair<int, int> best_vote{0, -1};
    for (const auto& [label, vote] : votes) {
      if (vote.first > best_vote.first ||
          (vote.first == best_vote.first && vote.second > best_vote.second)) {
        best_label = label;
        best_vote = vote;
      }
    }
    point.label = best_label;

    // Representative descriptor per family.
    for (const std::string& family : bundle.families) {
      double best_score = -1.0;
      int best_image = std::numeric_limits<int>::max();
      const Descriptor* best_desc = nullptr;
      for (const TrackObservation& obs : point.track) {
        const ImageAssets& assets = *db_assets.at(obs.image_id);
        const auto range = assets.family_ranges.find(family);
        if (range == assets.family_ranges.end()) continue;
        if (obs.keypoint_idx < range->second.first ||
            obs.keypoint_idx >= range->second.second) {
          continue;  // observation belongs to another family
        }
        const Keypoint& kp = assets.keypoints[obs.keypoint_idx];
        const bool better = kp.score > best_score ||
                            (kp.score == best_score && obs.image_id < best_image);
        if (better) {
          best_score = kp.score;
          best_image = obs.image_id;
          best_desc = &assets.descriptors[obs.keypoint_idx];
        }
      }
      if (best_desc != nullptr) {
        point.descriptors[family] = PointDescriptor{best_score, best_desc->values};
      }
    }
  }

  (void)cfg;
  map.Validate();
  return map;
}

// ---------------------------------------------------------------------------
// Localization
// ---------------------------------------------------------------------------

namespace detail {

// Stage tags folded into the seed so every consensus run has its own stream
// regardless of evaluation order.
enum SeedTag : std::uint64_t {
  kSeedHomography = 0x48,
  kSeedCandidatePnp = 0x43,
  kSeedFinalPnp = 0x46,
  kSeedPriorPnp = 0x50,
};

struct CandidateContext {
  RetrievalCandidate candidate;
  const MapImage* image = nullptr;
  std::vector<int> visible_points;      // indices into map.points
  std::vector<Pixel> projected_pixels;  // per visible point
  std::vector<PointMatch> matches;      // lifted 2D-3D matches (pre SCC)
};

// Matches the query against one candidate image: per family, enhanced
// descriptors on both sides when configured, exact NN with ratio/mutual
// checks, then lifting to (query keypoint, map point) pairs and family merge.
inline void MatchCandidate(const ImageAssets& query, const Map& map,
                           const PipelineConfig& cfg, CandidateContext* ctx) {
  const MapImage& image = *ctx->image;
  ctx->visible_points = map.VisiblePointIndices(image.id);

  ctx->projected_pixels.clear();
  std::vector<int> projectable;
  for (int point_idx : ctx->visible_points) {
    const MapPoint& point = map.points[point_idx];
    const Vec3 pc = image.pose.ToCamera(point.xyz);
    if (!(pc.z() > kMinDepth)) continue;
    projectable.push_back(point_idx);
    ctx->projected_pixels.push_back(Project(point.xyz, image.pose,
                                            image.intrinsics).pixel);
  }
  ctx->visible_points = projectable;

  std::map<std::string, std::vector<PointMatch>> per_family;
  for (const auto& [family, range] : query.family_ranges) {
    if (!cfg.families.empty() &&
        std::find(cfg.families.begin(), cfg.families.end(), family) ==
            cfg.families.end()) {
      continue;
    }
    const bool enhance = cfg.EnhanceFamily(family);

    std::vector<Descriptor> query_descs;
    std::vector<int> query_indices;
    for (int i = range.first; i < range.second; ++i) {
      Descriptor d = query.descriptors[i];
      if (enhance) d = EnhanceDescriptor(d, query.keypoints[i].score);
      query_descs.push_back(std::move(d));
      query_indices.push_back(i);
    }

    std::vector<Descriptor> train_descs;
    std::vector<int> train_points;  // positions in ctx->visible_points
    for (size_t t = 0; t < ctx->visible_points.size(); ++t) {
      const MapPoint& point = map.points[ctx->visible_points[t]];
      const auto it = point.descriptors.find(family);
      if (it == point.descriptors.end()) continue;
      Descriptor d{it->second.values, family};
      if (enhance) d = EnhanceDescriptor(d, it->second.score);
      train_descs.push_back(std::move(d));
      train_points.push_back(static_cast<int>(t));
    }
    if (query_descs.empty() || train_descs.empty()) continue;

    const std::vector<Match> matches =
        MatchDescriptors(query_descs, train_descs, cfg.matcher);

    std::vector<PointMatch> lifted;
    lifted.reserve(matches.size());
    for (const Match& m : matches) {
      const int query_idx = query_indices[m.query_idx];
      const int visible_pos = train_points[m.train_idx];
      const MapPoint& point = map.points[ctx->visible_points[visible_pos]];
      PointMatch pm;
      pm.query_idx = query_idx;
      pm.point_id = point.id;
      pm.pixel = query.keypoints[query_idx].AsPixel();
      pm.xyz = point.xyz;
      pm.distance = m.distance;
      pm.query_label = query.keypoints[query_idx].label;
      pm.point_label = point.label;
      pm.source_image = image.id;
      lifted.push_back(pm);
    }
    per_family[family] = std::move(lifted);
  }
  ctx->matches = MergeFamilies(per_family, cfg.dedupe_radius);
}

}  // namespace detail

inline LocalizationResult Localize(const ImageAssets& query, const Map& map,
                                   const PipelineConfig& cfg) {
  cfg.Validate();
  LocalizationResult result;
  result.name = query.name;

  const std::set<int> dynamic_classes =
      cfg.dynamic_from_class_table && cfg.dynamic_classes.empty()
          ? map.class_table.DynamicIds()
          : cfg.dynamic_classes;

  // --- Retrieval ---------------------------------------------------------
  std::vector<DatabaseDescriptor> db_descriptors;
  for (const MapImage& img : map.images) {
    if (img.global_descriptor.size() > 0) {
      db_descriptors.push_back({img.id, img.global_descriptor});
    }
  }
  if (db_descriptors.empty() || query.global_descriptor.size() == 0) {
    result.status = LocalizationStatus::kRetrievalFailed;
    return result;
  }
  const int k = std::min<int>(cfg.retrieval_k,
                              static_cast<int>(db_descriptors.size()));
  std::vector<RetrievalCandidate> retrieved =
      Retrieve(query.global_descriptor, db_descriptors, k);
  result.diag.retrieved = static_cast<int>(retrieved.size());
  if (retrieved.empty()) {
    result.status = LocalizationStatus::kRetrievalFailed;
    return result;
  }

  // --- Per-candidate matching + geometric verification + SCW -------------
  std::vector<detail::CandidateContext> contexts;
  contexts.reserve(retrieved.size());
  for (const RetrievalCandidate& candidate : retrieved) {
    detail::CandidateContext ctx;
    ctx.candidate = candidate;
    ctx.image = map.FindImage(candidate.image_id);
    detail::MatchCandidate(query, map, cfg, &ctx);

    if (cfg.rerank_enabled || cfg.clustering_enabled) {
      // Candidate-side pixels are the map points projected into the
      // candidate image (the track observations, reconstructed).
      std::map<std::int64_t, Pixel> projected;
      for (size_t t = 0; t < ctx.visible_points.size(); ++t) {
        projected[map.points[ctx.visible_points[t]].id] = ctx.projected_pixels[t];
      }
      std::vector<Pixel> src, dst;
      std::vector<Match> pairs;
      for (size_t i = 0; i < ctx.matches.size(); ++i) {
        src.push_back(ctx.matches[i].pixel);
        dst.push_back(projected.at(ctx.matches[i].point_id));
        pairs.push_back(Match{static_cast<int>(i), static_cast<int>(i), 0.0, 0.0});
      }
      RansacConfig hcfg = cfg.homography_ransac;
      hcfg.seed = MixSeeds(cfg.seed,
                           MixSeeds(detail::kSeedHomography,
                                    static_cast<std::uint64_t>(candidate.image_id)));
      const VerifyResult verified = GeometricVerify(src, dst, pairs, hcfg);
      ctx.candidate.homography = verified.homography;
      ctx.candidate.score.s_c = verified.s_c;

      int s_f = 0;
      if (cfg.scw_sf_over_inliers && verified.homography.has_value()) {
        for (int idx : verified.inlier_indices) {
          if (ctx.matches[idx].query_label == ctx.matches[idx].point_label) ++s_f;
        }
      } else {
        for (const PointMatch& m : ctx.matches) {
          if (m.query_label == m.point_label) ++s_f;
        }
      }
      ctx.candidate.score.s_f = s_f;
    }
    contexts.push_back(std::move(ctx));
  }

  const auto context_of = [&contexts](int image_id) -> detail::CandidateContext* {
    for (detail::CandidateContext& ctx : contexts) {
      if (ctx.candidate.image_id == image_id) return &ctx;
    }
    return nullptr;
  };

  // --- Candidate rejection (homography clustering stage) -----------------
  std::vector<RetrievalCandidate> pool;
  for (const detail::CandidateContext& ctx : contexts) pool.push_back(ctx.candidate);
  if (cfg.clustering_enabled) {
    std::vector<int> match_counts;
    for (const detail::CandidateContext& ctx : contexts) {
      match_counts.push_back(static_cast<int>(ctx.matches.size()));
    }
    pool = ClusterCandidateRejection(pool, match_counts, query.width,
                                     query.height, cfg.rejection);
    result.diag.rejected_candidates =
        static_cast<int>(contexts.size() - pool.size());
  }

  // --- SCW re-ranking -----------------------------------------------------
  std::vector<RetrievalCandidate> kept;
  if (cfg.rerank_enabled) {
    kept = Rerank(pool, cfg.scw, cfg.retrieval_keep, cfg.mu_min);
  } else {
    kept = pool;  // retrieval order
    if (static_cast<int>(kept.size()) > cfg.retrieval_keep) {
      kept.resize(cfg.retrieval_keep);
    }
    for (RetrievalCandidate& c : kept) c.mu = 1.0;
  }
  result.diag.kept_candidates = static_cast<int>(kept.size());
  for (const RetrievalCandidate& c : kept) {
    result.diag.mu_values.push_back(c.mu);
    result.diag.scw_scores.push_back(c.score.s_r);
  }
  if (kept.empty()) {
    result.status = LocalizationStatus::kRetrievalFailed;
    return result;
  }

  // --- SCC per kept candidate ---------------------------------------------
  std::vector<std::vector<PointMatch>> candidate_matches;
  for (const RetrievalCandidate& candidate : kept) {
    detail::CandidateContext* ctx = context_of(candidate.image_id);
    std::vector<PointMatch> matches = ctx->matches;
    for (PointMatch& m : matches) m.mu = candidate.mu;
    result.diag.matches_raw += static_cast<int>(matches.size());
    if (cfg.scc_enabled) {
      matches = SccFilterPoint(matches, dynamic_classes);
    }
    result.diag.matches_post_scc += static_cast<int>(matches.size());
    candidate_matches.push_back(std::move(matches));
  }

  // --- Per-candidate PnP + pose clustering --------------------------------
  std::vector<PointMatch> merged;
  Pose prior;
  bool have_prior = false;

  if (cfg.clustering_enabled) {
    std::vector<Pose> estimates;
    std::vector<int> estimate_owner;  // index into kept
    std::vector<int> estimate_inliers;
    for (size_t c = 0; c < kept.size(); ++c) {
      const std::vector<PointMatch>& matches = candidate_matches[c];
      if (static_cast<int>(matches.size()) < cfg.min_pnp_matches) continue;
      std::vector<Pixel> px;
      std::vector<WorldPoint> pts;
      for (const PointMatch& m : matches) {
        px.push_back(m.pixel);
        pts.push_back(m.xyz);
      }
      RansacConfig pcfg = cfg.pnp_ransac;
      pcfg.seed = MixSeeds(
          cfg.seed, MixSeeds(detail::kSeedCandidatePnp,
                             static_cast<std::uint64_t>(kept[c].image_id)));
      try {
        const PnpAdapter adapter(px, pts, query.intrinsics);
        auto hypothesis =
            Consensus(adapter, UniformSamples(static_cast<int>(px.size())), pcfg,
                      ConsensusMode::kStandard);
        // Light polish on the hypothesis inliers tightens the cluster.
        std::vector<Pixel> in_px;
        std::vector<WorldPoint> in_pts;
        for (int idx : hypothesis.inlier_indices) {
          in_px.push_back(px[idx]);
          in_pts.push_back(pts[idx]);
        }
        Pose estimate = hypothesis.model;
        if (in_px.size() >= 4) {
          estimate = RefinePnp(in_px, in_pts, query.intrinsics, estimate,
                               cfg.refine_iterations).pose;
        }
        estimates.push_back(estimate);
        estimate_owner.push_back(static_cast<int>(c));
        estimate_inliers.push_back(static_cast<int>(hypothesis.inlier_indices.size()));
      } catch (const Error&) {
        continue;  // candidate contributes no pose estimate
      }
    }

    if (!estimates.empty()) {
      const PoseCluster cluster =
          ClusterPoses(estimates, cfg.cluster_trans_eps, cfg.cluster_rot_eps_deg);
      result.diag.cluster_size = static_cast<int>(cluster.member_ids.size());

      int best_member = cluster.member_ids.front();
      for (int member : cluster.member_ids) {
        if (estimate_inliers[member] > estimate_inliers[best_member] ||
            (estimate_inliers[member] == estimate_inliers[best_member] &&
             kept[estimate_owner[member]].image_id <
                 kept[estimate_owner[best_member]].image_id)) {
          best_member = member;
        }
      }
      prior = estimates[best_member];
      have_prior = true;

      std::vector<PointMatch> pooled;
      for (int member : cluster.member_ids) {
        const auto& matches = candidate_matches[estimate_owner[member]];
        pooled.insert(pooled.end(), matches.begin(), matches.end());
      }
      merged = DedupePointMatches(pooled, cfg.dedupe_radius);
    } else {
      // No candidate produced a pose; fall back to the union so the final
      // consensus still gets a chance.
      std::vector<PointMatch> pooled;
      for (const auto& matches : candidate_matches) {
        pooled.insert(pooled.end(), matches.begin(), matches.end());
      }
      merged = DedupePointMatches(pooled, cfg.dedupe_radius);
    }
  } else {
    std::vector<PointMatch> pooled;
    for (const auto& matches : candidate_matches) {
      pooled.insert(pooled.end(), matches.begin(), matches.end());
    }
    merged = DedupePointMatches(pooled, cfg.dedupe_radius);
  }
  result.diag.matches_merged = static_cast<int>(merged.size());
  if (static_cast<int>(merged.size()) < cfg.min_pnp_matches) {
    result.status = LocalizationStatus::kConsensusFailed;
    return result;
  }

  // --- DCV -----------------------------------------------------------------
  if (cfg.dcv_enabled && !query.depth_map.Empty()) {
    if (!have_prior) {
      // DCV needs a pose; run a standard consensus on the merged set.
      std::vector<Pixel> px;
      std::vector<WorldPoint> pts;
      for (const PointMatch& m : merged) {
        px.push_back(m.pixel);
        pts.push_back(m.xyz);
      }
      RansacConfig pcfg = cfg.pnp_ransac;
      pcfg.seed = MixSeeds(cfg.seed, detail::kSeedPriorPnp);
      try {
        const PnpAdapter adapter(px, pts, query.intrinsics);
        prior = Consensus(adapter, UniformSamples(static_cast<int>(px.size())),
                          pcfg, ConsensusMode::kStandard)
                    .model;
        have_prior = true;
      } catch (const Error&) {
        have_prior = false;
      }
    }
    if (have_prior) {
      DcvConfig dcv_cfg = cfg.dcv;
      dcv_cfg.refine_iterations = cfg.refine_iterations;
      const DcvResult dcv = DepthConsistencyPass(merged, query.depth_map, prior,
                                                 query.intrinsics, dcv_cfg);
      result.diag.dcv_removed = dcv.diag.removed + dcv.diag.sentinel_rejected;
      result.diag.dcv_reverted = dcv.diag.reverted;
      merged = dcv.matches;
    }
  }
  result.diag.matches_post_dcv = static_cast<int>(merged.size());
  if (static_cast<int>(merged.size()) < cfg.min_pnp_matches) {
    result.status = LocalizationStatus::kConsensusFailed;
    return result;
  }

  // --- Final weighted consensus + refinement -------------------------------
  std::vector<Pixel> px;
  std::vector<WorldPoint> pts;
  std::vector<WeightedSample> samples(merged.size());
  double max_distance = 0.0;
  for (const PointMatch& m : merged) max_distance = std::max(max_distance, m.distance);
  for (size_t i = 0; i < merged.size(); ++i) {
    const PointMatch& m = merged[i];
    px.push_back(m.pixel);
    pts.push_back(m.xyz);
    samples[i].index = static_cast<int>(i);
    samples[i].mu = cfg.weighted_mode ? m.mu : 1.0;
    if (cfg.weighted_mode) {
      const double label_term =
          m.query_label == m.point_label ? 1.0 : cfg.bias_label_miss_factor;
      const double dist_term =
          max_distance > 0.0 ? 1.0 - m.distance / max_distance : 1.0;
      samples[i].sampling_weight = m.mu * label_term * dist_term;
    } else {
      samples[i].sampling_weight = 1.0;
    }
  }

  RansacConfig final_cfg = cfg.pnp_ransac;
  final_cfg.seed = MixSeeds(cfg.seed, detail::kSeedFinalPnp);
  try {
    const PnpAdapter adapter(px, pts, query.intrinsics);
    const auto hypothesis =
        Consensus(adapter, samples, final_cfg,
                  cfg.weighted_mode ? ConsensusMode::kWeighted
                                    : ConsensusMode::kStandard);

    std::vector<Pixel> in_px;
    std::vector<WorldPoint> in_pts;
    for (int idx : hypothesis.inlier_indices) {
      in_px.push_back(px[idx]);
      in_pts.push_back(pts[idx]);
    }
    Pose pose = hypothesis.model;
    if (in_px.size() >= 4) {
      pose = RefinePnp(in_px, in_pts, query.intrinsics, pose,
                       cfg.refine_iterations).pose;
    }
    result.pose = pose;
    result.inlier_count = static_cast<int>(hypothesis.inlier_indices.size());
    result.diag.final_inliers = result.inlier_count;
    result.status = LocalizationStatus::kOk;
  } catch (const Error&) {
    result.status = LocalizationStatus::kConsensusFailed;
  }
  return result;
}

// Localizes queries in input order. Worker count only affects scheduling;
// every query is an independent pure computation, so results are identical
// for any worker count.
inline std::vector<LocalizationResult> BatchLocalize(
    const std::vector<ImageAssets>& queries, const Map& map,
    const PipelineConfig& cfg, int workers = 1) {
  if (workers < 1) {
    throw Error(ErrorCode::kInvalidArgument, "workers must be >= 1");
  }
  std::vector<LocalizationResult> results(queries.size());
  if (workers == 1) {
    for (size_t i = 0; i < queries.size(); ++i) {
      results[i] = Localize(queries[i], map, cfg);
    }
    return results;
  }

  std::atomic<size_t> next{0};
  std::vector<std::thread> pool;
  const int n_threads = std::min<int>(workers, static_cast<int>(queries.size()));
  for (int t = 0; t < n_threads; ++t) {
    pool.emplace_back([&]() {
      while (true) {
        const size_t i = next.fetch_add(1);
        if (i >= queries.size()) break;
        results[i] = Localize(queries[i], map, cfg);
      }
    });
  }
  for (std::thread& t : pool) t.join();
  return results;
}

}  // namespace semloc
