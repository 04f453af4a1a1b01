#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "semloc/depth.hpp"
#include "semloc/io.hpp"
#include "semloc/ransac.hpp"
#include "semloc/retrieval.hpp"
#include "semloc/semantic.hpp"

namespace semloc {

struct FamilyConfig {
  bool enhance = false;  // apply score scaling to this family's descriptors
};

struct PipelineConfig {
  // Feature families, in matching order. Empty means "use whatever the
  // assets declare".
  std::vector<std::string> families;
  std::map<std::string, FamilyConfig> family_configs;

  MatcherOptions matcher;
  double dedupe_radius = 1.0;

  int retrieval_k = 20;
  int retrieval_keep = 10;

  ScwParams scw;
  double mu_min = 0.25;
  bool scw_sf_over_inliers = false;  // count S_f over homography inliers

  // Stage toggles.
  bool scc_enabled = true;
  bool dcv_enabled = true;
  bool weighted_mode = true;  // weighted consensus + bias sampling
  bool clustering_enabled = true;
  bool rerank_enabled = true;

  std::set<int> dynamic_classes;  // overrides the class table when non-empty
  bool dynamic_from_class_table = true;

  DcvConfig dcv;

  CandidateRejectionConfig rejection;
  double cluster_trans_eps = 2.0;
  double cluster_rot_eps_deg = 10.0;

  RansacConfig homography_ransac = DefaultHomographyRansac();
  RansacConfig pnp_ransac;

  static RansacConfig DefaultHomographyRansac() {
    RansacConfig cfg;
    cfg.min_inliers = 4;  // s_c is a score, not a success gate
    cfg.max_iterations = 1000;
    return cfg;
  }

  double bias_label_miss_factor = 0.5;  // weight factor for label-inconsistent matches
  int refine_iterations = 50;
  int min_pnp_matches = 4;

  std::uint64_t seed = 1;

  void Validate() const {
    scw.Validate();
    homography_ransac.Validate();
    pnp_ransac.Validate();
    if (retrieval_k < 1 || retrieval_keep < 1) {
      throw Error(ErrorCode::kConfigError, "retrieval k/keep must be >= 1");
    }
    if (!(mu_min > 0.0) || !(mu_min <= 1.0)) {
      throw Error(ErrorCode::kConfigError, "mu_min must be in (0,1]");
    }
    if (!(dcv.tau > 0.0)) {
      throw Error(ErrorCode::kConfigError, "dcv tau must be positive");
    }
    if (min_pnp_matches < 4) {
      throw Error(ErrorCode::kConfigError, "min_pnp_matches must be >= 4");
    }
  }

  bool EnhanceFamily(const std::string& family) const {
    const auto it = family_configs.find(family);
    return it != family_configs.end() && it->second.enhance;
  }

  static PipelineConfig Default() { return PipelineConfig{}; }

  static PipelineConfig FromKeyValues(KeyValueConfig* kv) {
    PipelineConfig cfg;
    cfg.families = kv->GetList("families", {});
    for (const std::string& family : cfg.families) {
      FamilyConfig fc;
      fc.enhance = kv->GetBool("family." + family + ".enhance", false);
      cfg.family_configs[family] = fc;
    }

    cfg.matcher.ratio = kv->GetDouble("matching.ratio", cfg.matcher.ratio);
    cfg.matcher.mutual = kv->GetBool("matching.mutual", cfg.matcher.mutual);
    cfg.dedupe_radius = kv->GetDouble("matching.dedupe_radius", cfg.dedupe_radius);

    cfg.retrieval_k = static_cast<int>(kv->GetInt("retrieval.k", cfg.retrieval_k));
    cfg.retrieval_keep =
        static_cast<int>(kv->GetInt("retrieval.keep", cfg.retrieval_keep));

    cfg.scw.alpha1 = kv->GetDouble("scw.alpha1", cfg.scw.alpha1);
    cfg.scw.alpha2 = kv->GetDouble("scw.alpha2", cfg.scw.alpha2);
    cfg.mu_min = kv->GetDouble("scw.mu_min", cfg.mu_min);
    cfg.scw_sf_over_inliers =
        kv->GetBool("scw.sf_over_inliers", cfg.scw_sf_over_inliers);

    cfg.scc_enabled = kv->GetBool("scc.enabled", cfg.scc_enabled);
    for (const std::string& id : kv->GetList("scc.dynamic_classes", {})) {
      cfg.dynamic_classes.insert(
          static_cast<int>(io::ParseInt(id, "scc.dynamic_classes")));
      cfg.dynamic_from_class_table = false;
    }

    cfg.dcv_enabled = kv->GetBool("dcv.enabled", cfg.dcv_enabled);
    cfg.dcv.tau = kv->GetDouble("dcv.tau", cfg.dcv.tau);
    const std::string indexing = kv->GetString("dcv.indexing", "sorted");
    if (indexing == "sorted") {
      cfg.dcv.indexing = OrdinalCostIndexing::kSortedPdv;
    } else if (indexing == "raw") {
      cfg.dcv.indexing = OrdinalCostIndexing::kRawPdv;
    } else {
      throw Error(ErrorCode::kConfigError,
                  "dcv.indexing must be 'sorted' or 'raw'");
    }

    cfg.weighted_mode = kv->GetBool("weighted.enabled", cfg.weighted_mode);
    cfg.bias_label_miss_factor =
        kv->GetDouble("weighted.label_miss_factor", cfg.bias_label_miss_factor);

    cfg.clustering_enabled = kv->GetBool("cluster.enabled", cfg.clustering_enabled);
    cfg.rerank_enabled = kv->GetBool("rerank.enabled", cfg.rerank_enabled);
    cfg.rejection.min_inlier_ratio =
        kv->GetDouble("cluster.r_min", cfg.rejection.min_inlier_ratio);
    cfg.rejection.min_overlap_area_frac = kv->GetDouble(
        "cluster.min_overlap_area_frac", cfg.rejection.min_overlap_area_frac);
    cfg.cluster_trans_eps = kv->GetDouble("cluster.trans_eps", cfg.cluster_trans_eps);
    cfg.cluster_rot_eps_deg =
        kv->GetDouble("cluster.rot_eps_deg", cfg.cluster_rot_eps_deg);

    const auto ransac = [&](const std::string& prefix, RansacConfig* rc) {
      rc->threshold = kv->GetDouble(prefix + ".threshold", rc->threshold);
      rc->max_iterations = static_cast<int>(
          kv->GetInt(prefix + ".max_iterations", rc->max_iterations));
      rc->confidence = kv->GetDouble(prefix + ".confidence", rc->confidence);
      rc->min_inliers =
          static_cast<int>(kv->GetInt(prefix + ".min_inliers", rc->min_inliers));
    };
    ransac("ransac.homography", &cfg.homography_ransac);
    ransac("ransac.pnp", &cfg.pnp_ransac);

    cfg.refine_iterations =
        static_cast<int>(kv->GetInt("refine.iterations", cfg.refine_iterations));
    cfg.min_pnp_matches =
        static_cast<int>(kv->GetInt("min_pnp_matches", cfg.min_pnp_matches));
    cfg.seed = static_cast<std::uint64_t>(kv->GetInt("seed", cfg.seed));

    cfg.Validate();
    return cfg;
  }

  static PipelineConfig FromFile(const std::filesystem::path& path) {
    KeyValueConfig kv(path);
    PipelineConfig cfg = FromKeyValues(&kv);
    kv.Finish();
    return cfg;
  }

  // Baseline ablation: retrieval + KNN matching + standard consensus only.
  PipelineConfig Baseline() const {
    PipelineConfig cfg = *this;
    cfg.scc_enabled = false;
    cfg.dcv_enabled = false;
    cfg.weighted_mode = false;
    cfg.clustering_enabled = false;
    cfg.rerank_enabled = false;
    for (auto& [family, fc] : cfg.family_configs) fc.enhance = false;
    return cfg;
  }
};

}  // namespace semloc
