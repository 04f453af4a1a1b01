// Command-line interface: map construction, localization, synthetic scene
// generation and result evaluation over the text asset formats.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "semloc.hpp"

namespace {

namespace fs = std::filesystem;
using namespace semloc;

std::vector<EvalThreshold> ParseThresholds(const std::string& spec) {
  std::vector<EvalThreshold> thresholds;
  std::string group;
  std::istringstream stream(spec);
  while (std::getline(stream, group, ';')) {
    if (group.empty()) continue;
    const size_t comma = group.find(',');
    if (comma == std::string::npos) {
      throw Error(ErrorCode::kInvalidArgument,
                  "threshold '" + group + "' is not '<trans>,<rot_deg>'");
    }
    EvalThreshold t;
    t.translation = io::ParseDouble(group.substr(0, comma), "thresholds");
    t.rotation_deg = io::ParseDouble(group.substr(comma + 1), "thresholds");
    thresholds.push_back(t);
  }
  if (thresholds.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "no thresholds given");
  }
  return thresholds;
}

int RunBuildMap(const std::string& assets, const std::string& out) {
  const Map map = BuildMap(assets);
  SaveMap(map, out);
  std::printf("map: %zu points, %zu images -> %s\n", map.points.size(),
              map.images.size(), out.c_str());
  return 0;
}

int RunLocalize(const std::string& map_path, const std::string& query_dir,
                const std::string& config_path, const std::string& out,
                std::int64_t seed_override, int workers) {
  PipelineConfig cfg = config_path.empty() ? PipelineConfig::Default()
                                           : PipelineConfig::FromFile(config_path);
  if (seed_override >= 0) cfg.seed = static_cast<std::uint64_t>(seed_override);
  cfg.Validate();

  const Map map = LoadMap(map_path);
  map.Validate();
  const AssetBundle bundle = LoadAssetBundle(query_dir);
  if (cfg.families.empty()) cfg.families = bundle.families;

  std::vector<ImageAssets> queries;
  for (const ImageAssets& img : bundle.images) {
    if (img.role == ImageRole::kQuery) queries.push_back(img);
  }
  if (queries.empty()) {
    throw Error(ErrorCode::kMissingAsset,
                "no query images in bundle " + query_dir);
  }

  const std::vector<LocalizationResult> results =
      BatchLocalize(queries, map, cfg, workers);

  std::vector<ResultRecord> records;
  int ok = 0;
  for (const LocalizationResult& r : results) {
    records.push_back(r.ToRecord());
    if (r.status == LocalizationStatus::kOk) ++ok;
  }
  WriteResults(records, out);
  std::printf("localized %d/%zu queries -> %s\n", ok, results.size(), out.c_str());
  return 0;
}

int RunSynthGen(const std::string& config_path, const std::string& out,
                std::int64_t seed_override) {
  SceneConfig cfg = config_path.empty() ? SceneConfig{}
                                        : SceneConfig::FromFile(config_path);
  if (seed_override >= 0) cfg.seed = static_cast<std::uint64_t>(seed_override);
  cfg.Validate();
  const SceneSummary summary = GenerateScene(cfg, out);
  std::printf(
      "scene: %d points, %d db images, %d queries, %d planted outliers -> %s\n",
      summary.n_points, summary.n_db_images, summary.n_queries,
      summary.planted_outliers, out.c_str());
  return 0;
}

int RunEval(const std::string& results_path, const std::string& gt_path,
            const std::string& thresholds_spec, const std::string& out) {
  const std::vector<ResultRecord> results = LoadResults(results_path);
  const std::vector<GroundTruthPose> gt = LoadGroundTruth(gt_path);
  const std::vector<EvalThreshold> thresholds = ParseThresholds(thresholds_spec);
  const EvalReport report = Evaluate(results, gt, thresholds);
  if (!out.empty()) WriteReport(report, out);

  std::printf("queries %d, localized %d\n", report.n_queries, report.n_ok);
  for (const auto& [t, recall] : report.recalls) {
    std::printf("recall @ (%g, %g deg): %.4f\n", t.translation, t.rotation_deg,
                recall);
  }
  std::printf("median errors over localized: %g units, %g deg\n",
              report.median_translation, report.median_rotation_deg);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"semloc - semantic- and depth-verified visual localization"};
  app.require_subcommand(1);

  auto* build = app.add_subcommand("build-map", "Build a map from an asset bundle");
  std::string build_assets, build_out;
  build->add_option("--assets", build_assets, "asset bundle directory")->required();
  build->add_option("--out", build_out, "output map file")->required();

  auto* localize = app.add_subcommand("localize", "Localize query images against a map");
  std::string loc_map, loc_query, loc_config, loc_out;
  std::int64_t loc_seed = -1;
  int loc_workers = 1;
  localize->add_option("--map", loc_map, "map file")->required();
  localize->add_option("--query", loc_query, "query asset directory")->required();
  localize->add_option("--config", loc_config, "pipeline config file");
  localize->add_option("--out", loc_out, "output results file")->required();
  localize->add_option("--seed", loc_seed, "override the config seed");
  localize->add_option("--workers", loc_workers, "worker threads")
      ->check(CLI::PositiveNumber);

  auto* synth = app.add_subcommand("synth-gen", "Generate a synthetic ground-truth scene");
  std::string synth_config, synth_out;
  std::int64_t synth_seed = -1;
  synth->add_option("--config", synth_config, "scene config file");
  synth->add_option("--out", synth_out, "output directory")->required();
  synth->add_option("--seed", synth_seed, "override the config seed");

  auto* eval = app.add_subcommand("eval", "Evaluate results against ground truth");
  std::string eval_results, eval_gt, eval_out;
  std::string eval_thresholds = "0.25,2;0.5,5;5,10";
  eval->add_option("--results", eval_results, "results file")->required();
  eval->add_option("--gt", eval_gt, "ground-truth pose file")->required();
  eval->add_option("--thresholds", eval_thresholds,
                   "semicolon-separated trans,rot_deg pairs");
  eval->add_option("--out", eval_out, "output report file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return 1;
  }

  try {
    if (build->parsed()) return RunBuildMap(build_assets, build_out);
    if (localize->parsed()) {
      return RunLocalize(loc_map, loc_query, loc_config, loc_out, loc_seed,
                         loc_workers);
    }
    if (synth->parsed()) return RunSynthGen(synth_config, synth_out, synth_seed);
    if (eval->parsed()) {
      return RunEval(eval_results, eval_gt, eval_thresholds, eval_out);
    }
  } catch (const semloc::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
