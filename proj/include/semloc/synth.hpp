#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "semloc/config.hpp"
#include "semloc/geometry.hpp"
#include "semloc/io.hpp"
#include "semloc/map.hpp"
#include "semloc/rng.hpp"

namespace semloc {

struct FamilySpec {
  std::string name;
  int dim = 32;
};

struct SceneConfig {
  int n_points = 500;
  int n_db_images = 10;
  int n_queries = 20;
  double extent = 10.0;  // points sampled in [-extent/2, extent/2]^3

  int image_width = 640;
  int image_height = 480;
  Intrinsics intrinsics{520.0, 520.0, 320.0, 240.0};

  std::vector<FamilySpec> families = {{"fam0", 32}, {"fam1", 24}};
  int gdesc_dim = 16;
  double descriptor_noise = 0.01;
  double gdesc_noise = 0.02;

  double ring_radius_factor = 2.5;  // camera ring radius = factor * extent
  double arc_degrees = 120.0;       // cameras spread over this azimuth arc

  double outlier_match_rate = 0.0;
  bool outlier_cross_label = false;
  double label_noise_rate = 0.0;
  double depth_noise_sigma = 0.0;
  double pixel_noise_sigma = 0.0;
  bool depth_warp = false;  // apply a hidden monotone depth^gamma warp

  std::uint64_t seed = 1;

  void Validate() const {
    if (n_points < 8 || n_db_images < 2 || n_queries < 1) {
      throw Error(ErrorCode::kConfigError,
                  "scene needs >= 8 points, >= 2 db images, >= 1 query");
    }
    if (!(extent > 0.0) || image_width < 8 || image_height < 8) {
      throw Error(ErrorCode::kConfigError, "invalid scene dimensions");
    }
    intrinsics.Validate();
    if (families.empty()) {
      throw Error(ErrorCode::kConfigError, "need at least one feature family");
    }
    for (const FamilySpec& f : families) {
      if (f.dim < 4) {
        throw Error(ErrorCode::kConfigError, "descriptor dim must be >= 4");
      }
    }
    if (gdesc_dim < 7) {
      throw Error(ErrorCode::kConfigError, "gdesc_dim must be >= 7");
    }
    const auto rate_ok = [](double r) { return r >= 0.0 && r <= 1.0; };
    if (!rate_ok(outlier_match_rate) || !rate_ok(label_noise_rate)) {
      throw Error(ErrorCode::kConfigError, "rates must be in [0,1]");
    }
    if (depth_noise_sigma < 0.0 || pixel_noise_sigma < 0.0 ||
        descriptor_noise < 0.0) {
      throw Error(ErrorCode::kConfigError, "sigmas must be >= 0");
    }
  }

  static SceneConfig FromFile(const std::filesystem::path& path) {
    KeyValueConfig kv(path);
    SceneConfig cfg = FromKeyValues(&kv);
    kv.Finish();
    return cfg;
  }

  static SceneConfig FromKeyValues(KeyValueConfig* kv) {
    SceneConfig cfg;
    cfg.n_points = static_cast<int>(kv->GetInt("n_points", cfg.n_points));
    cfg.n_db_images = static_cast<int>(kv->GetInt("n_db_images", cfg.n_db_images));
    cfg.n_queries = static_cast<int>(kv->GetInt("n_queries", cfg.n_queries));
    cfg.extent = kv->GetDouble("extent", cfg.extent);
    cfg.image_width = static_cast<int>(kv->GetInt("image.width", cfg.image_width));
    cfg.image_height =
        static_cast<int>(kv->GetInt("image.height", cfg.image_height));
    cfg.intrinsics.fx = kv->GetDouble("intrinsics.fx", cfg.intrinsics.fx);
    cfg.intrinsics.fy = kv->GetDouble("intrinsics.fy", cfg.intrinsics.fy);
    cfg.intrinsics.cx = kv->GetDouble("intrinsics.cx", cfg.intrinsics.cx);
    cfg.intrinsics.cy = kv->GetDouble("intrinsics.cy", cfg.intrinsics.cy);
    const std::vector<std::string> fams = kv->GetList("families", {"fam0", "fam1"});
    cfg.families.clear();
    for (const std::string& name : fams) {
      FamilySpec spec;
      spec.name = name;
      spec.dim = static_cast<int>(
          kv->GetInt("family." + name + ".dim", name == "fam1" ? 24 : 32));
      cfg.families.push_back(spec);
    }
    cfg.gdesc_dim = static_cast<int>(kv->GetInt("gdesc_dim", cfg.gdesc_dim));
    cfg.descriptor_noise = kv->GetDouble("descriptor_noise", cfg.descriptor_noise);
    cfg.gdesc_noise = kv->GetDouble("gdesc_noise", cfg.gdesc_noise);
    cfg.ring_radius_factor =
        kv->GetDouble("ring_radius_factor", cfg.ring_radius_factor);
    cfg.arc_degrees = kv->GetDouble("arc_degrees", cfg.arc_degrees);
    cfg.outlier_match_rate =
        kv->GetDouble("outlier_match_rate", cfg.outlier_match_rate);
    cfg.outlier_cross_label =
        kv->GetBool("outlier_cross_label", cfg.outlier_cross_label);
    cfg.label_noise_rate = kv->GetDouble("label_noise_rate", cfg.label_noise_rate);
    cfg.depth_noise_sigma =
        kv->GetDouble("depth_noise_sigma", cfg.depth_noise_sigma);
    cfg.pixel_noise_sigma =
        kv->GetDouble("pixel_noise_sigma", cfg.pixel_noise_sigma);
    cfg.depth_warp = kv->GetBool("depth_warp", cfg.depth_warp);
    cfg.seed = static_cast<std::uint64_t>(kv->GetInt("seed", cfg.seed));
    cfg.Validate();
    return cfg;
  }
};

struct SceneSummary {
  std::filesystem::path root;
  int n_points = 0;
  int n_db_images = 0;
  int n_queries = 0;
  int planted_outliers = 0;
  int corrupted_labels = 0;
};

namespace synth_detail {

constexpr std::uint64_t kTagPoints = 0x01;
constexpr std::uint64_t kTagCodes = 0x02;
constexpr std::uint64_t kTagDbImage = 0x03;
constexpr std::uint64_t kTagQueryImage = 0x04;
constexpr std::uint64_t kTagScales = 0x05;
constexpr std::uint64_t kTagCorruption = 0x06;
constexpr std::uint64_t kTagGdesc = 0x07;

inline ClassTable SceneClasses() {
  ClassTable table;
  table.entries = {{0, "building", false}, {1, "road", false},
                   {2, "vegetation", false}, {3, "terrain", false},
                   {4, "pole", false},     {5, "sign", false},
                   {6, "car", true},       {7, "person", true},
                   {8, "void", false}};
  return table;
}

inline int OctantLabel(const WorldPoint& p) {
  return (p.x() > 0.0 ? 1 : 0) + (p.y() > 0.0 ? 2 : 0) + (p.z() > 0.0 ? 4 : 0);
}

inline Eigen::VectorXd RandomUnit(Rng* rng, int dim) {
  Eigen::VectorXd v(dim);
  for (int i = 0; i < dim; ++i) v(i) = rng->Gaussian();
  v.normalize();
  return v;
}

inline Pose LookAtPose(const Vec3& position, const Vec3& target) {
  const Vec3 forward = (target - position).normalized();
  Vec3 up(0.0, 1.0, 0.0);
  if (std::abs(forward.dot(up)) > 0.99) up = Vec3(1.0, 0.0, 0.0);
  const Vec3 right = forward.cross(up).normalized();
  const Vec3 down = forward.cross(right).normalized();
  Mat3 r;
  r.row(0) = right.transpose();
  r.row(1) = down.transpose();
  r.row(2) = forward.transpose();
  return Pose(r, -(r * position));
}

inline Eigen::VectorXd CameraGdesc(const Pose& pose, double ring_radius, int dim,
                                   double noise, Rng* rng) {
  Eigen::VectorXd raw = Eigen::VectorXd::Zero(dim);
  const Vec3 center = pose.Center();
  const Vec3 forward = pose.rotation().row(2).transpose();
  raw.segment<3>(0) = center / ring_radius;
  raw.segment<3>(3) = forward;
  for (int i = 0; i < dim; ++i) raw(i) += noise * rng->Gaussian();
  raw.normalize();
  return raw;
}

struct GeneratedImage {
  ImageAssets assets;
  std::vector<std::int64_t> kp_point_ids;  // per concatenated keypoint
};

// Projects every point, drops the ones outside the frame or colliding on a
// pixel cell, and emits one keypoint per family for each survivor. Pixel
// noise displaces query detections before the bounds check.
inline GeneratedImage ProjectImage(const SceneConfig& cfg,
                                   const std::vector<WorldPoint>& points,
                                   const std::vector<int>& point_labels,
                                   const std::vector<std::vector<Eigen::VectorXd>>& codes,
                                   const Pose& pose, double pixel_noise,
                                   Rng* rng) {
  GeneratedImage out;
  const int w = cfg.image_width;
  const int h = cfg.image_height;

  struct Accepted {
    int point_idx;
    Pixel pixel;
    double depth;
    int cell_x, cell_y;
  };
  std::vector<Accepted> accepted;
  std::vector<char> claimed(static_cast<size_t>(w) * h, 0);
  for (size_t i = 0; i < points.size(); ++i) {
    const Vec3 pc = pose.ToCamera(points[i]);
    if (!(pc.z() > kMinDepth)) continue;
    Pixel px{cfg.intrinsics.fx * pc.x() / pc.z() + cfg.intrinsics.cx,
             cfg.intrinsics.fy * pc.y() / pc.z() + cfg.intrinsics.cy};
    if (pixel_noise > 0.0) {
      px.u += pixel_noise * rng->Gaussian();
      px.v += pixel_noise * rng->Gaussian();
    }
    if (px.u < 0.0 || px.u > w - 1.0 || px.v < 0.0 || px.v > h - 1.0) continue;
    const int cx = static_cast<int>(std::llround(px.u));
    const int cy = static_cast<int>(std::llround(px.v));
    char& cell = claimed[static_cast<size_t>(cy) * w + cx];
    if (cell) continue;
    cell = 1;
    accepted.push_back({static_cast<int>(i), px, pc.z(), cx, cy});
  }

  // Label map: void background, disks around detections, then exact centers.
  LabelMap labels;
  labels.width = w;
  labels.height = h;
  labels.labels.assign(static_cast<size_t>(w) * h, 8);
  for (const Accepted& a : accepted) {
    for (int dy = -2; dy <= 2; ++dy) {
      for (int dx = -2; dx <= 2; ++dx) {
        const int x = a.cell_x + dx;
        const int y = a.cell_y + dy;
        if (x < 0 || x >= w || y < 0 || y >= h) continue;
        labels.labels[static_cast<size_t>(y) * w + x] =
            static_cast<std::uint16_t>(point_labels[a.point_idx]);
      }
    }
  }
  for (const Accepted& a : accepted) {
    labels.labels[static_cast<size_t>(a.cell_y) * w + a.cell_x] =
        static_cast<std::uint16_t>(point_labels[a.point_idx]);
  }
  out.assets.label_map = std::move(labels);

  for (size_t f = 0; f < cfg.families.size(); ++f) {
    const std::string& family = cfg.families[f].name;
    const int begin = static_cast<int>(out.assets.keypoints.size());
    for (const Accepted& a : accepted) {
      Keypoint kp;
      kp.u = a.pixel.u;
      kp.v = a.pixel.v;
      kp.score = rng->Uniform(0.5, 1.0);
      kp.family = family;
      kp.label = point_labels[a.point_idx];
      Descriptor d;
      d.family = family;
      d.values = codes[a.point_idx][f];
      for (int j = 0; j < d.values.size(); ++j) {
        d.values(j) += cfg.descriptor_noise * rng->Gaussian();
      }
      d.values.normalize();
      out.assets.keypoints.push_back(kp);
      out.assets.descriptors.push_back(std::move(d));
      out.kp_point_ids.push_back(a.point_idx);
    }
    out.assets.family_ranges[family] = {begin,
                                        static_cast<int>(out.assets.keypoints.size())};
  }

  // Depth entries at the claimed cells (filled by the caller for queries).
  DepthMap depth;
  depth.width = w;
  depth.height = h;
  depth.depth.assign(static_cast<size_t>(w) * h, kNoDepthData);
  for (const Accepted& a : accepted) {
    depth.depth[static_cast<size_t>(a.cell_y) * w + a.cell_x] = a.depth;
  }
  out.assets.depth_map = std::move(depth);  // true camera-frame z, pre-warp
  return out;
}

}  // namespace synth_detail

// Generates a ground-truth scene: exact-by-construction assets plus planted,
// flagged corruptions. Byte-identical output for a given config.
inline SceneSummary GenerateScene(const SceneConfig& cfg,
                                  const std::filesystem::path& out_dir) {
  cfg.Validate();
  namespace sd = synth_detail;
  std::filesystem::create_directories(out_dir / "images");

  SceneSummary summary;
  summary.root = out_dir;
  summary.n_db_images = cfg.n_db_images;
  summary.n_queries = cfg.n_queries;

  const ClassTable classes = sd::SceneClasses();
  WriteClassTableFile(out_dir / "classes.txt", classes);

  // Points and per-point per-family descriptor codes.
  Rng point_rng(MixSeeds(cfg.seed, sd::kTagPoints));
  std::vector<WorldPoint> points;
  std::vector<int> point_labels;
  for (int i = 0; i < cfg.n_points; ++i) {
    const double half = cfg.extent / 2.0;
    const WorldPoint p(point_rng.Uniform(-half, half),
                       point_rng.Uniform(-half, half),
                       point_rng.Uniform(-half, half));
    points.push_back(p);
    point_labels.push_back(sd::OctantLabel(p));
  }
  std::vector<std::vector<Eigen::VectorXd>> codes(points.size());
  for (size_t i = 0; i < points.size(); ++i) {
    Rng code_rng(MixSeeds(cfg.seed, MixSeeds(sd::kTagCodes, i)));
    for (const FamilySpec& family : cfg.families) {
      codes[i].push_back(sd::RandomUnit(&code_rng, family.dim));
    }
  }

  // Hidden depth-map scale and optional monotone warp.
  Rng scale_rng(MixSeeds(cfg.seed, sd::kTagScales));
  const double depth_scale = scale_rng.Uniform(0.2, 5.0);
  const double depth_gamma = cfg.depth_warp ? scale_rng.Uniform(0.7, 1.3) : 1.0;

  const double ring_radius = cfg.ring_radius_factor * cfg.extent;
  const double arc = cfg.arc_degrees * M_PI / 180.0;

  io::TextWriter manifest(out_dir / "manifest.txt");
  manifest.Token("MANIFEST").Token("v1");
  manifest.EndLine();
  {
    manifest.Token("FAMILIES");
    for (const FamilySpec& f : cfg.families) manifest.Token(f.name);
    manifest.EndLine();
    manifest.Token("CLASSES").Token("classes.txt");
    manifest.EndLine();
    manifest.Token("SFM").Token("sfm.txt");
    manifest.EndLine();
  }

  const auto write_image = [&](const std::string& name, ImageRole role, int id,
                               const ImageAssets& assets, bool with_depth) {
    manifest.Token("IMAGE")
        .Token(name)
        .Token(role == ImageRole::kDatabase ? "db" : "query")
        .Value(id)
        .Value(cfg.image_width)
        .Value(cfg.image_height)
        .Value(cfg.intrinsics.fx)
        .Value(cfg.intrinsics.fy)
        .Value(cfg.intrinsics.cx)
        .Value(cfg.intrinsics.cy);
    manifest.EndLine();
    for (const FamilySpec& family : cfg.families) {
      const auto range = assets.family_ranges.at(family.name);
      std::vector<Keypoint> kps(assets.keypoints.begin() + range.first,
                                assets.keypoints.begin() + range.second);
      std::vector<Descriptor> descs(assets.descriptors.begin() + range.first,
                                    assets.descriptors.begin() + range.second);
      const std::string kpath = "images/" + name + ".kpts." + family.name + ".txt";
      const std::string dpath = "images/" + name + ".desc." + family.name + ".txt";
      WriteKeypointsFile(out_dir / kpath, family.name, kps);
      WriteDescriptorsFile(out_dir / dpath, family.name, descs);
      manifest.Token("FILE").Token(name).Token("kpts").Token(family.name).Token(kpath);
      manifest.EndLine();
      manifest.Token("FILE").Token(name).Token("desc").Token(family.name).Token(dpath);
      manifest.EndLine();
    }
    const std::string gpath = "images/" + name + ".gdesc.txt";
    WriteGlobalDescriptorFile(out_dir / gpath, assets.global_descriptor);
    manifest.Token("FILE").Token(name).Token("gdesc").Token(gpath);
    manifest.EndLine();
    const std::string lpath = "images/" + name + ".labels.txt";
    WriteLabelMapFile(out_dir / lpath, assets.label_map);
    manifest.Token("FILE").Token(name).Token("lmap").Token(lpath);
    manifest.EndLine();
    if (with_depth) {
      const std::string ppath = "images/" + name + ".depth.txt";
      WriteDepthMapFile(out_dir / ppath, assets.depth_map);
      manifest.Token("FILE").Token(name).Token("dmap").Token(ppath);
      manifest.EndLine();
    }
  };

  const auto pad = [](int i) {
    std::string s = std::to_string(i);
    while (s.size() < 3) s = "0" + s;
    return s;
  };

  // Database images + the SfM skeleton.
  Map sfm;
  for (size_t i = 0; i < points.size(); ++i) {
    MapPoint p;
    p.id = static_cast<std::int64_t>(i);
    p.xyz = points[i];
    p.label = -1;  // assigned by map construction, not the generator
    sfm.points.push_back(p);
  }
  for (int i = 0; i < cfg.n_db_images; ++i) {
    Rng rng(MixSeeds(cfg.seed, MixSeeds(sd::kTagDbImage, i)));
    const double azimuth =
        cfg.n_db_images == 1
            ? 0.0
            : -arc / 2.0 + arc * static_cast<double>(i) / (cfg.n_db_images - 1);
    const Vec3 position(ring_radius * std::sin(azimuth),
                        0.08 * cfg.extent * std::sin(2.3 * azimuth + 0.7),
                        -ring_radius * std::cos(azimuth));
    const Pose pose = sd::LookAtPose(position, Vec3::Zero());

    sd::GeneratedImage gen =
        sd::ProjectImage(cfg, points, point_labels, codes, pose, 0.0, &rng);

    // Database-side label noise exercises the majority vote.
    if (cfg.label_noise_rate > 0.0) {
      const int total = static_cast<int>(gen.assets.keypoints.size());
      const int n_corrupt =
          static_cast<int>(std::floor(cfg.label_noise_rate * total));
      const std::vector<int> perm = rng.Permutation(total);
      for (int c = 0; c < n_corrupt; ++c) {
        Keypoint& kp = gen.assets.keypoints[perm[c]];
        int new_label = kp.label;
        while (new_label == kp.label) {
          new_label = static_cast<int>(rng.UniformInt(8));
        }
        kp.label = new_label;
      }
    }

    Rng gdesc_rng(MixSeeds(cfg.seed, MixSeeds(sd::kTagGdesc, i)));
    gen.assets.global_descriptor =
        sd::CameraGdesc(pose, ring_radius, cfg.gdesc_dim, cfg.gdesc_noise,
                        &gdesc_rng);

    const std::string name = "db_" + pad(i);
    write_image(name, ImageRole::kDatabase, i, gen.assets, false);

    MapImage img;
    img.id = i;
    img.intrinsics = cfg.intrinsics;
    img.pose = pose;
    sfm.images.push_back(img);

    for (size_t kp_idx = 0; kp_idx < gen.kp_point_ids.size(); ++kp_idx) {
      sfm.points[gen.kp_point_ids[kp_idx]].track.push_back(
          TrackObservation{i, static_cast<int>(kp_idx)});
    }
  }

  // Points never observed cannot live in the map.
  {
    std::vector<MapPoint> observed;
    for (MapPoint& p : sfm.points) {
      if (!p.track.empty()) observed.push_back(std::move(p));
    }
    sfm.points = std::move(observed);
  }
  summary.n_points = static_cast<int>(sfm.points.size());
  SaveMap(sfm, out_dir / "sfm.txt");

  // Queries.
  std::vector<GroundTruthPose> gt;
  CorruptionFlags flags;
  for (int q = 0; q < cfg.n_queries; ++q) {
    Rng rng(MixSeeds(cfg.seed, MixSeeds(sd::kTagQueryImage, q)));
    const double azimuth = rng.Uniform(-arc / 2.0, arc / 2.0);
    const double radius = ring_radius * rng.Uniform(0.95, 1.05);
    const Vec3 position(radius * std::sin(azimuth),
                        0.08 * cfg.extent * std::sin(2.3 * azimuth + 0.7) +
                            0.02 * cfg.extent * rng.Gaussian(),
                        -radius * std::cos(azimuth));
    const Vec3 target = 0.02 * cfg.extent *
                        Vec3(rng.Gaussian(), rng.Gaussian(), rng.Gaussian());
    const Pose pose = sd::LookAtPose(position, target);

    sd::GeneratedImage gen = sd::ProjectImage(cfg, points, point_labels, codes,
                                              pose, cfg.pixel_noise_sigma, &rng);

    // Depth map: hidden scale, optional warp, optional multiplicative noise.
    for (double& d : gen.assets.depth_map.depth) {
      if (d == kNoDepthData) continue;
      d = depth_scale * std::pow(d, depth_gamma);
      if (cfg.depth_noise_sigma > 0.0) {
        d *= std::exp(cfg.depth_noise_sigma * rng.Gaussian());
      }
    }

    Rng gdesc_rng(MixSeeds(cfg.seed, MixSeeds(sd::kTagGdesc, 1000 + q)));
    gen.assets.global_descriptor =
        sd::CameraGdesc(pose, ring_radius, cfg.gdesc_dim, cfg.gdesc_noise,
                        &gdesc_rng);

    // Planted corruptions, exact counts, flagged per keypoint.
    const std::string name = "q_" + pad(q);
    const int total = static_cast<int>(gen.assets.keypoints.size());
    std::vector<KeypointFlags> kp_flags(total);
    Rng corrupt_rng(MixSeeds(cfg.seed, MixSeeds(sd::kTagCorruption, q)));

    const int n_outliers =
        static_cast<int>(std::floor(cfg.outlier_match_rate * total));
    summary.planted_outliers += n_outliers;
    {
      const std::vector<int> perm = corrupt_rng.Permutation(total);
      for (int c = 0; c < n_outliers; ++c) {
        const int kp_idx = perm[c];
        const std::int64_t true_point = gen.kp_point_ids[kp_idx];
        Keypoint& kp = gen.assets.keypoints[kp_idx];
        int family_index = 0;
        for (size_t f = 0; f < cfg.families.size(); ++f) {
          if (cfg.families[f].name == kp.family) {
            family_index = static_cast<int>(f);
          }
        }
        std::int64_t decoy = true_point;
        for (int attempt = 0; attempt < 200; ++attempt) {
          const std::int64_t candidate =
              static_cast<std::int64_t>(corrupt_rng.UniformInt(points.size()));
          if (candidate == true_point) continue;
          if (cfg.outlier_cross_label &&
              point_labels[candidate] == kp.label) {
            continue;
          }
          decoy = candidate;
          break;
        }
        if (decoy == true_point) continue;  // no decoy found; leave untouched
        Descriptor& d = gen.assets.descriptors[kp_idx];
        d.values = codes[decoy][family_index];
        for (int j = 0; j < d.values.size(); ++j) {
          d.values(j) += cfg.descriptor_noise * corrupt_rng.Gaussian();
        }
        d.values.normalize();
        kp_flags[kp_idx].is_outlier_match = true;
      }
    }

    const int n_label_noise =
        static_cast<int>(std::floor(cfg.label_noise_rate * total));
    summary.corrupted_labels += n_label_noise;
    {
      const std::vector<int> perm = corrupt_rng.Permutation(total);
      for (int c = 0; c < n_label_noise; ++c) {
        Keypoint& kp = gen.assets.keypoints[perm[c]];
        int new_label = kp.label;
        while (new_label == kp.label) {
          new_label = static_cast<int>(corrupt_rng.UniformInt(8));
        }
        kp.label = new_label;
        kp_flags[perm[c]].is_label_corrupted = true;
      }
    }

    write_image(name, ImageRole::kQuery, 10000 + q, gen.assets, true);
    gt.push_back(GroundTruthPose{name, pose});
    flags[name] = std::move(kp_flags);
  }

  manifest.Close();
  WriteGroundTruth(gt, out_dir / "gt.txt");
  WriteFlags(flags, out_dir / "flags.txt");
  return summary;
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

struct EvalThreshold {
  double translation = 0.25;
  double rotation_deg = 2.0;
};

struct EvalReport {
  int n_queries = 0;
  int n_ok = 0;
  std::vector<std::pair<EvalThreshold, double>> recalls;
  double median_translation = std::numeric_limits<double>::quiet_NaN();
  double median_rotation_deg = std::numeric_limits<double>::quiet_NaN();
};

// Pose recall at each threshold; failed queries count as misses, medians run
// over the successful ones.
inline EvalReport Evaluate(const std::vector<ResultRecord>& results,
                           const std::vector<GroundTruthPose>& ground_truth,
                           const std::vector<EvalThreshold>& thresholds) {
  std::map<std::string, const GroundTruthPose*> gt_index;
  for (const GroundTruthPose& gt : ground_truth) gt_index[gt.name] = &gt;

  EvalReport report;
  report.n_queries = static_cast<int>(results.size());
  std::vector<double> trans_errors, rot_errors;
  std::vector<PoseDelta> deltas;
  for (const ResultRecord& r : results) {
    const auto it = gt_index.find(r.name);
    if (it == gt_index.end()) {
      throw Error(ErrorCode::kNameMismatch,
                  "result '" + r.name + "' has no ground-truth pose");
    }
    if (r.status != LocalizationStatus::kOk) continue;
    ++report.n_ok;
    const PoseDelta d = ComputePoseDelta(r.pose, it->second->pose);
    deltas.push_back(d);
    trans_errors.push_back(d.translation);
    rot_errors.push_back(d.rotation_deg);
  }

  for (const EvalThreshold& t : thresholds) {
    int hits = 0;
    for (const PoseDelta& d : deltas) {
      if (d.translation <= t.translation && d.rotation_deg <= t.rotation_deg) {
        ++hits;
      }
    }
    const double recall =
        results.empty() ? 0.0
                        : static_cast<double>(hits) / static_cast<double>(results.size());
    report.recalls.emplace_back(t, recall);
  }

  const auto median = [](std::vector<double> v) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(v.begin(), v.end());
    const size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
  };
  report.median_translation = median(trans_errors);
  report.median_rotation_deg = median(rot_errors);
  return report;
}

inline void WriteReport(const EvalReport& report,
                        const std::filesystem::path& path) {
  io::TextWriter w(path);
  w.Token("REPORT").Token("v1");
  w.EndLine();
  w.Token("queries").Value(report.n_queries).Token("ok").Value(report.n_ok);
  w.EndLine();
  for (const auto& [threshold, recall] : report.recalls) {
    w.Token("recall")
        .Value(threshold.translation)
        .Value(threshold.rotation_deg)
        .Value(recall);
    w.EndLine();
  }
  w.Token("median_trans").Value(report.median_translation);
  w.EndLine();
  w.Token("median_rot").Value(report.median_rotation_deg);
  w.EndLine();
  w.Close();
}

}  // namespace semloc
