#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "semloc/depth.hpp"
#include "semloc/error.hpp"
#include "semloc/geometry.hpp"
#include "semloc/map.hpp"
#include "semloc/matching.hpp"
#include "semloc/semantic.hpp"

namespace semloc {

namespace io {

// Shortest round-trip decimal form; parsing the output reproduces the exact
// double, which is what the format round-trip contracts rely on.
inline std::string FormatDouble(double value) {
  char buf[40];
  const auto result = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, result.ptr);
}

inline double ParseDouble(std::string_view token, const std::string& context) {
  double value = 0.0;
  const auto result =
      std::from_chars(token.data(), token.data() + token.size(), value);
  if (result.ec != std::errc{} || result.ptr != token.data() + token.size()) {
    throw Error(ErrorCode::kFormatError,
                context + ": expected a number, got '" + std::string(token) + "'");
  }
  return value;
}

inline std::int64_t ParseInt(std::string_view token, const std::string& context) {
  std::int64_t value = 0;
  const auto result =
      std::from_chars(token.data(), token.data() + token.size(), value);
  if (result.ec != std::errc{} || result.ptr != token.data() + token.size()) {
    throw Error(ErrorCode::kFormatError,
                context + ": expected an integer, got '" + std::string(token) + "'");
  }
  return value;
}

// Line-oriented reader: UTF-8, LF endings, '#' starts a comment, blank lines
// skipped. Errors carry file and line number.
class TextReader {
 public:
  explicit TextReader(const std::filesystem::path& path) : path_(path.string()) {
    std::ifstream in(path);
    if (!in) {
      throw Error(ErrorCode::kMissingAsset, "cannot open " + path_);
    }
    std::string line;
    int number = 0;
    while (std::getline(in, line)) {
      ++number;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      const size_t hash = line.find('#');
      if (hash != std::string::npos) line.resize(hash);
      std::vector<std::string> tokens;
      std::istringstream stream(line);
      std::string token;
      while (stream >> token) tokens.push_back(token);
      if (!tokens.empty()) {
        lines_.push_back({number, std::move(tokens)});
      }
    }
  }

  bool AtEnd() const { return cursor_ >= lines_.size(); }

  const std::vector<std::string>& Peek() const {
    if (AtEnd()) {
      throw Error(ErrorCode::kFormatError, path_ + ": unexpected end of file");
    }
    return lines_[cursor_].tokens;
  }

  std::vector<std::string> Next() {
    auto tokens = Peek();
    ++cursor_;
    return tokens;
  }

  std::string Context() const {
    const int line = AtEnd() ? (lines_.empty() ? 0 : lines_.back().number)
                             : lines_[cursor_].number;
    return path_ + ":" + std::to_string(line);
  }

  double NextDouble(const std::vector<std::string>& tokens, size_t index) const {
    RequireTokens(tokens, index + 1);
    return ParseDouble(tokens[index], Context());
  }

  std::int64_t NextInt(const std::vector<std::string>& tokens, size_t index) const {
    RequireTokens(tokens, index + 1);
    return ParseInt(tokens[index], Context());
  }

  void RequireTokens(const std::vector<std::string>& tokens, size_t count) const {
    if (tokens.size() < count) {
      throw Error(ErrorCode::kFormatError,
                  Context() + ": expected at least " + std::to_string(count) +
                      " fields, got " + std::to_string(tokens.size()));
    }
  }

  // Consumes a "<TAG> v<major> ..." header; rejects other tags and unknown
  // major versions. Returns the tokens after the version field.
  std::vector<std::string> ReadHeader(const std::string& tag, int version) {
    const auto tokens = Next();
    if (tokens[0] != tag) {
      throw Error(ErrorCode::kFormatError,
                  Context() + ": expected '" + tag + "' header, got '" +
                      tokens[0] + "'");
    }
    RequireTokens(tokens, 2);
    const std::string& v = tokens[1];
    if (v.size() < 2 || v[0] != 'v') {
      throw Error(ErrorCode::kFormatError,
                  Context() + ": malformed version field '" + v + "'");
    }
    const std::int64_t major = ParseInt(v.substr(1), Context());
    if (major != version) {
      throw Error(ErrorCode::kVersionMismatch,
                  Context() + ": " + tag + " version " + std::to_string(major) +
                      " unsupported (expected " + std::to_string(version) + ")");
    }
    return std::vector<std::string>(tokens.begin() + 2, tokens.end());
  }

  const std::string& path() const { return path_; }

 private:
  struct Line {
    int number;
    std::vector<std::string> tokens;
  };
  std::string path_;
  std::vector<Line> lines_;
  size_t cursor_ = 0;
};

class TextWriter {
 public:
  explicit TextWriter(const std::filesystem::path& path) : path_(path.string()) {
    const auto parent = path.parent_path();
    if (!parent.empty()) std::filesystem::create_directories(parent);
    out_.open(path, std::ios::out | std::ios::trunc);
    if (!out_) {
      throw Error(ErrorCode::kIo, "cannot write " + path_);
    }
  }

  TextWriter& Token(const std::string& s) {
    if (!line_empty_) out_ << ' ';
    out_ << s;
    line_empty_ = false;
    return *this;
  }

  TextWriter& Value(double v) { return Token(FormatDouble(v)); }
  TextWriter& Value(int v) { return Token(std::to_string(v)); }
  TextWriter& Value(std::int64_t v) { return Token(std::to_string(v)); }

  void EndLine() {
    out_ << '\n';
    line_empty_ = true;
  }

  void Close() {
    out_.close();
    if (!out_) {
      throw Error(ErrorCode::kIo, "write failed for " + path_);
    }
  }

 private:
  std::string path_;
  std::ofstream out_;
  bool line_empty_ = true;
};

inline void WritePoseTokens(TextWriter* w, const Pose& pose) {
  const auto& q = pose.quaternion();
  w->Value(q.w()).Value(q.x()).Value(q.y()).Value(q.z());
  w->Value(pose.translation().x())
      .Value(pose.translation().y())
      .Value(pose.translation().z());
}

inline Pose ReadPoseTokens(const TextReader& r,
                           const std::vector<std::string>& tokens,
                           size_t offset) {
  r.RequireTokens(tokens, offset + 7);
  const double qw = r.NextDouble(tokens, offset);
  const double qx = r.NextDouble(tokens, offset + 1);
  const double qy = r.NextDouble(tokens, offset + 2);
  const double qz = r.NextDouble(tokens, offset + 3);
  const Vec3 t(r.NextDouble(tokens, offset + 4), r.NextDouble(tokens, offset + 5),
               r.NextDouble(tokens, offset + 6));
  try {
    return Pose::FromQuaternion(qw, qx, qy, qz, t);
  } catch (const Error& e) {
    throw Error(ErrorCode::kFormatError, r.Context() + ": " + e.what());
  }
}

}  // namespace io

// ---------------------------------------------------------------------------
// Per-image asset files
// ---------------------------------------------------------------------------

inline void WriteKeypointsFile(const std::filesystem::path& path,
                               const std::string& family,
                               const std::vector<Keypoint>& keypoints) {
  io::TextWriter w(path);
  w.Token("KPTS").Token("v1").Token(family)
      .Value(static_cast<int>(keypoints.size()));
  w.EndLine();
  for (const Keypoint& kp : keypoints) {
    w.Value(kp.u).Value(kp.v).Value(kp.score).Value(kp.label);
    w.EndLine();
  }
  w.Close();
}

inline std::vector<Keypoint> LoadKeypointsFile(const std::filesystem::path& path,
                                               const std::string& expect_family) {
  io::TextReader r(path);
  const auto header = r.ReadHeader("KPTS", 1);
  if (header.size() < 2) {
    throw Error(ErrorCode::kFormatError,
                r.Context() + ": KPTS header needs family and count");
  }
  if (header[0] != expect_family) {
    throw Error(ErrorCode::kFormatError,
                r.Context() + ": family '" + header[0] + "', manifest says '" +
                    expect_family + "'");
  }
  const std::int64_t count = io::ParseInt(header[1], r.Context());
  std::vector<Keypoint> keypoints;
  keypoints.reserve(count);
  for (std::int64_t i = 0; i < count; ++i) {
    const auto tokens = r.Next();
    r.RequireTokens(tokens, 4);
    Keypoint kp;
    kp.u = io::ParseDouble(tokens[0], r.Context());
    kp.v = io::ParseDouble(tokens[1], r.Context());
    kp.score = io::ParseDouble(tokens[2], r.Context());
    kp.label = static_cast<int>(io::ParseInt(tokens[3], r.Context()));
    kp.family = expect_family;
    if (!(kp.score >= 0.0) || !(kp.score <= 1.0)) {
      throw Error(ErrorCode::kFormatError,
                  r.Context() + ": keypoint score outside [0,1]");
    }
    keypoints.push_back(kp);
  }
  return keypoints;
}

inline void WriteDescriptorsFile(const std::filesystem::path& path,
                                 const std::string& family,
                                 const std::vector<Descriptor>& descriptors) {
  io::TextWriter w(path);
  const int dim =
      descriptors.empty() ? 0 : static_cast<int>(descriptors.front().values.size());
  w.Token("DESC").Token("v1").Token(family)
      .Value(static_cast<int>(descriptors.size()))
      .Value(dim);
  w.EndLine();
  for (const Descriptor& d : descriptors) {
    for (int i = 0; i < d.values.size(); ++i) w.Value(d.values(i));
    w.EndLine();
  }
  w.Close();
}

inline std::vector<Descriptor> LoadDescriptorsFile(
    const std::filesystem::path& path, const std::string& expect_family) {
  io::TextReader r(path);
  const auto header = r.ReadHeader("DESC", 1);
  if (header.size() < 3) {
    throw Error(ErrorCode::kFormatError,
                r.Context() + ": DESC header needs family, count and dim");
  }
  if (header[0] != expect_family) {
    throw Error(ErrorCode::kFormatError,
                r.Context() + ": family '" + header[0] + "', manifest says '" +
                    expect_family + "'");
  }
  const std::int64_t count = io::ParseInt(header[1], r.Context());
  const std::int64_t dim = io::ParseInt(header[2], r.Context());
  std::vector<Descriptor> descriptors;
  descriptors.reserve(count);
  for (std::int64_t i = 0; i < count; ++i) {
    const auto tokens = r.Next();
    r.RequireTokens(tokens, dim);
    Descriptor d;
    d.family = expect_family;
    d.values = Eigen::VectorXd(dim);
    for (std::int64_t j = 0; j < dim; ++j) {
      d.values(j) = io::ParseDouble(tokens[j], r.Context());
    }
    if (std::abs(d.values.norm() - 1.0) > 1e-6) {
      throw Error(ErrorCode::kFormatError,
                  r.Context() + ": descriptor row " + std::to_string(i) +
                      " is not unit norm");
    }
    descriptors.push_back(std::move(d));
  }
  return descriptors;
}

inline void WriteGlobalDescriptorFile(const std::filesystem::path& path,
                                      const Eigen::VectorXd& gd) {
  io::TextWriter w(path);
  w.Token("GDESC").Token("v1").Value(static_cast<int>(gd.size()));
  w.EndLine();
  for (int i = 0; i < gd.size(); ++i) w.Value(gd(i));
  w.EndLine();
  w.Close();
}

inline Eigen::VectorXd LoadGlobalDescriptorFile(const std::filesystem::path& path) {
  io::TextReader r(path);
  const auto header = r.ReadHeader("GDESC", 1);
  if (header.empty()) {
    throw Error(ErrorCode::kFormatError, r.Context() + ": GDESC header needs dim");
  }
  const std::int64_t dim = io::ParseInt(header[0], r.Context());
  const auto tokens = r.Next();
  r.RequireTokens(tokens, dim);
  Eigen::VectorXd gd(dim);
  for (std::int64_t i = 0; i < dim; ++i) {
    gd(i) = io::ParseDouble(tokens[i], r.Context());
  }
  return gd;
}

inline void WriteLabelMapFile(const std::filesystem::path& path,
                              const LabelMap& map) {
  io::TextWriter w(path);
  w.Token("LMAP").Token("v1").Value(map.width).Value(map.height);
  w.EndLine();
  for (int y = 0; y < map.height; ++y) {
    for (int x = 0; x < map.width; ++x) {
      w.Value(static_cast<int>(map.labels[static_cast<size_t>(y) * map.width + x]));
    }
    w.EndLine();
  }
  w.Close();
}

inline LabelMap LoadLabelMapFile(const std::filesystem::path& path) {
  io::TextReader r(path);
  const auto header = r.ReadHeader("LMAP", 1);
  if (header.size() < 2) {
    throw Error(ErrorCode::kFormatError, r.Context() + ": LMAP header needs w h");
  }
  LabelMap map;
  map.width = static_cast<int>(io::ParseInt(header[0], r.Context()));
  map.height = static_cast<int>(io::ParseInt(header[1], r.Context()));
  map.labels.reserve(static_cast<size_t>(map.width) * map.height);
  for (int y = 0; y < map.height; ++y) {
    const auto tokens = r.Next();
    r.RequireTokens(tokens, map.width);
    for (int x = 0; x < map.width; ++x) {
      map.labels.push_back(
          static_cast<std::uint16_t>(io::ParseInt(tokens[x], r.Context())));
    }
  }
  return map;
}

inline void WriteDepthMapFile(const std::filesystem::path& path,
                              const DepthMap& map) {
  io::TextWriter w(path);
  w.Token("DMAP").Token("v1").Value(map.width).Value(map.height);
  w.EndLine();
  for (int y = 0; y < map.height; ++y) {
    for (int x = 0; x < map.width; ++x) {
      w.Value(map.depth[static_cast<size_t>(y) * map.width + x]);
    }
    w.EndLine();
  }
  w.Close();
}

inline DepthMap LoadDepthMapFile(const std::filesystem::path& path) {
  io::TextReader r(path);
  const auto header = r.ReadHeader("DMAP", 1);
  if (header.size() < 2) {
    throw Error(ErrorCode::kFormatError, r.Context() + ": DMAP header needs w h");
  }
  DepthMap map;
  map.width = static_cast<int>(io::ParseInt(header[0], r.Context()));
  map.height = static_cast<int>(io::ParseInt(header[1], r.Context()));
  map.depth.reserve(static_cast<size_t>(map.width) * map.height);
  for (int y = 0; y < map.height; ++y) {
    const auto tokens = r.Next();
    r.RequireTokens(tokens, map.width);
    for (int x = 0; x < map.width; ++x) {
      const double d = io::ParseDouble(tokens[x], r.Context());
      if (d < 0.0) {
        throw Error(ErrorCode::kFormatError,
                    r.Context() + ": negative depth value");
      }
      map.depth.push_back(d);
    }
  }
  return map;
}

inline void WriteClassTableFile(const std::filesystem::path& path,
                                const ClassTable& table) {
  io::TextWriter w(path);
  w.Token("CLASSES").Token("v1").Value(static_cast<int>(table.entries.size()));
  w.EndLine();
  for (const ClassTable::Entry& e : table.entries) {
    w.Value(e.id).Token(e.name).Value(e.dynamic ? 1 : 0);
    w.EndLine();
  }
  w.Close();
}

inline ClassTable LoadClassTableFile(const std::filesystem::path& path) {
  io::TextReader r(path);
  const auto header = r.ReadHeader("CLASSES", 1);
  if (header.empty()) {
    throw Error(ErrorCode::kFormatError, r.Context() + ": CLASSES header needs count");
  }
  const std::int64_t count = io::ParseInt(header[0], r.Context());
  ClassTable table;
  for (std::int64_t i = 0; i < count; ++i) {
    const auto tokens = r.Next();
    r.RequireTokens(tokens, 3);
    ClassTable::Entry e;
    e.id = static_cast<int>(io::ParseInt(tokens[0], r.Context()));
    e.name = tokens[1];
    e.dynamic = io::ParseInt(tokens[2], r.Context()) != 0;
    table.entries.push_back(e);
  }
  return table;
}

// ---------------------------------------------------------------------------
// Asset bundle (manifest-driven directory of per-image files)
// ---------------------------------------------------------------------------

enum class ImageRole { kDatabase, kQuery };

struct ImageAssets {
  std::string name;
  ImageRole role = ImageRole::kDatabase;
  int id = -1;
  int width = 0;
  int height = 0;
  Intrinsics intrinsics;
  std::vector<Keypoint> keypoints;      // concatenated in family order
  std::vector<Descriptor> descriptors;  // parallel to keypoints
  std::map<std::string, std::pair<int, int>> family_ranges;  // [begin, end)
  LabelMap label_map;                   // may be empty
  DepthMap depth_map;                   // may be empty
  Eigen::VectorXd global_descriptor;    // may be empty
};

struct AssetBundle {
  std::filesystem::path root;
  std::vector<std::string> families;
  ClassTable class_table;
  std::optional<std::filesystem::path> sfm_path;
  std::vector<ImageAssets> images;  // manifest order

  const ImageAssets* FindImage(const std::string& name) const {
    for (const ImageAssets& img : images) {
      if (img.name == name) return &img;
    }
    return nullptr;
  }
};

namespace io {

struct ManifestFileEntry {
  std::string kind;    // kpts | desc | gdesc | lmap | dmap
  std::string family;  // for kpts/desc
  std::string relpath;
};

struct ManifestImageEntry {
  std::string name;
  ImageRole role;
  int id;
  int width;
  int height;
  Intrinsics intrinsics;
  std::vector<ManifestFileEntry> files;
};

struct Manifest {
  std::vector<std::string> families;
  std::string classes_relpath;
  std::string sfm_relpath;  // optional
  std::vector<ManifestImageEntry> images;
};

inline Manifest LoadManifest(const std::filesystem::path& path) {
  TextReader r(path);
  r.ReadHeader("MANIFEST", 1);
  Manifest manifest;
  std::map<std::string, size_t> image_index;
  while (!r.AtEnd()) {
    const auto tokens = r.Next();
    if (tokens[0] == "FAMILIES") {
      manifest.families.assign(tokens.begin() + 1, tokens.end());
    } else if (tokens[0] == "CLASSES") {
      r.RequireTokens(tokens, 2);
      manifest.classes_relpath = tokens[1];
    } else if (tokens[0] == "SFM") {
      r.RequireTokens(tokens, 2);
      manifest.sfm_relpath = tokens[1];
    } else if (tokens[0] == "IMAGE") {
      r.RequireTokens(tokens, 10);
      ManifestImageEntry entry;
      entry.name = tokens[1];
      if (tokens[2] == "db") {
        entry.role = ImageRole::kDatabase;
      } else if (tokens[2] == "query") {
        entry.role = ImageRole::kQuery;
      } else {
        throw Error(ErrorCode::kFormatError,
                    r.Context() + ": unknown image role '" + tokens[2] + "'");
      }
      entry.id = static_cast<int>(ParseInt(tokens[3], r.Context()));
      entry.width = static_cast<int>(ParseInt(tokens[4], r.Context()));
      entry.height = static_cast<int>(ParseInt(tokens[5], r.Context()));
      entry.intrinsics = Intrinsics{
          ParseDouble(tokens[6], r.Context()), ParseDouble(tokens[7], r.Context()),
          ParseDouble(tokens[8], r.Context()), ParseDouble(tokens[9], r.Context())};
      image_index[entry.name] = manifest.images.size();
      manifest.images.push_back(entry);
    } else if (tokens[0] == "FILE") {
      r.RequireTokens(tokens, 4);
      const auto it = image_index.find(tokens[1]);
      if (it == image_index.end()) {
        throw Error(ErrorCode::kFormatError,
                    r.Context() + ": FILE for undeclared image '" + tokens[1] + "'");
      }
      ManifestFileEntry file;
      file.kind = tokens[2];
      if (file.kind == "kpts" || file.kind == "desc") {
        r.RequireTokens(tokens, 5);
        file.family = tokens[3];
        file.relpath = tokens[4];
      } else if (file.kind == "gdesc" || file.kind == "lmap" || file.kind == "dmap") {
        file.relpath = tokens[3];
      } else {
        throw Error(ErrorCode::kFormatError,
                    r.Context() + ": unknown file kind '" + file.kind + "'");
      }
      manifest.images[it->second].files.push_back(file);
    } else {
      throw Error(ErrorCode::kFormatError,
                  r.Context() + ": unknown manifest directive '" + tokens[0] + "'");
    }
  }
  return manifest;
}

}  // namespace io

// Loads a manifest-described image: keypoints and descriptors concatenated in
// the bundle's family order, optional label/depth maps, optional global
// descriptor. Unlabeled keypoints (-1) pick up their class from the label map.
inline ImageAssets LoadImageAssets(const std::filesystem::path& root,
                                   const io::ManifestImageEntry& entry,
                                   const std::vector<std::string>& families) {
  ImageAssets assets;
  assets.name = entry.name;
  assets.role = entry.role;
  assets.id = entry.id;
  assets.width = entry.width;
  assets.height = entry.height;
  assets.intrinsics = entry.intrinsics;
  assets.intrinsics.Validate();

  const auto find_file = [&](const std::string& kind,
                             const std::string& family) -> const io::ManifestFileEntry* {
    for (const io::ManifestFileEntry& f : entry.files) {
      if (f.kind == kind && f.family == family) return &f;
    }
    return nullptr;
  };

  if (const auto* f = find_file("lmap", "")) {
    assets.label_map = LoadLabelMapFile(root / f->relpath);
  }
  if (const auto* f = find_file("dmap", "")) {
    assets.depth_map = LoadDepthMapFile(root / f->relpath);
  }
  if (const auto* f = find_file("gdesc", "")) {
    assets.global_descriptor = LoadGlobalDescriptorFile(root / f->relpath);
  }

  for (const std::string& family : families) {
    const auto* kf = find_file("kpts", family);
    const auto* df = find_file("desc", family);
    if (kf == nullptr && df == nullptr) continue;
    if (kf == nullptr || df == nullptr) {
      throw Error(ErrorCode::kMissingAsset,
                  "image " + entry.name + " family " + family +
                      " needs both keypoints and descriptors");
    }
    std::vector<Keypoint> kps = LoadKeypointsFile(root / kf->relpath, family);
    std::vector<Descriptor> descs = LoadDescriptorsFile(root / df->relpath, family);
    if (kps.size() != descs.size()) {
      throw Error(ErrorCode::kFormatError,
                  "image " + entry.name + " family " + family + ": " +
                      std::to_string(kps.size()) + " keypoints vs " +
                      std::to_string(descs.size()) + " descriptors");
    }
    const int begin = static_cast<int>(assets.keypoints.size());
    for (size_t i = 0; i < kps.size(); ++i) {
      Keypoint kp = kps[i];
      if (kp.u < -0.5 || kp.u > entry.width - 0.5 || kp.v < -0.5 ||
          kp.v > entry.height - 0.5) {
        throw Error(ErrorCode::kFormatError,
                    "image " + entry.name + ": keypoint outside image bounds");
      }
      if (kp.label < 0 && !assets.label_map.Empty()) {
        kp.label = static_cast<int>(SampleLabel(assets.label_map, kp.AsPixel()));
      }
      assets.keypoints.push_back(kp);
      assets.descriptors.push_back(descs[i]);
    }
    assets.family_ranges[family] = {begin,
                                    static_cast<int>(assets.keypoints.size())};
  }
  return assets;
}

inline AssetBundle LoadAssetBundle(const std::filesystem::path& root) {
  const io::Manifest manifest = io::LoadManifest(root / "manifest.txt");
  AssetBundle bundle;
  bundle.root = root;
  bundle.families = manifest.families;
  if (!manifest.classes_relpath.empty()) {
    bundle.class_table = LoadClassTableFile(root / manifest.classes_relpath);
  }
  if (!manifest.sfm_relpath.empty()) {
    bundle.sfm_path = root / manifest.sfm_relpath;
  }
  for (const io::ManifestImageEntry& entry : manifest.images) {
    bundle.images.push_back(LoadImageAssets(root, entry, manifest.families));
  }
  return bundle;
}

// ---------------------------------------------------------------------------
// Map file
// ---------------------------------------------------------------------------

inline void SaveMap(const Map& map, const std::filesystem::path& path) {
  io::TextWriter w(path);
  w.Token("MAP").Token("v1");
  w.EndLine();

  w.Token("CLASSES").Value(static_cast<int>(map.class_table.entries.size()));
  w.EndLine();
  for (const ClassTable::Entry& e : map.class_table.entries) {
    w.Value(e.id).Token(e.name).Value(e.dynamic ? 1 : 0);
    w.EndLine();
  }

  w.Token("IMAGES").Value(static_cast<int>(map.images.size()));
  w.EndLine();
  for (const MapImage& img : map.images) {
    w.Value(img.id)
        .Value(img.intrinsics.fx)
        .Value(img.intrinsics.fy)
        .Value(img.intrinsics.cx)
        .Value(img.intrinsics.cy);
    io::WritePoseTokens(&w, img.pose);
    w.EndLine();
  }

  int gdesc_count = 0;
  int gdesc_dim = 0;
  for (const MapImage& img : map.images) {
    if (img.global_descriptor.size() > 0) {
      ++gdesc_count;
      gdesc_dim = static_cast<int>(img.global_descriptor.size());
    }
  }
  w.Token("IMGDESC").Value(gdesc_count).Value(gdesc_dim);
  w.EndLine();
  for (const MapImage& img : map.images) {
    if (img.global_descriptor.size() == 0) continue;
    w.Value(img.id);
    for (int i = 0; i < img.global_descriptor.size(); ++i) {
      w.Value(img.global_descriptor(i));
    }
    w.EndLine();
  }

  w.Token("POINTS").Value(static_cast<int>(map.points.size()));
  w.EndLine();
  for (const MapPoint& p : map.points) {
    w.Value(p.id).Value(p.xyz.x()).Value(p.xyz.y()).Value(p.xyz.z()).Value(p.label);
    w.EndLine();
  }

  std::int64_t n_tracks = 0;
  for (const MapPoint& p : map.points) n_tracks += p.track.size();
  w.Token("TRACKS").Value(n_tracks);
  w.EndLine();
  for (const MapPoint& p : map.points) {
    for (const TrackObservation& obs : p.track) {
      w.Value(p.id).Value(obs.image_id).Value(obs.keypoint_idx);
      w.EndLine();
    }
  }

  std::set<std::string> families;
  for (const MapPoint& p : map.points) {
    for (const auto& [family, desc] : p.descriptors) families.insert(family);
  }
  for (const std::string& family : families) {
    int count = 0;
    int dim = 0;
    for (const MapPoint& p : map.points) {
      const auto it = p.descriptors.find(family);
      if (it != p.descriptors.end()) {
        ++count;
        dim = static_cast<int>(it->second.values.size());
      }
    }
    w.Token("PDESC").Token(family).Value(count).Value(dim);
    w.EndLine();
    for (const MapPoint& p : map.points) {
      const auto it = p.descriptors.find(family);
      if (it == p.descriptors.end()) continue;
      w.Value(p.id).Value(it->second.score);
      for (int i = 0; i < it->second.values.size(); ++i) {
        w.Value(it->second.values(i));
      }
      w.EndLine();
    }
  }
  w.Close();
}

inline Map LoadMap(const std::filesystem::path& path) {
  io::TextReader r(path);
  r.ReadHeader("MAP", 1);
  Map map;
  std::map<std::int64_t, size_t> point_index;

  while (!r.AtEnd()) {
    const auto section = r.Next();
    if (section[0] == "CLASSES") {
      const std::int64_t count = r.NextInt(section, 1);
      for (std::int64_t i = 0; i < count; ++i) {
        const auto tokens = r.Next();
        r.RequireTokens(tokens, 3);
        ClassTable::Entry e;
        e.id = static_cast<int>(io::ParseInt(tokens[0], r.Context()));
        e.name = tokens[1];
        e.dynamic = io::ParseInt(tokens[2], r.Context()) != 0;
        map.class_table.entries.push_back(e);
      }
    } else if (section[0] == "IMAGES") {
      const std::int64_t count = r.NextInt(section, 1);
      for (std::int64_t i = 0; i < count; ++i) {
        const auto tokens = r.Next();
        r.RequireTokens(tokens, 12);
        MapImage img;
        img.id = static_cast<int>(io::ParseInt(tokens[0], r.Context()));
        img.intrinsics = Intrinsics{io::ParseDouble(tokens[1], r.Context()),
                                    io::ParseDouble(tokens[2], r.Context()),
                                    io::ParseDouble(tokens[3], r.Context()),
                                    io::ParseDouble(tokens[4], r.Context())};
        img.pose = io::ReadPoseTokens(r, tokens, 5);
        map.images.push_back(img);
      }
    } else if (section[0] == "IMGDESC") {
      const std::int64_t count = r.NextInt(section, 1);
      const std::int64_t dim = r.NextInt(section, 2);
      for (std::int64_t i = 0; i < count; ++i) {
        const auto tokens = r.Next();
        r.RequireTokens(tokens, 1 + dim);
        const int image_id = static_cast<int>(io::ParseInt(tokens[0], r.Context()));
        MapImage* img = nullptr;
        for (MapImage& candidate : map.images) {
          if (candidate.id == image_id) {
            img = &candidate;
            break;
          }
        }
        if (img == nullptr) {
          throw Error(ErrorCode::kFormatError,
                      r.Context() + ": IMGDESC references unknown image " +
                          std::to_string(image_id));
        }
        img->global_descriptor = Eigen::VectorXd(dim);
        for (std::int64_t j = 0; j < dim; ++j) {
          img->global_descriptor(j) = io::ParseDouble(tokens[1 + j], r.Context());
        }
      }
    } else if (section[0] == "POINTS") {
      const std::int64_t count = r.NextInt(section, 1);
      for (std::int64_t i = 0; i < count; ++i) {
        const auto tokens = r.Next();
        r.RequireTokens(tokens, 5);
        MapPoint p;
        p.id = io::ParseInt(tokens[0], r.Context());
        p.xyz = WorldPoint(io::ParseDouble(tokens[1], r.Context()),
                           io::ParseDouble(tokens[2], r.Context()),
                           io::ParseDouble(tokens[3], r.Context()));
        p.label = static_cast<int>(io::ParseInt(tokens[4], r.Context()));
        point_index[p.id] = map.points.size();
        map.points.push_back(p);
      }
    } else if (section[0] == "TRACKS") {
      const std::int64_t count = r.NextInt(section, 1);
      for (std::int64_t i = 0; i < count; ++i) {
        const auto tokens = r.Next();
        r.RequireTokens(tokens, 3);
        const std::int64_t point_id = io::ParseInt(tokens[0], r.Context());
        const auto it = point_index.find(point_id);
        if (it == point_index.end()) {
          throw Error(ErrorCode::kFormatError,
                      r.Context() + ": track references unknown point " +
                          std::to_string(point_id));
        }
        TrackObservation obs;
        obs.image_id = static_cast<int>(io::ParseInt(tokens[1], r.Context()));
        obs.keypoint_idx = static_cast<int>(io::ParseInt(tokens[2], r.Context()));
        map.points[it->second].track.push_back(obs);
      }
    } else if (section[0] == "PDESC") {
      r.RequireTokens(section, 4);
      const std::string family = section[1];
      const std::int64_t count = io::ParseInt(section[2], r.Context());
      const std::int64_t dim = io::ParseInt(section[3], r.Context());
      for (std::int64_t i = 0; i < count; ++i) {
        const auto tokens = r.Next();
        r.RequireTokens(tokens, 2 + dim);
        const std::int64_t point_id = io::ParseInt(tokens[0], r.Context());
        const auto it = point_index.find(point_id);
        if (it == point_index.end()) {
          throw Error(ErrorCode::kFormatError,
                      r.Context() + ": PDESC references unknown point " +
                          std::to_string(point_id));
        }
        PointDescriptor desc;
        desc.score = io::ParseDouble(tokens[1], r.Context());
        desc.values = Eigen::VectorXd(dim);
        for (std::int64_t j = 0; j < dim; ++j) {
          desc.values(j) = io::ParseDouble(tokens[2 + j], r.Context());
        }
        map.points[it->second].descriptors[family] = std::move(desc);
      }
    } else {
      throw Error(ErrorCode::kFormatError,
                  r.Context() + ": unknown map section '" + section[0] + "'");
    }
  }
  return map;
}

// ---------------------------------------------------------------------------
// Results, ground truth, corruption flags
// ---------------------------------------------------------------------------

enum class LocalizationStatus { kOk, kRetrievalFailed, kConsensusFailed };

inline const char* StatusName(LocalizationStatus s) {
  switch (s) {
    case LocalizationStatus::kOk: return "ok";
    case LocalizationStatus::kRetrievalFailed: return "retrieval_failed";
    case LocalizationStatus::kConsensusFailed: return "consensus_failed";
  }
  return "unknown";
}

inline LocalizationStatus ParseStatus(const std::string& s,
                                      const std::string& context) {
  if (s == "ok") return LocalizationStatus::kOk;
  if (s == "retrieval_failed") return LocalizationStatus::kRetrievalFailed;
  if (s == "consensus_failed") return LocalizationStatus::kConsensusFailed;
  throw Error(ErrorCode::kFormatError, context + ": unknown status '" + s + "'");
}

struct ResultRecord {
  std::string name;
  LocalizationStatus status = LocalizationStatus::kConsensusFailed;
  Pose pose;  // identity for failed queries
  int inliers = 0;
  std::vector<std::pair<std::string, std::string>> diagnostics;
};

inline void WriteResults(const std::vector<ResultRecord>& results,
                         const std::filesystem::path& path) {
  io::TextWriter w(path);
  w.Token("RES").Token("v1");
  w.EndLine();
  for (const ResultRecord& r : results) {
    w.Token(r.name).Token(StatusName(r.status));
    io::WritePoseTokens(&w, r.pose);
    w.Value(r.inliers);
    w.EndLine();
    for (const auto& [key, value] : r.diagnostics) {
      w.Token("DIAG").Token(key + "=" + value);
      w.EndLine();
    }
  }
  w.Close();
}

inline std::vector<ResultRecord> LoadResults(const std::filesystem::path& path) {
  io::TextReader r(path);
  r.ReadHeader("RES", 1);
  std::vector<ResultRecord> results;
  while (!r.AtEnd()) {
    const auto tokens = r.Next();
    if (tokens[0] == "DIAG") {
      if (results.empty()) {
        throw Error(ErrorCode::kFormatError,
                    r.Context() + ": DIAG before any result row");
      }
      r.RequireTokens(tokens, 2);
      const std::string& kv = tokens[1];
      const size_t eq = kv.find('=');
      if (eq == std::string::npos) {
        throw Error(ErrorCode::kFormatError,
                    r.Context() + ": DIAG entry is not key=value");
      }
      results.back().diagnostics.emplace_back(kv.substr(0, eq), kv.substr(eq + 1));
      continue;
    }
    r.RequireTokens(tokens, 10);
    ResultRecord record;
    record.name = tokens[0];
    record.status = ParseStatus(tokens[1], r.Context());
    record.pose = io::ReadPoseTokens(r, tokens, 2);
    record.inliers = static_cast<int>(io::ParseInt(tokens[9], r.Context()));
    results.push_back(std::move(record));
  }
  return results;
}

struct GroundTruthPose {
  std::string name;
  Pose pose;
};

inline void WriteGroundTruth(const std::vector<GroundTruthPose>& poses,
                             const std::filesystem::path& path) {
  io::TextWriter w(path);
  w.Token("GT").Token("v1");
  w.EndLine();
  for (const GroundTruthPose& gt : poses) {
    w.Token(gt.name);
    io::WritePoseTokens(&w, gt.pose);
    w.EndLine();
  }
  w.Close();
}

inline std::vector<GroundTruthPose> LoadGroundTruth(
    const std::filesystem::path& path) {
  io::TextReader r(path);
  r.ReadHeader("GT", 1);
  std::vector<GroundTruthPose> poses;
  while (!r.AtEnd()) {
    const auto tokens = r.Next();
    r.RequireTokens(tokens, 8);
    GroundTruthPose gt;
    gt.name = tokens[0];
    gt.pose = io::ReadPoseTokens(r, tokens, 1);
    poses.push_back(gt);
  }
  return poses;
}

struct KeypointFlags {
  bool is_outlier_match = false;
  bool is_label_corrupted = false;
};

using CorruptionFlags = std::map<std::string, std::vector<KeypointFlags>>;

inline void WriteFlags(const CorruptionFlags& flags,
                       const std::filesystem::path& path) {
  io::TextWriter w(path);
  w.Token("FLAGS").Token("v1");
  w.EndLine();
  for (const auto& [name, entries] : flags) {
    for (size_t i = 0; i < entries.size(); ++i) {
      w.Token(name)
          .Value(static_cast<int>(i))
          .Value(entries[i].is_outlier_match ? 1 : 0)
          .Value(entries[i].is_label_corrupted ? 1 : 0);
      w.EndLine();
    }
  }
  w.Close();
}

inline CorruptionFlags LoadFlags(const std::filesystem::path& path) {
  io::TextReader r(path);
  r.ReadHeader("FLAGS", 1);
  CorruptionFlags flags;
  while (!r.AtEnd()) {
    const auto tokens = r.Next();
    r.RequireTokens(tokens, 4);
    const std::string& name = tokens[0];
    const size_t idx = static_cast<size_t>(io::ParseInt(tokens[1], r.Context()));
    auto& entries = flags[name];
    if (entries.size() <= idx) entries.resize(idx + 1);
    entries[idx].is_outlier_match = io::ParseInt(tokens[2], r.Context()) != 0;
    entries[idx].is_label_corrupted = io::ParseInt(tokens[3], r.Context()) != 0;
  }
  return flags;
}

// ---------------------------------------------------------------------------
// Flat key = value config files
// ---------------------------------------------------------------------------

// Parses `key = value` lines ('#' comments allowed). Consumers pull typed
// values; Finish() rejects unknown keys so config typos fail loudly.
class KeyValueConfig {
 public:
  KeyValueConfig() = default;

  explicit KeyValueConfig(const std::filesystem::path& path) {
    io::TextReader r(path);
    while (!r.AtEnd()) {
      const auto tokens = r.Next();
      // Accept "key = value", "key=value" and "key = v1 v2 ..." forms.
      std::string joined;
      for (const std::string& t : tokens) {
        if (!joined.empty()) joined += ' ';
        joined += t;
      }
      const size_t eq = joined.find('=');
      if (eq == std::string::npos) {
        throw Error(ErrorCode::kConfigError,
                    r.Context() + ": expected key = value");
      }
      std::string key = joined.substr(0, eq);
      std::string value = joined.substr(eq + 1);
      const auto trim = [](std::string& s) {
        while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.erase(0, 1);
        while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.pop_back();
      };
      trim(key);
      trim(value);
      if (key.empty()) {
        throw Error(ErrorCode::kConfigError, r.Context() + ": empty key");
      }
      if (values_.count(key)) {
        throw Error(ErrorCode::kConfigError,
                    r.Context() + ": duplicate key '" + key + "'");
      }
      values_[key] = value;
    }
  }

  void Set(const std::string& key, const std::string& value) {
    values_[key] = value;
  }

  bool Has(const std::string& key) const { return values_.count(key) != 0; }

  std::string GetString(const std::string& key, const std::string& fallback) {
    consumed_.insert(key);
    const auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
  }

  double GetDouble(const std::string& key, double fallback) {
    consumed_.insert(key);
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    return io::ParseDouble(it->second, "config key " + key);
  }

  std::int64_t GetInt(const std::string& key, std::int64_t fallback) {
    consumed_.insert(key);
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    return io::ParseInt(it->second, "config key " + key);
  }

  bool GetBool(const std::string& key, bool fallback) {
    consumed_.insert(key);
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    if (it->second == "true" || it->second == "1") return true;
    if (it->second == "false" || it->second == "0") return false;
    throw Error(ErrorCode::kConfigError,
                "config key " + key + ": expected true/false, got '" +
                    it->second + "'");
  }

  std::vector<std::string> GetList(const std::string& key,
                                   const std::vector<std::string>& fallback) {
    consumed_.insert(key);
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    std::vector<std::string> items;
    std::string current;
    for (char c : it->second) {
      if (c == ',' || c == ' ') {
        if (!current.empty()) items.push_back(current);
        current.clear();
      } else {
        current += c;
      }
    }
    if (!current.empty()) items.push_back(current);
    return items;
  }

  void Finish() const {
    for (const auto& [key, value] : values_) {
      if (consumed_.count(key) == 0) {
        throw Error(ErrorCode::kConfigError, "unknown config key '" + key + "'");
      }
    }
  }

 private:
  std::map<std::string, std::string> values_;
  std::set<std::string> consumed_;
};

}  // namespace semloc
