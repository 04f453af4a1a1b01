#include "semloc/io.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "semloc/rng.hpp"
#include "test_support.hpp"

namespace semloc {
namespace {

namespace fs = std::filesystem;

class IoTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("semloc_io_" + std::to_string(::getpid()) + "_" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string ReadAll(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
  }

  fs::path dir_;
};

TEST_F(IoTest, DoubleFormatRoundTripsExactly) {
  Rng rng(1);
  for (int i = 0; i < 10000; ++i) {
    double v = rng.Gaussian() * std::pow(10.0, rng.Uniform(-12, 12));
    const std::string s = io::FormatDouble(v);
    const double parsed = io::ParseDouble(s, "test");
    EXPECT_EQ(parsed, v) << s;
  }
}

TEST_F(IoTest, KeypointsRoundTrip) {
  Rng rng(2);
  std::vector<Keypoint> kps;
  for (int i = 0; i < 50; ++i) {
    Keypoint kp;
    kp.u = rng.Uniform(0, 640);
    kp.v = rng.Uniform(0, 480);
    kp.score = rng.Uniform(0, 1);
    kp.label = static_cast<int>(rng.UniformInt(8));
    kp.family = "fam0";
    kps.push_back(kp);
  }
  WriteKeypointsFile(dir_ / "k.txt", "fam0", kps);
  const std::vector<Keypoint> loaded = LoadKeypointsFile(dir_ / "k.txt", "fam0");
  ASSERT_EQ(loaded.size(), kps.size());
  for (size_t i = 0; i < kps.size(); ++i) {
    EXPECT_EQ(loaded[i].u, kps[i].u);
    EXPECT_EQ(loaded[i].v, kps[i].v);
    EXPECT_EQ(loaded[i].score, kps[i].score);
    EXPECT_EQ(loaded[i].label, kps[i].label);
  }
}

TEST_F(IoTest, TruncatedDescriptorFileNamesLine) {
  {
    std::ofstream out(dir_ / "d.txt");
    out << "DESC v1 fam0 2 4\n";
    out << "1 0 0 0\n";  // second row missing
  }
  try {
    LoadDescriptorsFile(dir_ / "d.txt", "fam0");
    FAIL() << "expected FormatError";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kFormatError);
    EXPECT_NE(std::string(e.what()).find("d.txt"), std::string::npos);
  }
}

TEST_F(IoTest, ShortDescriptorRowNamesLineNumber) {
  {
    std::ofstream out(dir_ / "d.txt");
    out << "DESC v1 fam0 1 4\n";
    out << "1 0 0\n";  // one value short
  }
  try {
    LoadDescriptorsFile(dir_ / "d.txt", "fam0");
    FAIL() << "expected FormatError";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find(":2"), std::string::npos)
        << "error should carry the line number: " << e.what();
  }
}

TEST_F(IoTest, UnknownMajorVersionRejected) {
  {
    std::ofstream out(dir_ / "k.txt");
    out << "KPTS v2 fam0 0\n";
  }
  try {
    LoadKeypointsFile(dir_ / "k.txt", "fam0");
    FAIL() << "expected VersionMismatch";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kVersionMismatch);
  }
}

TEST_F(IoTest, LabelAndDepthMapsRoundTrip) {
  Rng rng(3);
  LabelMap lmap;
  lmap.width = 12;
  lmap.height = 7;
  for (int i = 0; i < 84; ++i) {
    lmap.labels.push_back(static_cast<std::uint16_t>(rng.UniformInt(9)));
  }
  WriteLabelMapFile(dir_ / "l.txt", lmap);
  const LabelMap l2 = LoadLabelMapFile(dir_ / "l.txt");
  EXPECT_EQ(l2.labels, lmap.labels);

  DepthMap dmap;
  dmap.width = 5;
  dmap.height = 4;
  for (int i = 0; i < 20; ++i) {
    dmap.depth.push_back(i % 3 == 0 ? 0.0 : rng.Uniform(0.1, 40.0));
  }
  WriteDepthMapFile(dir_ / "d.txt", dmap);
  const DepthMap d2 = LoadDepthMapFile(dir_ / "d.txt");
  EXPECT_EQ(d2.depth, dmap.depth);
}

Map MakeTestMap(Rng* rng) {
  Map map;
  map.class_table.entries = {{0, "building", false}, {6, "car", true}};
  for (int i = 0; i < 3; ++i) {
    MapImage img;
    img.id = i;
    img.intrinsics = testing::TestIntrinsics();
    img.pose = testing::RandomLookAtPose(rng);
    img.global_descriptor = Eigen::VectorXd(8);
    for (int j = 0; j < 8; ++j) img.global_descriptor(j) = rng->Gaussian();
    map.images.push_back(img);
  }
  for (int i = 0; i < 20; ++i) {
    MapPoint p;
    p.id = i;
    p.xyz = testing::RandomPointNearOrigin(rng);
    p.label = static_cast<int>(rng->UniformInt(8));
    PointDescriptor desc;
    desc.score = rng->Uniform(0.5, 1.0);
    desc.values = Eigen::VectorXd(16);
    for (int j = 0; j < 16; ++j) desc.values(j) = rng->Gaussian();
    desc.values.normalize();
    p.descriptors["fam0"] = desc;
    p.track.push_back(TrackObservation{i % 3, i});
    map.points.push_back(p);
  }
  return map;
}

TEST_F(IoTest, MapRoundTripBitExact) {
  Rng rng(4);
  const Map map = MakeTestMap(&rng);
  SaveMap(map, dir_ / "map.txt");
  const Map loaded = LoadMap(dir_ / "map.txt");

  ASSERT_EQ(loaded.images.size(), map.images.size());
  for (size_t i = 0; i < map.images.size(); ++i) {
    EXPECT_TRUE(loaded.images[i].pose.BitEquals(map.images[i].pose));
    EXPECT_EQ(loaded.images[i].global_descriptor, map.images[i].global_descriptor);
    EXPECT_EQ(loaded.images[i].intrinsics.fx, map.images[i].intrinsics.fx);
  }
  ASSERT_EQ(loaded.points.size(), map.points.size());
  for (size_t i = 0; i < map.points.size(); ++i) {
    EXPECT_EQ(loaded.points[i].id, map.points[i].id);
    EXPECT_EQ(loaded.points[i].xyz, map.points[i].xyz);
    EXPECT_EQ(loaded.points[i].label, map.points[i].label);
    ASSERT_EQ(loaded.points[i].descriptors.size(), map.points[i].descriptors.size());
    EXPECT_EQ(loaded.points[i].descriptors.at("fam0").values,
              map.points[i].descriptors.at("fam0").values);
    EXPECT_EQ(loaded.points[i].descriptors.at("fam0").score,
              map.points[i].descriptors.at("fam0").score);
    ASSERT_EQ(loaded.points[i].track.size(), map.points[i].track.size());
  }

  // Save -> load -> save gives byte-identical files.
  SaveMap(loaded, dir_ / "map2.txt");
  EXPECT_EQ(ReadAll(dir_ / "map.txt"), ReadAll(dir_ / "map2.txt"));
}

TEST_F(IoTest, ResultsRoundTripBitExact) {
  Rng rng(5);
  std::vector<ResultRecord> results;
  for (int i = 0; i < 5; ++i) {
    ResultRecord r;
    r.name = "q_" + std::to_string(i);
    r.status = i == 2 ? LocalizationStatus::kConsensusFailed
                      : LocalizationStatus::kOk;
    r.pose = testing::RandomLookAtPose(&rng);
    r.inliers = static_cast<int>(rng.UniformInt(500));
    r.diagnostics.emplace_back("matches_raw", std::to_string(i * 11));
    r.diagnostics.emplace_back("mu", "1,0.5,0.25");
    results.push_back(r);
  }
  WriteResults(results, dir_ / "res.txt");
  const std::vector<ResultRecord> loaded = LoadResults(dir_ / "res.txt");
  ASSERT_EQ(loaded.size(), results.size());
  for (size_t i = 0; i < results.size(); ++i) {
    EXPECT_EQ(loaded[i].name, results[i].name);
    EXPECT_EQ(loaded[i].status, results[i].status);
    EXPECT_TRUE(loaded[i].pose.BitEquals(results[i].pose));
    EXPECT_EQ(loaded[i].inliers, results[i].inliers);
    EXPECT_EQ(loaded[i].diagnostics, results[i].diagnostics);
  }
  WriteResults(loaded, dir_ / "res2.txt");
  EXPECT_EQ(ReadAll(dir_ / "res.txt"), ReadAll(dir_ / "res2.txt"));
}

TEST_F(IoTest, GroundTruthRoundTrip) {
  Rng rng(6);
  std::vector<GroundTruthPose> gt;
  for (int i = 0; i < 4; ++i) {
    gt.push_back({"q_" + std::to_string(i), testing::RandomLookAtPose(&rng)});
  }
  WriteGroundTruth(gt, dir_ / "gt.txt");
  const auto loaded = LoadGroundTruth(dir_ / "gt.txt");
  ASSERT_EQ(loaded.size(), gt.size());
  for (size_t i = 0; i < gt.size(); ++i) {
    EXPECT_EQ(loaded[i].name, gt[i].name);
    EXPECT_TRUE(loaded[i].pose.BitEquals(gt[i].pose));
  }
}

TEST_F(IoTest, FlagsRoundTrip) {
  CorruptionFlags flags;
  flags["q_000"] = {{true, false}, {false, false}, {false, true}};
  flags["q_001"] = {{false, false}};
  WriteFlags(flags, dir_ / "flags.txt");
  const CorruptionFlags loaded = LoadFlags(dir_ / "flags.txt");
  ASSERT_EQ(loaded.size(), 2u);
  EXPECT_EQ(loaded.at("q_000").size(), 3u);
  EXPECT_TRUE(loaded.at("q_000")[0].is_outlier_match);
  EXPECT_FALSE(loaded.at("q_000")[0].is_label_corrupted);
  EXPECT_TRUE(loaded.at("q_000")[2].is_label_corrupted);
}

TEST_F(IoTest, KeyValueConfigParsesAndRejectsUnknown) {
  {
    std::ofstream out(dir_ / "cfg.txt");
    out << "# comment\n";
    out << "alpha = 2.5\n";
    out << "flag = true\n";
    out << "names = a,b,c\n";
  }
  KeyValueConfig kv(dir_ / "cfg.txt");
  EXPECT_DOUBLE_EQ(kv.GetDouble("alpha", 0.0), 2.5);
  EXPECT_TRUE(kv.GetBool("flag", false));
  EXPECT_EQ(kv.GetList("names", {}).size(), 3u);
  kv.Finish();

  KeyValueConfig kv2(dir_ / "cfg.txt");
  kv2.GetDouble("alpha", 0.0);
  EXPECT_THROW(kv2.Finish(), Error) << "unconsumed keys must be rejected";
}

TEST_F(IoTest, MissingFileThrowsMissingAsset) {
  try {
    LoadKeypointsFile(dir_ / "nope.txt", "fam0");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kMissingAsset);
  }
}

}  // namespace
}  // namespace semloc
