#include "semloc/depth.hpp"

#include <gtest/gtest.h>

#include "semloc/rng.hpp"
#include "test_support.hpp"

namespace semloc {
namespace {

using testing::RandomLookAtPose;
using testing::RandomPointNearOrigin;
using testing::TestIntrinsics;

// Independent oracle for the adaptive ordinal cost: ranks by pairwise
// counting (O(n^2)), sorted array built by repeated minimum extraction. Kept
// deliberately free of the library's argsort machinery.
std::vector<double> OracleOrdinalCosts(const std::vector<double>& edv,
                                       const std::vector<double>& pdv) {
  const int n = static_cast<int>(edv.size());
  const auto rank_of = [n](const std::vector<double>& values, int m) {
    int rank = 0;
    for (int k = 0; k < n; ++k) {
      if (values[k] < values[m] || (values[k] == values[m] && k < m)) ++rank;
    }
    return rank;
  };
  std::vector<double> sorted;
  {
    std::vector<char> used(n, 0);
    for (int step = 0; step < n; ++step) {
      int arg = -1;
      for (int k = 0; k < n; ++k) {
        if (used[k]) continue;
        if (arg < 0 || pdv[k] < pdv[arg]) arg = k;
      }
      used[arg] = 1;
      sorted.push_back(pdv[arg]);
    }
  }
  std::vector<double> costs(n);
  double sum = 0.0;
  for (int m = 0; m < n; ++m) {
    costs[m] = std::abs(sorted[rank_of(edv, m)] - sorted[rank_of(pdv, m)]);
    sum += costs[m];
  }
  const double mean = sum / n;
  if (!(mean > 1e-12)) return std::vector<double>(n, 0.0);
  for (double& c : costs) c /= mean;
  return costs;
}

TEST(AdaptiveOrdinalCosts, HandWorkedExample) {
  const std::vector<double> costs =
      AdaptiveOrdinalCosts({1.0, 2.0, 3.0}, {10.0, 30.0, 20.0});
  ASSERT_EQ(costs.size(), 3u);
  EXPECT_NEAR(costs[0], 0.0, 1e-12);
  EXPECT_NEAR(costs[1], 1.5, 1e-12);
  EXPECT_NEAR(costs[2], 1.5, 1e-12);
}

TEST(AdaptiveOrdinalCosts, IdenticalOrderingIsFree) {
  Rng rng(1);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + static_cast<int>(rng.UniformInt(40));
    std::vector<double> edv, pdv;
    for (int i = 0; i < n; ++i) edv.push_back(rng.Uniform(0.5, 50.0));
    // Any strictly monotone map preserves the ordering.
    for (double e : edv) pdv.push_back(3.0 * std::pow(e, 1.3) + 0.1);
    for (double c : AdaptiveOrdinalCosts(edv, pdv)) EXPECT_EQ(c, 0.0);
  }
}

TEST(AdaptiveOrdinalCosts, MatchesOracle) {
  Rng rng(2);
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = 2 + static_cast<int>(rng.UniformInt(199));
    std::vector<double> edv, pdv;
    for (int i = 0; i < n; ++i) {
      edv.push_back(rng.Uniform(0.1, 100.0));
      pdv.push_back(rng.Uniform(0.1, 100.0));
    }
    const std::vector<double> got = AdaptiveOrdinalCosts(edv, pdv);
    const std::vector<double> want = OracleOrdinalCosts(edv, pdv);
    ASSERT_EQ(got.size(), want.size());
    for (size_t i = 0; i < got.size(); ++i) {
      EXPECT_NEAR(got[i], want[i], 1e-12) << "trial " << trial << " index " << i;
    }
  }
}

TEST(AdaptiveOrdinalCosts, ScaleInvariant) {
  Rng rng(3);
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = 2 + static_cast<int>(rng.UniformInt(50));
    std::vector<double> edv, pdv;
    for (int i = 0; i < n; ++i) {
      edv.push_back(rng.Uniform(0.1, 100.0));
      pdv.push_back(rng.Uniform(0.1, 100.0));
    }
    const std::vector<double> base = AdaptiveOrdinalCosts(edv, pdv);
    const double c_pdv = rng.Uniform(0.01, 100.0);
    const double c_edv = rng.Uniform(0.01, 100.0);
    std::vector<double> edv_s = edv, pdv_s = pdv;
    for (double& v : pdv_s) v *= c_pdv;
    for (double& v : edv_s) v *= c_edv;
    const std::vector<double> scaled = AdaptiveOrdinalCosts(edv_s, pdv_s);
    for (size_t i = 0; i < base.size(); ++i) {
      EXPECT_NEAR(scaled[i], base[i], 1e-9 * (1.0 + base[i]));
    }
  }
}

TEST(AdaptiveOrdinalCosts, PermutationEquivariant) {
  Rng rng(4);
  std::vector<double> edv, pdv;
  for (int i = 0; i < 50; ++i) {
    edv.push_back(rng.Uniform(0.1, 100.0));
    pdv.push_back(rng.Uniform(0.1, 100.0));
  }
  const std::vector<double> base = AdaptiveOrdinalCosts(edv, pdv);
  const std::vector<int> perm = rng.Permutation(50);
  std::vector<double> edv_p(50), pdv_p(50);
  for (int i = 0; i < 50; ++i) {
    edv_p[i] = edv[perm[i]];
    pdv_p[i] = pdv[perm[i]];
  }
  const std::vector<double> permuted = AdaptiveOrdinalCosts(edv_p, pdv_p);
  for (int i = 0; i < 50; ++i) {
    EXPECT_NEAR(permuted[i], base[perm[i]], 1e-12);
  }
}

TEST(AdaptiveOrdinalCosts, RejectsBadInput) {
  EXPECT_THROW(AdaptiveOrdinalCosts({1.0, 2.0}, {1.0}), Error);
  EXPECT_THROW(AdaptiveOrdinalCosts({1.0}, {1.0}), Error);
  EXPECT_THROW(AdaptiveOrdinalCosts({1.0, -2.0}, {1.0, 2.0}), Error);
}

TEST(EstimatedDepths, DirectValues) {
  const Intrinsics k = TestIntrinsics();
  PointMatch m;
  m.xyz = WorldPoint(0, 0, 2);
  m.pixel = Pixel{k.cx, k.cy};
  EXPECT_DOUBLE_EQ(EstimatedDepths({m}, Pose(), k)[0], 2.0);
  const Pose back(Mat3::Identity(), Vec3(0, 0, 1));  // camera at z = -1
  EXPECT_DOUBLE_EQ(EstimatedDepths({m}, back, k)[0], 3.0);
  const Pose front(Mat3::Identity(), Vec3(0, 0, -5));  // camera at z = +5
  EXPECT_DOUBLE_EQ(EstimatedDepths({m}, front, k)[0], kBehindCameraDepth);
}

TEST(EstimatedDepths, MatchesDirectTransform) {
  const Intrinsics k = TestIntrinsics();
  Rng rng(5);
  std::vector<PointMatch> matches;
  const Pose pose = RandomLookAtPose(&rng);
  for (int i = 0; i < 100; ++i) {
    PointMatch m;
    m.xyz = RandomPointNearOrigin(&rng);
    matches.push_back(m);
  }
  const std::vector<double> edv = EstimatedDepths(matches, pose, k);
  for (size_t i = 0; i < matches.size(); ++i) {
    const double z = pose.ToCamera(matches[i].xyz).z();
    if (z > kMinDepth) {
      EXPECT_NEAR(edv[i], z, 1e-12);
    } else {
      EXPECT_EQ(edv[i], kBehindCameraDepth);
    }
  }
}

TEST(SamplePdv, UniformAndGradientMaps) {
  DepthMap map;
  map.width = 8;
  map.height = 4;
  map.depth.assign(32, 5.0);
  EXPECT_DOUBLE_EQ(SamplePdv(map, {Pixel{3.2, 1.9}})[0], 5.0);

  for (int y = 0; y < 4; ++y) {
    for (int x = 0; x < 8; ++x) map.depth[y * 8 + x] = 1.0 + x;
  }
  EXPECT_DOUBLE_EQ(SamplePdv(map, {Pixel{6.0, 2.0}})[0], 7.0);

  map.depth[2 * 8 + 6] = kNoDepthData;
  EXPECT_DOUBLE_EQ(SamplePdv(map, {Pixel{6.0, 2.0}})[0], kNoDepthData);

  EXPECT_THROW(SamplePdv(map, {Pixel{9.0, 0.0}}), Error);
}

struct DcvScene {
  std::vector<PointMatch> matches;
  DepthMap depth;
  Pose pose;
  Intrinsics k = TestIntrinsics();
};

// Exact matches with a depth map filled at each keypoint pixel with a scaled
// copy of the true camera-frame depth.
DcvScene MakeDcvScene(Rng* rng, int n, double depth_scale) {
  DcvScene scene;
  scene.pose = RandomLookAtPose(rng);
  scene.depth.width = 640;
  scene.depth.height = 480;
  scene.depth.depth.assign(640 * 480, kNoDepthData);
  while (static_cast<int>(scene.matches.size()) < n) {
    const WorldPoint p = RandomPointNearOrigin(rng);
    const Vec3 pc = scene.pose.ToCamera(p);
    if (!(pc.z() > 0.5)) continue;
    const Projection proj = Project(p, scene.pose, scene.k);
    if (proj.pixel.u < 1 || proj.pixel.u > 638 || proj.pixel.v < 1 ||
        proj.pixel.v > 478) {
      continue;
    }
    PointMatch m;
    m.query_idx = static_cast<int>(scene.matches.size());
    m.point_id = m.query_idx;
    m.xyz = p;
    m.pixel = proj.pixel;
    scene.matches.push_back(m);
    const int x = static_cast<int>(std::llround(proj.pixel.u));
    const int y = static_cast<int>(std::llround(proj.pixel.v));
    scene.depth.depth[y * 640 + x] = depth_scale * proj.depth;
  }
  return scene;
}

TEST(DcvFilter, AllZeroCostsNoRemovalNoRevert) {
  Rng rng(6);
  DcvScene scene = MakeDcvScene(&rng, 30, 2.5);
  const DcvResult result = DepthConsistencyPass(scene.matches, scene.depth,
                                                scene.pose, scene.k);
  EXPECT_EQ(result.matches.size(), scene.matches.size());
  EXPECT_EQ(result.diag.removed, 0);
  EXPECT_FALSE(result.diag.reverted);
}

TEST(DcvFilter, PlantedSwapDetectedAndCommitted) {
  Rng rng(7);
  DcvScene scene = MakeDcvScene(&rng, 40, 0.7);
  // Swap the 3D assignments of two matches with well-separated depths.
  std::vector<double> edv = EstimatedDepths(scene.matches, scene.pose, scene.k);
  int lo = 0, hi = 0;
  for (int i = 1; i < 40; ++i) {
    if (edv[i] < edv[lo]) lo = i;
    if (edv[i] > edv[hi]) hi = i;
  }
  std::swap(scene.matches[lo].xyz, scene.matches[hi].xyz);
  std::swap(scene.matches[lo].point_id, scene.matches[hi].point_id);

  const DcvResult result = DepthConsistencyPass(scene.matches, scene.depth,
                                                scene.pose, scene.k);
  EXPECT_FALSE(result.diag.reverted);
  EXPECT_EQ(result.diag.removed, 2);
  EXPECT_EQ(result.matches.size(), scene.matches.size() - 2);
  for (const PointMatch& m : result.matches) {
    EXPECT_NE(m.query_idx, lo);
    EXPECT_NE(m.query_idx, hi);
  }
  EXPECT_LT(result.diag.error_after, result.diag.error_before);
}

TEST(DcvFilter, AdversarialDepthNoiseReverts) {
  Rng rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    DcvScene scene = MakeDcvScene(&rng, 30, 1.0);
    // Matches are exact; scramble the depth map so the ordinal check fires
    // on correct matches. Removal cannot improve the refit, so the filter
    // must revert.
    for (double& d : scene.depth.depth) {
      if (d != kNoDepthData) d = rng.Uniform(0.5, 100.0);
    }
    const DcvResult result = DepthConsistencyPass(scene.matches, scene.depth,
                                                  scene.pose, scene.k);
    EXPECT_EQ(result.matches.size(), scene.matches.size());
    if (result.diag.removed > 0) {
      EXPECT_TRUE(result.diag.reverted);
    }
  }
}

TEST(DcvFilter, NoDataPixelsAreExempt) {
  Rng rng(9);
  DcvScene scene = MakeDcvScene(&rng, 20, 1.0);
  // Blank out half the depth entries; those matches must survive untouched.
  for (int i = 0; i < 10; ++i) {
    const int x = static_cast<int>(std::llround(scene.matches[i].pixel.u));
    const int y = static_cast<int>(std::llround(scene.matches[i].pixel.v));
    scene.depth.depth[y * 640 + x] = kNoDepthData;
  }
  const DcvResult result = DepthConsistencyPass(scene.matches, scene.depth,
                                                scene.pose, scene.k);
  EXPECT_EQ(result.matches.size(), scene.matches.size());
  EXPECT_EQ(result.diag.removed, 0);
}

TEST(DcvFilter, BehindCameraMatchesAutoRejected) {
  Rng rng(10);
  DcvScene scene = MakeDcvScene(&rng, 20, 1.0);
  // Re-assign one match to a point behind the camera.
  PointMatch& bad = scene.matches[5];
  bad.xyz = scene.pose.Center() - 3.0 * (bad.xyz - scene.pose.Center());
  const DcvResult result = DepthConsistencyPass(scene.matches, scene.depth,
                                                scene.pose, scene.k);
  EXPECT_FALSE(result.diag.reverted);
  EXPECT_EQ(result.diag.sentinel_rejected, 1);
  EXPECT_EQ(result.matches.size(), scene.matches.size() - 1);
}

}  // namespace
}  // namespace semloc
