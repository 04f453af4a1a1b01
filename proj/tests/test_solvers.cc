#include "semloc/solvers.hpp"

#include <gtest/gtest.h>

#include "semloc/rng.hpp"
#include "test_support.hpp"

namespace semloc {
namespace {

using testing::RandomLookAtPose;
using testing::RandomPointNearOrigin;
using testing::TestIntrinsics;

bool ContainsPose(const std::vector<Pose>& candidates, const Pose& target,
                  double trans_tol, double rot_tol_deg) {
  for (const Pose& c : candidates) {
    const PoseDelta d = ComputePoseDelta(c, target);
    if (d.translation < trans_tol && d.rotation_deg < rot_tol_deg) return true;
  }
  return false;
}

TEST(GrunertQuartic, TrueDistanceRatioIsARoot) {
  const Intrinsics k = TestIntrinsics();
  Rng rng(41);
  for (int trial = 0; trial < 200; ++trial) {
    const Pose pose = RandomLookAtPose(&rng);
    std::array<WorldPoint, 3> pts;
    std::array<Pixel, 3> px;
    std::array<double, 3> dist;
    bool ok = true;
    for (int i = 0; i < 3; ++i) {
      pts[i] = RandomPointNearOrigin(&rng);
      const Vec3 pc = pose.ToCamera(pts[i]);
      if (!(pc.z() > 0.5)) {
        ok = false;
        break;
      }
      px[i] = Project(pts[i], pose, k).pixel;
      dist[i] = pc.norm();
    }
    if (!ok) continue;

    std::array<Vec3, 3> f;
    for (int i = 0; i < 3; ++i) f[i] = k.Unproject(px[i]).normalized();
    const auto q = detail::GrunertQuartic(
        (pts[1] - pts[2]).squaredNorm(), (pts[0] - pts[2]).squaredNorm(),
        (pts[0] - pts[1]).squaredNorm(), f[1].dot(f[2]), f[0].dot(f[2]),
        f[0].dot(f[1]));
    const double v = dist[2] / dist[0];
    double value = 0.0;
    double scale = 0.0;
    for (int p = 4; p >= 0; --p) {
      value = value * v + q[p];
      scale = scale * v + std::abs(q[p]);
    }
    EXPECT_LT(std::abs(value), 1e-9 * std::max(scale, 1.0));
  }
}

TEST(SolveP3P, RecoversGeneratingPose) {
  const Intrinsics k = TestIntrinsics();
  Rng rng(42);
  int tested = 0;
  int recovered = 0;
  while (tested < 1000) {
    const Pose pose = RandomLookAtPose(&rng);
    std::array<WorldPoint, 3> pts;
    std::array<Pixel, 3> px;
    bool ok = true;
    for (int i = 0; i < 3; ++i) {
      pts[i] = RandomPointNearOrigin(&rng);
      if (!(pose.ToCamera(pts[i]).z() > 0.5)) {
        ok = false;
        break;
      }
      px[i] = Project(pts[i], pose, k).pixel;
    }
    if (!ok) continue;
    ++tested;
    try {
      const std::vector<Pose> solutions = SolveP3P(px, pts, k);
      EXPECT_LE(solutions.size(), 4u);
      for (const Pose& s : solutions) {
        for (int i = 0; i < 3; ++i) {
          EXPECT_LT(ReprojectionError(px[i], pts[i], s, k), 1e-6);
        }
      }
      if (ContainsPose(solutions, pose, 1e-6, 1e-6)) ++recovered;
    } catch (const Error&) {
    }
  }
  EXPECT_GE(recovered, 990) << "recovered " << recovered << "/1000";
}

TEST(SolveP3P, CollinearPointsRejected) {
  const Intrinsics k = TestIntrinsics();
  const std::array<WorldPoint, 3> pts = {WorldPoint(0, 0, 5), WorldPoint(1, 0, 5),
                                         WorldPoint(2, 0, 5)};
  std::array<Pixel, 3> px;
  for (int i = 0; i < 3; ++i) px[i] = Project(pts[i], Pose(), k).pixel;
  EXPECT_THROW(SolveP3P(px, pts, k), Error);
}

TEST(SolveP3P, EquilateralIdentityCase) {
  const Intrinsics k{400.0, 400.0, 320.0, 240.0};
  // Equilateral triangle in the z = 4 plane, centered on the optical axis.
  const double r = 1.5;
  std::array<WorldPoint, 3> pts;
  std::array<Pixel, 3> px;
  for (int i = 0; i < 3; ++i) {
    const double theta = 2.0 * M_PI * i / 3.0;
    pts[i] = WorldPoint(r * std::cos(theta), r * std::sin(theta), 4.0);
    px[i] = Project(pts[i], Pose(), k).pixel;
  }
  const std::vector<Pose> solutions = SolveP3P(px, pts, k);
  EXPECT_TRUE(ContainsPose(solutions, Pose(), 1e-8, 1e-8));
}

TEST(EstimateHomographyDlt, IdentityFromFixedPoints) {
  const std::vector<Pixel> pts = {{0, 0}, {100, 0}, {100, 100}, {0, 100}};
  const Mat3 h = EstimateHomographyDlt(pts, pts);
  EXPECT_LT((h - Mat3::Identity()).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(EstimateHomographyDlt, PureTranslation) {
  const std::vector<Pixel> src = {{0, 0}, {100, 0}, {100, 100}, {0, 100}};
  std::vector<Pixel> dst;
  for (const Pixel& p : src) dst.push_back(Pixel{p.u + 10.0, p.v});
  const Mat3 h = EstimateHomographyDlt(src, dst);
  Mat3 expected = Mat3::Identity();
  expected(0, 2) = 10.0;
  EXPECT_LT((h - expected).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(EstimateHomographyDlt, RecoversRandomHomography) {
  Rng rng(77);
  for (int trial = 0; trial < 200; ++trial) {
    Mat3 h_true;
    do {
      h_true = Mat3::Identity() + 0.3 * Mat3::NullaryExpr([&](int, int) {
                 return rng.Gaussian();
               });
    } while (std::abs(h_true.determinant()) < 0.1);
    h_true /= h_true(2, 2);

    std::vector<Pixel> src, dst;
    for (int i = 0; i < 8; ++i) {
      const Pixel s{rng.Uniform(-50, 50), rng.Uniform(-50, 50)};
      const Vec3 mapped = h_true * Vec3(s.u, s.v, 1.0);
      if (std::abs(mapped.z()) < 0.2) continue;
      src.push_back(s);
      dst.push_back(Pixel{mapped.x() / mapped.z(), mapped.y() / mapped.z()});
    }
    if (src.size() < 8) continue;
    const Mat3 h = EstimateHomographyDlt(src, dst);
    const double rel = (h - h_true).norm() / h_true.norm();
    EXPECT_LT(rel, 1e-8);
  }
}

TEST(EstimateHomographyDlt, CollinearSourcesRejected) {
  const std::vector<Pixel> src = {{0, 0}, {1, 1}, {2, 2}, {5, 0}};
  const std::vector<Pixel> dst = {{0, 0}, {1, 1}, {2, 2}, {5, 0}};
  EXPECT_THROW(EstimateHomographyDlt(src, dst), Error);
}

TEST(RefinePnp, ConvergesFromPerturbedInitial) {
  const Intrinsics k = TestIntrinsics();
  Rng rng(55);
  for (int trial = 0; trial < 50; ++trial) {
    const Pose truth = RandomLookAtPose(&rng);
    std::vector<Pixel> px;
    std::vector<WorldPoint> pts;
    for (int i = 0; i < 20; ++i) {
      const WorldPoint p = RandomPointNearOrigin(&rng);
      if (!(truth.ToCamera(p).z() > 0.5)) continue;
      pts.push_back(p);
      px.push_back(Project(p, truth, k).pixel);
    }
    if (pts.size() < 6) continue;

    const Mat3 nudge =
        Eigen::AngleAxisd(0.01, Vec3(1, 0, 0)).toRotationMatrix();
    const Pose initial(nudge * truth.rotation(),
                       truth.translation() + Vec3(0.01, -0.01, 0.01));
    const RefineResult result = RefinePnp(px, pts, k, initial, 100);
    EXPECT_FALSE(result.degenerate);
    EXPECT_LE(result.final_cost, result.initial_cost);
    const PoseDelta d = ComputePoseDelta(result.pose, truth);
    EXPECT_LT(d.translation, 1e-8);
    EXPECT_LT(d.rotation_deg, 1e-8);
  }
}

TEST(RefinePnp, OptimalInitialIsFixedPoint) {
  const Intrinsics k = TestIntrinsics();
  Rng rng(56);
  const Pose truth = RandomLookAtPose(&rng);
  std::vector<Pixel> px;
  std::vector<WorldPoint> pts;
  while (pts.size() < 10) {
    const WorldPoint p = RandomPointNearOrigin(&rng);
    if (!(truth.ToCamera(p).z() > 0.5)) continue;
    pts.push_back(p);
    px.push_back(Project(p, truth, k).pixel);
  }
  const RefineResult result = RefinePnp(px, pts, k, truth, 50);
  const PoseDelta d = ComputePoseDelta(result.pose, truth);
  EXPECT_LT(d.translation, 1e-12);
  EXPECT_LT(d.rotation_deg, 1e-12);
}

TEST(RefinePnp, RejectsTooFewMatches) {
  const Intrinsics k = TestIntrinsics();
  const std::vector<Pixel> px(3, Pixel{0, 0});
  const std::vector<WorldPoint> pts(3, WorldPoint(0, 0, 1));
  EXPECT_THROW(RefinePnp(px, pts, k, Pose(), 10), Error);
}

TEST(RefinePnp, FlagsSingularSystem) {
  const Intrinsics k = TestIntrinsics();
  // Four copies of one observation: the normal equations cannot constrain
  // all six degrees of freedom.
  const std::vector<Pixel> px(4, Project(WorldPoint(0, 0, 2), Pose(), k).pixel);
  const std::vector<WorldPoint> pts(4, WorldPoint(0, 0, 2));
  const RefineResult result = RefinePnp(px, pts, k, Pose(), 10);
  EXPECT_TRUE(result.degenerate);
  EXPECT_TRUE(result.pose.BitEquals(Pose()));
}

}  // namespace
}  // namespace semloc
