#include "semloc/matching.hpp"

#include <gtest/gtest.h>

#include <map>

#include "semloc/rng.hpp"

namespace semloc {
namespace {

Descriptor MakeDesc(std::initializer_list<double> values,
                    const std::string& family = "fam") {
  Descriptor d;
  d.values = Eigen::VectorXd(static_cast<int>(values.size()));
  int i = 0;
  for (double v : values) d.values(i++) = v;
  d.family = family;
  return d;
}

Descriptor RandomUnitDesc(Rng* rng, int dim, const std::string& family = "fam") {
  Descriptor d;
  d.values = Eigen::VectorXd(dim);
  for (int i = 0; i < dim; ++i) d.values(i) = rng->Gaussian();
  d.values.normalize();
  d.family = family;
  return d;
}

TEST(EnhanceDescriptor, ScalesComponents) {
  const Descriptor d = MakeDesc({0.6, 0.8});
  const Descriptor e = EnhanceDescriptor(d, 0.5);
  EXPECT_DOUBLE_EQ(e.values(0), 0.3);
  EXPECT_DOUBLE_EQ(e.values(1), 0.4);
  EXPECT_EQ(e.family, d.family);
  EXPECT_DOUBLE_EQ(e.values.norm(), 0.5);
}

TEST(EnhanceDescriptor, UnitScoreIsIdentity) {
  const Descriptor d = MakeDesc({0.6, 0.8});
  const Descriptor e = EnhanceDescriptor(d, 1.0);
  EXPECT_EQ(e.values, d.values);
}

TEST(EnhanceDescriptor, ZeroScoreGivesZeroVector) {
  const Descriptor d = MakeDesc({0.6, 0.8});
  const Descriptor e = EnhanceDescriptor(d, 0.0);
  EXPECT_DOUBLE_EQ(e.values.norm(), 0.0);
  // Zero-norm descriptors never match.
  const std::vector<Match> matches = MatchDescriptors({e}, {d});
  EXPECT_TRUE(matches.empty());
}

TEST(MatchDescriptors, IdentityMatching) {
  Rng rng(1);
  std::vector<Descriptor> descs;
  for (int i = 0; i < 20; ++i) descs.push_back(RandomUnitDesc(&rng, 16));
  const std::vector<Match> matches =
      MatchDescriptors(descs, descs, MatcherOptions{0.9, true});
  ASSERT_EQ(matches.size(), 20u);
  for (const Match& m : matches) {
    EXPECT_EQ(m.query_idx, m.train_idx);
    EXPECT_DOUBLE_EQ(m.distance, 0.0);
  }
}

TEST(MatchDescriptors, EquidistantPairDropped) {
  const Descriptor q = MakeDesc({1.0, 0.0});
  const Descriptor t1 = MakeDesc({0.0, 1.0});
  const Descriptor t2 = MakeDesc({0.0, -1.0});
  const std::vector<Match> matches =
      MatchDescriptors({q}, {t1, t2}, MatcherOptions{1.0, false});
  EXPECT_TRUE(matches.empty()) << "ratio 1 is excluded by the strict test";
}

TEST(MatchDescriptors, FamilyMismatchThrows) {
  const Descriptor q = MakeDesc({1.0, 0.0}, "a");
  const Descriptor t = MakeDesc({1.0, 0.0}, "b");
  EXPECT_THROW(MatchDescriptors({q}, {t}), Error);
}

TEST(MatchDescriptors, GaussianClustersMatchedCorrectly) {
  Rng rng(2);
  const int n = 200;
  const int dim = 32;
  std::vector<Descriptor> codes, query, train;
  for (int i = 0; i < n; ++i) codes.push_back(RandomUnitDesc(&rng, dim));
  for (int i = 0; i < n; ++i) {
    Descriptor q = codes[i], t = codes[i];
    for (int d = 0; d < dim; ++d) {
      q.values(d) += 0.02 * rng.Gaussian();
      t.values(d) += 0.02 * rng.Gaussian();
    }
    q.values.normalize();
    t.values.normalize();
    query.push_back(q);
    train.push_back(t);
  }
  const std::vector<Match> matches =
      MatchDescriptors(query, train, MatcherOptions{0.8, true});
  int correct = 0;
  for (const Match& m : matches) {
    if (m.query_idx == m.train_idx) ++correct;
  }
  EXPECT_GE(matches.size(), 190u);
  EXPECT_GE(static_cast<double>(correct) / matches.size(), 0.99);
}

TEST(MatchDescriptors, MutualModeIsSymmetric) {
  Rng rng(3);
  std::vector<Descriptor> a, b;
  for (int i = 0; i < 50; ++i) a.push_back(RandomUnitDesc(&rng, 8));
  for (int i = 0; i < 60; ++i) b.push_back(RandomUnitDesc(&rng, 8));
  const std::vector<Match> ab = MatchDescriptors(a, b, MatcherOptions{0.95, true});
  const std::vector<Match> ba = MatchDescriptors(b, a, MatcherOptions{0.95, true});
  std::set<std::pair<int, int>> ab_set, ba_set;
  for (const Match& m : ab) ab_set.insert({m.query_idx, m.train_idx});
  for (const Match& m : ba) ba_set.insert({m.train_idx, m.query_idx});
  EXPECT_EQ(ab_set, ba_set);
}

TEST(MatchDescriptors, EnhancedRankingMatchesBruteForce) {
  // Two train candidates share the descriptor direction; scores differ. The
  // enhanced distances are |s_q - s_i|, so the analytic nearest neighbor is
  // the candidate with score closest to the query's.
  Rng rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    const Descriptor base = RandomUnitDesc(&rng, 16);
    const double s_q = rng.Uniform(0.1, 1.0);
    const double s_1 = rng.Uniform(0.1, 1.0);
    const double s_2 = rng.Uniform(0.1, 1.0);
    if (std::abs(s_1 - s_2) < 1e-3) continue;
    const Descriptor q = EnhanceDescriptor(base, s_q);
    const std::vector<Descriptor> train = {EnhanceDescriptor(base, s_1),
                                           EnhanceDescriptor(base, s_2)};
    const std::vector<Match> matches =
        MatchDescriptors({q}, train, MatcherOptions{1.0, false});
    const int analytic =
        std::abs(s_q - s_1) < std::abs(s_q - s_2) ? 0 : 1;
    if (!matches.empty()) {
      EXPECT_EQ(matches.front().train_idx, analytic);
      EXPECT_NEAR(matches.front().distance,
                  std::min(std::abs(s_q - s_1), std::abs(s_q - s_2)), 1e-12);
    }
  }
}

PointMatch MakePointMatch(int query_idx, std::int64_t point_id, double u,
                          double v, double distance) {
  PointMatch m;
  m.query_idx = query_idx;
  m.point_id = point_id;
  m.pixel = Pixel{u, v};
  m.distance = distance;
  return m;
}

TEST(MergeFamilies, DisjointFamiliesConcatenate) {
  std::map<std::string, std::vector<PointMatch>> per_family;
  per_family["a"] = {MakePointMatch(0, 1, 10, 10, 0.1),
                     MakePointMatch(1, 2, 20, 20, 0.2)};
  per_family["b"] = {MakePointMatch(2, 3, 30, 30, 0.3)};
  const auto merged = MergeFamilies(per_family, 0.5);
  EXPECT_EQ(merged.size(), 3u);
}

TEST(MergeFamilies, IdenticalDuplicateCollapses) {
  std::map<std::string, std::vector<PointMatch>> per_family;
  per_family["a"] = {MakePointMatch(0, 7, 10, 10, 0.2)};
  per_family["b"] = {MakePointMatch(0, 7, 10, 10, 0.1)};
  const auto merged = MergeFamilies(per_family, 0.5);
  ASSERT_EQ(merged.size(), 1u);
  EXPECT_DOUBLE_EQ(merged.front().distance, 0.1) << "lower distance survives";
}

TEST(MergeFamilies, PlantedOverlapRemoved) {
  Rng rng(5);
  std::map<std::string, std::vector<PointMatch>> per_family;
  const int n = 100;
  const int overlap = 30;
  for (int i = 0; i < n; ++i) {
    per_family["a"].push_back(
        MakePointMatch(i, i, 10.0 * i, 5.0, rng.Uniform(0.1, 0.5)));
  }
  for (int i = 0; i < n; ++i) {
    // First `overlap` entries duplicate family a within the radius.
    const double offset = i < overlap ? 0.3 : 500.0;
    per_family["b"].push_back(MakePointMatch(
        1000 + i, i, 10.0 * i + offset, 5.0, rng.Uniform(0.1, 0.5)));
  }
  const auto merged = MergeFamilies(per_family, 1.0);
  EXPECT_EQ(merged.size(), static_cast<size_t>(2 * n - overlap));
}

TEST(MergeFamilies, OutputIsSupersetOfDedupedFamilies) {
  Rng rng(6);
  std::map<std::string, std::vector<PointMatch>> per_family;
  for (int f = 0; f < 3; ++f) {
    std::vector<PointMatch> matches;
    for (int i = 0; i < 50; ++i) {
      matches.push_back(MakePointMatch(100 * f + i, rng.UniformInt(30),
                                       rng.Uniform(0, 640), rng.Uniform(0, 480),
                                       rng.Uniform(0.1, 1.0)));
    }
    per_family["fam" + std::to_string(f)] = matches;
  }
  const auto merged = MergeFamilies(per_family, 2.0);
  size_t max_single = 0;
  for (const auto& [name, matches] : per_family) {
    max_single = std::max(max_single, DedupePointMatches(matches, 2.0).size());
  }
  EXPECT_GE(merged.size(), max_single);
}

TEST(MeanMatchingAccuracy, ExactMatchesScoreOneEverywhere) {
  Rng rng(7);
  Mat3 h = Mat3::Identity();
  h(0, 2) = 4.0;
  std::vector<Pixel> query, train;
  std::vector<Match> matches;
  for (int i = 0; i < 50; ++i) {
    const Pixel q{rng.Uniform(0, 600), rng.Uniform(0, 400)};
    query.push_back(q);
    train.push_back(Pixel{q.u + 4.0, q.v});
    matches.push_back(Match{i, i, 0.0, 0.0});
  }
  const std::vector<double> mma =
      MeanMatchingAccuracy(query, train, matches, h, {1, 2, 5});
  for (double v : mma) EXPECT_DOUBLE_EQ(v, 1.0);
}

TEST(MeanMatchingAccuracy, EmptyMatchesScoreZero) {
  const std::vector<double> mma =
      MeanMatchingAccuracy({}, {}, {}, Mat3::Identity(), {1, 5});
  for (double v : mma) EXPECT_DOUBLE_EQ(v, 0.0);
}

TEST(MeanMatchingAccuracy, HalfDisplacedMatches) {
  std::vector<Pixel> query, train;
  std::vector<Match> matches;
  for (int i = 0; i < 40; ++i) {
    const Pixel q{10.0 * i, 7.0};
    query.push_back(q);
    train.push_back(i % 2 == 0 ? q : Pixel{q.u + 5.0, q.v});
    matches.push_back(Match{i, i, 0.0, 0.0});
  }
  const std::vector<double> mma =
      MeanMatchingAccuracy(query, train, matches, Mat3::Identity(), {1, 10});
  EXPECT_DOUBLE_EQ(mma[0], 0.5);
  EXPECT_DOUBLE_EQ(mma[1], 1.0);
}

TEST(MeanMatchingAccuracy, MonotoneInThreshold) {
  Rng rng(8);
  std::vector<Pixel> query, train;
  std::vector<Match> matches;
  for (int i = 0; i < 100; ++i) {
    const Pixel q{rng.Uniform(0, 640), rng.Uniform(0, 480)};
    query.push_back(q);
    train.push_back(Pixel{q.u + rng.Gaussian() * 3.0, q.v + rng.Gaussian() * 3.0});
    matches.push_back(Match{i, i, 0.0, 0.0});
  }
  std::vector<double> thresholds;
  for (double t = 0.5; t < 12.0; t += 0.5) thresholds.push_back(t);
  const std::vector<double> mma =
      MeanMatchingAccuracy(query, train, matches, Mat3::Identity(), thresholds);
  for (size_t i = 1; i < mma.size(); ++i) EXPECT_GE(mma[i], mma[i - 1]);
}

}  // namespace
}  // namespace semloc
