#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "semloc/error.hpp"
#include "semloc/geometry.hpp"
#include "semloc/matching.hpp"
#include "semloc/solvers.hpp"

namespace semloc {

// Monocular depth prediction, row-major, arbitrary unknown scale. 0 = no data.
struct DepthMap {
  int width = 0;
  int height = 0;
  std::vector<double> depth;

  bool Empty() const { return depth.empty(); }

  double At(int x, int y) const {
    if (x < 0 || x >= width || y < 0 || y >= height) {
      throw Error(ErrorCode::kIndexOutOfRange,
                  "depth cell (" + std::to_string(x) + "," + std::to_string(y) +
                      ") outside " + std::to_string(width) + "x" +
                      std::to_string(height));
    }
    return depth[static_cast<size_t>(y) * width + x];
  }
};

constexpr double kNoDepthData = 0.0;
constexpr double kBehindCameraDepth = -1.0;

// Camera-frame z of each matched 3D point under a prior pose estimate;
// points behind the camera get the sentinel (they cannot be right under this
// pose and DCV auto-rejects them).
inline std::vector<double> EstimatedDepths(const std::vector<PointMatch>& matches,
                                           const Pose& pose,
                                           const Intrinsics& k) {
  k.Validate();
  std::vector<double> edv;
  edv.reserve(matches.size());
  for (const PointMatch& m : matches) {
    const Vec3 pc = pose.ToCamera(m.xyz);
    edv.push_back(pc.z() > kMinDepth ? pc.z() : kBehindCameraDepth);
  }
  return edv;
}

// Nearest-pixel depth lookup; the no-data sentinel (0) passes through.
inline std::vector<double> SamplePdv(const DepthMap& map,
                                     const std::vector<Pixel>& pixels) {
  std::vector<double> pdv;
  pdv.reserve(pixels.size());
  for (const Pixel& px : pixels) {
    if (px.u < -0.5 || px.u > map.width - 0.5 || px.v < -0.5 ||
        px.v > map.height - 0.5) {
      throw Error(ErrorCode::kOutOfBounds, "pixel outside depth map");
    }
    const int x = std::clamp(static_cast<int>(std::llround(px.u)), 0, map.width - 1);
    const int y = std::clamp(static_cast<int>(std::llround(px.v)), 0, map.height - 1);
    pdv.push_back(map.At(x, y));
  }
  return pdv;
}

enum class OrdinalCostIndexing {
  kSortedPdv,  // C = |D[i] - D[j]| with D = sorted PDVs (default reading)
  kRawPdv,     // C = |pdv[i] - pdv[j]| indexing the unsorted list
};

namespace detail {

// rank[m] = position of element m when values are sorted ascending, ties by
// original index.
inline std::vector<int> AscendingRanks(const std::vector<double>& values) {
  std::vector<int> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return values[a] < values[b]; });
  std::vector<int> rank(values.size());
  for (int pos = 0; pos < static_cast<int>(order.size()); ++pos) {
    rank[order[pos]] = pos;
  }
  return rank;
}

}  // namespace detail

// Adaptive ordinal cost per match: the estimated and predicted depths are
// only comparable through their orderings, so each match is charged the gap
// between the sorted-PDV entries at its EDV rank and its PDV rank. Costs are
// divided by their mean to cancel the unknown depth scale.
inline std::vector<double> AdaptiveOrdinalCosts(
    const std::vector<double>& edv, const std::vector<double>& pdv,
    OrdinalCostIndexing indexing = OrdinalCostIndexing::kSortedPdv) {
  if (edv.size() != pdv.size()) {
    throw Error(ErrorCode::kLengthMismatch, "EDV and PDV lists differ in length");
  }
  const int n = static_cast<int>(edv.size());
  if (n < 2) {
    throw Error(ErrorCode::kInvalidArgument, "need at least 2 depth pairs");
  }
  for (int i = 0; i < n; ++i) {
    if (!std::isfinite(edv[i]) || !(edv[i] > 0.0) || !std::isfinite(pdv[i]) ||
        !(pdv[i] > 0.0)) {
      throw Error(ErrorCode::kInvalidArgument,
                  "depth values must be finite and positive");
    }
  }

  const std::vector<int> rank_edv = detail::AscendingRanks(edv);
  const std::vector<int> rank_pdv = detail::AscendingRanks(pdv);
  std::vector<double> sorted_pdv = pdv;
  std::sort(sorted_pdv.begin(), sorted_pdv.end());

  std::vector<double> costs(n);
  double sum = 0.0;
  for (int m = 0; m < n; ++m) {
    const int i = rank_edv[m];
    const int j = rank_pdv[m];
    costs[m] = indexing == OrdinalCostIndexing::kSortedPdv
                   ? std::abs(sorted_pdv[i] - sorted_pdv[j])
                   : std::abs(pdv[i] - pdv[j]);
    sum += costs[m];
  }
  const double mean = sum / static_cast<double>(n);
  if (!(mean > 1e-12)) {
    std::fill(costs.begin(), costs.end(), 0.0);
    return costs;
  }
  for (double& c : costs) c /= mean;
  return costs;
}

struct DcvConfig {
  double tau = 2.0;  // normalized-cost removal threshold (multiple of mean)
  OrdinalCostIndexing indexing = OrdinalCostIndexing::kSortedPdv;
  int refine_iterations = 30;
};

struct DcvDiagnostics {
  int removed = 0;
  int sentinel_rejected = 0;
  bool reverted = false;
  double error_before = 0.0;
  double error_after = 0.0;
};

struct DcvResult {
  std::vector<PointMatch> matches;
  Pose pose;  // refined on the accepted set
  DcvDiagnostics diag;
};

namespace detail {

inline double MeanReprojection(const std::vector<PointMatch>& matches,
                               const Pose& pose, const Intrinsics& k) {
  if (matches.empty()) return kInfinity;
  double sum = 0.0;
  for (const PointMatch& m : matches) {
    const double e = ReprojectionError(m.pixel, m.xyz, pose, k);
    sum += std::isfinite(e) ? e : 1e9;
  }
  return sum / static_cast<double>(matches.size());
}

inline Pose RefineOn(const std::vector<PointMatch>& matches, const Pose& prior,
                     const Intrinsics& k, int iterations) {
  std::vector<Pixel> px;
  std::vector<WorldPoint> pt;
  px.reserve(matches.size());
  pt.reserve(matches.size());
  for (const PointMatch& m : matches) {
    px.push_back(m.pixel);
    pt.push_back(m.xyz);
  }
  return RefinePnp(px, pt, k, prior, iterations).pose;
}

}  // namespace detail

// Depth-consistency filtering with the reprojection-revert safeguard:
// matches whose normalized cost exceeds tau (or whose EDV is the
// behind-camera sentinel) are tentatively removed, the pose is re-refined on
// the survivors, and the removal only commits when the mean reprojection
// error strictly decreases. Anything else - including fewer than 4
// survivors - reverts to the unfiltered set, so the output never scores
// worse than the input.
inline DcvResult DcvFilter(const std::vector<PointMatch>& matches,
                           const std::vector<double>& costs, double tau,
                           const Pose& prior, const Intrinsics& k,
                           const DcvConfig& cfg = {}) {
  if (matches.size() != costs.size()) {
    throw Error(ErrorCode::kLengthMismatch, "cost list does not match matches");
  }
  if (!(tau > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "tau must be positive");
  }

  DcvResult result;
  result.pose = prior;

  std::vector<PointMatch> survivors;
  survivors.reserve(matches.size());
  for (size_t i = 0; i < matches.size(); ++i) {
    if (std::isinf(costs[i])) {
      ++result.diag.sentinel_rejected;
    } else if (costs[i] > tau) {
      ++result.diag.removed;
    } else {
      survivors.push_back(matches[i]);
    }
  }

  const int dropped = result.diag.removed + result.diag.sentinel_rejected;
  if (dropped == 0) {
    result.matches = matches;
    return result;
  }

  const auto revert = [&]() {
    result.matches = matches;
    result.diag.reverted = true;
    if (matches.size() >= 4) {
      result.pose = detail::RefineOn(matches, prior, k, cfg.refine_iterations);
    }
  };

  if (survivors.size() < 4) {
    revert();
    return result;
  }

  const Pose pose_before =
      matches.size() >= 4
          ? detail::RefineOn(matches, prior, k, cfg.refine_iterations)
          : prior;
  const Pose pose_after =
      detail::RefineOn(survivors, prior, k, cfg.refine_iterations);
  result.diag.error_before = detail::MeanReprojection(matches, pose_before, k);
  result.diag.error_after = detail::MeanReprojection(survivors, pose_after, k);

  // Commit only on a decrease that clears numerical jitter; exact-data cases
  // where both errors sit at machine precision must revert deterministically.
  if (result.diag.error_after <
      result.diag.error_before * (1.0 - 1e-9) - 1e-15) {
    result.matches = survivors;
    result.pose = pose_after;
  } else {
    result.matches = matches;
    result.pose = pose_before;
    result.diag.reverted = true;
  }
  return result;
}

// Convenience pass used by the pipeline: computes EDVs under the prior,
// samples PDVs, assembles per-match costs (no-data exempt, behind-camera
// auto-reject), and runs the filter.
inline DcvResult DepthConsistencyPass(const std::vector<PointMatch>& matches,
                                      const DepthMap& depth, const Pose& prior,
                                      const Intrinsics& k,
                                      const DcvConfig& cfg = {}) {
  std::vector<Pixel> pixels;
  pixels.reserve(matches.size());
  for (const PointMatch& m : matches) pixels.push_back(m.pixel);

  const std::vector<double> edv = EstimatedDepths(matches, prior, k);
  const std::vector<double> pdv = SamplePdv(depth, pixels);

  std::vector<int> valid;
  std::vector<double> edv_valid, pdv_valid;
  for (size_t i = 0; i < matches.size(); ++i) {
    if (edv[i] == kBehindCameraDepth) continue;  // sentinel handled below
    if (pdv[i] == kNoDepthData) continue;        // exempt, treated consistent
    valid.push_back(static_cast<int>(i));
    edv_valid.push_back(edv[i]);
    pdv_valid.push_back(pdv[i]);
  }

  std::vector<double> costs(matches.size(), 0.0);
  for (size_t i = 0; i < matches.size(); ++i) {
    if (edv[i] == kBehindCameraDepth) costs[i] = kInfinity;
  }
  if (valid.size() >= 2) {
    const std::vector<double> sub =
        AdaptiveOrdinalCosts(edv_valid, pdv_valid, cfg.indexing);
    for (size_t s = 0; s < valid.size(); ++s) costs[valid[s]] = sub[s];
  }
  return DcvFilter(matches, costs, cfg.tau, prior, k, cfg);
}

}  // namespace semloc
