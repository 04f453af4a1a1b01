#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "semloc/error.hpp"
#include "semloc/geometry.hpp"
#include "semloc/rng.hpp"
#include "semloc/solvers.hpp"

namespace semloc {

struct RansacConfig {
  double threshold = 8.0;        // inlier acceptance threshold e_t, pixels
  int max_iterations = 2000;
  double confidence = 0.9999;
  std::uint64_t seed = 0;
  int min_inliers = 12;

  void Validate() const {
    if (!(threshold > 0.0)) {
      throw Error(ErrorCode::kInvalidArgument, "threshold must be positive");
    }
    if (max_iterations < 1) {
      throw Error(ErrorCode::kInvalidArgument, "max_iterations must be >= 1");
    }
    if (!(confidence > 0.0) || !(confidence < 1.0)) {
      throw Error(ErrorCode::kInvalidArgument, "confidence must be in (0,1)");
    }
  }
};

// Binary inlier test: 1 iff the reprojection error is strictly below the
// threshold. +inf (cheirality sentinel) is never an inlier.
inline int Indicator(double e_p, double e_t) { return e_p < e_t ? 1 : 0; }

// Threshold-reduced quadratic score: 1 - (e_p / (mu*e_t))^2 on |e_p| < mu*e_t,
// else 0. mu in (0,1] shrinks the acceptance band per sample.
inline double WeightedIndicator(double e_p, double e_t, double mu) {
  const double limit = mu * e_t;
  if (!(std::abs(e_p) < limit)) return 0.0;
  const double ratio = e_p / limit;
  return 1.0 - ratio * ratio;
}

struct WeightedSample {
  int index = 0;                 // index into the adapter's match set
  double sampling_weight = 1.0;  // bias-sampling weight, >= 0
  double mu = 1.0;               // per-sample reduction ratio, (0,1]
};

inline std::vector<WeightedSample> UniformSamples(int count) {
  std::vector<WeightedSample> samples(count);
  for (int i = 0; i < count; ++i) samples[i].index = i;
  return samples;
}

template <typename ModelT>
struct Hypothesis {
  ModelT model{};
  double score = 0.0;
  std::vector<int> inlier_indices;  // adapter indices with indicator > 0
  double mean_inlier_error = kInfinity;
  int iteration = -1;
};

enum class ConsensusMode { kStandard, kWeighted };

namespace detail {

// Draws `count` distinct positions from `samples` without replacement, with
// probability proportional to sampling_weight. All-zero weights fall back to
// uniform. Deterministic given the rng state.
inline void DrawMinimalSet(const std::vector<WeightedSample>& samples,
                           int count, Rng* rng, std::vector<int>* out) {
  out->clear();
  const int n = static_cast<int>(samples.size());
  double total = 0.0;
  int positive = 0;
  for (const WeightedSample& s : samples) {
    total += s.sampling_weight;
    if (s.sampling_weight > 0.0) ++positive;
  }

  std::vector<char> used(n, 0);
  if (total <= 0.0) {
    while (static_cast<int>(out->size()) < count) {
      const int pick = static_cast<int>(rng->UniformInt(n));
      if (used[pick]) continue;
      used[pick] = 1;
      out->push_back(pick);
    }
    return;
  }
  if (positive < count) {
    throw Error(ErrorCode::kInsufficientSamples,
                "fewer positive-weight samples than the minimal set size");
  }

  double remaining = total;
  for (int draw = 0; draw < count; ++draw) {
    const double x = rng->Uniform() * remaining;
    double cumulative = 0.0;
    int pick = -1;
    for (int i = 0; i < n; ++i) {
      if (used[i] || samples[i].sampling_weight <= 0.0) continue;
      cumulative += samples[i].sampling_weight;
      pick = i;
      if (x < cumulative) break;
    }
    used[pick] = 1;
    remaining -= samples[pick].sampling_weight;
    out->push_back(pick);
  }
}

inline int AdaptiveIterationBound(double inlier_ratio, int sample_size,
                                  double confidence, int max_iterations) {
  const double p_good = std::pow(std::clamp(inlier_ratio, 0.0, 1.0),
                                 static_cast<double>(sample_size));
  if (p_good >= 1.0) return 1;
  if (p_good <= 0.0) return max_iterations;
  const double denom = std::log1p(-p_good);
  if (denom >= 0.0) return max_iterations;
  const double needed = std::log1p(-confidence) / denom;
  if (needed >= static_cast<double>(max_iterations)) return max_iterations;
  return std::max(1, static_cast<int>(std::ceil(needed)));
}

}  // namespace detail

// Hypothesize-and-verify consensus over an adapter providing:
//   using Model;
//   static constexpr int kSampleSize;
//   void Fit(const std::vector<int>& indices, std::vector<Model>* models) const;
//   double Residual(int index, const Model& model) const;   // pixels, may be +inf
//
// Standard mode scores hypotheses by the inlier count (sum of indicators);
// weighted mode by the sum of per-sample weighted indicators. Minimal sets
// are drawn without replacement proportionally to sampling_weight. Every
// iteration uses its own counter-derived substream, so the result depends
// only on (samples, cfg, mode), never on evaluation order.
template <typename Adapter>
Hypothesis<typename Adapter::Model> Consensus(
    const Adapter& adapter, const std::vector<WeightedSample>& samples,
    const RansacConfig& cfg, ConsensusMode mode) {
  cfg.Validate();
  const int n = static_cast<int>(samples.size());
  if (n < Adapter::kSampleSize) {
    throw Error(ErrorCode::kInsufficientSamples,
                "need at least " + std::to_string(Adapter::kSampleSize) +
                    " samples, got " + std::to_string(n));
  }

  Hypothesis<typename Adapter::Model> best;
  best.score = -1.0;

  std::vector<int> positions;
  std::vector<int> minimal_indices(Adapter::kSampleSize);
  std::vector<typename Adapter::Model> models;
  std::vector<int> inliers;

  int required = cfg.max_iterations;
  for (int iteration = 0; iteration < required; ++iteration) {
    Rng rng(MixSeeds(cfg.seed, static_cast<std::uint64_t>(iteration)));
    detail::DrawMinimalSet(samples, Adapter::kSampleSize, &rng, &positions);
    for (int i = 0; i < Adapter::kSampleSize; ++i) {
      minimal_indices[i] = samples[positions[i]].index;
    }

    models.clear();
    adapter.Fit(minimal_indices, &models);
    for (const auto& model : models) {
      double score = 0.0;
      double error_sum = 0.0;
      inliers.clear();
      for (const WeightedSample& s : samples) {
        const double e = adapter.Residual(s.index, model);
        double value;
        if (mode == ConsensusMode::kStandard) {
          value = static_cast<double>(Indicator(e, cfg.threshold));
        } else {
          value = WeightedIndicator(e, cfg.threshold, s.mu);
        }
        if (value > 0.0) {
          inliers.push_back(s.index);
          error_sum += e;
          score += value;
        }
      }
      const double mean_error =
          inliers.empty() ? kInfinity
                          : error_sum / static_cast<double>(inliers.size());
      const bool better =
          score > best.score ||
          (score == best.score && mean_error < best.mean_inlier_error);
      if (better) {
        best.model = model;
        best.score = score;
        best.inlier_indices = inliers;
        best.mean_inlier_error = mean_error;
        best.iteration = iteration;
        const double ratio =
            static_cast<double>(inliers.size()) / static_cast<double>(n);
        required = std::min(
            required,
            std::max(iteration + 1,
                     detail::AdaptiveIterationBound(ratio, Adapter::kSampleSize,
                                                    cfg.confidence,
                                                    cfg.max_iterations)));
      }
    }
  }

  if (best.score < 0.0 ||
      static_cast<int>(best.inlier_indices.size()) < cfg.min_inliers) {
    throw Error(ErrorCode::kConsensusFailure,
                "best hypothesis has " +
                    std::to_string(best.inlier_indices.size()) +
                    " inliers, need " + std::to_string(cfg.min_inliers));
  }
  return best;
}

// Pose-from-2D-3D adapter (P3P minimal solver).
class PnpAdapter {
 public:
  using Model = Pose;
  static constexpr int kSampleSize = 3;

  PnpAdapter(const std::vector<Pixel>& pixels,
             const std::vector<WorldPoint>& points, const Intrinsics& k)
      : pixels_(pixels), points_(points), k_(k) {
    if (pixels_.size() != points_.size()) {
      throw Error(ErrorCode::kLengthMismatch, "match lists differ in length");
    }
  }

  int Size() const { return static_cast<int>(pixels_.size()); }

  void Fit(const std::vector<int>& indices, std::vector<Model>* models) const {
    try {
      const std::array<Pixel, 3> px = {pixels_[indices[0]], pixels_[indices[1]],
                                       pixels_[indices[2]]};
      const std::array<WorldPoint, 3> pt = {
          points_[indices[0]], points_[indices[1]], points_[indices[2]]};
      *models = SolveP3P(px, pt, k_);
    } catch (const Error&) {
      models->clear();
    }
  }

  double Residual(int index, const Model& pose) const {
    return ReprojectionError(pixels_[index], points_[index], pose, k_);
  }

 private:
  const std::vector<Pixel>& pixels_;
  const std::vector<WorldPoint>& points_;
  Intrinsics k_;
};

// Homography-from-2D-2D adapter (4-point DLT).
class HomographyAdapter {
 public:
  using Model = Mat3;
  static constexpr int kSampleSize = 4;

  HomographyAdapter(const std::vector<Pixel>& src, const std::vector<Pixel>& dst)
      : src_(src), dst_(dst) {
    if (src_.size() != dst_.size()) {
      throw Error(ErrorCode::kLengthMismatch, "pair lists differ in length");
    }
  }

  int Size() const { return static_cast<int>(src_.size()); }

  void Fit(const std::vector<int>& indices, std::vector<Model>* models) const {
    models->clear();
    try {
      std::vector<Pixel> s, d;
      s.reserve(indices.size());
      d.reserve(indices.size());
      for (int i : indices) {
        s.push_back(src_[i]);
        d.push_back(dst_[i]);
      }
      models->push_back(EstimateHomographyDlt(s, d));
    } catch (const Error&) {
      models->clear();
    }
  }

  double Residual(int index, const Model& h) const {
    return HomographyTransferError(h, src_[index], dst_[index]);
  }

 private:
  const std::vector<Pixel>& src_;
  const std::vector<Pixel>& dst_;
};

}  // namespace semloc
