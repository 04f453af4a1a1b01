#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "semloc/error.hpp"
#include "semloc/geometry.hpp"
#include "semloc/matching.hpp"

namespace semloc {

// Per-image semantic segmentation, row-major class ids.
struct LabelMap {
  int width = 0;
  int height = 0;
  std::vector<std::uint16_t> labels;

  bool Empty() const { return labels.empty(); }

  std::uint16_t At(int x, int y) const {
    if (x < 0 || x >= width || y < 0 || y >= height) {
      throw Error(ErrorCode::kIndexOutOfRange,
                  "label cell (" + std::to_string(x) + "," + std::to_string(y) +
                      ") outside " + std::to_string(width) + "x" +
                      std::to_string(height));
    }
    return labels[static_cast<size_t>(y) * width + x];
  }
};

// Labels are categorical; keypoints sample the class of the nearest cell.
inline std::uint16_t SampleLabel(const LabelMap& map, const Pixel& px) {
  const int x = std::clamp(static_cast<int>(std::llround(px.u)), 0, map.width - 1);
  const int y = std::clamp(static_cast<int>(std::llround(px.v)), 0, map.height - 1);
  if (px.u < -0.5 || px.u > map.width - 0.5 || px.v < -0.5 ||
      px.v > map.height - 0.5) {
    throw Error(ErrorCode::kOutOfBounds, "pixel outside label map");
  }
  return map.At(x, y);
}

struct ClassTable {
  struct Entry {
    int id = 0;
    std::string name;
    bool dynamic = false;
  };
  std::vector<Entry> entries;

  std::set<int> DynamicIds() const {
    std::set<int> out;
    for (const Entry& e : entries) {
      if (e.dynamic) out.insert(e.id);
    }
    return out;
  }

  bool Contains(int id) const {
    for (const Entry& e : entries) {
      if (e.id == id) return true;
    }
    return false;
  }
};

struct ScwParams {
  double alpha1 = 1.0;  // weight on homography inlier count S_c
  double alpha2 = 1.0;  // weight on label-consistent match count S_f

  void Validate() const {
    if (!(alpha1 >= 0.0) || !(alpha2 >= 0.0) || !(alpha1 + alpha2 > 0.0)) {
      throw Error(ErrorCode::kInvalidArgument,
                  "alphas must be non-negative, not both zero");
    }
  }
};

// Semantic consistency weight: S_R = (a1*S_c + a2*S_f) / (a1 + a2).
inline double Scw(double s_c, double s_f, const ScwParams& p) {
  p.Validate();
  return (p.alpha1 * s_c + p.alpha2 * s_f) / (p.alpha1 + p.alpha2);
}

struct CandidateScore {
  int s_c = 0;      // homography consensus inliers
  int s_f = 0;      // label-consistent matches
  double s_r = 0.0;  // SCW
};

inline bool SccKeeps(int query_label, int train_label,
                     const std::set<int>& dynamic_classes) {
  return query_label == train_label && dynamic_classes.count(query_label) == 0;
}

// Semantic consistency check: drop matches whose endpoints disagree on class
// or sit on a dynamic object. Applied before any consensus estimation.
inline std::vector<Match> SccFilter(const std::vector<Match>& matches,
                                    const std::vector<int>& query_labels,
                                    const std::vector<int>& train_labels,
                                    const std::set<int>& dynamic_classes) {
  std::vector<Match> kept;
  kept.reserve(matches.size());
  for (const Match& m : matches) {
    if (m.query_idx < 0 ||
        m.query_idx >= static_cast<int>(query_labels.size()) ||
        m.train_idx < 0 ||
        m.train_idx >= static_cast<int>(train_labels.size())) {
      throw Error(ErrorCode::kIndexOutOfRange,
                  "match references label index outside the provided arrays");
    }
    if (SccKeeps(query_labels[m.query_idx], train_labels[m.train_idx],
                 dynamic_classes)) {
      kept.push_back(m);
    }
  }
  return kept;
}

// SCC over lifted 2D-3D matches (labels carried inline).
inline std::vector<PointMatch> SccFilterPoint(
    const std::vector<PointMatch>& matches,
    const std::set<int>& dynamic_classes) {
  std::vector<PointMatch> kept;
  kept.reserve(matches.size());
  for (const PointMatch& m : matches) {
    if (SccKeeps(m.query_label, m.point_label, dynamic_classes)) {
      kept.push_back(m);
    }
  }
  return kept;
}

// Maps SCW scores to per-candidate reduction ratios: divide by the maximum,
// clamp to [mu_min, 1]. All-zero scores get mu = 1 (no information, no
// shrinkage).
inline std::vector<double> NormalizeScw(const std::vector<double>& scores,
                                        double mu_min = 0.25) {
  if (scores.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "scores must be non-empty");
  }
  if (!(mu_min > 0.0) || !(mu_min <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "mu_min must be in (0,1]");
  }
  double max_score = 0.0;
  for (double s : scores) {
    if (!(s >= 0.0)) {
      throw Error(ErrorCode::kInvalidArgument, "scores must be >= 0");
    }
    max_score = std::max(max_score, s);
  }
  std::vector<double> mu(scores.size(), 1.0);
  if (max_score <= 0.0) return mu;
  for (size_t i = 0; i < scores.size(); ++i) {
    mu[i] = std::clamp(scores[i] / max_score, mu_min, 1.0);
  }
  return mu;
}

}  // namespace semloc
