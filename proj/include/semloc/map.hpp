#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "semloc/error.hpp"
#include "semloc/geometry.hpp"
#include "semloc/semantic.hpp"

namespace semloc {

struct TrackObservation {
  int image_id = -1;
  int keypoint_idx = -1;
};

struct PointDescriptor {
  double score = 1.0;  // detection score of the source keypoint
  Eigen::VectorXd values;
};

struct MapPoint {
  std::int64_t id = -1;
  WorldPoint xyz = WorldPoint::Zero();
  int label = -1;
  std::map<std::string, PointDescriptor> descriptors;  // per family
  std::vector<TrackObservation> track;
};

struct MapImage {
  int id = -1;
  Intrinsics intrinsics;
  Pose pose;
  Eigen::VectorXd global_descriptor;
};

// Immutable 3D map: points with descriptors, labels and tracks, plus the
// database images they were observed in. Shareable across threads once built.
struct Map {
  ClassTable class_table;
  std::vector<MapImage> images;   // sorted by id
  std::vector<MapPoint> points;   // sorted by id

  const MapImage* FindImage(int id) const {
    for (const MapImage& img : images) {
      if (img.id == id) return &img;
    }
    return nullptr;
  }

  const MapPoint* FindPoint(std::int64_t id) const {
    for (const MapPoint& p : points) {
      if (p.id == id) return &p;
    }
    return nullptr;
  }

  // Point indices observed by a database image, in point order.
  std::vector<int> VisiblePointIndices(int image_id) const {
    std::vector<int> out;
    for (size_t i = 0; i < points.size(); ++i) {
      for (const TrackObservation& obs : points[i].track) {
        if (obs.image_id == image_id) {
          out.push_back(static_cast<int>(i));
          break;
        }
      }
    }
    return out;
  }

  void Validate() const {
    std::set<int> image_ids;
    for (const MapImage& img : images) {
      if (!image_ids.insert(img.id).second) {
        throw Error(ErrorCode::kInvariantViolation,
                    "duplicate image id " + std::to_string(img.id));
      }
    }
    std::set<std::int64_t> point_ids;
    for (const MapPoint& p : points) {
      if (!point_ids.insert(p.id).second) {
        throw Error(ErrorCode::kInvariantViolation,
                    "duplicate point id " + std::to_string(p.id));
      }
      if (p.track.empty()) {
        throw Error(ErrorCode::kInvariantViolation,
                    "point " + std::to_string(p.id) + " has no observations");
      }
      for (const TrackObservation& obs : p.track) {
        if (image_ids.count(obs.image_id) == 0) {
          throw Error(ErrorCode::kInvariantViolation,
                      "point " + std::to_string(p.id) +
                          " tracks missing image " + std::to_string(obs.image_id));
        }
      }
      if (!p.xyz.allFinite()) {
        throw Error(ErrorCode::kInvariantViolation,
                    "point " + std::to_string(p.id) + " has non-finite position");
      }
    }
  }
};

}  // namespace semloc
