#pragma once

#include <array>
#include <cmath>
#include <vector>

#include "semloc/geometry.hpp"
#include "semloc/rng.hpp"

namespace semloc::testing {

inline Mat3 RandomRotation(Rng* rng) {
  const Vec3 axis =
      Vec3(rng->Gaussian(), rng->Gaussian(), rng->Gaussian()).normalized();
  const double angle = rng->Uniform(0.0, 3.1);
  return Eigen::AngleAxisd(angle, axis).toRotationMatrix();
}

// Pose with a camera placed away from the origin looking roughly at it, so
// points sampled near the origin are in front of the camera.
inline Pose RandomLookAtPose(Rng* rng, double distance = 10.0) {
  const double azimuth = rng->Uniform(0.0, 2.0 * M_PI);
  const double elevation = rng->Uniform(-0.5, 0.5);
  const Vec3 center(distance * std::cos(elevation) * std::sin(azimuth),
                    distance * std::sin(elevation),
                    -distance * std::cos(elevation) * std::cos(azimuth));
  const Vec3 forward = (-center).normalized();
  Vec3 up(0.0, 1.0, 0.0);
  Vec3 right = forward.cross(up).normalized();
  up = right.cross(forward).normalized();
  Mat3 r;
  r.row(0) = right.transpose();
  r.row(1) = -up.transpose();
  r.row(2) = forward.transpose();
  return Pose(r, -(r * center));
}

inline Intrinsics TestIntrinsics() { return Intrinsics{520.0, 510.0, 320.0, 240.0}; }

inline WorldPoint RandomPointNearOrigin(Rng* rng, double extent = 3.0) {
  return WorldPoint(rng->Uniform(-extent, extent), rng->Uniform(-extent, extent),
                    rng->Uniform(-extent, extent));
}

}  // namespace semloc::testing
