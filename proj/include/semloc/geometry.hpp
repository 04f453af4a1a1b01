#pragma once

#include <cmath>
#include <limits>
#include <utility>

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <Eigen/SVD>

#include "semloc/error.hpp"

namespace semloc {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using WorldPoint = Eigen::Vector3d;

constexpr double kMinDepth = 1e-12;
constexpr double kInfinity = std::numeric_limits<double>::infinity();
constexpr double kDegPerRad = 57.295779513082320876798154814105;

struct Pixel {
  double u = 0.0;
  double v = 0.0;

  Vec2 AsVec() const { return Vec2(u, v); }
  double DistanceTo(const Pixel& other) const {
    return std::hypot(u - other.u, v - other.v);
  }
};

// Pinhole intrinsics, zero skew, no distortion.
struct Intrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;

  void Validate() const {
    if (!(fx > 0.0) || !(fy > 0.0)) {
      throw Error(ErrorCode::kInvalidArgument, "focal lengths must be positive");
    }
  }

  // Unit-depth camera ray through a pixel.
  Vec3 Unproject(const Pixel& px) const {
    return Vec3((px.u - cx) / fx, (px.v - cy) / fy, 1.0);
  }
};

// World-to-camera rigid transform: p_cam = R * p_world + t.
//
// The stored truth is a unit quaternion (w >= 0) plus translation; the
// rotation matrix is derived once at construction. Serialization writes the
// quaternion components verbatim, so save/load round trips are bit-exact.
class Pose {
 public:
  Pose()
      : q_(1.0, 0.0, 0.0, 0.0),
        t_(Vec3::Zero()),
        r_(Mat3::Identity()) {}

  Pose(const Mat3& rotation, const Vec3& translation) : t_(translation) {
    const double ortho = (rotation.transpose() * rotation - Mat3::Identity())
                             .cwiseAbs()
                             .maxCoeff();
    const double det_err = std::abs(rotation.determinant() - 1.0);
    if (!(ortho < 1e-6) || !(det_err < 1e-6)) {
      throw Error(ErrorCode::kInvalidRotation,
                  "matrix is not a rotation (orthogonality violation " +
                      std::to_string(ortho) + ", det violation " +
                      std::to_string(det_err) + ")");
    }
    Mat3 r = rotation;
    if (ortho > 1e-9 || det_err > 1e-9) {
      // Nearest rotation in Frobenius norm.
      Eigen::JacobiSVD<Mat3> svd(r, Eigen::ComputeFullU | Eigen::ComputeFullV);
      Mat3 u = svd.matrixU();
      if ((u * svd.matrixV().transpose()).determinant() < 0.0) u.col(2) *= -1.0;
      r = u * svd.matrixV().transpose();
    }
    q_ = Eigen::Quaterniond(r);
    q_.normalize();
    CanonicalizeSign();
    r_ = q_.toRotationMatrix();
  }

  // Construction from quaternion components (the serialized form). Components
  // within 1e-9 of unit norm are kept verbatim so that file round trips are
  // exact; only the sign is canonicalized (an exact operation).
  static Pose FromQuaternion(double qw, double qx, double qy, double qz,
                             const Vec3& translation) {
    const double norm = std::sqrt(qw * qw + qx * qx + qy * qy + qz * qz);
    if (!(std::abs(norm - 1.0) < 1e-6)) {
      throw Error(ErrorCode::kInvalidRotation,
                  "quaternion norm " + std::to_string(norm) + " is not 1");
    }
    Pose pose;
    pose.q_ = Eigen::Quaterniond(qw, qx, qy, qz);
    if (std::abs(norm - 1.0) > 1e-9) pose.q_.normalize();
    pose.CanonicalizeSign();
    pose.r_ = pose.q_.toRotationMatrix();
    pose.t_ = translation;
    return pose;
  }

  const Mat3& rotation() const { return r_; }
  const Vec3& translation() const { return t_; }
  const Eigen::Quaterniond& quaternion() const { return q_; }

  Vec3 Center() const { return -(r_.transpose() * t_); }

  Vec3 ToCamera(const WorldPoint& p) const { return r_ * p + t_; }

  Pose Inverse() const {
    return Pose(r_.transpose(), -(r_.transpose() * t_));
  }

  bool BitEquals(const Pose& other) const {
    return q_.w() == other.q_.w() && q_.x() == other.q_.x() &&
           q_.y() == other.q_.y() && q_.z() == other.q_.z() &&
           t_ == other.t_;
  }

 private:
  void CanonicalizeSign() {
    bool flip = q_.w() < 0.0;
    if (q_.w() == 0.0) {
      if (q_.x() != 0.0) {
        flip = q_.x() < 0.0;
      } else if (q_.y() != 0.0) {
        flip = q_.y() < 0.0;
      } else {
        flip = q_.z() < 0.0;
      }
    }
    if (flip) q_.coeffs() = -q_.coeffs();
  }

  Eigen::Quaterniond q_;
  Vec3 t_;
  Mat3 r_;
};

struct Projection {
  Pixel pixel;
  double depth = 0.0;  // camera-frame z of the projected point
};

// Projects a world point into the image; depth is the camera-frame z.
inline Projection Project(const WorldPoint& point, const Pose& pose,
                          const Intrinsics& k) {
  const Vec3 pc = pose.ToCamera(point);
  if (!(pc.z() > kMinDepth)) {
    throw Error(ErrorCode::kCheiralityViolation,
                "point maps to camera-frame z = " + std::to_string(pc.z()));
  }
  return Projection{
      Pixel{k.fx * pc.x() / pc.z() + k.cx, k.fy * pc.y() / pc.z() + k.cy},
      pc.z()};
}

// Pixel distance between an observation and the projection of its world
// point. Points behind the camera yield +inf so robust scoring rejects them
// without aborting.
inline double ReprojectionError(const Pixel& observed, const WorldPoint& point,
                                const Pose& pose, const Intrinsics& k) {
  const Vec3 pc = pose.ToCamera(point);
  if (!(pc.z() > kMinDepth)) return kInfinity;
  const double u = k.fx * pc.x() / pc.z() + k.cx;
  const double v = k.fy * pc.y() / pc.z() + k.cy;
  return std::hypot(u - observed.u, v - observed.v);
}

struct PoseDelta {
  double translation = 0.0;  // distance between camera centers, scene units
  double rotation_deg = 0.0;  // relative rotation angle, degrees
};

inline PoseDelta ComputePoseDelta(const Pose& a, const Pose& b) {
  PoseDelta d;
  d.translation = (a.Center() - b.Center()).norm();
  const Mat3 rel = a.rotation() * b.rotation().transpose();
  const double cos_theta = std::clamp((rel.trace() - 1.0) / 2.0, -1.0, 1.0);
  // Same arccos((trace-1)/2) angle, evaluated through atan2 so that small
  // angles are not drowned by the acos noise floor near 1.
  const Vec3 axial(rel(2, 1) - rel(1, 2), rel(0, 2) - rel(2, 0),
                   rel(1, 0) - rel(0, 1));
  d.rotation_deg = std::atan2(0.5 * axial.norm(), cos_theta) * kDegPerRad;
  return d;
}

// Midpoint triangulation of two viewing rays.
inline WorldPoint Triangulate(const Pixel& pix_a, const Pose& pose_a,
                              const Pixel& pix_b, const Pose& pose_b,
                              const Intrinsics& k) {
  const Vec3 ca = pose_a.Center();
  const Vec3 cb = pose_b.Center();
  if ((ca - cb).norm() <= 1e-12) {
    throw Error(ErrorCode::kDegenerateGeometry, "zero baseline");
  }
  const Vec3 da = (pose_a.rotation().transpose() * k.Unproject(pix_a)).normalized();
  const Vec3 db = (pose_b.rotation().transpose() * k.Unproject(pix_b)).normalized();
  const double angle = std::atan2(da.cross(db).norm(), da.dot(db));
  if (angle < 1e-4 || angle > M_PI - 1e-4) {
    throw Error(ErrorCode::kDegenerateGeometry, "rays are parallel");
  }
  // Closest points on the two rays: minimize |ca + s*da - cb - t*db|.
  const Vec3 w = cb - ca;
  const double d_ab = da.dot(db);
  const double denom = 1.0 - d_ab * d_ab;
  const double s = (da.dot(w) - d_ab * db.dot(w)) / denom;
  const double t = (d_ab * da.dot(w) - db.dot(w)) / denom;
  return 0.5 * ((ca + s * da) + (cb + t * db));
}

}  // namespace semloc
