#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "semloc/error.hpp"
#include "semloc/geometry.hpp"

namespace semloc {

namespace detail {

inline Mat3 Skew(const Vec3& v) {
  Mat3 m;
  m << 0.0, -v.z(), v.y(), v.z(), 0.0, -v.x(), -v.y(), v.x(), 0.0;
  return m;
}

// Real roots of sum_i coeffs[i] * x^i via the companion matrix, polished with
// a few Newton steps on the original polynomial.
inline std::vector<double> RealPolynomialRoots(std::vector<double> coeffs) {
  double max_mag = 0.0;
  for (double c : coeffs) max_mag = std::max(max_mag, std::abs(c));
  if (max_mag == 0.0) return {};
  while (coeffs.size() > 1 && std::abs(coeffs.back()) < 1e-13 * max_mag) {
    coeffs.pop_back();
  }
  const int degree = static_cast<int>(coeffs.size()) - 1;
  if (degree < 1) return {};
  if (degree == 1) return {-coeffs[0] / coeffs[1]};

  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(degree, degree);
  for (int i = 0; i < degree; ++i) {
    companion(0, i) = -coeffs[degree - 1 - i] / coeffs[degree];
  }
  companion.block(1, 0, degree - 1, degree - 1) =
      Eigen::MatrixXd::Identity(degree - 1, degree - 1);

  Eigen::EigenSolver<Eigen::MatrixXd> eig(companion, false);
  const auto eval = [&coeffs](double x, double* deriv) {
    double p = 0.0, dp = 0.0;
    for (int i = static_cast<int>(coeffs.size()) - 1; i >= 0; --i) {
      dp = dp * x + p;
      p = p * x + coeffs[i];
    }
    *deriv = dp;
    return p;
  };

  // Near-multiple real roots surface as complex pairs with small imaginary
  // parts, so every eigenvalue's real part is polished and kept; spurious
  // candidates are cheap and the caller filters on the original problem.
  std::vector<double> roots;
  for (int i = 0; i < degree; ++i) {
    double x = eig.eigenvalues()[i].real();
    if (!std::isfinite(x)) continue;
    for (int it = 0; it < 12; ++it) {
      double dp = 0.0;
      const double p = eval(x, &dp);
      if (dp == 0.0) break;
      const double step = p / dp;
      x -= step;
      if (std::abs(step) < 1e-14 * (1.0 + std::abs(x))) break;
    }
    bool duplicate = false;
    for (double r : roots) {
      if (std::abs(r - x) < 1e-9 * (1.0 + std::abs(x))) {
        duplicate = true;
        break;
      }
    }
    if (!duplicate) roots.push_back(x);
  }
  std::sort(roots.begin(), roots.end());
  return roots;
}

// Grunert quartic in v = s3/s1 for the three-point resection problem, with
// squared side lengths (a2 opposite vertex 1, etc.) and ray-pair cosines.
inline std::array<double, 5> GrunertQuartic(double a2, double b2, double c2,
                                            double cos_a, double cos_b,
                                            double cos_g) {
  const double acb = (a2 - c2) / b2;
  const double apc = (a2 + c2) / b2;
  std::array<double, 5> q;
  q[4] = (acb - 1.0) * (acb - 1.0) - 4.0 * (c2 / b2) * cos_a * cos_a;
  q[3] = 4.0 * (acb * (1.0 - acb) * cos_b - (1.0 - apc) * cos_a * cos_g +
                2.0 * (c2 / b2) * cos_a * cos_a * cos_b);
  q[2] = 2.0 * (acb * acb - 1.0 + 2.0 * acb * acb * cos_b * cos_b +
                2.0 * ((b2 - c2) / b2) * cos_a * cos_a -
                4.0 * apc * cos_a * cos_b * cos_g +
                2.0 * ((b2 - a2) / b2) * cos_g * cos_g);
  q[1] = 4.0 * (-acb * (1.0 + acb) * cos_b + 2.0 * (a2 / b2) * cos_g * cos_g * cos_b -
                (1.0 - apc) * cos_a * cos_g);
  q[0] = (1.0 + acb) * (1.0 + acb) - 4.0 * (a2 / b2) * cos_g * cos_g;
  return q;
}

// Rigid alignment world -> camera from three point pairs (Kabsch).
inline Pose AlignWorldToCamera(const std::array<Vec3, 3>& world,
                               const std::array<Vec3, 3>& camera) {
  const Vec3 cw = (world[0] + world[1] + world[2]) / 3.0;
  const Vec3 cc = (camera[0] + camera[1] + camera[2]) / 3.0;
  Mat3 cov = Mat3::Zero();
  for (int i = 0; i < 3; ++i) {
    cov += (camera[i] - cc) * (world[i] - cw).transpose();
  }
  Eigen::JacobiSVD<Mat3> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 u = svd.matrixU();
  if ((u * svd.matrixV().transpose()).determinant() < 0.0) u.col(2) *= -1.0;
  const Mat3 r = u * svd.matrixV().transpose();
  return Pose(r, cc - r * cw);
}

// One Gauss-Newton step on the exactly determined 3-point reprojection
// system; used to polish P3P candidates to machine precision.
inline bool PolishPoseOnTriple(const std::array<Pixel, 3>& pixels,
                               const std::array<WorldPoint, 3>& points,
                               const Intrinsics& k, Pose* pose) {
  for (int it = 0; it < 10; ++it) {
    Eigen::Matrix<double, 6, 6> jac;
    Eigen::Matrix<double, 6, 1> res;
    for (int i = 0; i < 3; ++i) {
      const Vec3 pc = pose->ToCamera(points[i]);
      if (!(pc.z() > kMinDepth)) return false;
      const double iz = 1.0 / pc.z();
      res(2 * i) = k.fx * pc.x() * iz + k.cx - pixels[i].u;
      res(2 * i + 1) = k.fy * pc.y() * iz + k.cy - pixels[i].v;
      Eigen::Matrix<double, 2, 3> jproj;
      jproj << k.fx * iz, 0.0, -k.fx * pc.x() * iz * iz, 0.0, k.fy * iz,
          -k.fy * pc.y() * iz * iz;
      // Left perturbation of the whole transform: pc' = exp(w) pc + dt.
      jac.block<2, 3>(2 * i, 0) = jproj * (-Skew(pc));
      jac.block<2, 3>(2 * i, 3) = jproj;
    }
    if (res.cwiseAbs().maxCoeff() < 1e-13) return true;
    const Eigen::Matrix<double, 6, 1> delta =
        jac.colPivHouseholderQr().solve(-res);
    if (!delta.allFinite()) return false;
    const double angle = delta.head<3>().norm();
    Mat3 rot_update = Mat3::Identity();
    if (angle > 0.0) {
      rot_update =
          Eigen::AngleAxisd(angle, delta.head<3>() / angle).toRotationMatrix();
    }
    *pose = Pose(rot_update * pose->rotation(),
                 rot_update * pose->translation() + delta.tail<3>());
  }
  return true;
}

}  // namespace detail

// Perspective-three-point pose candidates (Grunert). Every returned pose
// reprojects the three inputs to better than 1e-6 px; up to four solutions.
inline std::vector<Pose> SolveP3P(const std::array<Pixel, 3>& pixels,
                                  const std::array<WorldPoint, 3>& points,
                                  const Intrinsics& k) {
  k.Validate();
  const Vec3 edge_c = points[1] - points[0];
  const Vec3 edge_b = points[2] - points[0];
  const double scale2 = std::max(edge_c.squaredNorm(), edge_b.squaredNorm());
  if (edge_c.cross(edge_b).norm() <= 1e-10 * std::max(scale2, 1e-30)) {
    throw Error(ErrorCode::kDegenerateGeometry, "collinear world points");
  }

  std::array<Vec3, 3> f;
  for (int i = 0; i < 3; ++i) f[i] = k.Unproject(pixels[i]).normalized();
  for (int i = 0; i < 3; ++i) {
    for (int j = i + 1; j < 3; ++j) {
      if (f[i].dot(f[j]) > 1.0 - 1e-12) {
        throw Error(ErrorCode::kDegenerateGeometry, "coincident bearings");
      }
    }
  }

  const double a2 = (points[1] - points[2]).squaredNorm();
  const double b2 = (points[0] - points[2]).squaredNorm();
  const double c2 = (points[0] - points[1]).squaredNorm();
  const double cos_a = f[1].dot(f[2]);
  const double cos_b = f[0].dot(f[2]);
  const double cos_g = f[0].dot(f[1]);

  const auto quartic = detail::GrunertQuartic(a2, b2, c2, cos_a, cos_b, cos_g);
  const std::vector<double> v_roots = detail::RealPolynomialRoots(
      {quartic[0], quartic[1], quartic[2], quartic[3], quartic[4]});

  std::vector<Pose> solutions;
  for (double v : v_roots) {
    if (!(v > 0.0)) continue;
    const double s1_den = 1.0 + v * v - 2.0 * v * cos_b;
    if (!(s1_den > 0.0)) continue;
    const double s1 = std::sqrt(b2 / s1_den);

    // u = s2/s1 from the linear relation; quadratic fallback when the
    // denominator vanishes.
    std::vector<double> u_candidates;
    const double lin_den = 2.0 * (cos_g - v * cos_a);
    const double lin_num =
        ((a2 - c2) / b2) * s1_den + 1.0 - v * v;
    if (std::abs(lin_den) > 1e-10 * (1.0 + std::abs(v))) {
      u_candidates.push_back(lin_num / lin_den);
    } else {
      const double disc = cos_g * cos_g - 1.0 + (c2 / b2) * s1_den;
      if (disc >= 0.0) {
        u_candidates.push_back(cos_g + std::sqrt(disc));
        u_candidates.push_back(cos_g - std::sqrt(disc));
      }
    }

    double best_u = 0.0;
    double best_residual = kInfinity;
    for (double u : u_candidates) {
      if (!(u > 0.0)) continue;
      const double residual = std::abs(
          u * u + v * v - 2.0 * u * v * cos_a - (a2 / b2) * s1_den);
      if (residual < best_residual) {
        best_residual = residual;
        best_u = u;
      }
    }
    if (!(best_residual < kInfinity)) continue;

    const std::array<Vec3, 3> camera_points = {s1 * f[0], best_u * s1 * f[1],
                                               v * s1 * f[2]};
    Pose candidate = detail::AlignWorldToCamera(points, camera_points);
    if (!detail::PolishPoseOnTriple(pixels, points, k, &candidate)) continue;

    double max_err = 0.0;
    for (int i = 0; i < 3; ++i) {
      max_err = std::max(max_err,
                         ReprojectionError(pixels[i], points[i], candidate, k));
    }
    if (!(max_err < 1e-6)) continue;

    bool duplicate = false;
    for (const Pose& existing : solutions) {
      const PoseDelta d = ComputePoseDelta(existing, candidate);
      if (d.translation < 1e-8 && d.rotation_deg < 1e-8) {
        duplicate = true;
        break;
      }
    }
    if (!duplicate) solutions.push_back(candidate);
  }

  if (solutions.empty()) {
    throw Error(ErrorCode::kNoSolution, "no real P3P solution");
  }
  return solutions;
}

// Normalized-DLT homography mapping src -> dst; bottom-right entry scaled to
// 1 when it is not (numerically) zero.
inline Mat3 EstimateHomographyDlt(const std::vector<Pixel>& src,
                                  const std::vector<Pixel>& dst) {
  if (src.size() != dst.size()) {
    throw Error(ErrorCode::kLengthMismatch, "pair lists differ in length");
  }
  const int n = static_cast<int>(src.size());
  if (n < 4) {
    throw Error(ErrorCode::kInsufficientSamples,
                "homography needs at least 4 pairs");
  }

  const auto normalization = [](const std::vector<Pixel>& pts) {
    Vec2 centroid = Vec2::Zero();
    for (const Pixel& p : pts) centroid += p.AsVec();
    centroid /= static_cast<double>(pts.size());
    double rms = 0.0;
    for (const Pixel& p : pts) rms += (p.AsVec() - centroid).squaredNorm();
    rms = std::sqrt(rms / static_cast<double>(pts.size()));
    if (rms < 1e-12) {
      throw Error(ErrorCode::kDegenerateGeometry, "coincident points");
    }
    const double s = std::sqrt(2.0) / rms;
    Mat3 t;
    t << s, 0.0, -s * centroid.x(), 0.0, s, -s * centroid.y(), 0.0, 0.0, 1.0;
    return t;
  };

  const Mat3 t_src = normalization(src);
  const Mat3 t_dst = normalization(dst);

  Eigen::MatrixXd a(2 * n, 9);
  for (int i = 0; i < n; ++i) {
    const Vec3 p = t_src * Vec3(src[i].u, src[i].v, 1.0);
    const Vec3 q = t_dst * Vec3(dst[i].u, dst[i].v, 1.0);
    a.row(2 * i) << 0.0, 0.0, 0.0, -p.x(), -p.y(), -p.z(), q.y() * p.x(),
        q.y() * p.y(), q.y() * p.z();
    a.row(2 * i + 1) << p.x(), p.y(), p.z(), 0.0, 0.0, 0.0, -q.x() * p.x(),
        -q.x() * p.y(), -q.x() * p.z();
  }

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  if (sv(0) <= 0.0 || sv(7) <= 1e-10 * sv(0)) {
    throw Error(ErrorCode::kDegenerateGeometry,
                "homography system is rank deficient (collinear points)");
  }
  const Eigen::VectorXd h = svd.matrixV().col(8);
  Mat3 h_norm;
  h_norm << h(0), h(1), h(2), h(3), h(4), h(5), h(6), h(7), h(8);
  Mat3 result = t_dst.inverse() * h_norm * t_src;

  const double max_abs = result.cwiseAbs().maxCoeff();
  if (std::abs(result(2, 2)) > 1e-12 * max_abs) {
    result /= result(2, 2);
  } else {
    result /= result.norm();
  }
  return result;
}

// Forward transfer error |H*src - dst| in pixels; +inf when the mapped point
// is at infinity.
inline double HomographyTransferError(const Mat3& h, const Pixel& src,
                                      const Pixel& dst) {
  const Vec3 q = h * Vec3(src.u, src.v, 1.0);
  if (std::abs(q.z()) < 1e-12) return kInfinity;
  return std::hypot(q.x() / q.z() - dst.u, q.y() / q.z() - dst.v);
}

struct RefineResult {
  Pose pose;
  bool degenerate = false;   // normal equations were singular; pose == initial
  double initial_cost = 0.0;  // sum of squared reprojection errors
  double final_cost = 0.0;
  int iterations = 0;
};

// Levenberg-Marquardt polish of a pose over 2D-3D matches. Steps are only
// accepted when they lower the cost, so final_cost <= initial_cost always
// holds. Points behind the camera contribute a large fixed cost and no
// gradient.
inline RefineResult RefinePnp(const std::vector<Pixel>& pixels,
                              const std::vector<WorldPoint>& points,
                              const Intrinsics& k, const Pose& initial,
                              int max_iterations = 50) {
  if (pixels.size() != points.size()) {
    throw Error(ErrorCode::kLengthMismatch, "match lists differ in length");
  }
  if (pixels.size() < 4) {
    throw Error(ErrorCode::kInsufficientSamples,
                "pose refinement needs at least 4 matches");
  }
  k.Validate();
  const int n = static_cast<int>(pixels.size());
  constexpr double kBehindCost = 1e16;

  const auto cost_of = [&](const Pose& pose) {
    double cost = 0.0;
    for (int i = 0; i < n; ++i) {
      const double e = ReprojectionError(pixels[i], points[i], pose, k);
      cost += std::isfinite(e) ? e * e : kBehindCost;
    }
    return cost;
  };

  RefineResult result;
  result.pose = initial;
  result.initial_cost = cost_of(initial);
  result.final_cost = result.initial_cost;

  using Mat6 = Eigen::Matrix<double, 6, 6>;
  using Vec6 = Eigen::Matrix<double, 6, 1>;

  const auto normal_equations = [&](const Pose& pose, Mat6* h, Vec6* g) {
    h->setZero();
    g->setZero();
    for (int i = 0; i < n; ++i) {
      const Vec3 pc = pose.ToCamera(points[i]);
      if (!(pc.z() > kMinDepth)) continue;
      const double iz = 1.0 / pc.z();
      Eigen::Vector2d res(k.fx * pc.x() * iz + k.cx - pixels[i].u,
                          k.fy * pc.y() * iz + k.cy - pixels[i].v);
      Eigen::Matrix<double, 2, 3> jproj;
      jproj << k.fx * iz, 0.0, -k.fx * pc.x() * iz * iz, 0.0, k.fy * iz,
          -k.fy * pc.y() * iz * iz;
      Eigen::Matrix<double, 2, 6> jac;
      jac.block<2, 3>(0, 0) = jproj * (-detail::Skew(pc));
      jac.block<2, 3>(0, 3) = jproj;
      *h += jac.transpose() * jac;
      *g += jac.transpose() * res;
    }
  };

  Mat6 h;
  Vec6 g;
  normal_equations(result.pose, &h, &g);

  Eigen::SelfAdjointEigenSolver<Mat6> eig(h);
  const double lambda_max = eig.eigenvalues().maxCoeff();
  if (!(lambda_max > 0.0) ||
      eig.eigenvalues().minCoeff() <= 1e-12 * lambda_max) {
    result.degenerate = true;
    return result;
  }

  double damping = 1e-8 * lambda_max;
  for (int it = 0; it < max_iterations; ++it) {
    result.iterations = it + 1;
    bool stepped = false;
    for (int attempt = 0; attempt < 12; ++attempt) {
      const Vec6 delta = (h + damping * Mat6::Identity()).ldlt().solve(-g);
      if (!delta.allFinite()) break;
      const double angle = delta.head<3>().norm();
      Mat3 rot_update = Mat3::Identity();
      if (angle > 0.0) {
        rot_update = Eigen::AngleAxisd(angle, delta.head<3>() / angle)
                         .toRotationMatrix();
      }
      const Pose trial(rot_update * result.pose.rotation(),
                       rot_update * result.pose.translation() + delta.tail<3>());
      const double trial_cost = cost_of(trial);
      if (trial_cost < result.final_cost) {
        result.pose = trial;
        result.final_cost = trial_cost;
        damping = std::max(damping * 0.3, 1e-12 * lambda_max);
        stepped = true;
        break;
      }
      damping *= 10.0;
    }
    if (!stepped) break;
    if (result.final_cost < 1e-24 * n) break;
    normal_equations(result.pose, &h, &g);
    if (g.cwiseAbs().maxCoeff() < 1e-14 * (1.0 + result.final_cost)) break;
  }
  return result;
}

}  // namespace semloc
