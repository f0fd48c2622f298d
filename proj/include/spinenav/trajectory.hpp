#pragma once

// J-shape drilling geometry: a straight pilot segment along the entry frame's
// insertion axis (-z) followed by one constant-curvature arc whose bending
// direction is +x rotated by `plane_roll` about the insertion axis.

#include <algorithm>
#include <cmath>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "spinenav/detail/linalg.hpp"
#include "spinenav/errors.hpp"
#include "spinenav/se3.hpp"

namespace spinenav {

/// Upper bound on the spacing between consecutive trajectory samples, mm.
constexpr double kMaxSampleSpacing = 0.5;
constexpr double kMaxArcAngleDeg = 120.0;

struct Trajectory {
  Pose entry_pose;
  double pilot_depth = 0.0;
  double arc_radius = 0.0;
  double arc_angle_deg = 0.0;
  double arc_plane_roll_deg = 0.0;
  std::vector<Vec3> sample_points;
  std::vector<double> sample_arclength;

  double arc_length() const { return arc_radius * deg2rad(arc_angle_deg); }
  double total_length() const { return pilot_depth + arc_length(); }

  /// Insertion direction and bending direction in the entry frame.
  static Vec3 insertion_axis() { return -Vec3::UnitZ(); }
  Vec3 bend_axis_local() const {
    const double roll = deg2rad(arc_plane_roll_deg);
    return Vec3(std::cos(roll), std::sin(roll), 0.0);
  }

  Vec3 point_at(double s) const {
    const Vec3 d = insertion_axis();
    Vec3 local;
    if (s <= pilot_depth) {
      local = s * d;
    } else {
      const double phi = (s - pilot_depth) / arc_radius;
      local = pilot_depth * d + arc_radius * std::sin(phi) * d + arc_radius * (1.0 - std::cos(phi)) * bend_axis_local();
    }
    return entry_pose.transform_point(local);
  }

  Vec3 tangent_at(double s) const {
    const Vec3 d = insertion_axis();
    Vec3 local = d;
    if (s > pilot_depth) {
      const double phi = (s - pilot_depth) / arc_radius;
      local = std::cos(phi) * d + std::sin(phi) * bend_axis_local();
    }
    return entry_pose.rotation * local;
  }

  std::vector<Vec3> pilot_points() const {
    std::vector<Vec3> out;
    for (std::size_t i = 0; i < sample_points.size(); ++i)
      if (sample_arclength[i] <= pilot_depth) out.push_back(sample_points[i]);
    return out;
  }

  /// Arc samples including the pilot/arc junction point.
  std::vector<Vec3> arc_points() const {
    std::vector<Vec3> out;
    for (std::size_t i = 0; i < sample_points.size(); ++i)
      if (sample_arclength[i] >= pilot_depth && arc_angle_deg > 0.0) out.push_back(sample_points[i]);
    return out;
  }
};

/// Pilot depth may be zero (pure arc) and arc angle may be zero (pure line),
/// but not both.
inline Trajectory plan_trajectory(const Pose& entry, double pilot_depth, double radius, double arc_angle_deg,
                                  double plane_roll_deg, double step) {
  if (!(pilot_depth >= 0.0) || !std::isfinite(pilot_depth)) throw InvalidParameter("pilot depth must be >= 0");
  if (!(radius > 0.0) || !std::isfinite(radius)) throw InvalidParameter("arc radius must be > 0");
  if (!(arc_angle_deg >= 0.0 && arc_angle_deg <= kMaxArcAngleDeg))
    throw InvalidParameter("arc angle must lie in [0, 120] degrees");
  if (!(step > 0.0) || !std::isfinite(step)) throw InvalidParameter("sample step must be > 0");
  if (!std::isfinite(plane_roll_deg)) throw InvalidParameter("plane roll must be finite");
  if (pilot_depth == 0.0 && arc_angle_deg == 0.0) throw InvalidParameter("trajectory has zero length");

  Trajectory t;
  t.entry_pose = entry;
  t.pilot_depth = pilot_depth;
  t.arc_radius = radius;
  t.arc_angle_deg = arc_angle_deg;
  t.arc_plane_roll_deg = plane_roll_deg;

  const double h = std::min(step, kMaxSampleSpacing);
  auto sample_piece = [&](double s0, double length, bool include_start) {
    if (length <= 0.0) return;
    const auto n = static_cast<std::size_t>(std::ceil(length / h));
    for (std::size_t k = include_start ? 0 : 1; k <= n; ++k) {
      const double s = k == n ? s0 + length : s0 + length * static_cast<double>(k) / static_cast<double>(n);
      t.sample_arclength.push_back(s);
      t.sample_points.push_back(t.point_at(s));
    }
  };
  sample_piece(0.0, pilot_depth, true);
  sample_piece(pilot_depth, t.arc_length(), pilot_depth == 0.0);
  return t;
}

// ---------------------------------------------------------------------------
// Curvature measurement

struct CurvatureFit {
  double radius = 0.0;
  Vec3 center = Vec3::Zero();
  Vec3 plane_normal = Vec3::UnitZ();
  double rms_residual = 0.0;
};

/// Relative eigenvalue below which a point set is treated as collinear.
constexpr double kCollinearityThreshold = 1e-12;

/// Plane by PCA, then an algebraic (Kasa) circle fit in the plane refined by a
/// single Gauss-Newton step on geometric distance.
inline CurvatureFit fit_curvature(std::span<const Vec3> points) {
  if (points.size() < 3) throw TooFewSamples("curvature fit needs at least 3 points");
  const auto n = static_cast<Eigen::Index>(points.size());

  Vec3 centroid = Vec3::Zero();
  for (const auto& p : points) centroid += p;
  centroid /= static_cast<double>(n);
  Mat3 cov = Mat3::Zero();
  for (const auto& p : points) cov += (p - centroid) * (p - centroid).transpose();

  Eigen::SelfAdjointEigenSolver<Mat3> eig(cov);
  const Vec3 lambda = eig.eigenvalues();  // ascending
  if (!(lambda[2] > 0.0) || lambda[1] <= kCollinearityThreshold * lambda[2]) {
    throw CollinearPoints("points are collinear; no finite radius of curvature");
  }
  Vec3 normal = eig.eigenvectors().col(0).normalized();
  Eigen::Index big = 0;
  normal.cwiseAbs().maxCoeff(&big);
  if (normal[big] < 0.0) normal = -normal;
  const Vec3 e1 = eig.eigenvectors().col(2).normalized();
  const Vec3 e2 = normal.cross(e1);

  Eigen::MatrixXd uv(n, 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vec3 d = points[static_cast<std::size_t>(i)] - centroid;
    uv(i, 0) = d.dot(e1);
    uv(i, 1) = d.dot(e2);
  }

  Eigen::MatrixXd a(n, 3);
  Eigen::VectorXd b(n);
  a.col(0) = uv.col(0);
  a.col(1) = uv.col(1);
  a.col(2).setOnes();
  b = -(uv.col(0).array().square() + uv.col(1).array().square()).matrix();
  const Eigen::VectorXd kasa = detail::solve_least_squares(a, b);
  Eigen::Vector2d c(-kasa[0] / 2.0, -kasa[1] / 2.0);
  double r = std::sqrt(std::max(0.0, c.squaredNorm() - kasa[2]));

  Eigen::MatrixXd jac(n, 3);
  Eigen::VectorXd res(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Vector2d d = uv.row(i).transpose() - c;
    const double dist = d.norm();
    res[i] = dist - r;
    jac.row(i) << -d.x() / dist, -d.y() / dist, -1.0;
  }
  const Eigen::VectorXd delta = detail::solve_least_squares(jac, -res);
  c += delta.head<2>();
  r += delta[2];

  for (Eigen::Index i = 0; i < n; ++i) res[i] = (uv.row(i).transpose() - c).norm() - r;

  CurvatureFit fit;
  fit.radius = r;
  fit.center = centroid + c.x() * e1 + c.y() * e2;
  fit.plane_normal = normal;
  fit.rms_residual = detail::rms(res);
  return fit;
}

inline CurvatureFit fit_curvature(const std::vector<Vec3>& points) {
  return fit_curvature(std::span<const Vec3>(points));
}

// ---------------------------------------------------------------------------
// Pedicle breach margin

/// Pedicle canal modeled as a cylinder along the -z axis of `canal_axis_pose`.
struct PedicleModel {
  double canal_width = 12.62;
  double tunnel_diameter = 3.91;
  Pose canal_axis_pose;
};

/// Medial perforations shallower than this are clinically tolerated, mm.
constexpr double kTolerablePerforation = 4.0;

enum class BreachClass { Clear, WithinTolerance, Unsafe };

inline std::string_view to_string(BreachClass c) {
  switch (c) {
    case BreachClass::Clear: return "clear";
    case BreachClass::WithinTolerance: return "breach: within clinical tolerance";
    case BreachClass::Unsafe: return "breach: exceeds clinical tolerance";
  }
  return "?";
}

inline BreachClass classify_breach(double margin) {
  if (margin >= 0.0) return BreachClass::Clear;
  return -margin < kTolerablePerforation ? BreachClass::WithinTolerance : BreachClass::Unsafe;
}

/// Smallest wall clearance along the pilot segment; negative values are breach depth.
inline double breach_margin(const Trajectory& traj, const PedicleModel& pedicle) {
  if (!(pedicle.tunnel_diameter < pedicle.canal_width))
    throw InvalidParameter("tunnel diameter must be smaller than canal width");
  const Vec3 origin = pedicle.canal_axis_pose.translation;
  const Vec3 axis = pedicle.canal_axis_pose.rotation * Trajectory::insertion_axis();
  const double clearance = 0.5 * (pedicle.canal_width - pedicle.tunnel_diameter);
  double margin = clearance;
  bool any = false;
  for (std::size_t i = 0; i < traj.sample_points.size(); ++i) {
    if (traj.sample_arclength[i] > traj.pilot_depth) continue;
    const Vec3 d = traj.sample_points[i] - origin;
    const double off_axis = (d - d.dot(axis) * axis).norm();
    margin = any ? std::min(margin, clearance - off_axis) : clearance - off_axis;
    any = true;
  }
  return margin;
}

}  // namespace spinenav
