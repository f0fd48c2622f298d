#pragma once

// Rigid-transform arithmetic. Rotations are stored as canonical unit
// quaternions (non-negative scalar part) so that serialization round-trips
// bit-exactly; matrix and roll/pitch/yaw views are derived on demand.
// Translations are millimetres throughout.

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "spinenav/errors.hpp"

namespace spinenav {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;

constexpr double kPi = std::numbers::pi;
constexpr double deg2rad(double deg) { return deg * kPi / 180.0; }
constexpr double rad2deg(double rad) { return rad * 180.0 / kPi; }

/// Roll/pitch/yaw in degrees, intrinsic Z-Y-X: R = Rz(yaw) * Ry(pitch) * Rx(roll).
struct Rpy {
  double roll = 0.0;
  double pitch = 0.0;
  double yaw = 0.0;
};

/// Pitch values within this many degrees of +-90 are treated as gimbal lock:
/// roll is reported as 0 and the combined rotation is folded into yaw.
constexpr double kGimbalToleranceDeg = 1e-6;

class Rot3 {
 public:
  Rot3() : q_(Eigen::Quaterniond::Identity()) {}

  static Rot3 identity() { return Rot3(); }

  /// Normalizes the input; q and -q map to the same canonical Rot3.
  static Rot3 from_quaternion(double w, double x, double y, double z) {
    return Rot3(Eigen::Quaterniond(w, x, y, z));
  }
  static Rot3 from_quaternion(const Eigen::Quaterniond& q) { return Rot3(q); }

  /// Rejects matrices that are not rotations (orthonormality or det off by > 1e-6).
  static Rot3 from_matrix(const Mat3& m) {
    if (!m.allFinite()) throw InvalidParameter("rotation matrix has non-finite entries");
    const double ortho = (m.transpose() * m - Mat3::Identity()).cwiseAbs().maxCoeff();
    if (ortho > 1e-6 || std::abs(m.determinant() - 1.0) > 1e-6) {
      throw InvalidParameter("matrix is not a proper rotation");
    }
    return Rot3(Eigen::Quaterniond(m));
  }

  static Rot3 from_axis_angle(const Vec3& axis, double angle_rad) {
    const double n = axis.norm();
    if (n == 0.0) return Rot3();
    return Rot3(Eigen::Quaterniond(Eigen::AngleAxisd(angle_rad, axis / n)));
  }

  /// Axis times angle (radians).
  static Rot3 from_rotation_vector(const Vec3& v) {
    const double angle = v.norm();
    if (angle == 0.0) return Rot3();
    return from_axis_angle(v / angle, angle);
  }

  static Rot3 about_x_deg(double deg) { return from_axis_angle(Vec3::UnitX(), deg2rad(deg)); }
  static Rot3 about_y_deg(double deg) { return from_axis_angle(Vec3::UnitY(), deg2rad(deg)); }
  static Rot3 about_z_deg(double deg) { return from_axis_angle(Vec3::UnitZ(), deg2rad(deg)); }

  static Rot3 from_rpy_deg(const Rpy& a) {
    const Eigen::Quaterniond q = Eigen::AngleAxisd(deg2rad(a.yaw), Vec3::UnitZ()) *
                                 Eigen::AngleAxisd(deg2rad(a.pitch), Vec3::UnitY()) *
                                 Eigen::AngleAxisd(deg2rad(a.roll), Vec3::UnitX());
    return Rot3(q);
  }

  const Eigen::Quaterniond& quaternion() const { return q_; }
  Mat3 matrix() const { return q_.toRotationMatrix(); }

  Rpy rpy_deg() const {
    const Mat3 r = matrix();
    Rpy out;
    out.pitch = rad2deg(std::atan2(-r(2, 0), std::hypot(r(0, 0), r(1, 0))));
    if (std::abs(std::abs(out.pitch) - 90.0) <= kGimbalToleranceDeg) {
      out.roll = 0.0;
      out.yaw = rad2deg(std::atan2(-r(0, 1), r(1, 1)));
    } else {
      out.roll = rad2deg(std::atan2(r(2, 1), r(2, 2)));
      out.yaw = rad2deg(std::atan2(r(1, 0), r(0, 0)));
    }
    return out;
  }

  /// Geodesic angle in [0, pi].
  double angle() const {
    return 2.0 * std::atan2(q_.vec().norm(), std::abs(q_.w()));
  }

  Vec3 rotation_vector() const {
    const double s = q_.vec().norm();
    if (s == 0.0) return Vec3::Zero();
    return q_.vec() / s * angle();
  }

  Rot3 inverse() const { return Rot3(q_.conjugate()); }

  Rot3 operator*(const Rot3& other) const { return Rot3(q_ * other.q_, kComposeDrift); }
  Vec3 operator*(const Vec3& v) const { return q_ * v; }

  bool operator==(const Rot3& o) const { return q_.coeffs() == o.q_.coeffs(); }

 private:
  // Inputs already unit to within `drift` are kept as-is, which makes
  // construction idempotent and serialization bit-exact.
  static constexpr double kUnitDrift = 1e-14;
  static constexpr double kComposeDrift = 1e-12;

  explicit Rot3(const Eigen::Quaterniond& q, double drift = kUnitDrift) : q_(q) {
    const double n = q_.norm();
    if (!std::isfinite(n) || n == 0.0) throw InvalidParameter("degenerate quaternion");
    if (std::abs(n - 1.0) > drift) q_.coeffs() /= n;
    canonicalize();
  }

  void canonicalize() {
    // Non-negative scalar part; for w == 0 the first non-zero vector entry is positive.
    bool flip = q_.w() < 0.0;
    if (q_.w() == 0.0) {
      for (int i = 0; i < 3; ++i) {
        if (q_.vec()[i] != 0.0) {
          flip = q_.vec()[i] < 0.0;
          break;
        }
      }
    }
    if (flip) q_.coeffs() = -q_.coeffs();
  }

  Eigen::Quaterniond q_;
};

/// Geodesic distance between two rotations, radians.
inline double rotation_distance(const Rot3& a, const Rot3& b) { return (a.inverse() * b).angle(); }

struct Pose {
  Rot3 rotation;
  Vec3 translation = Vec3::Zero();

  Pose() = default;
  Pose(const Rot3& r, const Vec3& t) : rotation(r), translation(t) {}

  static Pose identity() { return Pose(); }
  static Pose from_translation(const Vec3& t) { return Pose(Rot3(), t); }

  static Pose from_matrix(const Mat4& m) {
    if (!m.allFinite()) throw InvalidParameter("pose matrix has non-finite entries");
    if (m.row(3).head<3>().cwiseAbs().maxCoeff() > 1e-12 || std::abs(m(3, 3) - 1.0) > 1e-12) {
      throw InvalidParameter("pose matrix bottom row must be [0 0 0 1]");
    }
    return Pose(Rot3::from_matrix(m.topLeftCorner<3, 3>()), m.topRightCorner<3, 1>());
  }

  Mat4 matrix() const {
    Mat4 m = Mat4::Identity();
    m.topLeftCorner<3, 3>() = rotation.matrix();
    m.topRightCorner<3, 1>() = translation;
    return m;
  }

  Vec3 transform_point(const Vec3& p) const { return rotation * p + translation; }

  Pose inverse() const {
    const Rot3 r = rotation.inverse();
    return Pose(r, -(r * translation));
  }

  Pose operator*(const Pose& b) const {
    return Pose(rotation * b.rotation, rotation * b.translation + translation);
  }

  bool operator==(const Pose& o) const {
    return rotation == o.rotation && translation == o.translation;
  }
};

inline Pose compose(const Pose& a, const Pose& b) { return a * b; }
inline Pose invert(const Pose& p) { return p.inverse(); }

/// Position error (mm) and roll/pitch/yaw error magnitudes (degrees, each in [0, 180]).
struct PoseError {
  double position = 0.0;
  double roll = 0.0;
  double pitch = 0.0;
  double yaw = 0.0;
};

/// Orientation error uses the conjugate-quaternion method q_err = conj(q_desired) * q_measured,
/// decomposed as intrinsic Z-Y-X angles.
inline PoseError pose_error(const Pose& measured, const Pose& desired) {
  const Rot3 err = desired.rotation.inverse() * measured.rotation;
  const Rpy a = err.rpy_deg();
  return PoseError{(measured.translation - desired.translation).norm(), std::abs(a.roll),
                   std::abs(a.pitch), std::abs(a.yaw)};
}

}  // namespace spinenav
