#pragma once

// Robot-world / hand-eye calibration, AX = ZB.
//
//   A_i = drill_T_polaris  (tracker measurement of the drill marker)
//   B_i = eef_T_S          (robot forward kinematics, inverted)
//   X   = polaris_T_S      (tracker <- robot base)
//   Z   = drill_T_eef      (drill marker <- end effector)
//
// Rotations come from the Kronecker-product linearization
//   (I (x) R_A) vec(R_X) - (R_B^T (x) I) vec(R_Z) = 0
// whose null vector is recovered by SVD and projected onto SO(3); the
// translations then follow from R_A t_X - t_Z = R_Z t_B - t_A.

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "spinenav/detail/linalg.hpp"
#include "spinenav/errors.hpp"
#include "spinenav/se3.hpp"

namespace spinenav {

struct HandEyeSample {
  Pose drill_T_polaris;
  Pose eef_T_S;
  std::size_t index = 0;
};

struct HandEyeResult {
  Pose X;  // polaris_T_S
  Pose Z;  // drill_T_eef
  double rotation_residual = 0.0;     // rad, RMS geodesic distance of A_i X vs Z B_i
  double translation_residual = 0.0;  // mm, RMS
  std::size_t n_samples = 0;
  double condition_diagnostic = 0.0;  // second-smallest / largest singular value of the rotation system
};

/// Normalized singular-value threshold for the motion-sufficiency check.
constexpr double kHandEyeMotionThreshold = 1e-6;

namespace detail {

inline Eigen::Matrix<double, 9, 9> kron(const Mat3& a, const Mat3& b) {
  Eigen::Matrix<double, 9, 9> k;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) k.block<3, 3>(3 * i, 3 * j) = a(i, j) * b;
  return k;
}

inline Mat3 unvec3(const Eigen::Ref<const Eigen::VectorXd>& v) {
  return Eigen::Map<const Mat3>(v.data());
}

/// Throws InsufficientMotion unless the relative rotations A_0^-1 A_i span at least two axes.
inline void check_handeye_motion(std::span<const HandEyeSample> samples) {
  Eigen::MatrixXd axes(samples.size() - 1, 3);
  const Rot3 r0_inv = samples[0].drill_T_polaris.rotation.inverse();
  for (std::size_t i = 1; i < samples.size(); ++i) {
    axes.row(i - 1) = (r0_inv * samples[i].drill_T_polaris.rotation).rotation_vector().transpose();
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(axes);
  const Eigen::VectorXd s = svd.singularValues();
  // Relative rotations below ~1e-9 rad carry no usable axis information.
  if (s[0] < 1e-9 || s[1] / s[0] <= kHandEyeMotionThreshold) {
    throw InsufficientMotion("hand-eye captures rotate about fewer than two independent axes");
  }
}

}  // namespace detail

/// Residuals of a candidate (X, Z) pair over a sample set.
inline void handeye_residuals(std::span<const HandEyeSample> samples, const Pose& X, const Pose& Z,
                              double& rotation_rms, double& translation_rms) {
  Eigen::VectorXd rot(samples.size()), trans(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const Pose lhs = samples[i].drill_T_polaris * X;
    const Pose rhs = Z * samples[i].eef_T_S;
    rot[i] = rotation_distance(lhs.rotation, rhs.rotation);
    trans[i] = (lhs.translation - rhs.translation).norm();
  }
  rotation_rms = detail::rms(rot);
  translation_rms = detail::rms(trans);
}

inline HandEyeResult solve_handeye(std::span<const HandEyeSample> samples) {
  if (samples.size() < 3) throw TooFewSamples("hand-eye calibration needs at least 3 samples");
  detail::check_handeye_motion(samples);

  const std::size_t n = samples.size();
  Eigen::MatrixXd m(9 * n, 18);
  for (std::size_t i = 0; i < n; ++i) {
    const Mat3 ra = samples[i].drill_T_polaris.rotation.matrix();
    const Mat3 rb = samples[i].eef_T_S.rotation.matrix();
    m.block<9, 9>(9 * i, 0) = detail::kron(Mat3::Identity(), ra);
    m.block<9, 9>(9 * i, 9) = -detail::kron(rb.transpose(), Mat3::Identity());
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinV);
  const Eigen::VectorXd null_vec = svd.matrixV().col(17);
  const Eigen::VectorXd& sv = svd.singularValues();

  Mat3 x_raw = detail::unvec3(null_vec.head<9>());
  Mat3 z_raw = detail::unvec3(null_vec.tail<9>());
  // The null vector is a common multiple of (vec R_X, vec R_Z); cbrt(det) recovers
  // both the scale and its sign.
  x_raw /= std::cbrt(x_raw.determinant());
  z_raw /= std::cbrt(z_raw.determinant());
  const Mat3 rx = detail::project_to_so3(x_raw);
  const Mat3 rz = detail::project_to_so3(z_raw);

  Eigen::MatrixXd a(3 * n, 6);
  Eigen::VectorXd b(3 * n);
  for (std::size_t i = 0; i < n; ++i) {
    a.block<3, 3>(3 * i, 0) = samples[i].drill_T_polaris.rotation.matrix();
    a.block<3, 3>(3 * i, 3) = -Mat3::Identity();
    b.segment<3>(3 * i) = rz * samples[i].eef_T_S.translation - samples[i].drill_T_polaris.translation;
  }
  const Eigen::VectorXd t = detail::solve_least_squares(a, b);

  HandEyeResult out;
  out.X = Pose(Rot3::from_matrix(rx), t.head<3>());
  out.Z = Pose(Rot3::from_matrix(rz), t.tail<3>());
  out.n_samples = n;
  out.condition_diagnostic = sv[0] > 0.0 ? sv[16] / sv[0] : 0.0;
  handeye_residuals(samples, out.X, out.Z, out.rotation_residual, out.translation_residual);
  return out;
}

inline HandEyeResult solve_handeye(const std::vector<HandEyeSample>& samples) {
  return solve_handeye(std::span<const HandEyeSample>(samples));
}

}  // namespace spinenav
