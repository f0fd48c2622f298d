#pragma once

#include <span>

#include <Eigen/Dense>

#include "spinenav/se3.hpp"

namespace spinenav::detail {

/// Singular values normalized by the largest one; all zeros for a zero matrix.
inline Eigen::VectorXd normalized_singular_values(const Eigen::MatrixXd& m) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  Eigen::VectorXd s = svd.singularValues();
  if (s.size() == 0 || s[0] == 0.0) return Eigen::VectorXd::Zero(s.size());
  return s / s[0];
}

/// Stacks [R_i  -I] blocks, the coefficient matrix of the fixed-point constraint
/// R_i x + p_i = y. Full column rank (6) requires rotations about >= 2 distinct axes.
inline Eigen::MatrixXd stack_fixed_point_blocks(std::span<const Rot3> rotations) {
  Eigen::MatrixXd a(3 * rotations.size(), 6);
  for (std::size_t i = 0; i < rotations.size(); ++i) {
    a.block<3, 3>(3 * i, 0) = rotations[i].matrix();
    a.block<3, 3>(3 * i, 3) = -Mat3::Identity();
  }
  return a;
}

/// Smallest normalized singular value of the stacked [R_i -I] matrix.
inline double orientation_diversity(std::span<const Rot3> rotations) {
  const Eigen::VectorXd s = normalized_singular_values(stack_fixed_point_blocks(rotations));
  return s[s.size() - 1];
}

/// Householder QR least squares (no normal equations).
inline Eigen::VectorXd solve_least_squares(const Eigen::MatrixXd& a, const Eigen::VectorXd& b) {
  return a.colPivHouseholderQr().solve(b);
}

/// Nearest rotation in the Frobenius sense; the last singular vector is flipped when det < 0.
inline Mat3 project_to_so3(const Mat3& m) {
  Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 u = svd.matrixU();
  const Mat3 v = svd.matrixV();
  if ((u * v.transpose()).determinant() < 0.0) u.col(2) = -u.col(2);
  return u * v.transpose();
}

inline double rms(const Eigen::VectorXd& v) {
  return v.size() == 0 ? 0.0 : std::sqrt(v.squaredNorm() / static_cast<double>(v.size()));
}

}  // namespace spinenav::detail
