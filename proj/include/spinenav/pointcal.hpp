#pragma once

// Point-offset calibrations.
//
// Pivot: the digitizer is rotated about a fixed point, so every capture
// satisfies R_i x_tip + p_i = x_pivot. Stacking [R_i  -I][x_tip; x_pivot] = -p_i
// gives a 6-unknown linear least-squares problem.
//
// Digitizer-aided tip: the calibrated digitizer touches the drill tip while the
// robot holds different orientations. With t_i the digitizer tip in {S} and
// (R_i, p_i) the end-effector pose in {S}, R_i x_drill_tip = t_i - p_i.

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "spinenav/detail/linalg.hpp"
#include "spinenav/errors.hpp"
#include "spinenav/se3.hpp"

namespace spinenav {

/// Digitizer body pose in the tracker frame.
struct PivotSample {
  Rot3 rotation;
  Vec3 position = Vec3::Zero();
};

struct PivotResult {
  Vec3 x_tip = Vec3::Zero();    // digitizer frame, mm
  Vec3 x_pivot = Vec3::Zero();  // tracker frame, mm
  double rms_residual = 0.0;
  double condition_diagnostic = 0.0;  // smallest normalized singular value of the stacked system
};

struct TipSample {
  Rot3 eef_R_in_S;
  Vec3 eef_p_in_S = Vec3::Zero();
  Pose digitizer_pose_in_polaris;
};

struct TipResult {
  Vec3 x_drill_tip = Vec3::Zero();  // end-effector frame, mm
  double rms_residual = 0.0;
  double condition_diagnostic = 0.0;
};

/// Both solvers reject capture sets whose normalized smallest singular value of
/// the stacked [R_i -I] matrix is at or below this value.
constexpr double kOrientationDiversityThreshold = 1e-6;

namespace detail {

inline double require_orientation_diversity(std::span<const Rot3> rotations, const char* what) {
  const double diversity = orientation_diversity(rotations);
  if (!(diversity > kOrientationDiversityThreshold)) {
    throw DegenerateGeometry(std::string(what) +
                             ": orientations do not span two independent rotation axes");
  }
  return diversity;
}

}  // namespace detail

inline PivotResult solve_pivot(std::span<const PivotSample> samples) {
  if (samples.size() < 3) throw TooFewSamples("pivot calibration needs at least 3 samples");
  std::vector<Rot3> rotations;
  rotations.reserve(samples.size());
  for (const auto& s : samples) rotations.push_back(s.rotation);

  PivotResult out;
  out.condition_diagnostic = detail::require_orientation_diversity(rotations, "pivot calibration");

  const Eigen::MatrixXd a = detail::stack_fixed_point_blocks(rotations);
  Eigen::VectorXd b(3 * samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) b.segment<3>(3 * i) = -samples[i].position;
  const Eigen::VectorXd x = detail::solve_least_squares(a, b);
  out.x_tip = x.head<3>();
  out.x_pivot = x.tail<3>();

  Eigen::VectorXd res(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    res[i] = (samples[i].rotation * out.x_tip + samples[i].position - out.x_pivot).norm();
  }
  out.rms_residual = detail::rms(res);
  return out;
}

inline PivotResult solve_pivot(const std::vector<PivotSample>& samples) {
  return solve_pivot(std::span<const PivotSample>(samples));
}

/// Digitizer tip position in the robot base frame {S}: X is polaris_T_S, so
/// S_T_digitizer = X^-1 * polaris_T_digitizer.
inline Vec3 digitizer_tip_in_world(const TipSample& sample, const Pose& X, const Vec3& digitizer_tip_offset) {
  const Pose s_T_digitizer = X.inverse() * sample.digitizer_pose_in_polaris;
  return s_T_digitizer.rotation * digitizer_tip_offset + s_T_digitizer.translation;
}

inline TipResult solve_tip(std::span<const TipSample> samples, const Pose& X, const Vec3& digitizer_tip_offset) {
  if (samples.size() < 3) throw TooFewSamples("tip calibration needs at least 3 samples");
  std::vector<Rot3> rotations;
  rotations.reserve(samples.size());
  for (const auto& s : samples) rotations.push_back(s.eef_R_in_S);

  TipResult out;
  out.condition_diagnostic = detail::require_orientation_diversity(rotations, "tip calibration");

  const std::size_t n = samples.size();
  Eigen::MatrixXd a(3 * n, 3);
  Eigen::VectorXd b(3 * n);
  for (std::size_t i = 0; i < n; ++i) {
    a.block<3, 3>(3 * i, 0) = samples[i].eef_R_in_S.matrix();
    b.segment<3>(3 * i) = digitizer_tip_in_world(samples[i], X, digitizer_tip_offset) - samples[i].eef_p_in_S;
  }
  out.x_drill_tip = detail::solve_least_squares(a, b);
  out.rms_residual = detail::rms(a * out.x_drill_tip - b) * std::sqrt(3.0);
  return out;
}

inline TipResult solve_tip(const std::vector<TipSample>& samples, const Pose& X, const Vec3& digitizer_tip_offset) {
  return solve_tip(std::span<const TipSample>(samples), X, digitizer_tip_offset);
}

}  // namespace spinenav
