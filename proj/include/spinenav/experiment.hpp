#pragma once

// End-to-end seeded experiment: simulate captures, run all three
// calibrations, mark the entry pose, plan the J-shape and execute it.

#include <cstdint>
#include <vector>

#include "spinenav/handeye.hpp"
#include "spinenav/navigate.hpp"
#include "spinenav/pointcal.hpp"
#include "spinenav/simulate.hpp"
#include "spinenav/trajectory.hpp"

namespace spinenav {

struct PipelineConfig {
  std::size_t handeye_samples = 20;
  std::size_t pivot_samples = 40;
  std::size_t tip_samples = 15;
  double pilot_depth = 20.0;
  double arc_radius = 69.5;
  double arc_angle_deg = 45.0;
  double plane_roll_deg = 0.0;
  double plan_step = 0.5;
  ExecutionOptions execution;
};

struct CaptureSet {
  std::vector<HandEyeSample> handeye;
  std::vector<PivotSample> pivot;
  std::vector<TipSample> tip_rigid;
  std::vector<TipSample> tip_flexible;
  Pose marking_reading;  // digitizer pose in the tracker frame at the entry point
};

struct PipelineRun {
  Scene scene;
  CaptureSet captures;
  CalibrationSet calibration;
  MarkedPose marked;
  Trajectory plan;
  ProcedureReport report;
};

/// Per-unknown recovery error of a calibration against the scene's ground truth.
struct CalibrationErrors {
  PoseError X;
  PoseError Z;
  double digitizer_tip = 0.0;
  double rigid_tip = 0.0;
  double flexible_tip = 0.0;
};

inline CaptureSet simulate_captures(const Scene& scene, const NoiseModel& noise, const PipelineConfig& cfg) {
  CaptureSet c;
  c.handeye = generate_handeye_captures(scene, cfg.handeye_samples, noise);
  c.pivot = generate_pivot_captures(scene, cfg.pivot_samples, noise);
  c.tip_rigid = generate_tip_captures(scene, cfg.tip_samples, noise, Tool::Rigid);
  c.tip_flexible = generate_tip_captures(scene, cfg.tip_samples, noise, Tool::Flexible);
  c.marking_reading = generate_marking_reading(scene, Pose::identity(), noise);
  return c;
}

inline CalibrationSet calibrate(const CaptureSet& c) {
  CalibrationSet calib;
  calib.handeye = solve_handeye(c.handeye);
  const PivotResult pivot = solve_pivot(c.pivot);
  calib.digitizer_tip = pivot;
  calib.rigid_tip = solve_tip(c.tip_rigid, calib.handeye.X, pivot.x_tip);
  calib.flexible_tip = solve_tip(c.tip_flexible, calib.handeye.X, pivot.x_tip);
  return calib;
}

inline Trajectory default_plan(const PipelineConfig& cfg) {
  return plan_trajectory(Pose::identity(), cfg.pilot_depth, cfg.arc_radius, cfg.arc_angle_deg, cfg.plane_roll_deg,
                         cfg.plan_step);
}

inline PipelineRun run_pipeline(std::uint64_t seed, const NoiseModel& noise, const PipelineConfig& cfg = {}) {
  PipelineRun run;
  run.scene = generate_scene(seed);
  run.captures = simulate_captures(run.scene, noise, cfg);
  run.calibration = calibrate(run.captures);
  run.marked = mark_pose(run.captures.marking_reading, run.calibration.digitizer_tip_offset());
  run.plan = default_plan(cfg);
  run.report = execute_procedure(run.scene, run.calibration, run.marked, run.plan, noise, {}, cfg.execution);
  return run;
}

inline CalibrationErrors calibration_errors(const CalibrationSet& calib, const Scene& scene) {
  CalibrationErrors e;
  e.X = pose_error(calib.handeye.X, scene.ground_truth_X);
  e.Z = pose_error(calib.handeye.Z, scene.ground_truth_Z);
  e.digitizer_tip = (calib.digitizer_tip_offset() - scene.digitizer_tip_offset_true).norm();
  if (calib.rigid_tip) e.rigid_tip = (calib.rigid_tip->x_drill_tip - scene.rigid_tip_offset_true).norm();
  if (calib.flexible_tip) e.flexible_tip = (calib.flexible_tip->x_drill_tip - scene.flexible_tip_offset_true).norm();
  return e;
}

}  // namespace spinenav
