#pragma once

// Synthetic stand-in for the robot arm, optical tracker, digitizer and
// vertebra phantom. A Scene holds the ground-truth frame graph; generators
// emit measurement streams with noise applied on the measurement side only,
// and execute_procedure pushes commanded poses through the ground truth.

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "spinenav/errors.hpp"
#include "spinenav/handeye.hpp"
#include "spinenav/navigate.hpp"
#include "spinenav/pointcal.hpp"
#include "spinenav/se3.hpp"
#include "spinenav/trajectory.hpp"

namespace spinenav {

/// Standard deviations of the measurement channels. Angles in degrees, lengths in mm.
struct NoiseModel {
  double tracker_translation_sigma = 0.0;
  double tracker_rotation_sigma = 0.0;
  double robot_translation_sigma = 0.0;
  double robot_rotation_sigma = 0.0;
  double tip_contact_sigma = 0.0;     // rounded flexible tip, applied to tip captures only
  double wall_roughness_sigma = 0.0;  // drilled-wall deviation normal to the path

  void validate() const {
    for (double s : {tracker_translation_sigma, tracker_rotation_sigma, robot_translation_sigma, robot_rotation_sigma,
                     tip_contact_sigma, wall_roughness_sigma}) {
      if (!(s >= 0.0) || !std::isfinite(s)) throw InvalidParameter("noise sigmas must be finite and >= 0");
    }
  }

  NoiseModel scaled(double k) const {
    return NoiseModel{tracker_translation_sigma * k, tracker_rotation_sigma * k, robot_translation_sigma * k,
                      robot_rotation_sigma * k,      tip_contact_sigma * k,      wall_roughness_sigma * k};
  }

  static NoiseModel zero() { return {}; }

  /// Stand-in for the physical rig, chosen by sweep (see presets/table1.json):
  /// mean end-to-end tip error about 1.1 mm rigid, 1.7 mm flexible.
  static NoiseModel table1() { return NoiseModel{0.6, 0.15, 0.1, 0.03, 3.0, 0.3}; }
};

inline NoiseModel noise_preset(std::string_view name) {
  if (name == "zero") return NoiseModel::zero();
  if (name == "table1") return NoiseModel::table1();
  throw InvalidParameter("unknown noise preset '" + std::string(name) + "'");
}

/// Which rotations a capture script explores.
enum class CaptureMotion { Full, SingleAxis, Locked };

/// Ground-truth frame graph. The vertebra frame doubles as the planned entry
/// frame: entry point at its origin, insertion along its -z axis.
struct Scene {
  Pose ground_truth_X;  // polaris_T_S
  Pose ground_truth_Z;  // drill_T_eef
  Vec3 digitizer_tip_offset_true = Vec3::Zero();
  Vec3 rigid_tip_offset_true = Vec3::Zero();
  Vec3 flexible_tip_offset_true = Vec3::Zero();
  Pose vertebra_pose_in_S;
  PedicleModel pedicle;
  std::uint64_t rng_seed = 0;

  Vec3 tip_offset_true(Tool tool) const {
    if (tool == Tool::Rigid) return rigid_tip_offset_true;
    if (tool == Tool::Flexible) return flexible_tip_offset_true;
    throw InvalidParameter("no drill tip for tool 'none'");
  }
  Pose polaris_T_vertebra() const { return ground_truth_X * vertebra_pose_in_S; }
};

namespace detail {

enum class Stream : std::uint64_t { Scene = 1, HandEye, Pivot, TipRigid, TipFlexible, Marking, Roughness };

class Rng {
 public:
  Rng(std::uint64_t seed, Stream stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream)};
    engine_.seed(seq);
  }

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }
  double normal() { return std::normal_distribution<double>(0.0, 1.0)(engine_); }
  Vec3 normal3() {
    const double x = normal(), y = normal(), z = normal();
    return Vec3(x, y, z);
  }
  Vec3 unit3() {
    Vec3 v = normal3();
    while (v.norm() < 1e-12) v = normal3();
    return v.normalized();
  }
  Vec3 uniform3(const Vec3& lo, const Vec3& hi) {
    const double x = uniform(lo.x(), hi.x()), y = uniform(lo.y(), hi.y()), z = uniform(lo.z(), hi.z());
    return Vec3(x, y, z);
  }
  /// Uniform rotation-vector components in [-max_deg, max_deg].
  Rot3 tilt(double max_deg) {
    const double x = uniform(-max_deg, max_deg), y = uniform(-max_deg, max_deg), z = uniform(-max_deg, max_deg);
    return Rot3::from_rotation_vector(Vec3(deg2rad(x), deg2rad(y), deg2rad(z)));
  }
  Rot3 any_rotation() {
    const double w = normal(), x = normal(), y = normal(), z = normal();
    return Rot3::from_quaternion(w, x, y, z);
  }

 private:
  std::mt19937_64 engine_;
};

/// Random axis, Gaussian angle, isotropic Gaussian translation. Draws are
/// consumed even for zero sigma so noise levels share the same realization.
inline Pose perturb(const Pose& p, double sigma_t, double sigma_r_deg, Rng& rng) {
  const Vec3 axis = rng.unit3();
  const double angle = rng.normal() * deg2rad(sigma_r_deg);
  const Vec3 dt = rng.normal3() * sigma_t;
  Pose out = p;
  if (sigma_r_deg > 0.0) out.rotation = Rot3::from_axis_angle(axis, angle) * p.rotation;
  if (sigma_t > 0.0) out.translation = p.translation + dt;
  return out;
}

/// Orientation sequence for a capture script around a nominal orientation.
class OrientationScript {
 public:
  OrientationScript(CaptureMotion motion, const Rot3& nominal, double max_tilt_deg, Rng& rng)
      : motion_(motion), nominal_(nominal), max_tilt_deg_(max_tilt_deg), axis_(rng.unit3()) {}

  Rot3 next(Rng& rng) {
    switch (motion_) {
      case CaptureMotion::Full: return nominal_ * rng.tilt(max_tilt_deg_);
      case CaptureMotion::SingleAxis:
        return nominal_ * Rot3::from_axis_angle(axis_, deg2rad(rng.uniform(-2.0, 2.0) * max_tilt_deg_));
      case CaptureMotion::Locked: return nominal_;
    }
    return nominal_;
  }

 private:
  CaptureMotion motion_;
  Rot3 nominal_;
  double max_tilt_deg_;
  Vec3 axis_;
};

inline const Rot3& tool_down() {
  static const Rot3 r = Rot3::about_x_deg(180.0);
  return r;
}

}  // namespace detail

/// Deterministic scene: tracker ~2 m from the robot base, drill marker and
/// tips in plausible places on the end effector, vertebra in front of the robot.
inline Scene generate_scene(std::uint64_t seed) {
  detail::Rng rng(seed, detail::Stream::Scene);
  Scene s;
  s.rng_seed = seed;

  const Vec3 tracker_pos = rng.uniform3(Vec3(1600, -300, 500), Vec3(2000, 300, 700));
  const Rot3 tracker_rot = Rot3::about_z_deg(rng.uniform(150.0, 210.0)) * Rot3::about_y_deg(rng.uniform(-20, 20)) *
                           Rot3::about_x_deg(rng.uniform(-10, 10));
  s.ground_truth_X = Pose(tracker_rot, tracker_pos).inverse();

  const Vec3 marker_pos = rng.uniform3(Vec3(-60, -60, 40), Vec3(60, 60, 120));
  s.ground_truth_Z = Pose(rng.any_rotation(), marker_pos).inverse();

  s.digitizer_tip_offset_true = rng.uniform3(Vec3(-1, -1, -155), Vec3(1, 1, -145));
  s.rigid_tip_offset_true = rng.uniform3(Vec3(-10, -10, 200), Vec3(10, 10, 220));
  s.flexible_tip_offset_true = s.rigid_tip_offset_true + rng.uniform3(Vec3(-2, -2, 12), Vec3(2, 2, 18));

  const Vec3 vertebra_pos = rng.uniform3(Vec3(550, -50, 80), Vec3(650, 50, 120));
  s.vertebra_pose_in_S = Pose(rng.tilt(20.0), vertebra_pos);
  s.pedicle = PedicleModel{};
  return s;
}

inline std::vector<HandEyeSample> generate_handeye_captures(const Scene& scene, std::size_t n,
                                                            const NoiseModel& noise,
                                                            CaptureMotion motion = CaptureMotion::Full) {
  noise.validate();
  detail::Rng rng(scene.rng_seed, detail::Stream::HandEye);
  detail::OrientationScript script(motion, detail::tool_down(), 35.0, rng);
  const Pose eef_T_drill = scene.ground_truth_Z.inverse();
  std::vector<HandEyeSample> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Pose s_T_eef(script.next(rng), rng.uniform3(Vec3(400, -250, 250), Vec3(800, 250, 600)));
    const Pose polaris_T_drill = scene.ground_truth_X * s_T_eef * eef_T_drill;
    const Pose measured_drill = detail::perturb(polaris_T_drill, noise.tracker_translation_sigma,
                                                noise.tracker_rotation_sigma, rng);
    const Pose measured_eef = detail::perturb(s_T_eef, noise.robot_translation_sigma, noise.robot_rotation_sigma, rng);
    out.push_back(HandEyeSample{measured_drill.inverse(), measured_eef.inverse(), i});
  }
  return out;
}

/// Digitizer pivoting about a point near the vertebra.
inline std::vector<PivotSample> generate_pivot_captures(const Scene& scene, std::size_t n, const NoiseModel& noise,
                                                        CaptureMotion motion = CaptureMotion::Full) {
  noise.validate();
  detail::Rng rng(scene.rng_seed, detail::Stream::Pivot);
  const Pose polaris_T_vertebra = scene.polaris_T_vertebra();
  const Vec3 pivot = polaris_T_vertebra.transform_point(Vec3(30, 30, 0));
  detail::OrientationScript script(motion, polaris_T_vertebra.rotation, 30.0, rng);
  std::vector<PivotSample> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Rot3 r = script.next(rng);
    const Pose truth(r, pivot - r * scene.digitizer_tip_offset_true);
    const Pose measured = detail::perturb(truth, noise.tracker_translation_sigma, noise.tracker_rotation_sigma, rng);
    out.push_back(PivotSample{measured.rotation, measured.translation});
  }
  return out;
}

/// Robot holds the drill in varied orientations while the digitizer touches its tip.
/// The flexible tool adds `tip_contact_sigma` of contact ambiguity at the tip.
inline std::vector<TipSample> generate_tip_captures(const Scene& scene, std::size_t n, const NoiseModel& noise,
                                                    Tool tool, CaptureMotion motion = CaptureMotion::Full) {
  noise.validate();
  const Vec3 tip = scene.tip_offset_true(tool);
  detail::Rng rng(scene.rng_seed, tool == Tool::Rigid ? detail::Stream::TipRigid : detail::Stream::TipFlexible);
  detail::OrientationScript script(motion, detail::tool_down(), 30.0, rng);
  const double contact_sigma = tool == Tool::Flexible ? noise.tip_contact_sigma : 0.0;
  std::vector<TipSample> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Pose s_T_eef(script.next(rng), rng.uniform3(Vec3(450, -150, 250), Vec3(700, 150, 450)));
    const Vec3 tip_in_polaris = scene.ground_truth_X.transform_point(s_T_eef.transform_point(tip));
    const Rot3 digitizer_rot = scene.ground_truth_X.rotation * rng.tilt(40.0);
    const Vec3 contact = rng.normal3() * contact_sigma;
    const Pose digitizer(digitizer_rot, tip_in_polaris + contact - digitizer_rot * scene.digitizer_tip_offset_true);
    const Pose measured_digitizer =
        detail::perturb(digitizer, noise.tracker_translation_sigma, noise.tracker_rotation_sigma, rng);
    const Pose measured_eef = detail::perturb(s_T_eef, noise.robot_translation_sigma, noise.robot_rotation_sigma, rng);
    out.push_back(TipSample{measured_eef.rotation, measured_eef.translation, measured_digitizer});
  }
  return out;
}

/// Tracker reading of the digitizer held at `entry_in_vertebra` with its shaft
/// along the planned insertion direction.
inline Pose generate_marking_reading(const Scene& scene, const Pose& entry_in_vertebra, const NoiseModel& noise) {
  noise.validate();
  detail::Rng rng(scene.rng_seed, detail::Stream::Marking);
  const Pose polaris_T_entry = scene.polaris_T_vertebra() * entry_in_vertebra;
  const Pose digitizer = polaris_T_entry * Pose::from_translation(-scene.digitizer_tip_offset_true);
  return detail::perturb(digitizer, noise.tracker_translation_sigma, noise.tracker_rotation_sigma, rng);
}

struct ProcedureReport {
  std::uint64_t seed = 0;
  Pose rigid_commanded_eef;
  Pose flexible_commanded_eef;
  Pose rigid_achieved_tip;     // tracker frame
  Pose flexible_achieved_tip;  // tracker frame
  PoseError rigid_tip_error;
  PoseError flexible_tip_error;
  std::optional<CurvatureFit> curvature;
  double planned_radius = 0.0;
  double breach_margin = 0.0;
  BreachClass breach = BreachClass::Clear;
  std::vector<Vec3> drilled_cloud;  // vertebra frame
  WorkflowState workflow;
};

struct ExecutionOptions {
  /// Spacing of the simulated drilled-wall point cloud, mm.
  double cloud_step = 0.1;
};

/// Runs the drilling workflow against ground truth: each commanded
/// end-effector pose is pushed through the true frame graph to find where the
/// tool tip actually lands. The pilot hole follows the rigid tip, the J arc
/// the flexible tip; the drilled cloud gets wall roughness normal to the path.
inline ProcedureReport execute_procedure(const Scene& scene, const CalibrationSet& calib, const MarkedPose& marked,
                                         const Trajectory& plan, const NoiseModel& noise,
                                         WorkflowState state = {}, const ExecutionOptions& options = {}) {
  noise.validate();
  ProcedureReport report;
  report.seed = scene.rng_seed;
  report.planned_radius = plan.arc_radius;

  if (state.phase == Phase::Uncalibrated) {
    state = advance_phase(std::move(state), Event::CalibrationLoaded, EventData{.calibration = calib});
  }
  state = advance_phase(std::move(state), Event::PoseMarkedEvt, EventData{.marked = marked});

  auto achieved = [&](const Pose& commanded, Tool tool) {
    return scene.ground_truth_X * commanded *
           eef_T_tip(scene.ground_truth_Z, scene.tip_offset_true(tool), calib.alignment(tool));
  };
  const Pose& desired = marked.polaris_T_drill_tip_desired;

  report.rigid_commanded_eef = desired_eef_pose(marked, calib, Tool::Rigid);
  report.rigid_achieved_tip = achieved(report.rigid_commanded_eef, Tool::Rigid);
  report.rigid_tip_error = pose_error(report.rigid_achieved_tip, desired);
  state = advance_phase(std::move(state), Event::PilotDone, EventData{.commanded_pose = report.rigid_commanded_eef});

  state = advance_phase(std::move(state), Event::ToolSwapped);
  report.flexible_commanded_eef = desired_eef_pose(marked, calib, Tool::Flexible);
  report.flexible_achieved_tip = achieved(report.flexible_commanded_eef, Tool::Flexible);
  report.flexible_tip_error = pose_error(report.flexible_achieved_tip, desired);
  state = advance_phase(std::move(state), Event::JShapeDone,
                        EventData{.commanded_pose = report.flexible_commanded_eef});

  // Drilled geometry, re-anchored at where each tool actually started.
  const Pose vertebra_T_polaris = scene.polaris_T_vertebra().inverse();
  const auto drilled = [&](const Pose& tip_in_polaris) {
    return plan_trajectory(vertebra_T_polaris * tip_in_polaris, plan.pilot_depth, plan.arc_radius, plan.arc_angle_deg,
                           plan.arc_plane_roll_deg, options.cloud_step);
  };
  const Trajectory pilot_path = drilled(report.rigid_achieved_tip);
  const Trajectory j_path = drilled(report.flexible_achieved_tip);
  report.breach_margin = breach_margin(pilot_path, scene.pedicle);
  report.breach = classify_breach(report.breach_margin);

  detail::Rng rng(scene.rng_seed, detail::Stream::Roughness);
  std::vector<Vec3> arc_cloud;
  auto roughen = [&](const Trajectory& path, std::size_t i) {
    const Vec3 t = path.tangent_at(path.sample_arclength[i]);
    const Vec3 g = rng.normal3() * noise.wall_roughness_sigma;
    return Vec3(path.sample_points[i] + (g - g.dot(t) * t));
  };
  for (std::size_t i = 0; i < pilot_path.sample_points.size(); ++i) {
    if (pilot_path.sample_arclength[i] < plan.pilot_depth) report.drilled_cloud.push_back(roughen(pilot_path, i));
  }
  for (std::size_t i = 0; i < j_path.sample_points.size(); ++i) {
    if (j_path.sample_arclength[i] < plan.pilot_depth) continue;
    const Vec3 p = roughen(j_path, i);
    report.drilled_cloud.push_back(p);
    if (plan.arc_angle_deg > 0.0) arc_cloud.push_back(p);
  }
  if (arc_cloud.size() >= 3) report.curvature = fit_curvature(arc_cloud);

  state = advance_phase(std::move(state), Event::HomeReached);
  report.workflow = std::move(state);
  return report;
}

}  // namespace spinenav
