#pragma once

// JSON forms of the domain types. Poses are {"q": [w,x,y,z], "t_mm": [x,y,z]};
// a 4x4 row-major matrix (bare or under "matrix") is accepted on input.
// Angles in files are degrees.

#include <string>

#include <json.hpp>

#include "spinenav/errors.hpp"
#include "spinenav/handeye.hpp"
#include "spinenav/metrics.hpp"
#include "spinenav/navigate.hpp"
#include "spinenav/pointcal.hpp"
#include "spinenav/se3.hpp"
#include "spinenav/simulate.hpp"
#include "spinenav/trajectory.hpp"

namespace spinenav {

using json = nlohmann::json;

inline json vec_to_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

inline Vec3 vec_from_json(const json& j) {
  if (!j.is_array() || j.size() != 3) throw FormatError("expected a 3-element array");
  return Vec3(j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>());
}

inline json pose_to_json(const Pose& p) {
  const auto& q = p.rotation.quaternion();
  return json{{"q", {q.w(), q.x(), q.y(), q.z()}}, {"t_mm", vec_to_json(p.translation)}};
}

inline Pose pose_from_json(const json& j) {
  const json* m = nullptr;
  if (j.is_array()) m = &j;
  else if (j.is_object() && j.contains("matrix")) m = &j.at("matrix");
  if (m != nullptr) {
    if (!m->is_array() || m->size() != 4) throw FormatError("pose matrix must be 4x4");
    Mat4 mat;
    for (int r = 0; r < 4; ++r) {
      const json& row = m->at(static_cast<std::size_t>(r));
      if (!row.is_array() || row.size() != 4) throw FormatError("pose matrix must be 4x4");
      for (int c = 0; c < 4; ++c) mat(r, c) = row.at(static_cast<std::size_t>(c)).get<double>();
    }
    return Pose::from_matrix(mat);
  }
  if (!j.is_object() || !j.contains("q") || !j.contains("t_mm")) throw FormatError("pose needs 'q' and 't_mm'");
  const json& q = j.at("q");
  if (!q.is_array() || q.size() != 4) throw FormatError("'q' must be [w, x, y, z]");
  return Pose(Rot3::from_quaternion(q[0].get<double>(), q[1].get<double>(), q[2].get<double>(), q[3].get<double>()),
              vec_from_json(j.at("t_mm")));
}

inline json to_json(const PoseError& e) {
  return json{{"position_mm", e.position}, {"roll_deg", e.roll}, {"pitch_deg", e.pitch}, {"yaw_deg", e.yaw}};
}

inline PoseError pose_error_from_json(const json& j) {
  return PoseError{j.at("position_mm").get<double>(), j.at("roll_deg").get<double>(), j.at("pitch_deg").get<double>(),
                   j.at("yaw_deg").get<double>()};
}

// --- samples ---------------------------------------------------------------

inline json to_json(const HandEyeSample& s) {
  return json{{"index", s.index}, {"drill_T_polaris", pose_to_json(s.drill_T_polaris)},
              {"eef_T_S", pose_to_json(s.eef_T_S)}};
}
inline HandEyeSample handeye_sample_from_json(const json& j) {
  return HandEyeSample{pose_from_json(j.at("drill_T_polaris")), pose_from_json(j.at("eef_T_S")),
                       j.at("index").get<std::size_t>()};
}

inline json to_json(const PivotSample& s) { return json{{"digitizer_in_polaris", pose_to_json(Pose(s.rotation, s.position))}}; }
inline PivotSample pivot_sample_from_json(const json& j) {
  const Pose p = pose_from_json(j.at("digitizer_in_polaris"));
  return PivotSample{p.rotation, p.translation};
}

inline json to_json(const TipSample& s) {
  return json{{"eef_in_S", pose_to_json(Pose(s.eef_R_in_S, s.eef_p_in_S))},
              {"digitizer_in_polaris", pose_to_json(s.digitizer_pose_in_polaris)}};
}
inline TipSample tip_sample_from_json(const json& j) {
  const Pose eef = pose_from_json(j.at("eef_in_S"));
  return TipSample{eef.rotation, eef.translation, pose_from_json(j.at("digitizer_in_polaris"))};
}

// --- solver results --------------------------------------------------------

inline json to_json(const HandEyeResult& r) {
  return json{{"X_polaris_T_S", pose_to_json(r.X)},
              {"Z_drill_T_eef", pose_to_json(r.Z)},
              {"rotation_residual_deg", rad2deg(r.rotation_residual)},
              {"translation_residual_mm", r.translation_residual},
              {"n_samples", r.n_samples},
              {"condition_diagnostic", r.condition_diagnostic}};
}
inline HandEyeResult handeye_result_from_json(const json& j) {
  HandEyeResult r;
  r.X = pose_from_json(j.at("X_polaris_T_S"));
  r.Z = pose_from_json(j.at("Z_drill_T_eef"));
  r.rotation_residual = deg2rad(j.at("rotation_residual_deg").get<double>());
  r.translation_residual = j.at("translation_residual_mm").get<double>();
  r.n_samples = j.at("n_samples").get<std::size_t>();
  r.condition_diagnostic = j.at("condition_diagnostic").get<double>();
  return r;
}

inline json to_json(const PivotResult& r) {
  return json{{"x_tip_mm", vec_to_json(r.x_tip)},
              {"x_pivot_mm", vec_to_json(r.x_pivot)},
              {"rms_residual_mm", r.rms_residual},
              {"condition_diagnostic", r.condition_diagnostic}};
}
inline PivotResult pivot_result_from_json(const json& j) {
  return PivotResult{vec_from_json(j.at("x_tip_mm")), vec_from_json(j.at("x_pivot_mm")),
                     j.at("rms_residual_mm").get<double>(), j.at("condition_diagnostic").get<double>()};
}

inline json to_json(const TipResult& r) {
  return json{{"x_drill_tip_mm", vec_to_json(r.x_drill_tip)},
              {"rms_residual_mm", r.rms_residual},
              {"condition_diagnostic", r.condition_diagnostic}};
}
inline TipResult tip_result_from_json(const json& j) {
  return TipResult{vec_from_json(j.at("x_drill_tip_mm")), j.at("rms_residual_mm").get<double>(),
                   j.at("condition_diagnostic").get<double>()};
}

inline json to_json(const CalibrationSet& c) {
  json j;
  j["handeye"] = to_json(c.handeye);
  if (const auto* p = std::get_if<PivotResult>(&c.digitizer_tip)) {
    j["digitizer_tip"] = to_json(*p);
    j["digitizer_tip"]["source"] = "pivot";
  } else {
    j["digitizer_tip"] = json{{"source", "datasheet"}, {"x_tip_mm", vec_to_json(c.digitizer_tip_offset())}};
  }
  j["rigid_tip"] = c.rigid_tip ? to_json(*c.rigid_tip) : json(nullptr);
  j["flexible_tip"] = c.flexible_tip ? to_json(*c.flexible_tip) : json(nullptr);
  j["rigid_alignment_q"] = pose_to_json(Pose(c.rigid_alignment, Vec3::Zero()))["q"];
  j["flexible_alignment_q"] = pose_to_json(Pose(c.flexible_alignment, Vec3::Zero()))["q"];
  return j;
}

inline CalibrationSet calibration_set_from_json(const json& j) {
  CalibrationSet c;
  c.handeye = handeye_result_from_json(j.at("handeye"));
  const json& d = j.at("digitizer_tip");
  if (d.at("source").get<std::string>() == "pivot") c.digitizer_tip = pivot_result_from_json(d);
  else c.digitizer_tip = DatasheetOffset{vec_from_json(d.at("x_tip_mm"))};
  if (!j.at("rigid_tip").is_null()) c.rigid_tip = tip_result_from_json(j.at("rigid_tip"));
  if (!j.at("flexible_tip").is_null()) c.flexible_tip = tip_result_from_json(j.at("flexible_tip"));
  auto rot = [&](const char* key) {
    if (!j.contains(key)) return Rot3();
    return pose_from_json(json{{"q", j.at(key)}, {"t_mm", {0.0, 0.0, 0.0}}}).rotation;
  };
  c.rigid_alignment = rot("rigid_alignment_q");
  c.flexible_alignment = rot("flexible_alignment_q");
  return c;
}

inline json to_json(const MarkedPose& m) {
  return json{{"polaris_T_drill_tip_desired", pose_to_json(m.polaris_T_drill_tip_desired)},
              {"source_digitizer_pose", pose_to_json(m.source_digitizer_pose)},
              {"timestamp", m.timestamp}};
}
inline MarkedPose marked_pose_from_json(const json& j) {
  return MarkedPose{pose_from_json(j.at("polaris_T_drill_tip_desired")), pose_from_json(j.at("source_digitizer_pose")),
                    j.at("timestamp").get<double>()};
}

// --- workflow, geometry, simulation ----------------------------------------

inline json to_json(const AuditEntry& e) {
  json j{{"phase_from", to_string(e.from)}, {"phase_to", to_string(e.to)}, {"event", to_string(e.event)},
         {"timestamp", e.timestamp}};
  if (e.commanded_pose) j["commanded_pose"] = pose_to_json(*e.commanded_pose);
  return j;
}

inline json to_json(const CurvatureFit& f) {
  return json{{"radius_mm", f.radius},
              {"center_mm", vec_to_json(f.center)},
              {"plane_normal", vec_to_json(f.plane_normal)},
              {"rms_residual_mm", f.rms_residual}};
}

inline json to_json(const PedicleModel& p) {
  return json{{"canal_width_mm", p.canal_width},
              {"tunnel_diameter_mm", p.tunnel_diameter},
              {"canal_axis_pose", pose_to_json(p.canal_axis_pose)}};
}
inline PedicleModel pedicle_from_json(const json& j) {
  return PedicleModel{j.at("canal_width_mm").get<double>(), j.at("tunnel_diameter_mm").get<double>(),
                      pose_from_json(j.at("canal_axis_pose"))};
}

inline json to_json(const NoiseModel& n) {
  return json{{"tracker_translation_sigma_mm", n.tracker_translation_sigma},
              {"tracker_rotation_sigma_deg", n.tracker_rotation_sigma},
              {"robot_translation_sigma_mm", n.robot_translation_sigma},
              {"robot_rotation_sigma_deg", n.robot_rotation_sigma},
              {"tip_contact_sigma_mm", n.tip_contact_sigma},
              {"wall_roughness_sigma_mm", n.wall_roughness_sigma}};
}
inline NoiseModel noise_model_from_json(const json& j) {
  NoiseModel n{j.at("tracker_translation_sigma_mm").get<double>(), j.at("tracker_rotation_sigma_deg").get<double>(),
               j.at("robot_translation_sigma_mm").get<double>(),   j.at("robot_rotation_sigma_deg").get<double>(),
               j.at("tip_contact_sigma_mm").get<double>(),         j.at("wall_roughness_sigma_mm").get<double>()};
  n.validate();
  return n;
}

inline json to_json(const Scene& s) {
  return json{{"ground_truth_X_polaris_T_S", pose_to_json(s.ground_truth_X)},
              {"ground_truth_Z_drill_T_eef", pose_to_json(s.ground_truth_Z)},
              {"digitizer_tip_offset_true_mm", vec_to_json(s.digitizer_tip_offset_true)},
              {"rigid_tip_offset_true_mm", vec_to_json(s.rigid_tip_offset_true)},
              {"flexible_tip_offset_true_mm", vec_to_json(s.flexible_tip_offset_true)},
              {"vertebra_pose_in_S", pose_to_json(s.vertebra_pose_in_S)},
              {"pedicle", to_json(s.pedicle)},
              {"rng_seed", s.rng_seed}};
}
inline Scene scene_from_json(const json& j) {
  Scene s;
  s.ground_truth_X = pose_from_json(j.at("ground_truth_X_polaris_T_S"));
  s.ground_truth_Z = pose_from_json(j.at("ground_truth_Z_drill_T_eef"));
  s.digitizer_tip_offset_true = vec_from_json(j.at("digitizer_tip_offset_true_mm"));
  s.rigid_tip_offset_true = vec_from_json(j.at("rigid_tip_offset_true_mm"));
  s.flexible_tip_offset_true = vec_from_json(j.at("flexible_tip_offset_true_mm"));
  s.vertebra_pose_in_S = pose_from_json(j.at("vertebra_pose_in_S"));
  s.pedicle = pedicle_from_json(j.at("pedicle"));
  s.rng_seed = j.at("rng_seed").get<std::uint64_t>();
  return s;
}

/// Trajectory parameters; the sample points travel separately as CSV.
inline json trajectory_header(const Trajectory& t, const std::string& frame_id) {
  return json{{"frame", frame_id},
              {"entry_pose", pose_to_json(t.entry_pose)},
              {"pilot_depth_mm", t.pilot_depth},
              {"arc_radius_mm", t.arc_radius},
              {"arc_angle_deg", t.arc_angle_deg},
              {"arc_plane_roll_deg", t.arc_plane_roll_deg},
              {"sample_count", t.sample_points.size()},
              {"total_length_mm", t.total_length()}};
}

inline json to_json(const ProcedureReport& r) {
  json audit = json::array();
  for (const auto& e : r.workflow.audit) audit.push_back(to_json(e));
  return json{{"seed", r.seed},
              {"rigid",
               {{"commanded_eef_in_S", pose_to_json(r.rigid_commanded_eef)},
                {"achieved_tip_in_polaris", pose_to_json(r.rigid_achieved_tip)},
                {"tip_error", to_json(r.rigid_tip_error)}}},
              {"flexible",
               {{"commanded_eef_in_S", pose_to_json(r.flexible_commanded_eef)},
                {"achieved_tip_in_polaris", pose_to_json(r.flexible_achieved_tip)},
                {"tip_error", to_json(r.flexible_tip_error)}}},
              {"curvature", r.curvature ? to_json(*r.curvature) : json(nullptr)},
              {"planned_radius_mm", r.planned_radius},
              {"breach_margin_mm", r.breach_margin},
              {"breach_class", to_string(r.breach)},
              {"drilled_cloud_points", r.drilled_cloud.size()},
              {"final_phase", to_string(r.workflow.phase)},
              {"audit", audit}};
}

inline json to_json(const ErrorReport& r) {
  json rows = json::array();
  for (const auto& [key, row] : r.rows) {
    rows.push_back(json{{"tool", to_string(key.first)},
                        {"metric", to_string(key.second)},
                        {"mean", row.mean},
                        {"std", row.std},
                        {"n", row.n},
                        {"unit", row.unit},
                        {"single_sample", row.single_sample}});
  }
  return json{{"rows", rows},
              {"metadata",
               {{"dataset_digest", r.dataset_digest}, {"noise_preset", r.noise_preset}, {"seed_range", r.seed_range}}}};
}

}  // namespace spinenav
