#pragma once

// Pose marking and the drilling workflow.
//
// Frame chain for a commanded end-effector pose:
//   S_T_eef = X^-1 * polaris_T_tip(desired) * tip_T_eef
// where the drill-tip frame shares the drill-marker orientation (rotation of
// Z^-1 seen from the end effector, optionally followed by a per-tool
// alignment) and sits at the calibrated tip offset.

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "spinenav/errors.hpp"
#include "spinenav/handeye.hpp"
#include "spinenav/pointcal.hpp"
#include "spinenav/se3.hpp"

namespace spinenav {

enum class Tool { None, Rigid, Flexible };

inline std::string_view to_string(Tool t) {
  switch (t) {
    case Tool::None: return "none";
    case Tool::Rigid: return "rigid";
    case Tool::Flexible: return "flexible";
  }
  return "?";
}

inline Tool tool_from_string(std::string_view s) {
  if (s == "rigid") return Tool::Rigid;
  if (s == "flexible") return Tool::Flexible;
  if (s == "none") return Tool::None;
  throw InvalidParameter("unknown tool '" + std::string(s) + "'");
}

struct MarkedPose {
  Pose polaris_T_drill_tip_desired;
  Pose source_digitizer_pose;
  double timestamp = 0.0;
};

/// Digitizer tip offset taken from a datasheet rather than a pivot calibration.
struct DatasheetOffset {
  Vec3 x_tip = Vec3::Zero();
};

struct CalibrationSet {
  HandEyeResult handeye;
  std::variant<PivotResult, DatasheetOffset> digitizer_tip = DatasheetOffset{};
  std::optional<TipResult> rigid_tip;
  std::optional<TipResult> flexible_tip;
  /// Rotation from the drill-marker frame to the drill-tip frame, per tool.
  Rot3 rigid_alignment;
  Rot3 flexible_alignment;

  Vec3 digitizer_tip_offset() const {
    return std::visit([](const auto& v) -> Vec3 { return v.x_tip; }, digitizer_tip);
  }

  const TipResult& tip(Tool tool) const {
    const auto& slot = tool == Tool::Flexible ? flexible_tip : rigid_tip;
    if (tool == Tool::None || !slot) {
      throw MissingCalibration("no tip calibration for tool '" + std::string(to_string(tool)) + "'");
    }
    return *slot;
  }

  const Rot3& alignment(Tool tool) const { return tool == Tool::Flexible ? flexible_alignment : rigid_alignment; }
};

/// Tip frame expressed in the end-effector frame for a given drill-marker
/// calibration Z = drill_T_eef, tip offset and tool alignment.
inline Pose eef_T_tip(const Pose& Z, const Vec3& tip_offset, const Rot3& alignment) {
  return Pose(Z.rotation.inverse() * alignment, tip_offset);
}

/// Desired drill-tip pose: the digitizer body orientation carried to its tip.
inline MarkedPose mark_pose(const Pose& digitizer_pose_in_polaris, const Vec3& digitizer_tip_offset,
                            double timestamp = 0.0) {
  return MarkedPose{digitizer_pose_in_polaris * Pose::from_translation(digitizer_tip_offset),
                    digitizer_pose_in_polaris, timestamp};
}

inline Pose desired_eef_pose(const MarkedPose& marked, const CalibrationSet& calib, Tool tool) {
  const TipResult& tip = calib.tip(tool);
  const Pose tip_T_eef = eef_T_tip(calib.handeye.Z, tip.x_drill_tip, calib.alignment(tool)).inverse();
  return calib.handeye.X.inverse() * marked.polaris_T_drill_tip_desired * tip_T_eef;
}

// ---------------------------------------------------------------------------
// Workflow state machine

enum class Phase { Uncalibrated, Calibrated, PoseMarked, PilotDrilled, MaintenanceSwap, JShapeDrilled, Homed };
enum class Event { CalibrationLoaded, PoseMarkedEvt, PilotDone, ToolSwapped, JShapeDone, HomeReached };

inline constexpr std::array kAllPhases{Phase::Uncalibrated,    Phase::Calibrated,    Phase::PoseMarked, Phase::PilotDrilled,
                                       Phase::MaintenanceSwap, Phase::JShapeDrilled, Phase::Homed};
inline constexpr std::array kAllEvents{Event::CalibrationLoaded, Event::PoseMarkedEvt, Event::PilotDone,
                                       Event::ToolSwapped,       Event::JShapeDone,    Event::HomeReached};

inline std::string_view to_string(Phase p) {
  switch (p) {
    case Phase::Uncalibrated: return "Uncalibrated";
    case Phase::Calibrated: return "Calibrated";
    case Phase::PoseMarked: return "PoseMarked";
    case Phase::PilotDrilled: return "PilotDrilled";
    case Phase::MaintenanceSwap: return "MaintenanceSwap";
    case Phase::JShapeDrilled: return "JShapeDrilled";
    case Phase::Homed: return "Homed";
  }
  return "?";
}

inline std::string_view to_string(Event e) {
  switch (e) {
    case Event::CalibrationLoaded: return "CalibrationLoaded";
    case Event::PoseMarkedEvt: return "PoseMarked";
    case Event::PilotDone: return "PilotDone";
    case Event::ToolSwapped: return "ToolSwapped";
    case Event::JShapeDone: return "JShapeDone";
    case Event::HomeReached: return "HomeReached";
  }
  return "?";
}

struct AuditEntry {
  Phase from;
  Phase to;
  Event event;
  double timestamp = 0.0;
  std::optional<Pose> commanded_pose;
};

struct WorkflowState {
  Phase phase = Phase::Uncalibrated;
  Tool active_tool = Tool::None;
  std::optional<CalibrationSet> calibration;
  std::optional<MarkedPose> marked;
  std::vector<AuditEntry> audit;
};

/// Optional payload carried by an event.
struct EventData {
  std::optional<CalibrationSet> calibration = std::nullopt;
  std::optional<MarkedPose> marked = std::nullopt;
  std::optional<Pose> commanded_pose = std::nullopt;
  /// Defaults to the audit sequence number so logs are reproducible.
  std::optional<double> timestamp = std::nullopt;
};

namespace detail {

struct Transition {
  Phase from;
  Event event;
  Phase to;
  Tool required_tool;  // tool that must be mounted before the event
  Tool tool_after;
};

// The single legal path: calibrate, mark, pilot-drill with the rigid tool,
// swap to the flexible tool at the maintenance pose, J-shape drill, go home.
inline constexpr std::array kTransitions{
    Transition{Phase::Uncalibrated, Event::CalibrationLoaded, Phase::Calibrated, Tool::None, Tool::None},
    Transition{Phase::Calibrated, Event::PoseMarkedEvt, Phase::PoseMarked, Tool::None, Tool::Rigid},
    Transition{Phase::PoseMarked, Event::PilotDone, Phase::PilotDrilled, Tool::Rigid, Tool::Rigid},
    Transition{Phase::PilotDrilled, Event::ToolSwapped, Phase::MaintenanceSwap, Tool::Rigid, Tool::Flexible},
    Transition{Phase::MaintenanceSwap, Event::JShapeDone, Phase::JShapeDrilled, Tool::Flexible, Tool::Flexible},
    Transition{Phase::JShapeDrilled, Event::HomeReached, Phase::Homed, Tool::Flexible, Tool::Flexible},
};

}  // namespace detail

inline WorkflowState advance_phase(WorkflowState state, Event event, const EventData& data = {}) {
  const detail::Transition* match = nullptr;
  for (const auto& t : detail::kTransitions) {
    if (t.from == state.phase && t.event == event) match = &t;
  }
  if (match == nullptr) {
    throw IllegalTransition("event " + std::string(to_string(event)) + " is not allowed in phase " +
                            std::string(to_string(state.phase)));
  }
  if (match->required_tool != Tool::None && state.active_tool != match->required_tool) {
    throw IllegalTransition("event " + std::string(to_string(event)) + " requires the " +
                            std::string(to_string(match->required_tool)) + " tool, but " +
                            std::string(to_string(state.active_tool)) + " is mounted");
  }

  if (data.calibration) state.calibration = data.calibration;
  if (data.marked) state.marked = data.marked;

  AuditEntry entry{state.phase, match->to, event, data.timestamp.value_or(static_cast<double>(state.audit.size())),
                   data.commanded_pose};
  state.phase = match->to;
  state.active_tool = match->tool_after;
  state.audit.push_back(std::move(entry));
  return state;
}

}  // namespace spinenav
