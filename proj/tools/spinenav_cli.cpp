// spinenav command-line front end.
//
// Exit codes: 0 success, 2 validation error (bad input, degenerate geometry,
// illegal procedure order), 1 internal error.

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "spinenav/experiment.hpp"
#include "spinenav/io.hpp"
#include "spinenav/metrics.hpp"

namespace fs = std::filesystem;
using namespace spinenav;

namespace {

fs::path default_out_dir() {
  if (const char* env = std::getenv("SPINENAV_OUT_DIR"); env != nullptr && *env != '\0') return env;
  return ".";
}

fs::path out_path(const std::string& given, const std::string& fallback_name) {
  return given.empty() ? default_out_dir() / fallback_name : fs::path(given);
}

Vec3 parse_vec3(const std::string& s) {
  double x = 0, y = 0, z = 0;
  char extra = 0;
  if (std::sscanf(s.c_str(), "%lf,%lf,%lf%c", &x, &y, &z, &extra) != 3) {
    throw InvalidParameter("expected x,y,z but got '" + s + "'");
  }
  return Vec3(x, y, z);
}

NoiseModel load_noise(const std::string& preset) {
  if (preset == "zero" || preset == "table1") return noise_preset(preset);
  const json j = read_json_file(preset);
  return with_format_errors(preset, [&] { return noise_model_from_json(j.contains("noise") ? j.at("noise") : j); });
}

SessionRef session_ref(const std::string& role, const CaptureSession& s, const fs::path& file) {
  return SessionRef{role, s.digest, file.filename().string(), false};
}

std::string fmt(double v, int prec = 3) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", prec, v);
  return buf;
}

std::string fmt_sci(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

void print_recovery(const std::string& label, const PoseError& e) {
  const double angle = std::max({e.roll, e.pitch, e.yaw});
  std::cout << label << " recovery error: position " << fmt_sci(e.position) << " mm, max angle " << fmt_sci(angle)
            << " deg\n";
}

/// Digitizer tip offset precedence: explicit flag, then pivot artifact, else error.
Vec3 resolve_digitizer_tip(const std::string& flag, const std::string& pivot_file, Provenance& prov) {
  if (!flag.empty()) {
    prov.sessions.push_back(SessionRef{"digitizer_tip", std::nullopt, "--digitizer-tip", true});
    return parse_vec3(flag);
  }
  if (!pivot_file.empty()) {
    const Artifact a = read_artifact(pivot_file, "pivot_result");
    for (const auto& s : a.provenance.sessions) prov.sessions.push_back(s);
    return with_format_errors(pivot_file, [&] { return pivot_result_from_json(a.payload).x_tip; });
  }
  throw InvalidParameter("digitizer tip offset required: pass --digitizer-tip x,y,z or --pivot <pivot artifact>");
}

// --- subcommands -------------------------------------------------------------

struct SimulateOpts {
  std::uint64_t seed = 0;
  std::string noise = "table1";
  std::string out;
  std::size_t runs = 1;
  PipelineConfig cfg;
};

void write_run(const fs::path& dir, std::uint64_t seed, const NoiseModel& noise, const std::string& noise_name,
               const PipelineConfig& cfg) {
  const PipelineRun run = run_pipeline(seed, noise, cfg);

  write_json_file(dir / "scene.json", to_json(run.scene));
  write_json_file(dir / "noise.json", json{{"preset", noise_name}, {"noise", to_json(noise)}});

  const json device{{"source", "simulator"}, {"seed", seed}, {"noise_preset", noise_name}};
  CaptureSession he{run.captures.handeye, device};
  CaptureSession pv{run.captures.pivot, device};
  CaptureSession tr{run.captures.tip_rigid, device};
  CaptureSession tf{run.captures.tip_flexible, device};
  tr.device["tool"] = "rigid";
  tf.device["tool"] = "flexible";
  write_session(dir / "handeye.jsonl", he);
  write_session(dir / "pivot.jsonl", pv);
  write_session(dir / "tip_rigid.jsonl", tr);
  write_session(dir / "tip_flexible.jsonl", tf);
  write_json_file(dir / "marking.json", json{{"digitizer_in_polaris", pose_to_json(run.captures.marking_reading)}});

  Provenance prov;
  prov.sessions = {session_ref("handeye", he, "handeye.jsonl"), session_ref("pivot", pv, "pivot.jsonl"),
                   session_ref("tip_rigid", tr, "tip_rigid.jsonl"), session_ref("tip_flexible", tf, "tip_flexible.jsonl")};
  prov.timestamps = json{{"captured", "synthetic seed " + std::to_string(seed)}};
  write_artifact(dir / "calibration.json", to_artifact(CalibrationArtifact{run.calibration, prov}));
  write_json_file(dir / "marked.json", to_json(run.marked));

  write_json_file(dir / "plan.json", trajectory_header(run.plan, "vertebra"));
  write_file_atomic(dir / "plan.csv", points_csv(run.plan.sample_points));

  write_json_file(dir / "procedure_report.json", to_json(run.report));
  write_file_atomic(dir / "drilled_cloud.csv", points_csv(run.report.drilled_cloud));
  write_file_atomic(dir / "audit.jsonl", audit_jsonl(run.report.workflow.audit));

  const CalibrationErrors ce = calibration_errors(run.calibration, run.scene);
  std::cout << "seed " << seed << ": rigid tip error " << fmt(run.report.rigid_tip_error.position) << " mm, flexible "
            << fmt(run.report.flexible_tip_error.position) << " mm, hand-eye X " << fmt_sci(ce.X.position)
            << " mm, radius " << (run.report.curvature ? fmt(run.report.curvature->radius) : std::string("n/a"))
            << " mm, breach margin " << fmt(run.report.breach_margin) << " mm (" << to_string(run.report.breach)
            << ")\n";
}

void cmd_simulate(const SimulateOpts& o) {
  if (o.runs == 0) throw InvalidParameter("--runs must be >= 1");
  const NoiseModel noise = load_noise(o.noise);
  const fs::path dir = o.out.empty() ? default_out_dir() : fs::path(o.out);
  if (o.runs == 1) {
    write_run(dir, o.seed, noise, o.noise, o.cfg);
    return;
  }
  for (std::size_t i = 0; i < o.runs; ++i) {
    const std::uint64_t seed = o.seed + i;
    write_run(dir / ("seed_" + std::to_string(seed)), seed, noise, o.noise, o.cfg);
  }
}

std::optional<Scene> maybe_scene(const std::string& path) {
  if (path.empty()) return std::nullopt;
  const json j = read_json_file(path);
  return with_format_errors(path, [&] { return scene_from_json(j); });
}

void cmd_calibrate_handeye(const std::string& session_file, const std::string& out, const std::string& scene_file) {
  const CaptureSession s = read_session(session_file);
  const HandEyeResult r = solve_handeye(s.as<HandEyeSample>());
  Provenance prov;
  prov.sessions.push_back(session_ref("handeye", s, session_file));
  json payload = to_json(r);
  payload["input_digest"] = s.digest;
  write_artifact(out_path(out, "handeye.json"), Artifact{"handeye_result", payload, prov});
  std::cout << "hand-eye: " << r.n_samples << " samples, rotation residual " << fmt_sci(rad2deg(r.rotation_residual))
            << " deg, translation residual " << fmt_sci(r.translation_residual) << " mm\n";
  if (auto scene = maybe_scene(scene_file)) {
    print_recovery("X", pose_error(r.X, scene->ground_truth_X));
    print_recovery("Z", pose_error(r.Z, scene->ground_truth_Z));
  }
}

void cmd_calibrate_pivot(const std::string& session_file, const std::string& out, const std::string& scene_file) {
  const CaptureSession s = read_session(session_file);
  const PivotResult r = solve_pivot(s.as<PivotSample>());
  Provenance prov;
  prov.sessions.push_back(session_ref("pivot", s, session_file));
  json payload = to_json(r);
  payload["input_digest"] = s.digest;
  write_artifact(out_path(out, "pivot.json"), Artifact{"pivot_result", payload, prov});
  std::cout << "pivot: tip offset [" << fmt(r.x_tip.x()) << ", " << fmt(r.x_tip.y()) << ", " << fmt(r.x_tip.z())
            << "] mm, rms residual " << fmt_sci(r.rms_residual) << " mm\n";
  if (auto scene = maybe_scene(scene_file)) {
    std::cout << "digitizer tip recovery error: " << fmt_sci((r.x_tip - scene->digitizer_tip_offset_true).norm())
              << " mm\n";
  }
}

struct TipOpts {
  std::string session, handeye, pivot, digitizer_tip, out, scene, tool;
};

void cmd_calibrate_tip(const TipOpts& o) {
  const CaptureSession s = read_session(o.session);
  Tool tool = Tool::Rigid;
  if (!o.tool.empty()) tool = tool_from_string(o.tool);
  else if (s.device.contains("tool")) tool = tool_from_string(s.device.at("tool").get<std::string>());

  Provenance prov;
  prov.sessions.push_back(session_ref("tip_" + std::string(to_string(tool)), s, o.session));
  const Artifact he = read_artifact(o.handeye, "handeye_result");
  for (const auto& r : he.provenance.sessions) prov.sessions.push_back(r);
  const HandEyeResult handeye = with_format_errors(o.handeye, [&] { return handeye_result_from_json(he.payload); });
  const Vec3 digitizer_tip = resolve_digitizer_tip(o.digitizer_tip, o.pivot, prov);

  const TipResult r = solve_tip(s.as<TipSample>(), handeye.X, digitizer_tip);
  json payload = to_json(r);
  payload["tool"] = to_string(tool);
  payload["input_digest"] = s.digest;
  write_artifact(out_path(o.out, "tip_" + std::string(to_string(tool)) + ".json"), Artifact{"tip_result", payload, prov});
  std::cout << "tip (" << to_string(tool) << "): offset [" << fmt(r.x_drill_tip.x()) << ", " << fmt(r.x_drill_tip.y())
            << ", " << fmt(r.x_drill_tip.z()) << "] mm, rms residual " << fmt_sci(r.rms_residual) << " mm\n";
  if (auto scene = maybe_scene(o.scene)) {
    std::cout << "drill tip recovery error: " << fmt_sci((r.x_drill_tip - scene->tip_offset_true(tool)).norm())
              << " mm\n";
  }
}

struct MarkOpts {
  std::string digitizer_pose, pivot, digitizer_tip, calibration, tool = "rigid", out;
};

void cmd_mark(const MarkOpts& o) {
  const json reading = read_json_file(o.digitizer_pose);
  const Pose digitizer = with_format_errors(o.digitizer_pose, [&] {
    return pose_from_json(reading.contains("digitizer_in_polaris") ? reading.at("digitizer_in_polaris") : reading);
  });

  std::optional<CalibrationArtifact> calib;
  if (!o.calibration.empty()) calib = calibration_artifact_from(read_artifact(o.calibration, "calibration"));

  Provenance prov;
  Vec3 offset;
  if (o.digitizer_tip.empty() && o.pivot.empty() && calib) {
    offset = calib->calibration.digitizer_tip_offset();
  } else {
    offset = resolve_digitizer_tip(o.digitizer_tip, o.pivot, prov);
  }
  const MarkedPose marked = mark_pose(digitizer, offset);
  json out = to_json(marked);
  if (calib) {
    const Tool tool = tool_from_string(o.tool);
    out["tool"] = to_string(tool);
    out["commanded_eef_in_S"] = pose_to_json(desired_eef_pose(marked, calib->calibration, tool));
  }
  write_json_file(out_path(o.out, "marked.json"), out);
  const Vec3& t = marked.polaris_T_drill_tip_desired.translation;
  std::cout << "marked drill-tip target [" << fmt(t.x()) << ", " << fmt(t.y()) << ", " << fmt(t.z()) << "] mm\n";
}

struct PlanOpts {
  double pilot_depth = 20.0, radius = 69.5, arc_angle = 45.0, plane_roll = 0.0, step = 0.5;
  std::string entry, out;
  double canal_width = 12.62, tunnel_diameter = 3.91;
};

void cmd_plan(const PlanOpts& o) {
  Pose entry;
  if (!o.entry.empty()) {
    const json j = read_json_file(o.entry);
    entry = with_format_errors(o.entry, [&] { return pose_from_json(j); });
  }
  const Trajectory t = plan_trajectory(entry, o.pilot_depth, o.radius, o.arc_angle, o.plane_roll, o.step);
  const PedicleModel pedicle{o.canal_width, o.tunnel_diameter, entry};
  const double margin = breach_margin(t, pedicle);

  fs::path base = out_path(o.out, "plan");
  fs::path csv = base, header = base;
  csv += ".csv";
  header += ".json";
  json h = trajectory_header(t, "vertebra");
  h["csv"] = csv.filename().string();
  h["breach_margin_mm"] = margin;
  h["breach_class"] = to_string(classify_breach(margin));
  write_file_atomic(csv, points_csv(t.sample_points));
  write_json_file(header, h);
  std::cout << "planned " << t.sample_points.size() << " samples over " << fmt(t.total_length()) << " mm; breach margin "
            << fmt(margin) << " mm (" << to_string(classify_breach(margin)) << ")\n";
}

void collect_reports(const fs::path& p, std::vector<fs::path>& out) {
  if (fs::is_directory(p)) {
    for (const auto& e : fs::recursive_directory_iterator(p)) {
      if (e.is_regular_file() && e.path().filename() == "procedure_report.json") out.push_back(e.path());
    }
  } else if (fs::is_regular_file(p)) {
    out.push_back(p);
  } else {
    throw FormatError("no such report input: " + p.string());
  }
}

void cmd_report(const std::vector<std::string>& inputs, const std::string& out) {
  std::vector<fs::path> files;
  for (const auto& in : inputs) collect_reports(in, files);
  std::sort(files.begin(), files.end());
  if (files.empty()) throw EmptyInput("no procedure_report.json files found");

  std::vector<PoseError> rigid, flexible;
  std::vector<std::uint64_t> seeds;
  std::string all_bytes, preset;
  for (const auto& f : files) {
    const std::string text = read_file(f);
    all_bytes += text;
    const json j = parse_json(text, f.string());
    with_format_errors(f.string(), [&] {
      rigid.push_back(pose_error_from_json(j.at("rigid").at("tip_error")));
      flexible.push_back(pose_error_from_json(j.at("flexible").at("tip_error")));
      seeds.push_back(j.at("seed").get<std::uint64_t>());
      return 0;
    });
    const fs::path noise_file = f.parent_path() / "noise.json";
    if (fs::exists(noise_file)) {
      const json n = read_json_file(noise_file);
      const std::string p = n.value("preset", std::string("custom"));
      preset = preset.empty() || preset == p ? p : std::string("mixed");
    }
  }
  ErrorReport report = aggregate(rigid, Tool::Rigid);
  report.merge(aggregate(flexible, Tool::Flexible));
  report.dataset_digest = sha256_hex(all_bytes);
  report.noise_preset = preset.empty() ? "unknown" : preset;
  const auto [lo, hi] = std::minmax_element(seeds.begin(), seeds.end());
  report.seed_range = std::to_string(*lo) + "-" + std::to_string(*hi);

  const std::string md = "Drill-tip placement errors (" + std::to_string(files.size()) +
                         " runs, noise preset " + report.noise_preset + ", seeds " + report.seed_range + ")\n\n" +
                         to_markdown(report);
  fs::path base = out_path(out, "report");
  fs::path md_path = base, json_path = base;
  md_path += ".md";
  json_path += ".json";
  write_file_atomic(md_path, md);
  write_json_file(json_path, to_json(report));
  std::cout << md;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spinenav: calibration, registration and navigation for robotic steerable drilling"};
  app.require_subcommand(1);
  bool json_errors = false;
  app.add_flag("--json-errors", json_errors, "Print errors as JSON on stderr");

  SimulateOpts sim;
  auto* simulate = app.add_subcommand("simulate", "Generate a synthetic scene, captures, and run the full procedure");
  simulate->add_option("--seed", sim.seed, "Scene/noise seed");
  simulate->add_option("--noise-preset", sim.noise, "zero, table1, or a noise-model JSON file");
  simulate->add_option("--out", sim.out, "Output directory (default $SPINENAV_OUT_DIR or .)");
  simulate->add_option("--runs", sim.runs, "Number of consecutive seeds (writes seed_<n>/ subdirectories)");
  simulate->add_option("--handeye-n", sim.cfg.handeye_samples, "Hand-eye captures");
  simulate->add_option("--pivot-n", sim.cfg.pivot_samples, "Pivot captures");
  simulate->add_option("--tip-n", sim.cfg.tip_samples, "Tip captures per tool");
  simulate->add_option("--arc-angle", sim.cfg.arc_angle_deg, "J-shape arc angle, degrees");
  simulate->add_option("--plane-roll", sim.cfg.plane_roll_deg, "Bending-plane roll, degrees");

  std::string he_session, he_out, he_scene;
  auto* cal_he = app.add_subcommand("calibrate-handeye", "Solve AX = ZB from a hand-eye capture session");
  cal_he->add_option("--session", he_session, "Hand-eye capture session (.jsonl)")->required();
  cal_he->add_option("--out", he_out, "Output artifact");
  cal_he->add_option("--scene", he_scene, "Ground-truth scene.json; prints recovery error");

  std::string pv_session, pv_out, pv_scene;
  auto* cal_pv = app.add_subcommand("calibrate-pivot", "Pivot calibration of the digitizer tip");
  cal_pv->add_option("--session", pv_session, "Pivot capture session (.jsonl)")->required();
  cal_pv->add_option("--out", pv_out, "Output artifact");
  cal_pv->add_option("--scene", pv_scene, "Ground-truth scene.json; prints recovery error");

  TipOpts tip;
  auto* cal_tip = app.add_subcommand("calibrate-tip", "Digitizer-aided drill-tip calibration");
  cal_tip->add_option("--session", tip.session, "Tip capture session (.jsonl)")->required();
  cal_tip->add_option("--handeye", tip.handeye, "Hand-eye artifact")->required();
  cal_tip->add_option("--pivot", tip.pivot, "Pivot artifact supplying the digitizer tip offset");
  cal_tip->add_option("--digitizer-tip", tip.digitizer_tip, "Digitizer tip offset x,y,z in mm (overrides --pivot)");
  cal_tip->add_option("--tool", tip.tool, "rigid or flexible (default: from session)");
  cal_tip->add_option("--out", tip.out, "Output artifact");
  cal_tip->add_option("--scene", tip.scene, "Ground-truth scene.json; prints recovery error");

  MarkOpts mark;
  auto* mark_cmd = app.add_subcommand("mark", "Turn a digitizer reading into a desired drill-tip pose");
  mark_cmd->add_option("--digitizer-pose", mark.digitizer_pose, "JSON pose of the digitizer in the tracker frame")
      ->required();
  mark_cmd->add_option("--pivot", mark.pivot, "Pivot artifact supplying the digitizer tip offset");
  mark_cmd->add_option("--digitizer-tip", mark.digitizer_tip, "Digitizer tip offset x,y,z in mm");
  mark_cmd->add_option("--calibration", mark.calibration, "Calibration artifact; adds the commanded eef pose");
  mark_cmd->add_option("--tool", mark.tool, "rigid or flexible");
  mark_cmd->add_option("--out", mark.out, "Output file");

  PlanOpts plan;
  auto* plan_cmd = app.add_subcommand("plan", "Plan a pilot hole plus J-shape arc");
  plan_cmd->add_option("--pilot-depth", plan.pilot_depth, "Pilot hole depth, mm");
  plan_cmd->add_option("--radius", plan.radius, "Arc radius, mm");
  plan_cmd->add_option("--arc-angle", plan.arc_angle, "Arc angle, degrees");
  plan_cmd->add_option("--plane-roll", plan.plane_roll, "Bending-plane roll about the insertion axis, degrees");
  plan_cmd->add_option("--step", plan.step, "Sample spacing, mm (capped at 0.5)");
  plan_cmd->add_option("--entry", plan.entry, "Entry pose JSON (default identity)");
  plan_cmd->add_option("--canal-width", plan.canal_width, "Pedicle canal width, mm");
  plan_cmd->add_option("--tunnel-diameter", plan.tunnel_diameter, "Drilled tunnel diameter, mm");
  plan_cmd->add_option("--out", plan.out, "Output prefix (writes <prefix>.csv and <prefix>.json)");

  std::vector<std::string> report_inputs;
  std::string report_out;
  auto* report_cmd = app.add_subcommand("report", "Aggregate procedure reports into an error table");
  report_cmd->add_option("inputs", report_inputs, "procedure_report.json files or directories")->required();
  report_cmd->add_option("--out", report_out, "Output prefix (writes <prefix>.md and <prefix>.json)");

  auto fail = [&](int code, const char* kind, const std::string& msg) {
    if (json_errors) {
      std::cerr << json{{"error", kind}, {"message", msg}, {"exit_code", code}}.dump() << "\n";
    } else {
      std::cerr << "error (" << kind << "): " << msg << "\n";
    }
    return code;
  };

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail(2, "UsageError", e.what());
  }

  try {
    if (*simulate) cmd_simulate(sim);
    else if (*cal_he) cmd_calibrate_handeye(he_session, he_out, he_scene);
    else if (*cal_pv) cmd_calibrate_pivot(pv_session, pv_out, pv_scene);
    else if (*cal_tip) cmd_calibrate_tip(tip);
    else if (*mark_cmd) cmd_mark(mark);
    else if (*plan_cmd) cmd_plan(plan);
    else if (*report_cmd) cmd_report(report_inputs, report_out);
  } catch (const ValidationError& e) {
    return fail(2, e.kind(), e.what());
  } catch (const std::exception& e) {
    return fail(1, "InternalError", e.what());
  }
  return 0;
}
