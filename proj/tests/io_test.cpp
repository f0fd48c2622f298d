#include <filesystem>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "spinenav/experiment.hpp"
#include "spinenav/io.hpp"
#include "test_util.hpp"

namespace spinenav {
namespace {

namespace fs = std::filesystem;
using testing::TestRng;

class TempDir {
 public:
  TempDir() {
    path_ = fs::temp_directory_path() /
            ("spinenav_io_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) + "_" +
             ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

TEST(PoseJson, BitExactRoundTrip) {
  TestRng rng(81);
  for (int i = 0; i < 1000; ++i) {
    const Pose p = rng.pose(2000.0);
    const std::string text = pose_to_json(p).dump();
    const Pose back = pose_from_json(json::parse(text));
    EXPECT_EQ(back, p);
    EXPECT_EQ(pose_to_json(back).dump(), text);
  }
}

TEST(PoseJson, AcceptsHomogeneousMatrix) {
  const Pose p(Rot3::about_z_deg(90.0), Vec3(1, 2, 3));
  const json m = json::array({json::array({0, -1, 0, 1}), json::array({1, 0, 0, 2}), json::array({0, 0, 1, 3}),
                              json::array({0, 0, 0, 1})});
  for (const json& j : {m, json{{"matrix", m}}}) {
    const Pose q = pose_from_json(j);
    EXPECT_LE(rotation_distance(q.rotation, p.rotation), 1e-15);
    EXPECT_EQ(q.translation, p.translation);
  }
  json bad = m;
  bad[3][0] = 0.5;
  EXPECT_THROW(pose_from_json(bad), InvalidParameter);
}

TEST(Session, RoundTripIsByteIdentical) {
  const Scene scene = generate_scene(9);
  const NoiseModel noise = NoiseModel::table1();
  std::vector<CaptureSession> sessions(3);
  sessions[0].records = generate_handeye_captures(scene, 12, noise);
  sessions[1].records = generate_pivot_captures(scene, 12, noise);
  sessions[2].records = generate_tip_captures(scene, 12, noise, Tool::Flexible);
  for (auto& s : sessions) {
    s.device = json{{"tracker", "synthetic"}};
    const std::string text = serialize_session(s);
    CaptureSession back = parse_session(text);
    EXPECT_EQ(back.kind(), s.kind());
    EXPECT_EQ(back.size(), 12u);
    EXPECT_EQ(back.digest, s.digest);
    EXPECT_EQ(serialize_session(back), text);
  }
  const auto& he = sessions[0].as<HandEyeSample>();
  const auto& he_back = parse_session(serialize_session(sessions[0])).as<HandEyeSample>();
  for (std::size_t i = 0; i < he.size(); ++i) EXPECT_EQ(he_back[i].drill_T_polaris, he[i].drill_T_polaris);
  EXPECT_THROW(sessions[0].as<PivotSample>(), FormatError);
}

TEST(Session, FileRoundTrip) {
  TempDir dir;
  CaptureSession s;
  s.records = generate_pivot_captures(generate_scene(2), 10, NoiseModel::table1());
  const fs::path path = dir.path() / "pivot.jsonl";
  write_session(path, s);
  const std::string first = read_file(path);
  CaptureSession back = read_session(path);
  write_session(path, back);
  EXPECT_EQ(read_file(path), first);
}

TEST(Session, TamperingIsDetected) {
  CaptureSession s;
  s.records = generate_pivot_captures(generate_scene(2), 5, NoiseModel::zero());
  std::string text = serialize_session(s);
  const auto pos = text.find("\"t_mm\":[") + 8;
  text[pos] = text[pos] == '1' ? '2' : '1';
  EXPECT_THROW(parse_session(text), FormatError);

  std::string short_text = serialize_session(s);
  short_text.erase(short_text.rfind('\n', short_text.size() - 2) + 1);
  EXPECT_THROW(parse_session(short_text), FormatError);
  EXPECT_THROW(parse_session("not json\n"), FormatError);
  EXPECT_THROW(parse_session(""), FormatError);
}

TEST(Artifact, ProvenanceMustResolve) {
  Artifact a{"pivot_result", json::object(), {}};
  a.provenance.sessions.push_back(SessionRef{"pivot", std::nullopt, "pivot.jsonl", false});
  EXPECT_THROW(serialize_artifact(a), FormatError);
  a.provenance.sessions.back().external = true;
  EXPECT_NO_THROW(serialize_artifact(a));
}

TEST(Artifact, CalibrationRoundTrip) {
  TempDir dir;
  const PipelineRun run = run_pipeline(4, NoiseModel::table1());
  CalibrationArtifact c{run.calibration, {}};
  c.provenance.sessions.push_back(SessionRef{"handeye", sha256_hex("x"), "handeye.jsonl", false});
  const fs::path path = dir.path() / "calibration.json";
  write_artifact(path, to_artifact(c));
  const std::string first = read_file(path);
  const CalibrationArtifact back = calibration_artifact_from(read_artifact(path, "calibration"));
  EXPECT_EQ(back.calibration.handeye.X, run.calibration.handeye.X);
  EXPECT_EQ(back.calibration.rigid_tip->x_drill_tip, run.calibration.rigid_tip->x_drill_tip);
  EXPECT_EQ(back.calibration.digitizer_tip_offset(), run.calibration.digitizer_tip_offset());
  write_artifact(path, to_artifact(back));
  EXPECT_EQ(read_file(path), first);
  EXPECT_THROW(read_artifact(path, "pivot_result"), FormatError);
}

TEST(Digest, KnownVector) {
  EXPECT_EQ(sha256_hex("abc"), "sha256:ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Csv, PointsRoundTripExactly) {
  TestRng rng(82);
  std::vector<Vec3> pts;
  for (int i = 0; i < 100; ++i) pts.push_back(rng.vec(100.0));
  const std::vector<Vec3> back = parse_points_csv(points_csv(pts));
  ASSERT_EQ(back.size(), pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) EXPECT_EQ(back[i], pts[i]);
  EXPECT_THROW(parse_points_csv("x,y,z\n1,2,3\n"), FormatError);
  EXPECT_THROW(parse_points_csv("x_mm,y_mm,z_mm\n1,2\n"), FormatError);
}

TEST(Audit, AppendOnlyLog) {
  TempDir dir;
  const fs::path path = dir.path() / "audit.jsonl";
  WorkflowState s;
  for (Event e : {Event::CalibrationLoaded, Event::PoseMarkedEvt}) {
    s = advance_phase(s, e);
    append_audit_entry(path, s.audit.back());
  }
  EXPECT_EQ(read_file(path), audit_jsonl(s.audit));
}

TEST(AtomicWrite, ReplacesWholeFile) {
  TempDir dir;
  const fs::path path = dir.path() / "out.txt";
  write_file_atomic(path, "first version, quite long\n");
  write_file_atomic(path, "second\n");
  EXPECT_EQ(read_file(path), "second\n");
  std::size_t count = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir.path())) ++count;
  EXPECT_EQ(count, 1u);
}

}  // namespace
}  // namespace spinenav
