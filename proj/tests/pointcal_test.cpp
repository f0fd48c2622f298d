#include <algorithm>
#include <vector>

#include <gtest/gtest.h>

#include "spinenav/pointcal.hpp"
#include "test_util.hpp"

namespace spinenav {
namespace {

using testing::TestRng;

// Generator oracle: p_i = x_pivot - R_i x_tip.
std::vector<PivotSample> pivot_samples(const Vec3& x_tip, const Vec3& x_pivot, std::size_t n, TestRng& rng) {
  std::vector<PivotSample> out;
  for (std::size_t i = 0; i < n; ++i) {
    const Rot3 r = rng.rotation();
    out.push_back(PivotSample{r, x_pivot - r * x_tip});
  }
  return out;
}

// Generator oracle for tip captures: the digitizer tip sits exactly on the drill
// tip, t_i = R_i x + p_i in {S}, and the tracker sees it through X = polaris_T_S.
std::vector<TipSample> tip_samples(const Vec3& x_drill_tip, const Pose& X, const Vec3& digitizer_offset,
                                   std::size_t n, TestRng& rng) {
  std::vector<TipSample> out;
  for (std::size_t i = 0; i < n; ++i) {
    const Pose eef(rng.rotation(), rng.vec(600.0));
    const Vec3 tip_in_polaris = X.transform_point(eef.transform_point(x_drill_tip));
    const Rot3 dr = rng.rotation();
    out.push_back(TipSample{eef.rotation, eef.translation, Pose(dr, tip_in_polaris - dr * digitizer_offset)});
  }
  return out;
}

TEST(Pivot, RecoversTipOffsetFromNoiselessSamples) {
  TestRng rng(31);
  const Vec3 x_tip(0, 0, -150);
  const Vec3 x_pivot = rng.vec(1000.0);
  const PivotResult r = solve_pivot(pivot_samples(x_tip, x_pivot, 20, rng));
  EXPECT_LE((r.x_tip - x_tip).norm(), 1e-9);
  EXPECT_LE((r.x_pivot - x_pivot).norm(), 1e-9);
  EXPECT_LE(r.rms_residual, 1e-9);
  EXPECT_GT(r.condition_diagnostic, kOrientationDiversityThreshold);
}

TEST(Pivot, ExactRecoveryForRandomGeometry) {
  TestRng rng(32);
  for (int trial = 0; trial < 100; ++trial) {
    const Vec3 x_tip = rng.vec(200.0), x_pivot = rng.vec(1500.0);
    const PivotResult r = solve_pivot(pivot_samples(x_tip, x_pivot, 3 + trial % 20, rng));
    EXPECT_LE((r.x_tip - x_tip).norm(), 1e-8);
    EXPECT_LE((r.x_pivot - x_pivot).norm(), 1e-8);
    EXPECT_LE(r.rms_residual, 1e-8);
  }
}

TEST(Pivot, IdenticalOrientationsAreDegenerate) {
  TestRng rng(33);
  const Rot3 r = rng.rotation();
  std::vector<PivotSample> samples;
  for (int i = 0; i < 10; ++i) samples.push_back(PivotSample{r, Vec3(5, 6, 7) - r * Vec3(0, 0, -150)});
  EXPECT_THROW(solve_pivot(samples), DegenerateGeometry);
}

TEST(Pivot, SingleAxisRotationIsDegenerate) {
  TestRng rng(34);
  const Vec3 axis = rng.unit();
  const Rot3 base = rng.rotation();
  std::vector<PivotSample> samples;
  for (int i = 0; i < 10; ++i) {
    const Rot3 r = base * Rot3::from_axis_angle(axis, rng.uniform(-1.0, 1.0));
    samples.push_back(PivotSample{r, Vec3(5, 6, 7) - r * Vec3(0, 0, -150)});
  }
  EXPECT_THROW(solve_pivot(samples), DegenerateGeometry);
}

TEST(Pivot, TooFewSamples) {
  TestRng rng(35);
  EXPECT_THROW(solve_pivot(pivot_samples(Vec3(0, 0, -150), Vec3::Zero(), 2, rng)), TooFewSamples);
}

TEST(Pivot, ZeroOffsetPivotsAtDigitizerPosition) {
  TestRng rng(36);
  const Vec3 p(12.5, -3.0, 1800.0);
  std::vector<PivotSample> samples;
  for (int i = 0; i < 10; ++i) samples.push_back(PivotSample{rng.rotation(), p});
  const PivotResult r = solve_pivot(samples);
  EXPECT_LE(r.x_tip.norm(), 1e-9);
  EXPECT_LE((r.x_pivot - p).norm(), 1e-9);
  EXPECT_LE(r.rms_residual, 1e-9);
}

TEST(Pivot, TranslationEquivariance) {
  TestRng rng(37);
  auto samples = pivot_samples(Vec3(1, 2, -150), Vec3(100, 200, 1500), 15, rng);
  for (auto& s : samples) s.position += Vec3(rng.normal(), rng.normal(), rng.normal()) * 0.3;
  const PivotResult base = solve_pivot(samples);
  const Vec3 d(37.0, -12.0, 250.0);
  for (auto& s : samples) s.position += d;
  const PivotResult moved = solve_pivot(samples);
  EXPECT_LE((moved.x_pivot - (base.x_pivot + d)).norm(), 1e-10);
  EXPECT_LE((moved.x_tip - base.x_tip).norm(), 1e-10);
}

TEST(DigitizerTip, IdentityChain) {
  const TipSample s{Rot3(), Vec3::Zero(), Pose::identity()};
  const Vec3 t = digitizer_tip_in_world(s, Pose::identity(), Vec3(0, 0, -150));
  EXPECT_EQ(t, Vec3(0, 0, -150));
}

TEST(DigitizerTip, HalfTurnAboutX) {
  const TipSample s{Rot3(), Vec3::Zero(), Pose(Rot3::about_x_deg(180.0), Vec3(10, 0, 0))};
  const Vec3 t = digitizer_tip_in_world(s, Pose::identity(), Vec3(0, 0, -150));
  EXPECT_LE((t - Vec3(10, 0, 150)).norm(), 1e-12);
}

TEST(DigitizerTip, MatchesHomogeneousMatrixChain) {
  TestRng rng(38);
  for (int i = 0; i < 200; ++i) {
    const Pose X = rng.pose(2000.0);
    const TipSample s{Rot3(), Vec3::Zero(), rng.pose(2000.0)};
    const Vec3 offset = rng.vec(200.0);
    Eigen::Vector4d h;
    h << offset, 1.0;
    const Eigen::Vector4d expected = X.matrix().inverse() * s.digitizer_pose_in_polaris.matrix() * h;
    EXPECT_LE((digitizer_tip_in_world(s, X, offset) - expected.head<3>()).norm(), 1e-12 * 4000.0);
    const Pose chain = invert(X) * s.digitizer_pose_in_polaris * Pose::from_translation(offset);
    EXPECT_LE((digitizer_tip_in_world(s, X, offset) - chain.translation).norm(), 1e-12 * 4000.0);
  }
}

TEST(Tip, RecoversDrillTipFromNoiselessSamples) {
  TestRng rng(39);
  const Vec3 x(0, 0, 210);
  const Pose X = rng.pose(2000.0);
  const Vec3 offset(0.3, -0.2, -150.0);
  const TipResult r = solve_tip(tip_samples(x, X, offset, 15, rng), X, offset);
  EXPECT_LE((r.x_drill_tip - x).norm(), 1e-9);
  EXPECT_LE(r.rms_residual, 1e-9);
}

TEST(Tip, IdenticalOrientationsAreRejected) {
  TestRng rng(40);
  const Pose X = rng.pose(2000.0);
  const Vec3 offset(0, 0, -150);
  auto samples = tip_samples(Vec3(0, 0, 210), X, offset, 8, rng);
  const Rot3 r = samples.front().eef_R_in_S;
  for (auto& s : samples) s.eef_R_in_S = r;
  EXPECT_THROW(solve_tip(samples, X, offset), DegenerateGeometry);
}

TEST(Tip, TooFewSamples) {
  TestRng rng(41);
  const Vec3 offset(0, 0, -150);
  EXPECT_THROW(solve_tip(tip_samples(Vec3(0, 0, 210), Pose(), offset, 2, rng), Pose(), offset), TooFewSamples);
}

TEST(Tip, ContactNoiseOfQuarterMillimetre) {
  // sigma = 0.25 mm on every t_i, 15 samples; robot orientations span the
  // +-30 degree range a real capture script explores.
  TestRng rng(42);
  const Vec3 x(2.0, -1.0, 210.0);
  const Vec3 offset(0, 0, -150);
  std::vector<double> errors;
  for (int trial = 0; trial < 200; ++trial) {
    const Pose X = rng.pose(2000.0);
    std::vector<TipSample> samples;
    for (int i = 0; i < 15; ++i) {
      const Rot3 r = Rot3::about_x_deg(180.0) * Rot3::from_rotation_vector(rng.vec(deg2rad(30.0)));
      const Pose eef(r, rng.vec(300.0));
      const Vec3 noise = Vec3(rng.normal(), rng.normal(), rng.normal()) * 0.25;
      const Vec3 tip_in_polaris = X.transform_point(eef.transform_point(x) + noise);
      const Rot3 dr = rng.rotation();
      samples.push_back(TipSample{eef.rotation, eef.translation, Pose(dr, tip_in_polaris - dr * offset)});
    }
    errors.push_back((solve_tip(samples, X, offset).x_drill_tip - x).norm());
  }
  std::sort(errors.begin(), errors.end());
  EXPECT_LE(errors[errors.size() / 2], 0.5);
}

TEST(Tip, WorldRotationLeavesOffsetUnchanged) {
  TestRng rng(43);
  const Vec3 x(3.0, -4.0, 205.0), offset(0.5, 0.5, -150.0);
  const Pose X = rng.pose(2000.0);
  auto samples = tip_samples(x, X, offset, 12, rng);
  for (auto& s : samples) s.digitizer_pose_in_polaris.translation += rng.vec(0.2);
  const TipResult base = solve_tip(samples, X, offset);
  const Pose g = rng.pose(1000.0);
  for (auto& s : samples) s.digitizer_pose_in_polaris = g * s.digitizer_pose_in_polaris;
  const TipResult moved = solve_tip(samples, g * X, offset);
  EXPECT_LE((moved.x_drill_tip - base.x_drill_tip).norm(), 1e-8);
}

}  // namespace
}  // namespace spinenav
