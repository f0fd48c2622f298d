#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "spinenav/trajectory.hpp"
#include "test_util.hpp"

namespace spinenav {
namespace {

using testing::TestRng;

std::vector<Vec3> arc_on_circle(double radius, double span_deg, std::size_t n) {
  std::vector<Vec3> out;
  for (std::size_t i = 0; i < n; ++i) {
    const double a = deg2rad(span_deg) * static_cast<double>(i) / static_cast<double>(n - 1);
    out.emplace_back(radius * std::cos(a), radius * std::sin(a), 0.0);
  }
  return out;
}

std::vector<Vec3> transformed(const std::vector<Vec3>& pts, const Pose& g) {
  std::vector<Vec3> out;
  for (const auto& p : pts) out.push_back(g.transform_point(p));
  return out;
}

Trajectory pilot_with_offset(double lateral) {
  return plan_trajectory(Pose::from_translation(Vec3(lateral, 0, 0)), 20.0, 69.5, 45.0, 0.0, 0.5);
}

TEST(Plan, ZeroArcIsStraightLine) {
  const Trajectory t = plan_trajectory(Pose::identity(), 20.0, 69.5, 0.0, 0.0, 0.5);
  EXPECT_DOUBLE_EQ(t.total_length(), 20.0);
  EXPECT_EQ(t.sample_points.front(), Vec3::Zero());
  EXPECT_LE((t.sample_points.back() - Vec3(0, 0, -20)).norm(), 1e-12);
  for (const auto& p : t.sample_points) EXPECT_LE(std::hypot(p.x(), p.y()), 1e-12);
  EXPECT_TRUE(t.arc_points().empty());
}

TEST(Plan, QuarterArcEndpoint) {
  const Trajectory t = plan_trajectory(Pose::identity(), 0.0, 69.5, 90.0, 0.0, 0.5);
  EXPECT_LE((t.sample_points.back() - Vec3(69.5, 0, -69.5)).norm(), 1e-9);
  EXPECT_EQ(t.sample_points.front(), Vec3::Zero());
}

TEST(Plan, RejectsInvalidInput) {
  EXPECT_THROW(plan_trajectory(Pose(), -1.0, 69.5, 45.0, 0.0, 0.5), InvalidParameter);
  EXPECT_THROW(plan_trajectory(Pose(), 20.0, 0.0, 45.0, 0.0, 0.5), InvalidParameter);
  EXPECT_THROW(plan_trajectory(Pose(), 20.0, 69.5, 121.0, 0.0, 0.5), InvalidParameter);
  EXPECT_THROW(plan_trajectory(Pose(), 20.0, 69.5, 45.0, 0.0, 0.0), InvalidParameter);
  EXPECT_THROW(plan_trajectory(Pose(), 0.0, 69.5, 0.0, 0.0, 0.5), InvalidParameter);
}

TEST(Plan, ArclengthIdentityAndSampling) {
  TestRng rng(61);
  for (int i = 0; i < 200; ++i) {
    const double pilot = rng.uniform(0.5, 40.0), radius = rng.uniform(10.0, 200.0);
    const double angle = rng.uniform(1.0, 120.0), roll = rng.uniform(-180.0, 180.0);
    const double step = rng.uniform(0.05, 2.0);
    const Pose entry = rng.pose();
    const Trajectory t = plan_trajectory(entry, pilot, radius, angle, roll, step);
    EXPECT_NEAR(t.total_length(), pilot + radius * deg2rad(angle), 1e-9);
    EXPECT_NEAR(t.sample_arclength.back(), t.total_length(), 1e-9);

    // Independent oracle: pilot points on the entry axis, arc points on the
    // circle about L*d + R*n in the (d, n) plane.
    const Vec3 d = entry.rotation * Vec3(0, 0, -1);
    const Vec3 n = entry.rotation * Vec3(std::cos(deg2rad(roll)), std::sin(deg2rad(roll)), 0);
    const Vec3 center = entry.translation + pilot * d + radius * n;
    const Vec3 normal = d.cross(n);
    for (std::size_t k = 0; k < t.sample_points.size(); ++k) {
      const Vec3 p = t.sample_points[k] - entry.translation;
      if (k > 0) EXPECT_LE((t.sample_points[k] - t.sample_points[k - 1]).norm(), kMaxSampleSpacing + 1e-12);
      if (t.sample_arclength[k] <= pilot) {
        EXPECT_LE((p - p.dot(d) * d).norm(), 1e-9);
      } else {
        EXPECT_NEAR((t.sample_points[k] - center).norm(), radius, 1e-9);
        EXPECT_LE(std::abs((t.sample_points[k] - center).dot(normal)), 1e-9);
      }
    }
  }
}

TEST(Plan, TangentContinuousAtJunction) {
  TestRng rng(62);
  for (int i = 0; i < 100; ++i) {
    const Trajectory t = plan_trajectory(rng.pose(), rng.uniform(1.0, 30.0), rng.uniform(20.0, 100.0),
                                         rng.uniform(10.0, 120.0), rng.uniform(-180.0, 180.0), 0.5);
    const Vec3 before = t.tangent_at(t.pilot_depth);
    const Vec3 after = t.tangent_at(t.pilot_depth + 1e-12);
    EXPECT_LE(std::atan2(before.cross(after).norm(), before.dot(after)), 1e-9);
    // Finite-difference oracle for the arc tangent just past the junction.
    const double s = t.pilot_depth + 1e-3, h = 1e-6;
    const Vec3 fd = (t.point_at(s + h) - t.point_at(s - h)) / (2 * h);
    EXPECT_LE((fd.normalized() - t.tangent_at(s)).norm(), 1e-6);
  }
}

TEST(Plan, PlannerFitterRoundTrip) {
  const Trajectory t = plan_trajectory(Pose::identity(), 20.0, 69.5, 45.0, 30.0, 0.5);
  EXPECT_NEAR(fit_curvature(t.arc_points()).radius, 69.5, 1e-6);
}

TEST(Fit, ExactArc) {
  TestRng rng(63);
  const auto pts = transformed(arc_on_circle(69.5, 60.0, 50), rng.pose());
  const CurvatureFit f = fit_curvature(pts);
  EXPECT_NEAR(f.radius, 69.5, 1e-6);
  EXPECT_LE(f.rms_residual, 1e-9);
  EXPECT_NEAR(f.plane_normal.norm(), 1.0, 1e-12);
}

TEST(Fit, NoisyArcWithinTwoPercent) {
  TestRng rng(64);
  for (int trial = 0; trial < 20; ++trial) {
    const Trajectory t = plan_trajectory(rng.pose(), 20.0, 69.5, 45.0, 0.0, 0.1);
    std::vector<Vec3> pts = t.arc_points();
    for (auto& p : pts) p += Vec3(rng.normal(), rng.normal(), rng.normal()) * 0.3;
    EXPECT_NEAR(fit_curvature(pts).radius, 69.5, 0.02 * 69.5);
  }
}

TEST(Fit, CircumradiusOfThreePoints) {
  const CurvatureFit f = fit_curvature(std::vector<Vec3>{Vec3(0, 0, 0), Vec3(3, 0, 0), Vec3(0, 4, 0)});
  EXPECT_NEAR(f.radius, 2.5, 1e-12);
  EXPECT_LE((f.center - Vec3(1.5, 2.0, 0.0)).norm(), 1e-12);

  TestRng rng(65);
  for (int i = 0; i < 200; ++i) {
    const Vec3 a = rng.vec(50.0), b = rng.vec(50.0), c = rng.vec(50.0);
    const double la = (b - c).norm(), lb = (a - c).norm(), lc = (a - b).norm();
    const double area = 0.5 * (b - a).cross(c - a).norm();
    if (area < 1.0) continue;
    const double expected = la * lb * lc / (4.0 * area);
    EXPECT_NEAR(fit_curvature(std::vector<Vec3>{a, b, c}).radius, expected, 1e-9 * expected);
  }
}

TEST(Fit, RigidMotionInvariance) {
  TestRng rng(66);
  for (int i = 0; i < 50; ++i) {
    std::vector<Vec3> pts = arc_on_circle(rng.uniform(20.0, 100.0), rng.uniform(30.0, 120.0), 100);
    for (auto& p : pts) p += Vec3(rng.normal(), rng.normal(), rng.normal()) * 0.3;
    const double r0 = fit_curvature(pts).radius;
    const double r1 = fit_curvature(transformed(pts, rng.pose(300.0))).radius;
    EXPECT_NEAR(r1, r0, 1e-9);
  }
}

TEST(Fit, CollinearPointsRejected) {
  const Trajectory line = plan_trajectory(Pose::identity(), 20.0, 69.5, 0.0, 0.0, 0.5);
  EXPECT_THROW(fit_curvature(line.sample_points), CollinearPoints);
  EXPECT_THROW(fit_curvature(std::vector<Vec3>{Vec3(0, 0, 0), Vec3(1, 1, 1)}), TooFewSamples);
}

TEST(Fit, OutOfPlaneProjectionFlattensCurvature) {
  for (double roll : {10.0, 30.0, 60.0, -45.0}) {
    const Trajectory t = plan_trajectory(Pose::identity(), 20.0, 69.5, 45.0, roll, 0.5);
    std::vector<Vec3> projected;
    for (const auto& p : t.arc_points()) projected.emplace_back(p.x(), 0.0, p.z());
    EXPECT_GE(fit_curvature(projected).radius, 69.5) << "roll " << roll;
  }
}

TEST(Breach, CenteredNominalCase) {
  EXPECT_NEAR(breach_margin(pilot_with_offset(0.0), PedicleModel{}), 4.355, 1e-12);
  EXPECT_EQ(classify_breach(4.355), BreachClass::Clear);
}

TEST(Breach, BoundaryAndToleratedBreach) {
  EXPECT_NEAR(breach_margin(pilot_with_offset(4.355), PedicleModel{}), 0.0, 1e-12);
  const double m = breach_margin(pilot_with_offset(6.0), PedicleModel{});
  EXPECT_NEAR(m, -1.645, 1e-12);
  EXPECT_EQ(classify_breach(m), BreachClass::WithinTolerance);
  EXPECT_EQ(classify_breach(breach_margin(pilot_with_offset(9.0), PedicleModel{})), BreachClass::Unsafe);
}

TEST(Breach, MonotoneInLateralOffset) {
  double previous = breach_margin(pilot_with_offset(0.0), PedicleModel{});
  for (int i = 1; i <= 80; ++i) {
    const double m = breach_margin(pilot_with_offset(0.1 * i), PedicleModel{});
    EXPECT_LE(m, previous);
    previous = m;
  }
}

TEST(Breach, RejectsTunnelWiderThanCanal) {
  EXPECT_THROW(breach_margin(pilot_with_offset(0.0), PedicleModel{3.0, 4.0, Pose()}), InvalidParameter);
}

}  // namespace
}  // namespace spinenav
