#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "hwy/dynamics.hpp"

using namespace hwy;

namespace {

VehicleState at(double y, double v, double psi = 0.0) {
  VehicleState s;
  s.y = y;
  s.v = v;
  s.psi = psi;
  s.lane_id = lane_of(y, 3);
  return s;
}

// Forward Euler on the same ODE with a tiny step.
VehicleState fine_euler(VehicleState s, double accel, double steer, double T,
                        double h, const KinematicParams& p) {
  const double beta = std::atan(p.rear_length / p.wheelbase * std::tan(steer));
  for (int i = 0; i < static_cast<int>(std::lround(T / h)); ++i) {
    s.x += s.v * std::cos(s.psi + beta) * h;
    s.y += s.v * std::sin(s.psi + beta) * h;
    s.psi += s.v / p.rear_length * std::sin(beta) * h;
    s.v = std::max(0.0, s.v + accel * h);
  }
  return s;
}

struct LaneChangeRun {
  double completion_time = -1.0;
  double overshoot = 0.0;
  VehicleState final_state;
};

LaneChangeRun run_lane_change(double v, double dt, double T,
                              double control_dt = kControlDt) {
  VehicleState s = at(lane_center(0), v);
  SteeringState st;
  st.retarget(1);
  st.in_progress = true;
  const double target = lane_center(1);
  LaneChangeRun out;
  bool crossed = false;
  const int steps = static_cast<int>(std::lround(T / dt));
  for (int k = 0; k < steps; ++k) {
    const auto r = drive_step(s, st, 0.0, std::nullopt, dt, 3, SteeringParams{},
                              KinematicParams{}, control_dt);
    s = r.state;
    st = r.steering;
    if (s.y >= target) crossed = true;
    if (crossed) out.overshoot = std::max(out.overshoot, std::abs(s.y - target));
    if (!st.in_progress && out.completion_time < 0) out.completion_time = (k + 1) * dt;
  }
  out.final_state = s;
  return out;
}

}  // namespace

TEST(Lanes, CentersAndAttribution) {
  EXPECT_DOUBLE_EQ(lane_center(0), 2.0);
  EXPECT_DOUBLE_EQ(lane_center(2), 10.0);
  EXPECT_EQ(lane_of(1.9, 3), 0);
  EXPECT_EQ(lane_of(4.1, 3), 1);
  EXPECT_EQ(lane_of(-3.0, 3), 0);
  EXPECT_EQ(lane_of(50.0, 3), 2);
}

TEST(BicycleStep, StraightLineAdvancesExactly) {
  const auto s = bicycle_step(at(2.0, 20.0), 0.0, 0.0, 0.1, 3);
  EXPECT_NEAR(s.x, 2.0, 1e-12);
  EXPECT_DOUBLE_EQ(s.y, 2.0);
  EXPECT_DOUBLE_EQ(s.psi, 0.0);
}

TEST(BicycleStep, StraightLinePropertyOverSpeeds) {
  for (double v = 0.0; v <= 30.0; v += 0.75) {
    VehicleState s = at(6.0, v);
    for (int k = 0; k < 20; ++k) {
      const double x0 = s.x;
      s = bicycle_step(s, 0.0, 0.0, 0.1, 3);
      EXPECT_NEAR(s.x - x0, v * 0.1, 1e-12);
    }
    EXPECT_DOUBLE_EQ(s.y, 6.0);
    EXPECT_DOUBLE_EQ(s.psi, 0.0);
  }
}

TEST(BicycleStep, ZeroSpeedIsFixedPoint) {
  for (double steer : {-0.5, 0.0, 0.3}) {
    const VehicleState s0 = at(2.0, 0.0);
    const auto s = bicycle_step(s0, 0.0, steer, 0.1, 3);
    EXPECT_DOUBLE_EQ(s.x, s0.x);
    EXPECT_DOUBLE_EQ(s.y, s0.y);
    EXPECT_DOUBLE_EQ(s.psi, s0.psi);
    EXPECT_DOUBLE_EQ(s.v, 0.0);
  }
}

TEST(BicycleStep, MatchesFineIntegrator) {
  const KinematicParams p;
  const VehicleState s0 = at(2.0, 20.0);
  const auto coarse = bicycle_step(s0, 0.0, 0.05, 0.1, 3, p);
  const auto fine = fine_euler(s0, 0.0, 0.05, 0.1, 1e-4, p);
  EXPECT_NEAR(coarse.psi, fine.psi, 1e-3 * std::abs(fine.psi));
  EXPECT_NEAR(coarse.y - s0.y, fine.y - s0.y, 1e-3 * std::abs(fine.y - s0.y));
}

TEST(BicycleStep, BrakingStopsWithoutReversing) {
  VehicleState s = at(2.0, 1.0);
  double last_x = s.x;
  for (int k = 0; k < 20; ++k) {
    s = bicycle_step(s, -20.0, 0.0, 0.1, 3);
    EXPECT_GE(s.v, 0.0);
    EXPECT_GE(s.x, last_x);
    last_x = s.x;
  }
  EXPECT_DOUBLE_EQ(s.v, 0.0);
  // Stops after 0.05 s having covered v^2 / (2|a|).
  EXPECT_NEAR(s.x, 1.0 / 40.0, 1e-12);
}

TEST(BicycleStep, RejectsBadInput) {
  EXPECT_THROW(bicycle_step(at(2.0, 10.0), 0.0, 0.0, 0.0, 3), std::invalid_argument);
  EXPECT_THROW(bicycle_step(at(2.0, 10.0), 0.0, NAN, 0.1, 3), std::invalid_argument);
}

TEST(BicycleStep, HeadingStaysBounded) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> steer(-0.5, 0.5);
  std::uniform_real_distribution<double> acc(-3.0, 1.0);
  VehicleState s = at(6.0, 25.0);
  for (int k = 0; k < 2000; ++k) {
    s = bicycle_step(s, acc(rng), steer(rng), 0.1, 3);
    ASSERT_LT(std::abs(s.psi), M_PI / 2);
    ASSERT_GE(s.v, 0.0);
    ASSERT_GE(s.lane_id, 0);
    ASSERT_LE(s.lane_id, 2);
  }
}

TEST(TwoPointSteer, CenteredGivesZero) {
  SteeringState st;
  const auto cmd = two_point_steer(at(6.0, 20.0), st, 6.0, std::nullopt,
                                   SteeringParams{}, 0.1);
  EXPECT_DOUBLE_EQ(cmd.raw, 0.0);
  EXPECT_DOUBLE_EQ(cmd.angle, 0.0);
  EXPECT_DOUBLE_EQ(cmd.next.integral, 0.0);
}

TEST(TwoPointSteer, HandComputedOffset) {
  SteeringState st;
  const auto cmd = two_point_steer(at(2.0, 20.0), st, 6.0, std::nullopt,
                                   SteeringParams{}, 0.1);
  const double theta_n = std::atan2(4.0, 5.0);
  const double theta_f = std::atan2(4.0, 100.0);
  EXPECT_NEAR(cmd.raw, 20.0 * theta_f + 9.0 * theta_n, 1e-12);
  EXPECT_DOUBLE_EQ(cmd.angle, 0.5);
  EXPECT_NEAR(cmd.next.integral, theta_n * 0.1, 1e-15);
}

TEST(TwoPointSteer, IntegralTermUsesStoredValue) {
  SteeringState st;
  st.integral = 0.01;
  const auto cmd = two_point_steer(at(6.0, 20.0), st, 6.0, std::nullopt,
                                   SteeringParams{}, 0.1);
  EXPECT_NEAR(cmd.raw, 10.0 * 0.01, 1e-15);
}

TEST(TwoPointSteer, LeadShortensFarPoint) {
  SteeringState st;
  const auto empty = two_point_steer(at(2.0, 20.0), st, 6.0, std::nullopt,
                                     SteeringParams{}, 0.1);
  const auto lead = two_point_steer(at(2.0, 20.0), st, 6.0, 50.0,
                                    SteeringParams{}, 0.1);
  EXPECT_NEAR(lead.raw - empty.raw,
              20.0 * (std::atan2(4.0, 50.0) - std::atan2(4.0, 100.0)), 1e-12);
  EXPECT_GT(lead.raw, empty.raw);
  // A lead beyond the far point does not extend it.
  const auto far = two_point_steer(at(2.0, 20.0), st, 6.0, 300.0,
                                   SteeringParams{}, 0.1);
  EXPECT_DOUBLE_EQ(far.raw, empty.raw);
}

TEST(TwoPointSteer, RejectsBadInput) {
  SteeringState st;
  EXPECT_THROW(two_point_steer(at(2.0, 20.0), st, 6.0, std::nullopt,
                               SteeringParams{}, 0.0),
               std::invalid_argument);
  EXPECT_THROW(two_point_steer(at(2.0, 20.0), st, 6.0, 0.0, SteeringParams{}, 0.1),
               std::invalid_argument);
}

TEST(SteeringState, RetargetZeroesIntegral) {
  SteeringState st;
  st.target_lane = 0;
  st.integral = 0.7;
  st.retarget(1);
  EXPECT_EQ(st.target_lane, 1);
  EXPECT_DOUBLE_EQ(st.integral, 0.0);
}

TEST(SteeringParams, Validation) {
  EXPECT_NO_THROW(SteeringParams{}.validate());
  SteeringParams p;
  p.far_dist = 3.0;
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p = SteeringParams{};
  p.k_int = 0.0;
  EXPECT_THROW(p.validate(), std::invalid_argument);
}

TEST(LaneChangeComplete, Tolerances) {
  EXPECT_TRUE(lane_change_complete(at(6.0, 20.0), 6.0));
  EXPECT_FALSE(lane_change_complete(at(6.5, 20.0), 6.0));
  EXPECT_TRUE(lane_change_complete(at(6.05, 20.0, 0.01), 6.0));
  EXPECT_FALSE(lane_change_complete(at(6.05, 20.0, 0.03), 6.0));
}

TEST(DriveStep, LaneChangeConvergesWithoutOvershoot) {
  const auto run = run_lane_change(20.0, 0.1, 20.0);
  ASSERT_GT(run.completion_time, 0.0);
  EXPECT_LE(run.completion_time, 10.0);
  EXPECT_LE(run.overshoot, 0.5);
  EXPECT_EQ(run.final_state.lane_id, 1);
}

TEST(DriveStep, ConvergesAcrossSpeeds) {
  for (double v : {10.0, 15.0, 25.0}) {
    const auto run = run_lane_change(v, 0.1, 20.0);
    EXPECT_GT(run.completion_time, 0.0) << "v=" << v;
    EXPECT_LE(run.overshoot, 0.5) << "v=" << v;
  }
}

TEST(DriveStep, RefiningStepBarelyMovesEndpoint) {
  const double y1 = run_lane_change(20.0, 0.1, 10.0).final_state.y;
  const double y2 = run_lane_change(20.0, 0.05, 10.0).final_state.y;
  EXPECT_LT(std::abs(y1 - y2), 0.01 * std::abs(y1));
  const double y3 = run_lane_change(20.0, 0.1, 10.0, kControlDt / 2).final_state.y;
  EXPECT_LT(std::abs(y1 - y3), 0.01 * std::abs(y1));
}

TEST(DriveStep, CompletionClearsIntegral) {
  VehicleState s = at(lane_center(0), 20.0);
  SteeringState st;
  st.retarget(1);
  st.in_progress = true;
  for (int k = 0; k < 4000 && st.in_progress; ++k) {
    const auto r = drive_step(s, st, 0.0, std::nullopt, kControlDt, 3, SteeringParams{});
    s = r.state;
    st = r.steering;
  }
  ASSERT_FALSE(st.in_progress);
  EXPECT_DOUBLE_EQ(st.integral, 0.0);
}

TEST(DriveStep, LaneKeepingStaysPut) {
  VehicleState s = at(lane_center(1), 20.0);
  SteeringState st;
  st.target_lane = 1;
  for (int k = 0; k < 100; ++k) {
    const auto r = drive_step(s, st, 0.5, std::nullopt, 0.1, 3, SteeringParams{});
    s = r.state;
    st = r.steering;
  }
  EXPECT_DOUBLE_EQ(s.y, lane_center(1));
  EXPECT_DOUBLE_EQ(s.psi, 0.0);
}
