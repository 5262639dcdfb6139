#include "hwy/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hwy {

namespace {

constexpr double kCompleteLateralTol = 0.1;
constexpr double kCompleteHeadingTol = 0.02;
constexpr double kMaxHeading = 1.5;  // keeps |psi| < pi/2

struct Derivative {
  double dx, dy, dpsi;
};

Derivative kinematics(double psi, double v, double beta, double rear_length) {
  return {v * std::cos(psi + beta), v * std::sin(psi + beta),
          v / rear_length * std::sin(beta)};
}

}  // namespace

void KinematicParams::validate() const {
  if (!(wheelbase > 0)) throw std::invalid_argument("wheelbase must be > 0");
  if (!(rear_length > 0 && rear_length <= wheelbase)) {
    throw std::invalid_argument("rear_length must be in (0, wheelbase]");
  }
}

void SteeringParams::validate() const {
  auto require = [](bool ok, const char* message) {
    if (!ok) throw std::invalid_argument(message);
  };
  require(near_dist > 0, "near_dist must be > 0");
  require(far_dist > near_dist, "far_dist must be > near_dist");
  require(k_far > 0, "k_far must be > 0");
  require(k_near > 0, "k_near must be > 0");
  require(k_int > 0, "k_int must be > 0");
  require(max_steer > 0, "max_steer must be > 0");
}

void SteeringState::retarget(int lane) {
  if (lane != target_lane) integral = 0.0;
  target_lane = lane;
}

double lane_center(int lane) { return lane * kLaneWidth + 0.5 * kLaneWidth; }

int lane_of(double y, int n_lanes) {
  const int lane = static_cast<int>(std::floor(y / kLaneWidth));
  return std::clamp(lane, 0, n_lanes - 1);
}

VehicleState bicycle_step(const VehicleState& state, double accel, double steer,
                          double dt, int n_lanes,
                          const KinematicParams& params) {
  if (!(dt > 0)) throw std::invalid_argument("bicycle_step: dt must be > 0");
  if (!std::isfinite(steer) || !std::isfinite(accel)) {
    throw std::invalid_argument("bicycle_step: non-finite input");
  }

  const double beta =
      std::atan(params.rear_length / params.wheelbase * std::tan(steer));

  // Under braking the vehicle may stop inside the step; integrate only up to
  // the stopping time.
  double h = dt;
  if (accel < 0 && state.v + accel * dt < 0) h = state.v / -accel;

  VehicleState next = state;
  if (h > 0) {
    const double v0 = state.v;
    const double psi0 = state.psi;
    // Speed is linear in time, so RK4 stages use exact intermediate speeds.
    const double v_mid = v0 + accel * 0.5 * h;
    const double v_end = v0 + accel * h;
    const Derivative k1 = kinematics(psi0, v0, beta, params.rear_length);
    const Derivative k2 =
        kinematics(psi0 + 0.5 * h * k1.dpsi, v_mid, beta, params.rear_length);
    const Derivative k3 =
        kinematics(psi0 + 0.5 * h * k2.dpsi, v_mid, beta, params.rear_length);
    const Derivative k4 =
        kinematics(psi0 + h * k3.dpsi, v_end, beta, params.rear_length);
    next.x += h / 6.0 * (k1.dx + 2.0 * k2.dx + 2.0 * k3.dx + k4.dx);
    next.y += h / 6.0 * (k1.dy + 2.0 * k2.dy + 2.0 * k3.dy + k4.dy);
    next.psi += h / 6.0 * (k1.dpsi + 2.0 * k2.dpsi + 2.0 * k3.dpsi + k4.dpsi);
    next.psi = std::clamp(next.psi, -kMaxHeading, kMaxHeading);
  }
  next.v = std::max(0.0, state.v + accel * dt);
  next.lane_id = lane_of(next.y, n_lanes);
  return next;
}

SteerCommand two_point_steer(const VehicleState& state,
                             const SteeringState& steering,
                             double target_lane_center_y,
                             std::optional<double> lead_gap,
                             const SteeringParams& params, double dt) {
  if (!(dt > 0)) throw std::invalid_argument("two_point_steer: dt must be > 0");
  if (lead_gap && !(*lead_gap > 0)) {
    throw std::invalid_argument("two_point_steer: lead gap must be > 0");
  }
  const double far = lead_gap ? std::min(*lead_gap, params.far_dist)
                              : params.far_dist;
  const double lateral_error = target_lane_center_y - state.y;
  const double theta_near =
      std::atan2(lateral_error, params.near_dist) - state.psi;
  const double theta_far = std::atan2(lateral_error, far) - state.psi;

  SteerCommand cmd;
  cmd.raw = params.k_far * theta_far + params.k_near * theta_near +
            params.k_int * steering.integral;
  cmd.angle = std::clamp(cmd.raw, -params.max_steer, params.max_steer);
  cmd.next = steering;
  cmd.next.integral += theta_near * dt;
  return cmd;
}

bool lane_change_complete(const VehicleState& state,
                          double target_lane_center_y) {
  return std::abs(state.y - target_lane_center_y) < kCompleteLateralTol &&
         std::abs(state.psi) < kCompleteHeadingTol;
}

LateralStepResult drive_step(const VehicleState& state,
                             const SteeringState& steering, double accel,
                             std::optional<double> target_lead_gap, double dt,
                             int n_lanes, const SteeringParams& steer_params,
                             const KinematicParams& kin_params,
                             double control_dt) {
  const int substeps =
      std::max(1, static_cast<int>(std::ceil(dt / control_dt - 1e-9)));
  const double h = dt / substeps;
  const double target_y = lane_center(steering.target_lane);

  LateralStepResult out{state, steering, 0.0};
  for (int i = 0; i < substeps; ++i) {
    const SteerCommand cmd = two_point_steer(out.state, out.steering, target_y,
                                             target_lead_gap, steer_params, h);
    out.steering = cmd.next;
    out.last_steer = cmd.angle;
    out.state =
        bicycle_step(out.state, accel, cmd.angle, h, n_lanes, kin_params);
    if (out.steering.in_progress &&
        lane_change_complete(out.state, target_y)) {
      out.steering.in_progress = false;
      out.steering.integral = 0.0;
    }
  }
  return out;
}

}  // namespace hwy
