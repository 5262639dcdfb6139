#pragma once

#include <optional>

namespace hwy {

inline constexpr double kVehicleLength = 4.5;
inline constexpr double kVehicleWidth = 2.5;
inline constexpr double kLaneWidth = 4.0;

/// Pose and speed of one vehicle. Lane 0 is the rightmost lane and y grows
/// to the left, so lane k is centered at y = k * kLaneWidth + kLaneWidth / 2.
struct VehicleState {
  double x = 0.0;    // longitudinal position (m)
  double y = 0.0;    // lateral position (m)
  double psi = 0.0;  // heading (rad)
  double v = 0.0;    // speed (m/s)
  int lane_id = 0;
};

struct KinematicParams {
  double wheelbase = 2.8;
  double rear_length = 1.4;  // rear axle to reference point

  void validate() const;
};

struct SteeringParams {
  double near_dist = 5.0;
  double far_dist = 100.0;
  double k_far = 20.0;
  double k_near = 9.0;
  double k_int = 10.0;  // 1/s
  double max_steer = 0.5;

  void validate() const;
};

/// Controller memory for the two-point steering law.
struct SteeringState {
  int target_lane = 0;
  double integral = 0.0;  // accumulated near-point angle (rad*s)
  bool in_progress = false;

  /// Points the controller at a new lane. The integral restarts from zero.
  void retarget(int lane);
};

struct SteerCommand {
  double raw = 0.0;    // unclamped PI output
  double angle = 0.0;  // raw clamped to +-max_steer
  SteeringState next;
};

double lane_center(int lane);

/// Lane whose center is nearest to y, clamped to [0, n_lanes - 1].
int lane_of(double y, int n_lanes);

/// Advances the kinematic bicycle model by dt with constant accel and steer.
/// Integrated with RK4; speed never goes negative (the vehicle stops and
/// stays stopped under braking).
VehicleState bicycle_step(const VehicleState& state, double accel, double steer,
                          double dt, int n_lanes,
                          const KinematicParams& params = {});

/// Two-point visual steering. The near and far preview points sit on the
/// target lane centerline at l_n and l_f ahead; when the target lane has a
/// lead vehicle, lead_gap (center to center) replaces l_f.
SteerCommand two_point_steer(const VehicleState& state,
                             const SteeringState& steering,
                             double target_lane_center_y,
                             std::optional<double> lead_gap,
                             const SteeringParams& params, double dt);

bool lane_change_complete(const VehicleState& state,
                          double target_lane_center_y);

/// Default inner integration step for the steering loop. The heading mode of
/// the closed loop is fast (~v*(k_far+k_near)/wheelbase), so the controller
/// must be sampled much finer than the 0.1 s physics step.
inline constexpr double kControlDt = 0.005;

struct LateralStepResult {
  VehicleState state;
  SteeringState steering;
  double last_steer = 0.0;
};

/// Runs the steering controller and bicycle model over one physics step of
/// length dt using substeps of at most control_dt. Acceleration, target lane
/// and lead gap are held for the whole step. Completion of an in-progress
/// lane change is detected at every substep; on completion the integral is
/// cleared.
LateralStepResult drive_step(const VehicleState& state,
                             const SteeringState& steering, double accel,
                             std::optional<double> target_lead_gap, double dt,
                             int n_lanes, const SteeringParams& steer_params,
                             const KinematicParams& kin_params = {},
                             double control_dt = kControlDt);

}  // namespace hwy
