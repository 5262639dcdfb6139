#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <random>
#include <vector>

#include "hwy/driver_models.hpp"
#include "hwy/dynamics.hpp"

namespace hwy {

struct SpeedRange {
  double min = 0.0;
  double max = 0.0;
};

struct RewardWeights {
  double lane_change = -1.0;
  double off_road = -20.0;
  double collision = -50.0;
  double ttc_violation = -5.0;
  double goal = 50.0;
};

struct HighwayConfig {
  int n_lanes = 3;
  int n_vehicles = 9;
  double d_long = 200.0;
  double d_gap_min = 25.0;
  SpeedRange rear_speed{15.0, 25.0};
  SpeedRange front_speed{10.0, 12.0};
  SpeedRange ego_speed{10.0, 15.0};
  SpeedRange desired_speed{18.0, 26.0};
  double ego_desired_speed = 25.0;
  double episode_length = 1000.0;
  double noise_level = 0.0;
  bool dynamic_actors = true;
  std::uint64_t seed = 0;

  double decision_dt = 1.0;
  double physics_dt = 0.1;
  double ds_max = 200.0;
  double v_max = 26.0;
  double ttc_threshold = 1.8;
  double lane_change_cooldown = 3.0;
  int max_ticks = 400;

  IdmParams idm;
  MobilParams mobil;
  SteeringParams steering;
  KinematicParams kinematics;
  RewardWeights rewards;

  void validate() const;
  std::size_t observation_size() const {
    return 3 + 3 * static_cast<std::size_t>(n_vehicles - 1);
  }
};

inline constexpr std::size_t kNumActions = 3;

using Observation = std::vector<double>;
using ActionMask = std::array<bool, kNumActions>;

inline int action_index(LaneDecision d) { return static_cast<int>(d); }
inline LaneDecision action_from_index(int i) {
  return static_cast<LaneDecision>(i);
}

/// Valid actions read off the lane-existence flags of an observation.
ActionMask mask_from_observation(const Observation& obs);

struct Vehicle {
  VehicleState state;
  double desired_speed = 0.0;
  SteeringState steering;
  double accel = 0.0;
  double cooldown = 0.0;  // seconds until another lane change may start
  int lane_changes = 0;
};

/// One other vehicle as the ego perceives it at a decision tick.
struct PerceivedVehicle {
  std::size_t index = 0;
  double ds = 0.0;  // x_i - x_ego, possibly noisy
  double dv = 0.0;  // v_i - v_ego, possibly noisy
  int lane = 0;
};

struct StepInfo {
  bool collision = false;
  bool ttc_violation = false;
  bool goal_reached = false;
  bool truncated = false;
  bool off_road_action = false;
  bool lane_change_started = false;
  int lane_changes_so_far = 0;
  int actor_lane_changes = 0;  // lane changes started by surrounding vehicles this tick
  int actor_collisions = 0;    // overlaps between two surrounding vehicles this tick
  double distance = 0.0;
};

struct StepOutcome {
  Observation observation;
  double reward = 0.0;
  bool done = false;
  StepInfo info;
};

struct EpisodeResult {
  std::uint64_t seed = 0;
  double total_reward = 0.0;
  int steps = 0;
  bool collision = false;
  bool goal_reached = false;
  double distance = 0.0;
  int lane_change_count = 0;
  double mean_speed = 0.0;
  int actor_lane_changes = 0;
};

/// Terms that make up one tick's reward.
struct RewardEvents {
  double v_current = 0.0;
  double v_initial = 0.0;
  double v_desired = 25.0;
  bool lane_change_started = false;
  bool off_road_action = false;
  bool collision = false;
  bool ttc_violation = false;
  bool goal_reached = false;
};

double reward(const RewardEvents& events, const RewardWeights& weights);

/// Time to collision to a lead; infinite when not closing in.
double time_to_collision(double bumper_gap, double closing_speed);

/// Axis-aligned footprint overlap test (symmetric in its arguments).
bool footprints_overlap(const VehicleState& a, const VehicleState& b);

/// Episodic highway scenario. The ego drives with IDM for speed and takes
/// lane decisions from the caller once per decision tick; every other vehicle
/// runs IDM and, when dynamic_actors is set, MOBIL.
class HighwayEnv {
 public:
  explicit HighwayEnv(HighwayConfig config);

  Observation reset(std::uint64_t episode_seed);

  /// One decision tick. Throws std::logic_error once the episode is done.
  StepOutcome step(LaneDecision action);

  const HighwayConfig& config() const { return config_; }
  const std::vector<Vehicle>& vehicles() const { return vehicles_; }
  std::size_t ego_index() const { return ego_; }
  const Vehicle& ego() const { return vehicles_[ego_]; }
  bool done() const { return done_; }
  int ticks() const { return ticks_; }
  std::uint64_t episode_seed() const { return episode_seed_; }
  double initial_ego_speed() const { return v_initial_; }

  /// The (noisy) perception snapshot the latest observation was built from,
  /// nearest vehicle first.
  const std::vector<PerceivedVehicle>& perception() const {
    return perception_;
  }
  const Observation& observation() const { return observation_; }
  ActionMask valid_actions() const;

  /// MOBIL input for the ego built from the perception snapshot. A vehicle
  /// in the middle of a lane change counts in both its lanes.
  MobilInput ego_mobil_input() const;

  /// MOBIL input for any vehicle from ground truth, with the same
  /// two-lane rule for vehicles that are changing lanes.
  MobilInput mobil_input(std::size_t subject) const;

  EpisodeResult result() const;

  /// Test hook: overwrite vehicle states. The ego index stays where it is.
  void set_vehicles(std::vector<Vehicle> vehicles, std::size_t ego_index);

 private:
  void spawn(std::mt19937_64& rng);
  void observe();
  static bool occupies(const Vehicle& v, int lane);
  LaneSituation lane_situation(std::size_t subject, int lane) const;
  double lead_gap_in_lane(std::size_t subject, int lane) const;
  bool start_lane_change(std::size_t i, LaneDecision d);

  HighwayConfig config_;
  std::vector<Vehicle> vehicles_;
  std::size_t ego_ = 0;
  std::uint64_t episode_seed_ = 0;
  std::mt19937_64 noise_rng_;
  std::vector<PerceivedVehicle> perception_;
  Observation observation_;

  double v_initial_ = 0.0;
  double x_start_ = 0.0;
  bool done_ = true;
  bool collided_ = false;
  bool goal_ = false;
  int ticks_ = 0;
  double total_reward_ = 0.0;
  double speed_sum_ = 0.0;
  int actor_lane_changes_ = 0;
};

/// Writes one CSV row per decision tick: tick, per-vehicle pose and lane, the
/// ego action, reward, and event flags.
class TraceWriter {
 public:
  TraceWriter(std::ostream& out, int n_vehicles);
  void record(const HighwayEnv& env, int tick, LaneDecision action,
              double reward, const StepInfo& info);

 private:
  std::ostream& out_;
};

}  // namespace hwy
