#include "hwy/highway_env.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>

namespace hwy {

namespace {

constexpr int kMaxSpawnAttempts = 1000;

// splitmix64 finalizer, used to derive independent stream seeds.
std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double uniform(std::mt19937_64& rng, SpeedRange r) {
  return std::uniform_real_distribution<double>(r.min, r.max)(rng);
}

void check_range(const SpeedRange& r, const char* name) {
  if (!(r.min <= r.max) || r.min < 0) {
    throw std::invalid_argument(std::string("invalid range: ") + name);
  }
}

}  // namespace

void HighwayConfig::validate() const {
  auto require = [](bool ok, const char* message) {
    if (!ok) throw std::invalid_argument(message);
  };
  require(n_lanes >= 1, "n_lanes must be >= 1");
  require(n_vehicles >= 1 && n_vehicles % 2 == 1, "n_vehicles must be odd");
  require(d_long > 0, "d_long must be > 0");
  require(d_gap_min >= 0, "d_gap_min must be >= 0");
  check_range(rear_speed, "rear_speed");
  check_range(front_speed, "front_speed");
  check_range(ego_speed, "ego_speed");
  check_range(desired_speed, "desired_speed");
  require(desired_speed.min > 0, "desired_speed must be > 0");
  require(ego_desired_speed > 0, "ego_desired_speed must be > 0");
  require(episode_length > 0, "episode_length must be > 0");
  require(noise_level >= 0, "noise_level must be >= 0");
  require(physics_dt > 0, "physics_dt must be > 0");
  require(decision_dt >= physics_dt, "decision_dt must be >= physics_dt");
  require(ds_max > 0, "ds_max must be > 0");
  require(v_max > 0, "v_max must be > 0");
  require(ttc_threshold >= 0, "ttc_threshold must be >= 0");
  require(lane_change_cooldown >= 0, "lane_change_cooldown must be >= 0");
  require(max_ticks >= 1, "max_ticks must be >= 1");
  idm.validate();
  mobil.validate();
  steering.validate();
  kinematics.validate();
}

ActionMask mask_from_observation(const Observation& obs) {
  return {true, obs.at(1) > 0.5, obs.at(2) > 0.5};
}

double reward(const RewardEvents& e, const RewardWeights& w) {
  double r = (e.v_current - e.v_initial) / e.v_desired;
  if (e.lane_change_started) r += w.lane_change;
  if (e.off_road_action) r += w.off_road;
  if (e.collision) r += w.collision;
  if (e.ttc_violation) r += w.ttc_violation;
  if (e.goal_reached) r += w.goal;
  return r;
}

double time_to_collision(double bumper_gap, double closing_speed) {
  if (!(closing_speed > 0)) return std::numeric_limits<double>::infinity();
  return std::max(bumper_gap, 0.0) / closing_speed;
}

bool footprints_overlap(const VehicleState& a, const VehicleState& b) {
  return std::abs(a.x - b.x) < kVehicleLength &&
         std::abs(a.y - b.y) < kVehicleWidth;
}

HighwayEnv::HighwayEnv(HighwayConfig config) : config_(std::move(config)) {
  config_.validate();
}

void HighwayEnv::spawn(std::mt19937_64& rng) {
  const int m = config_.n_vehicles;
  std::uniform_real_distribution<double> pos(0.0, config_.d_long);
  std::uniform_int_distribution<int> lane(0, config_.n_lanes - 1);

  std::vector<std::pair<double, int>> points;
  for (int attempt = 0; attempt < kMaxSpawnAttempts; ++attempt) {
    points.clear();
    bool ok = true;
    for (int i = 0; i < m && ok; ++i) {
      const double x = pos(rng);
      const int l = lane(rng);
      for (const auto& [px, pl] : points) {
        if (pl == l && std::abs(px - x) < config_.d_gap_min) {
          ok = false;
          break;
        }
      }
      points.emplace_back(x, l);
    }
    if (ok) break;
    if (attempt + 1 == kMaxSpawnAttempts) {
      throw std::runtime_error(
          "highway initialization failed: minimum inter-vehicle distance "
          "could not be met after 1000 attempts");
    }
  }
  std::sort(points.begin(), points.end());

  vehicles_.assign(m, Vehicle{});
  ego_ = static_cast<std::size_t>(m / 2);
  for (int i = 0; i < m; ++i) {
    Vehicle& veh = vehicles_[i];
    veh.state.x = points[i].first;
    veh.state.lane_id = points[i].second;
    veh.state.y = lane_center(points[i].second);
    veh.state.psi = 0.0;
    veh.steering.target_lane = points[i].second;
    const auto idx = static_cast<std::size_t>(i);
    if (idx < ego_) {
      veh.state.v = uniform(rng, config_.rear_speed);
    } else if (idx > ego_) {
      veh.state.v = uniform(rng, config_.front_speed);
    } else {
      veh.state.v = uniform(rng, config_.ego_speed);
    }
  }
  for (std::size_t i = 0; i < vehicles_.size(); ++i) {
    vehicles_[i].desired_speed = i == ego_ ? config_.ego_desired_speed
                                           : uniform(rng, config_.desired_speed);
  }
}

Observation HighwayEnv::reset(std::uint64_t episode_seed) {
  episode_seed_ = episode_seed;
  std::mt19937_64 scenario_rng(mix_seed(episode_seed));
  noise_rng_.seed(mix_seed(episode_seed ^ 0x6e6f697365ULL));
  spawn(scenario_rng);

  v_initial_ = ego().state.v;
  x_start_ = ego().state.x;
  done_ = false;
  collided_ = false;
  goal_ = false;
  ticks_ = 0;
  total_reward_ = 0.0;
  speed_sum_ = 0.0;
  actor_lane_changes_ = 0;
  observe();
  return observation_;
}

void HighwayEnv::set_vehicles(std::vector<Vehicle> vehicles, std::size_t ego_index) {
  if (vehicles.size() != static_cast<std::size_t>(config_.n_vehicles) ||
      ego_index >= vehicles.size()) {
    throw std::invalid_argument("set_vehicles: wrong vehicle count or ego");
  }
  vehicles_ = std::move(vehicles);
  for (auto& v : vehicles_) {
    v.state.lane_id = lane_of(v.state.y, config_.n_lanes);
  }
  ego_ = ego_index;
  v_initial_ = ego().state.v;
  x_start_ = ego().state.x;
  done_ = false;
  collided_ = false;
  goal_ = false;
  ticks_ = 0;
  total_reward_ = 0.0;
  speed_sum_ = 0.0;
  actor_lane_changes_ = 0;
  observe();
}

void HighwayEnv::observe() {
  const Vehicle& me = ego();
  perception_.clear();
  std::normal_distribution<double> eps(
      0.0, config_.noise_level > 0 ? config_.noise_level : 1.0);
  for (std::size_t i = 0; i < vehicles_.size(); ++i) {
    if (i == ego_) continue;
    const VehicleState& s = vehicles_[i].state;
    PerceivedVehicle p{i, s.x - me.state.x, s.v - me.state.v, s.lane_id};
    if (config_.noise_level > 0) {
      p.ds *= 1.0 + eps(noise_rng_);
      p.dv *= 1.0 + eps(noise_rng_);
    }
    perception_.push_back(p);
  }
  std::stable_sort(perception_.begin(), perception_.end(),
                   [](const PerceivedVehicle& a, const PerceivedVehicle& b) {
                     return std::abs(a.ds) < std::abs(b.ds);
                   });

  const int lane = me.state.lane_id;
  observation_.assign(config_.observation_size(), 0.0);
  observation_[0] = me.state.v / me.desired_speed;
  observation_[1] = lane < config_.n_lanes - 1 ? 1.0 : 0.0;
  observation_[2] = lane > 0 ? 1.0 : 0.0;
  for (std::size_t k = 0; k < perception_.size(); ++k) {
    const PerceivedVehicle& p = perception_[k];
    observation_[3 + 3 * k] = std::clamp(p.ds / config_.ds_max, -1.0, 1.0);
    observation_[4 + 3 * k] = p.dv / config_.v_max;
    observation_[5 + 3 * k] = std::clamp(0.5 * (p.lane - lane), -1.0, 1.0);
  }
}

ActionMask HighwayEnv::valid_actions() const {
  const int lane = ego().state.lane_id;
  return {true, lane < config_.n_lanes - 1, lane > 0};
}

LaneSituation HighwayEnv::lane_situation(std::size_t subject, int lane) const {
  const Vehicle& me = vehicles_[subject];
  const Vehicle* lead = nullptr;
  const Vehicle* follower = nullptr;
  double best_ahead = 0.0;
  double best_behind = 0.0;
  for (std::size_t i = 0; i < vehicles_.size(); ++i) {
    if (i == subject || !occupies(vehicles_[i], lane)) continue;
    const double dx = vehicles_[i].state.x - me.state.x;
    if (dx > 0 || (dx == 0 && i > subject)) {
      if (!lead || dx < best_ahead) {
        best_ahead = dx;
        lead = &vehicles_[i];
      }
    } else if (!follower || -dx < best_behind) {
      best_behind = -dx;
      follower = &vehicles_[i];
    }
  }
  LaneSituation out;
  if (lead) {
    out.lead = MobilVehicle{best_ahead - kVehicleLength, lead->state.v,
                            lead->desired_speed};
  }
  if (follower) {
    out.follower = MobilVehicle{best_behind - kVehicleLength,
                                follower->state.v, follower->desired_speed};
  }
  return out;
}

MobilInput HighwayEnv::mobil_input(std::size_t subject) const {
  const Vehicle& v = vehicles_.at(subject);
  const int lane = v.state.lane_id;
  MobilInput in;
  in.v = v.state.v;
  in.v_desired = v.desired_speed;
  in.current = lane_situation(subject, lane);
  if (lane < config_.n_lanes - 1) in.left = lane_situation(subject, lane + 1);
  if (lane > 0) in.right = lane_situation(subject, lane - 1);
  return in;
}

MobilInput HighwayEnv::ego_mobil_input() const {
  const Vehicle& me = ego();
  const int lane = me.state.lane_id;
  auto situation = [&](int l) {
    LaneSituation s;
    const PerceivedVehicle* lead = nullptr;
    const PerceivedVehicle* follower = nullptr;
    for (const auto& p : perception_) {
      const Vehicle& other = vehicles_[p.index];
      if (p.lane != l && !(other.steering.in_progress &&
                           other.steering.target_lane == l)) {
        continue;
      }
      if (p.ds > 0) {
        if (!lead || p.ds < lead->ds) lead = &p;
      } else if (!follower || p.ds > follower->ds) {
        follower = &p;
      }
    }
    if (lead) {
      s.lead = MobilVehicle{lead->ds - kVehicleLength, me.state.v + lead->dv,
                            vehicles_[lead->index].desired_speed};
    }
    if (follower) {
      s.follower =
          MobilVehicle{-follower->ds - kVehicleLength,
                       me.state.v + follower->dv,
                       vehicles_[follower->index].desired_speed};
    }
    return s;
  };
  MobilInput in;
  in.v = me.state.v;
  in.v_desired = me.desired_speed;
  in.current = situation(lane);
  if (lane < config_.n_lanes - 1) in.left = situation(lane + 1);
  if (lane > 0) in.right = situation(lane - 1);
  return in;
}

bool HighwayEnv::start_lane_change(std::size_t i, LaneDecision d) {
  Vehicle& v = vehicles_[i];
  const int lane = v.state.lane_id;
  int target = lane;
  if (d == LaneDecision::ChangeLeft) target = lane + 1;
  if (d == LaneDecision::ChangeRight) target = lane - 1;
  if (target == lane || target < 0 || target >= config_.n_lanes) return false;
  v.steering.retarget(target);
  v.steering.in_progress = true;
  ++v.lane_changes;
  return true;
}

bool HighwayEnv::occupies(const Vehicle& v, int lane) {
  return v.state.lane_id == lane ||
         (v.steering.in_progress && v.steering.target_lane == lane);
}

double HighwayEnv::lead_gap_in_lane(std::size_t subject, int lane) const {
  double best = std::numeric_limits<double>::infinity();
  const double x = vehicles_[subject].state.x;
  for (std::size_t i = 0; i < vehicles_.size(); ++i) {
    if (i == subject || vehicles_[i].state.lane_id != lane) continue;
    const double dx = vehicles_[i].state.x - x;
    if (dx > 0 && dx < best) best = dx;
  }
  return best;
}

StepOutcome HighwayEnv::step(LaneDecision action) {
  if (done_) throw std::logic_error("step() called on a finished episode");

  StepOutcome out;
  StepInfo& info = out.info;
  const int n = config_.n_lanes;

  // Ego decision.
  Vehicle& me = vehicles_[ego_];
  if (!me.steering.in_progress && action != LaneDecision::KeepLane) {
    const int lane = me.state.lane_id;
    const bool off_road =
        (action == LaneDecision::ChangeLeft && lane >= n - 1) ||
        (action == LaneDecision::ChangeRight && lane <= 0);
    if (off_road) {
      info.off_road_action = true;
    } else {
      info.lane_change_started = start_lane_change(ego_, action);
    }
  }

  // Surrounding vehicles decide in index order on the tick-start poses. A
  // started lane change claims its target lane for everyone deciding later.
  if (config_.dynamic_actors) {
    for (std::size_t i = 0; i < vehicles_.size(); ++i) {
      if (i == ego_) continue;
      const Vehicle& v = vehicles_[i];
      if (v.steering.in_progress || v.cooldown > 0) continue;
      const LaneDecision d =
          mobil_decide(mobil_input(i), config_.idm, config_.mobil);
      if (d != LaneDecision::KeepLane && start_lane_change(i, d)) {
        ++info.actor_lane_changes;
      }
    }
    actor_lane_changes_ += info.actor_lane_changes;
  }

  const int substeps = std::max(
      1, static_cast<int>(std::lround(config_.decision_dt / config_.physics_dt)));
  const double dt = config_.physics_dt;
  std::vector<VehicleState> states(vehicles_.size());
  std::vector<std::optional<double>> steer_gaps(vehicles_.size());

  for (int k = 0; k < substeps && !collided_; ++k) {
    for (std::size_t i = 0; i < vehicles_.size(); ++i) {
      states[i] = vehicles_[i].state;
    }
    for (std::size_t i = 0; i < vehicles_.size(); ++i) {
      Vehicle& v = vehicles_[i];
      const NeighborView view = neighbor_view(states, i, v.state.lane_id);
      if (view.lead) {
        v.accel = idm_accel(v.state.v, v.desired_speed,
                            std::max(view.lead->gap, kMinEvalGap),
                            v.state.v - view.lead->speed, config_.idm);
      } else {
        v.accel = idm_free_road(v.state.v, v.desired_speed, config_.idm);
      }
      if (v.state.v >= config_.v_max && v.accel > 0) v.accel = 0.0;
      const double gap = lead_gap_in_lane(i, v.steering.target_lane);
      steer_gaps[i] = std::isfinite(gap) ? std::optional<double>(gap)
                                         : std::nullopt;
    }
    for (std::size_t i = 0; i < vehicles_.size(); ++i) {
      Vehicle& v = vehicles_[i];
      const bool was_changing = v.steering.in_progress;
      const LateralStepResult r =
          drive_step(v.state, v.steering, v.accel, steer_gaps[i], dt, n,
                     config_.steering, config_.kinematics);
      v.state = r.state;
      v.state.v = std::min(v.state.v, config_.v_max);
      v.steering = r.steering;
      v.cooldown = std::max(0.0, v.cooldown - dt);
      if (was_changing && !v.steering.in_progress && i != ego_) {
        v.cooldown = config_.lane_change_cooldown;
      }
    }

    for (std::size_t i = 0; i < vehicles_.size(); ++i) {
      for (std::size_t j = i + 1; j < vehicles_.size(); ++j) {
        if (!footprints_overlap(vehicles_[i].state, vehicles_[j].state)) {
          continue;
        }
        if (i == ego_ || j == ego_) {
          collided_ = true;
        } else {
          ++info.actor_collisions;
        }
      }
    }

    const double gap = lead_gap_in_lane(ego_, ego().state.lane_id);
    if (std::isfinite(gap)) {
      double lead_v = 0.0;
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < vehicles_.size(); ++i) {
        if (i == ego_ || vehicles_[i].state.lane_id != ego().state.lane_id) {
          continue;
        }
        const double dx = vehicles_[i].state.x - ego().state.x;
        if (dx > 0 && dx < best) {
          best = dx;
          lead_v = vehicles_[i].state.v;
        }
      }
      if (time_to_collision(gap - kVehicleLength, ego().state.v - lead_v) <
          config_.ttc_threshold) {
        info.ttc_violation = true;
      }
    }
  }

  ++ticks_;
  const double distance = ego().state.x - x_start_;
  goal_ = !collided_ && distance >= config_.episode_length;
  const bool truncated = !collided_ && !goal_ && ticks_ >= config_.max_ticks;

  RewardEvents ev;
  ev.v_current = ego().state.v;
  ev.v_initial = v_initial_;
  ev.v_desired = ego().desired_speed;
  ev.lane_change_started = info.lane_change_started;
  ev.off_road_action = info.off_road_action;
  ev.collision = collided_;
  ev.ttc_violation = info.ttc_violation;
  ev.goal_reached = goal_;
  out.reward = reward(ev, config_.rewards);

  info.collision = collided_;
  info.goal_reached = goal_;
  info.truncated = truncated;
  info.lane_changes_so_far = ego().lane_changes;
  info.distance = distance;

  total_reward_ += out.reward;
  speed_sum_ += ego().state.v;
  done_ = collided_ || goal_ || truncated;
  out.done = done_;

  observe();
  out.observation = observation_;
  return out;
}

EpisodeResult HighwayEnv::result() const {
  EpisodeResult r;
  r.seed = episode_seed_;
  r.total_reward = total_reward_;
  r.steps = ticks_;
  r.collision = collided_;
  r.goal_reached = goal_;
  r.distance = ego().state.x - x_start_;
  r.lane_change_count = ego().lane_changes;
  r.mean_speed = ticks_ > 0 ? speed_sum_ / ticks_ : ego().state.v;
  r.actor_lane_changes = actor_lane_changes_;
  return r;
}

TraceWriter::TraceWriter(std::ostream& out, int n_vehicles) : out_(out) {
  out_ << "tick,action,reward,collision,ttc_violation,goal,off_road";
  for (int i = 0; i < n_vehicles; ++i) {
    out_ << ",x" << i << ",y" << i << ",psi" << i << ",v" << i << ",lane"
         << i;
  }
  out_ << '\n';
}

void TraceWriter::record(const HighwayEnv& env, int tick, LaneDecision action,
                         double reward, const StepInfo& info) {
  out_ << tick << ',' << to_string(action) << ',' << reward << ','
       << info.collision << ',' << info.ttc_violation << ','
       << info.goal_reached << ',' << info.off_road_action;
  for (const auto& v : env.vehicles()) {
    out_ << ',' << v.state.x << ',' << v.state.y << ',' << v.state.psi << ','
         << v.state.v << ',' << v.state.lane_id;
  }
  out_ << '\n';
}

}  // namespace hwy
