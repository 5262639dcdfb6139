#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "hwy/highway_env.hpp"
#include "hwy/mlp.hpp"
#include "hwy/replay_buffer.hpp"

namespace hwy {

struct TrainConfig {
  long total_steps = 500000;
  double gamma = 0.99;
  double learning_rate = 1e-4;
  int batch_size = 64;
  std::size_t buffer_capacity = 100000;
  double epsilon_start = 1.0;
  double epsilon_end = 0.05;
  long epsilon_decay_steps = 200000;
  long target_sync = 5000;
  long learning_starts = 1000;
  long fast_period = 10000;
  int fast_episodes = 10;
  long slow_period = 50000;
  int slow_episodes = 50;
  std::vector<int> hidden{64, 128, 128, 64};
  std::uint64_t seed = 0;

  void validate() const;
  double epsilon_at(long step) const;
};

/// Minimal episodic interface the trainer drives.
class EpisodicEnv {
 public:
  struct Tick {
    Observation observation;
    double reward = 0.0;
    bool done = false;
  };

  virtual ~EpisodicEnv() = default;
  virtual Observation reset(std::uint64_t seed) = 0;
  virtual Tick step(int action) = 0;
  virtual ActionMask action_mask() const = 0;
  virtual std::size_t observation_size() const = 0;
};

class HighwayTask final : public EpisodicEnv {
 public:
  explicit HighwayTask(HighwayConfig config) : env_(std::move(config)) {}
  Observation reset(std::uint64_t seed) override { return env_.reset(seed); }
  Tick step(int action) override;
  ActionMask action_mask() const override { return env_.valid_actions(); }
  std::size_t observation_size() const override {
    return env_.config().observation_size();
  }
  const HighwayEnv& env() const { return env_; }

 private:
  HighwayEnv env_;
};

using EnvFactory = std::function<std::unique_ptr<EpisodicEnv>()>;

/// Index of the largest entry among allowed actions; ties go to the lowest
/// index, so KeepLane wins any tie it is part of.
int greedy_action(std::span<const double> q, const ActionMask& mask);

/// Epsilon-greedy over valid actions only.
int select_action(const Mlp& net, const Observation& obs, double epsilon,
                  const ActionMask& mask, std::mt19937_64& rng);

/// y = r for terminal transitions, else r + gamma * max over valid a' of
/// Q_target(s', a').
std::vector<double> td_targets(std::span<const Transition* const> batch,
                               const Mlp& target, double gamma);

/// One Adam step on the mean squared TD error. Returns the loss measured
/// before the update.
double train_step(Mlp& online, const Mlp& target, AdamOptimizer& optimizer,
                  std::span<const Transition* const> batch, double gamma);

struct TrainingLogRow {
  enum class Kind { Episode, Validation };
  Kind kind = Kind::Episode;
  long step = 0;
  double loss = 0.0;  // most recent training loss
  double epsilon = 0.0;
  // Episode rows.
  std::uint64_t seed = 0;
  double episode_reward = 0.0;
  double reward_mean100 = 0.0;
  std::optional<double> reference_reward;
  // Validation rows.
  int validation_episodes = 0;
  double validation_mean = 0.0;
  double validation_std = 0.0;
  double best_validation = 0.0;
  bool improved = false;
};

struct TrainingResult {
  Mlp best;
  Mlp final_net;
  double best_validation = 0.0;
  long best_step = 0;
  std::vector<TrainingLogRow> log;
  std::vector<std::uint64_t> training_seeds;
  std::vector<std::uint64_t> validation_seeds;
};

struct TrainHooks {
  /// Reward a reference policy earns on a training episode seed; logged next
  /// to the agent's reward when set.
  std::function<double(std::uint64_t)> reference_reward;
  std::function<void(const TrainingLogRow&)> on_row;
};

/// Seed streams. Training and validation seeds carry distinct tags in the
/// top bits, so they never collide with each other or with small
/// user-chosen evaluation seeds.
std::uint64_t training_seed(std::uint64_t run_seed, std::uint64_t episode);
std::uint64_t validation_seed(std::uint64_t run_seed, std::uint64_t episode);

/// DQN with periodic greedy validation. Every fast_period steps the current
/// weights are validated on fast_episodes fresh held-out scenarios, every
/// slow_period steps on slow_episodes; when the mean beats the best so far
/// the weights are kept as the best checkpoint. Training is paused while
/// validating.
TrainingResult train_with_validation(const EnvFactory& make_env,
                                     const TrainConfig& config,
                                     const TrainHooks& hooks = {});

void write_training_log_csv(std::ostream& out,
                            const std::vector<TrainingLogRow>& rows);

}  // namespace hwy
