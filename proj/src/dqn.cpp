#include "hwy/dqn.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>
#include <ostream>
#include <stdexcept>

namespace hwy {

namespace {

constexpr std::uint64_t kTrainTag = 1ULL << 62;
constexpr std::uint64_t kValidationTag = 2ULL << 62;

Eigen::MatrixXd stack(std::span<const Transition* const> batch, bool next) {
  const std::size_t width = (next ? batch[0]->s_next : batch[0]->s).size();
  Eigen::MatrixXd m(static_cast<Eigen::Index>(width),
                    static_cast<Eigen::Index>(batch.size()));
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const Observation& o = next ? batch[i]->s_next : batch[i]->s;
    if (o.size() != width) throw std::invalid_argument("ragged batch");
    m.col(static_cast<Eigen::Index>(i)) =
        Eigen::Map<const Eigen::VectorXd>(o.data(), o.size());
  }
  return m;
}

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
};

MeanStd mean_std(const std::vector<double>& xs) {
  MeanStd out;
  if (xs.empty()) return out;
  out.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / xs.size();
  double ss = 0.0;
  for (double x : xs) ss += (x - out.mean) * (x - out.mean);
  out.std = std::sqrt(ss / xs.size());
  return out;
}

}  // namespace

void TrainConfig::validate() const {
  if (total_steps <= 0) throw std::invalid_argument("total_steps must be > 0");
  if (!(gamma > 0 && gamma < 1)) throw std::invalid_argument("gamma must be in (0,1)");
  if (!(learning_rate > 0)) throw std::invalid_argument("learning_rate must be > 0");
  if (batch_size <= 0) throw std::invalid_argument("batch_size must be > 0");
  if (buffer_capacity < static_cast<std::size_t>(batch_size)) {
    throw std::invalid_argument("buffer_capacity must be >= batch_size");
  }
  if (!(epsilon_start >= epsilon_end && epsilon_end >= 0 && epsilon_start <= 1)) {
    throw std::invalid_argument("epsilon schedule must be non-increasing in [0,1]");
  }
  if (epsilon_decay_steps < 0) {
    throw std::invalid_argument("epsilon_decay_steps must be >= 0");
  }
  if (target_sync <= 0) throw std::invalid_argument("target_sync must be > 0");
  if (learning_starts < 0) throw std::invalid_argument("learning_starts must be >= 0");
  if (fast_period <= 0 || slow_period <= 0) {
    throw std::invalid_argument("validation periods must be > 0");
  }
  if (fast_episodes <= 0 || slow_episodes <= 0) {
    throw std::invalid_argument("validation episode counts must be > 0");
  }
  for (int h : hidden) {
    if (h <= 0) throw std::invalid_argument("hidden widths must be > 0");
  }
}

double TrainConfig::epsilon_at(long step) const {
  if (epsilon_decay_steps == 0 || step >= epsilon_decay_steps) {
    return epsilon_end;
  }
  const double frac = static_cast<double>(step) / epsilon_decay_steps;
  return epsilon_start + frac * (epsilon_end - epsilon_start);
}

EpisodicEnv::Tick HighwayTask::step(int action) {
  const StepOutcome o = env_.step(action_from_index(action));
  return {o.observation, o.reward, o.done};
}

int greedy_action(std::span<const double> q, const ActionMask& mask) {
  int best = -1;
  for (std::size_t a = 0; a < q.size() && a < mask.size(); ++a) {
    if (!mask[a]) continue;
    if (best < 0 || q[a] > q[static_cast<std::size_t>(best)]) {
      best = static_cast<int>(a);
    }
  }
  if (best < 0) throw std::invalid_argument("greedy_action: no valid action");
  return best;
}

int select_action(const Mlp& net, const Observation& obs, double epsilon,
                  const ActionMask& mask, std::mt19937_64& rng) {
  if (!mask[0]) throw std::invalid_argument("KeepLane must always be valid");
  if (epsilon > 0 &&
      std::uniform_real_distribution<double>(0.0, 1.0)(rng) < epsilon) {
    std::vector<int> valid;
    for (std::size_t a = 0; a < mask.size(); ++a) {
      if (mask[a]) valid.push_back(static_cast<int>(a));
    }
    std::uniform_int_distribution<std::size_t> pick(0, valid.size() - 1);
    return valid[pick(rng)];
  }
  const Eigen::VectorXd q = net.forward(obs);
  return greedy_action(std::span<const double>(q.data(), q.size()), mask);
}

std::vector<double> td_targets(std::span<const Transition* const> batch,
                               const Mlp& target, double gamma) {
  if (batch.empty()) throw std::invalid_argument("td_targets: empty batch");
  const Eigen::MatrixXd q_next = target.forward(stack(batch, true));
  std::vector<double> y(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const Transition& t = *batch[i];
    if (t.done) {
      y[i] = t.r;
      continue;
    }
    const auto col = static_cast<Eigen::Index>(i);
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < kNumActions; ++a) {
      if (t.next_mask[a]) {
        best = std::max(best, q_next(static_cast<Eigen::Index>(a), col));
      }
    }
    y[i] = t.r + gamma * best;
  }
  return y;
}

double train_step(Mlp& online, const Mlp& target, AdamOptimizer& optimizer,
                  std::span<const Transition* const> batch, double gamma) {
  const std::vector<double> y = td_targets(batch, target, gamma);
  std::vector<int> actions(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) actions[i] = batch[i]->a;
  MlpGradients grads;
  const double loss = online.td_loss(stack(batch, false), actions, y, &grads);
  optimizer.apply(online, grads);
  return loss;
}

std::uint64_t training_seed(std::uint64_t run_seed, std::uint64_t episode) {
  return kTrainTag | ((run_seed & 0x3fffffffULL) << 32) |
         (episode & 0xffffffffULL);
}

std::uint64_t validation_seed(std::uint64_t run_seed, std::uint64_t episode) {
  return kValidationTag | ((run_seed & 0x3fffffffULL) << 32) |
         (episode & 0xffffffffULL);
}

TrainingResult train_with_validation(const EnvFactory& make_env,
                                     const TrainConfig& config,
                                     const TrainHooks& hooks) {
  config.validate();
  std::unique_ptr<EpisodicEnv> env = make_env();
  std::unique_ptr<EpisodicEnv> val_env = make_env();

  std::vector<int> widths;
  widths.push_back(static_cast<int>(env->observation_size()));
  widths.insert(widths.end(), config.hidden.begin(), config.hidden.end());
  widths.push_back(static_cast<int>(kNumActions));

  std::mt19937_64 rng(config.seed ^ 0x5851f42d4c957f2dULL);
  Mlp online(widths, config.seed);
  Mlp target = online;
  AdamOptimizer optimizer(online, config.learning_rate);
  ReplayBuffer buffer(config.buffer_capacity);

  TrainingResult result;
  result.best = online;
  result.best_validation = -std::numeric_limits<double>::infinity();

  auto emit = [&](const TrainingLogRow& row) {
    result.log.push_back(row);
    if (hooks.on_row) hooks.on_row(row);
  };

  std::uint64_t validation_episode = 0;
  auto validate = [&](long step, int episodes, double last_loss, double eps) {
    std::vector<double> rewards;
    rewards.reserve(static_cast<std::size_t>(episodes));
    for (int e = 0; e < episodes; ++e) {
      const std::uint64_t seed = validation_seed(config.seed, validation_episode++);
      result.validation_seeds.push_back(seed);
      Observation obs = val_env->reset(seed);
      double total = 0.0;
      for (;;) {
        const Eigen::VectorXd q = online.forward(obs);
        const int a = greedy_action(std::span<const double>(q.data(), q.size()),
                                    val_env->action_mask());
        EpisodicEnv::Tick t = val_env->step(a);
        total += t.reward;
        if (t.done) break;
        obs = std::move(t.observation);
      }
      rewards.push_back(total);
    }
    const MeanStd ms = mean_std(rewards);
    TrainingLogRow row;
    row.kind = TrainingLogRow::Kind::Validation;
    row.step = step;
    row.loss = last_loss;
    row.epsilon = eps;
    row.validation_episodes = episodes;
    row.validation_mean = ms.mean;
    row.validation_std = ms.std;
    if (ms.mean > result.best_validation) {
      result.best_validation = ms.mean;
      result.best = online;
      result.best_step = step;
      row.improved = true;
    }
    row.best_validation = result.best_validation;
    emit(row);
  };

  std::uint64_t episode = 0;
  std::uint64_t seed = training_seed(config.seed, episode);
  result.training_seeds.push_back(seed);
  Observation obs = env->reset(seed);
  double episode_reward = 0.0;
  double last_loss = 0.0;
  std::deque<double> recent;
  double recent_sum = 0.0;

  for (long step = 1; step <= config.total_steps; ++step) {
    const double eps = config.epsilon_at(step - 1);
    const int a = select_action(online, obs, eps, env->action_mask(), rng);
    EpisodicEnv::Tick tick = env->step(a);
    episode_reward += tick.reward;
    buffer.push(Transition{obs, a, tick.reward, tick.observation, tick.done,
                           tick.done ? ActionMask{true, true, true}
                                     : env->action_mask()});

    if (tick.done) {
      recent.push_back(episode_reward);
      recent_sum += episode_reward;
      if (recent.size() > 100) {
        recent_sum -= recent.front();
        recent.pop_front();
      }
      TrainingLogRow row;
      row.kind = TrainingLogRow::Kind::Episode;
      row.step = step;
      row.loss = last_loss;
      row.epsilon = eps;
      row.seed = seed;
      row.episode_reward = episode_reward;
      row.reward_mean100 = recent_sum / recent.size();
      if (hooks.reference_reward) row.reference_reward = hooks.reference_reward(seed);
      emit(row);

      ++episode;
      seed = training_seed(config.seed, episode);
      result.training_seeds.push_back(seed);
      obs = env->reset(seed);
      episode_reward = 0.0;
    } else {
      obs = std::move(tick.observation);
    }

    if (step >= config.learning_starts &&
        buffer.size() >= static_cast<std::size_t>(config.batch_size)) {
      const auto batch =
          buffer.sample(static_cast<std::size_t>(config.batch_size), rng);
      last_loss = train_step(online, target, optimizer, batch, config.gamma);
    }
    if (step % config.target_sync == 0) target = online;

    if (step % config.slow_period == 0) {
      validate(step, config.slow_episodes, last_loss, eps);
    } else if (step % config.fast_period == 0) {
      validate(step, config.fast_episodes, last_loss, eps);
    }
  }

  result.final_net = online;
  if (!std::isfinite(result.best_validation)) {
    // No validation phase fired; fall back to the final weights.
    result.best = online;
  }
  return result;
}

void write_training_log_csv(std::ostream& out,
                            const std::vector<TrainingLogRow>& rows) {
  out << "step,kind,loss,epsilon,seed,episode_reward,reward_mean100,"
         "reference_reward,val_episodes,val_mean,val_std,best_val,improved\n";
  for (const auto& r : rows) {
    out << r.step << ','
        << (r.kind == TrainingLogRow::Kind::Episode ? "episode" : "validation")
        << ',' << r.loss << ',' << r.epsilon << ',';
    if (r.kind == TrainingLogRow::Kind::Episode) {
      out << r.seed << ',' << r.episode_reward << ',' << r.reward_mean100
          << ',';
      if (r.reference_reward) out << *r.reference_reward;
      out << ",,,,,\n";
    } else {
      out << ",,,," << r.validation_episodes << ',' << r.validation_mean << ','
          << r.validation_std << ',' << r.best_validation << ','
          << (r.improved ? 1 : 0) << '\n';
    }
  }
}

}  // namespace hwy
