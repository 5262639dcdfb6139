#include "hwy/policy.hpp"

#include "hwy/dqn.hpp"

namespace hwy {

LaneDecision MobilPolicy::act(const HighwayEnv& env) {
  return mobil_decide(env.ego_mobil_input(), env.config().idm,
                      env.config().mobil);
}

LaneDecision QNetworkPolicy::act(const HighwayEnv& env) {
  const Eigen::VectorXd q = net_.forward(env.observation());
  return action_from_index(greedy_action(
      std::span<const double>(q.data(), q.size()), env.valid_actions()));
}

EpisodeResult run_episode(HighwayEnv& env, Policy& policy,
                          std::uint64_t seed, TraceWriter* trace) {
  env.reset(seed);
  while (!env.done()) {
    const LaneDecision a = policy.act(env);
    const StepOutcome o = env.step(a);
    if (trace) trace->record(env, env.ticks(), a, o.reward, o.info);
  }
  return env.result();
}

}  // namespace hwy
