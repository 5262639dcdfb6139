#pragma once

#include <memory>
#include <string>

#include "hwy/highway_env.hpp"
#include "hwy/mlp.hpp"

namespace hwy {

/// Ego lane-change decision maker, queried once per decision tick.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual LaneDecision act(const HighwayEnv& env) = 0;
};

/// MOBIL driving the ego from the (possibly noisy) perception snapshot.
class MobilPolicy final : public Policy {
 public:
  LaneDecision act(const HighwayEnv& env) override;
};

class KeepLanePolicy final : public Policy {
 public:
  LaneDecision act(const HighwayEnv&) override { return LaneDecision::KeepLane; }
};

/// Greedy masked argmax over a Q-network.
class QNetworkPolicy final : public Policy {
 public:
  explicit QNetworkPolicy(Mlp net) : net_(std::move(net)) {}
  LaneDecision act(const HighwayEnv& env) override;
  const Mlp& net() const { return net_; }

 private:
  Mlp net_;
};

/// Runs one full episode; optionally writes a per-tick trace.
EpisodeResult run_episode(HighwayEnv& env, Policy& policy,
                          std::uint64_t seed, TraceWriter* trace = nullptr);

}  // namespace hwy
