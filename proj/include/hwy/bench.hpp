#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "hwy/highway_env.hpp"
#include "hwy/policy.hpp"

namespace hwy {

struct PolicySpec {
  enum class Kind { MobilBaseline, RlCheckpoint };
  Kind kind = Kind::MobilBaseline;
  std::string checkpoint;  // RlCheckpoint only
  double noise_level = 0.0;
  std::string label;
};

/// Parses "mobil", "ckpt:PATH" or either form prefixed with "label=".
/// Throws std::invalid_argument on malformed text or a missing checkpoint.
PolicySpec parse_policy_spec(const std::string& text);

std::unique_ptr<Policy> make_policy(const PolicySpec& spec);

/// Runs episodes with seeds seed_base .. seed_base + episodes - 1. The
/// environment always has dynamic actors; its noise comes from the spec.
std::vector<EpisodeResult> evaluate(const PolicySpec& spec,
                                    const HighwayConfig& base, int episodes,
                                    std::uint64_t seed_base);

struct EvalSummary {
  int episodes = 0;
  double mean_reward = 0.0;
  double std_reward = 0.0;  // population standard deviation
  int collisions = 0;
  int goals = 0;
  double mean_lane_changes = 0.0;
  double mean_speed = 0.0;
  double mean_steps = 0.0;
};

EvalSummary summarize(const std::vector<EpisodeResult>& episodes);

void write_episode_csv(std::ostream& out,
                       const std::vector<EpisodeResult>& episodes);
void write_summary_csv(std::ostream& out, const std::string& label,
                       double noise_level, const EvalSummary& summary);

struct BenchmarkCell {
  std::string label;
  double noise_level = 0.0;
  EvalSummary summary;
  double percent_of_mobil = 0.0;
  std::vector<EpisodeResult> episodes;
};

struct BenchmarkReport {
  std::vector<double> noise_levels;
  std::vector<std::string> labels;
  std::vector<BenchmarkCell> cells;  // label-major, noise-minor
  std::vector<EvalSummary> mobil;    // the normalizing baseline per noise level

  const BenchmarkCell& cell(const std::string& label, double noise) const;
};

/// Every policy at every noise level over the same seeds. Since the noise
/// stream is derived from the episode seed, every cell at a given noise
/// level also sees the same noise realizations. Percentages are relative to
/// MOBIL's mean on that seed set and noise level.
BenchmarkReport compare(const std::vector<PolicySpec>& policies,
                        const std::vector<double>& noise_levels,
                        const HighwayConfig& base, int episodes,
                        std::uint64_t seed_base);

void write_report_csv(std::ostream& out, const BenchmarkReport& report);
void write_report_table(std::ostream& out, const BenchmarkReport& report);

/// Reward MOBIL earns on one episode seed of the given configuration.
std::function<double(std::uint64_t)> mobil_reference(HighwayConfig config);

}  // namespace hwy
