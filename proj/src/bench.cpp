#include "hwy/bench.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace hwy {

PolicySpec parse_policy_spec(const std::string& text) {
  PolicySpec spec;
  std::string body = text;
  const auto eq = text.find('=');
  if (eq != std::string::npos) {
    spec.label = text.substr(0, eq);
    body = text.substr(eq + 1);
    if (spec.label.empty()) {
      throw std::invalid_argument("empty label in policy '" + text + "'");
    }
  }
  if (body == "mobil") {
    spec.kind = PolicySpec::Kind::MobilBaseline;
    if (spec.label.empty()) spec.label = "mobil";
  } else if (body.rfind("ckpt:", 0) == 0) {
    spec.kind = PolicySpec::Kind::RlCheckpoint;
    spec.checkpoint = body.substr(5);
    if (spec.checkpoint.empty()) {
      throw std::invalid_argument("missing checkpoint path in '" + text + "'");
    }
    if (!std::filesystem::exists(spec.checkpoint)) {
      throw std::invalid_argument("checkpoint not found: " + spec.checkpoint);
    }
    if (spec.label.empty()) {
      spec.label = std::filesystem::path(spec.checkpoint).stem().string();
    }
  } else {
    throw std::invalid_argument("policy must be 'mobil' or 'ckpt:PATH', got '" +
                                text + "'");
  }
  return spec;
}

std::unique_ptr<Policy> make_policy(const PolicySpec& spec) {
  if (spec.kind == PolicySpec::Kind::MobilBaseline) {
    return std::make_unique<MobilPolicy>();
  }
  return std::make_unique<QNetworkPolicy>(Mlp::load_file(spec.checkpoint));
}

std::vector<EpisodeResult> evaluate(const PolicySpec& spec,
                                    const HighwayConfig& base, int episodes,
                                    std::uint64_t seed_base) {
  if (episodes <= 0) throw std::invalid_argument("episodes must be > 0");
  HighwayConfig config = base;
  config.dynamic_actors = true;
  config.noise_level = spec.noise_level;
  HighwayEnv env(config);
  auto policy = make_policy(spec);
  std::vector<EpisodeResult> out;
  out.reserve(episodes);
  for (int k = 0; k < episodes; ++k) {
    out.push_back(run_episode(env, *policy, seed_base + k));
  }
  return out;
}

EvalSummary summarize(const std::vector<EpisodeResult>& episodes) {
  EvalSummary s;
  s.episodes = static_cast<int>(episodes.size());
  if (episodes.empty()) return s;
  for (const auto& e : episodes) {
    s.mean_reward += e.total_reward;
    s.collisions += e.collision ? 1 : 0;
    s.goals += e.goal_reached ? 1 : 0;
    s.mean_lane_changes += e.lane_change_count;
    s.mean_speed += e.mean_speed;
    s.mean_steps += e.steps;
  }
  const double n = static_cast<double>(episodes.size());
  s.mean_reward /= n;
  s.mean_lane_changes /= n;
  s.mean_speed /= n;
  s.mean_steps /= n;
  double ss = 0.0;
  for (const auto& e : episodes) {
    ss += (e.total_reward - s.mean_reward) * (e.total_reward - s.mean_reward);
  }
  s.std_reward = std::sqrt(ss / n);
  return s;
}

void write_episode_csv(std::ostream& out,
                       const std::vector<EpisodeResult>& episodes) {
  out << "seed,reward,steps,collision,lane_changes,mean_speed\n";
  out << std::setprecision(10);
  for (const auto& e : episodes) {
    out << e.seed << ',' << e.total_reward << ',' << e.steps << ','
        << (e.collision ? 1 : 0) << ',' << e.lane_change_count << ','
        << e.mean_speed << '\n';
  }
}

namespace {

void summary_header(std::ostream& out) {
  out << "label,noise,episodes,mean_reward,std_reward,collisions,goals,"
         "mean_lane_changes,mean_speed,mean_steps";
}

void summary_fields(std::ostream& out, const std::string& label, double noise,
                    const EvalSummary& s) {
  out << std::setprecision(10) << label << ',' << noise << ',' << s.episodes
      << ',' << s.mean_reward << ',' << s.std_reward << ',' << s.collisions
      << ',' << s.goals << ',' << s.mean_lane_changes << ',' << s.mean_speed
      << ',' << s.mean_steps;
}

}  // namespace

void write_summary_csv(std::ostream& out, const std::string& label,
                       double noise_level, const EvalSummary& summary) {
  summary_header(out);
  out << '\n';
  summary_fields(out, label, noise_level, summary);
  out << '\n';
}

const BenchmarkCell& BenchmarkReport::cell(const std::string& label,
                                           double noise) const {
  for (const auto& c : cells) {
    if (c.label == label && c.noise_level == noise) return c;
  }
  throw std::out_of_range("no benchmark cell for " + label);
}

BenchmarkReport compare(const std::vector<PolicySpec>& policies,
                        const std::vector<double>& noise_levels,
                        const HighwayConfig& base, int episodes,
                        std::uint64_t seed_base) {
  if (policies.empty()) throw std::invalid_argument("compare needs a policy");
  if (noise_levels.empty()) throw std::invalid_argument("compare needs a noise level");
  for (std::size_t i = 0; i < policies.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      if (policies[i].label == policies[j].label) {
        throw std::invalid_argument("duplicate policy label " + policies[i].label);
      }
    }
  }

  BenchmarkReport report;
  report.noise_levels = noise_levels;
  for (const auto& p : policies) report.labels.push_back(p.label);

  std::vector<std::vector<EpisodeResult>> mobil_runs;
  for (double noise : noise_levels) {
    PolicySpec mobil;
    mobil.noise_level = noise;
    mobil.label = "mobil";
    mobil_runs.push_back(evaluate(mobil, base, episodes, seed_base));
    report.mobil.push_back(summarize(mobil_runs.back()));
  }

  for (const auto& p : policies) {
    for (std::size_t k = 0; k < noise_levels.size(); ++k) {
      BenchmarkCell cell;
      cell.label = p.label;
      cell.noise_level = noise_levels[k];
      if (p.kind == PolicySpec::Kind::MobilBaseline) {
        cell.episodes = mobil_runs[k];
      } else {
        PolicySpec spec = p;
        spec.noise_level = noise_levels[k];
        cell.episodes = evaluate(spec, base, episodes, seed_base);
      }
      cell.summary = summarize(cell.episodes);
      cell.percent_of_mobil =
          100.0 * cell.summary.mean_reward / report.mobil[k].mean_reward;
      report.cells.push_back(std::move(cell));
    }
  }
  return report;
}

void write_report_csv(std::ostream& out, const BenchmarkReport& report) {
  summary_header(out);
  out << ",mobil_mean_reward,percent_of_mobil\n";
  for (const auto& c : report.cells) {
    std::size_t k = 0;
    while (report.noise_levels[k] != c.noise_level) ++k;
    summary_fields(out, c.label, c.noise_level, c.summary);
    out << ',' << report.mobil[k].mean_reward << ',' << c.percent_of_mobil
        << '\n';
  }
}

void write_report_table(std::ostream& out, const BenchmarkReport& report) {
  std::size_t width = 6;
  for (const auto& l : report.labels) width = std::max(width, l.size());
  out << std::left << std::setw(static_cast<int>(width)) << "policy"
      << std::right << std::setw(8) << "noise" << std::setw(20)
      << "reward (mean+-std)" << std::setw(12) << "collisions"
      << std::setw(14) << "lane changes" << std::setw(11) << "% MOBIL"
      << '\n';
  out << std::fixed;
  for (const auto& c : report.cells) {
    std::ostringstream reward;
    reward << std::fixed << std::setprecision(2) << c.summary.mean_reward
           << " +- " << c.summary.std_reward;
    out << std::left << std::setw(static_cast<int>(width)) << c.label
        << std::right << std::setw(8) << std::setprecision(2) << c.noise_level
        << std::setw(20) << reward.str() << std::setw(12)
        << c.summary.collisions << std::setw(14) << std::setprecision(2)
        << c.summary.mean_lane_changes << std::setw(10)
        << std::setprecision(1) << c.percent_of_mobil << "%\n";
  }
  out << std::defaultfloat;
}

std::function<double(std::uint64_t)> mobil_reference(HighwayConfig config) {
  auto env = std::make_shared<HighwayEnv>(std::move(config));
  auto policy = std::make_shared<MobilPolicy>();
  return [env, policy](std::uint64_t seed) {
    return run_episode(*env, *policy, seed).total_reward;
  };
}

}  // namespace hwy
