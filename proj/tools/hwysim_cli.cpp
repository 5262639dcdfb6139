#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "hwy/bench.hpp"
#include "hwy/config.hpp"
#include "hwy/dqn.hpp"

namespace fs = std::filesystem;
using namespace hwy;

namespace {

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

HighwayConfig env_config(const std::string& path) {
  if (path.empty()) return HighwayConfig{};
  return load_config_file(path).env;
}

std::string noise_tag(double noise) {
  std::ostringstream os;
  os << noise;
  return os.str();
}

int cmd_train(const std::string& config_path, const fs::path& out_dir,
              bool with_reference, bool quiet) {
  const RunConfig config = load_config_file(config_path);
  fs::create_directories(out_dir);
  {
    auto out = open_out(out_dir / "config.txt");
    write_config(out, config);
  }

  TrainHooks hooks;
  if (with_reference) hooks.reference_reward = mobil_reference(config.env);
  if (!quiet) {
    hooks.on_row = [](const TrainingLogRow& row) {
      if (row.kind != TrainingLogRow::Kind::Validation) return;
      std::printf("step %8ld  eps %.3f  loss %.4f  val %.2f +- %.2f  best %.2f%s\n",
                  row.step, row.epsilon, row.loss, row.validation_mean,
                  row.validation_std, row.best_validation,
                  row.improved ? "  *" : "");
      std::fflush(stdout);
    };
  }

  const HighwayConfig env = config.env;
  const TrainingResult result = train_with_validation(
      [env] { return std::make_unique<HighwayTask>(env); }, config.train, hooks);

  result.best.save_file((out_dir / "best.qnet").string());
  result.final_net.save_file((out_dir / "final.qnet").string());
  auto log = open_out(out_dir / "training_log.csv");
  write_training_log_csv(log, result.log);
  std::printf("best validation %.3f at step %ld\n", result.best_validation,
              result.best_step);
  return 0;
}

int cmd_eval(const std::string& policy_text, int episodes, double noise,
             std::uint64_t seed, const fs::path& out_dir,
             const std::string& config_path) {
  PolicySpec spec = parse_policy_spec(policy_text);
  spec.noise_level = noise;
  const std::vector<EpisodeResult> results =
      evaluate(spec, env_config(config_path), episodes, seed);
  const EvalSummary summary = summarize(results);

  fs::create_directories(out_dir);
  auto ep = open_out(out_dir / "episodes.csv");
  write_episode_csv(ep, results);
  auto sum = open_out(out_dir / "summary.csv");
  write_summary_csv(sum, spec.label, noise, summary);

  std::printf("%s noise %g: reward %.3f +- %.3f, collisions %d/%d, "
              "lane changes %.2f\n",
              spec.label.c_str(), noise, summary.mean_reward,
              summary.std_reward, summary.collisions, summary.episodes,
              summary.mean_lane_changes);
  return 0;
}

int cmd_compare(const std::vector<std::string>& policy_texts,
                const std::vector<double>& noise_levels, int episodes,
                std::uint64_t seed, const fs::path& out_dir,
                const std::string& config_path) {
  std::vector<PolicySpec> policies;
  for (const auto& t : policy_texts) policies.push_back(parse_policy_spec(t));
  const BenchmarkReport report =
      compare(policies, noise_levels, env_config(config_path), episodes, seed);

  fs::create_directories(out_dir);
  auto csv = open_out(out_dir / "report.csv");
  write_report_csv(csv, report);
  auto txt = open_out(out_dir / "report.txt");
  write_report_table(txt, report);
  for (const auto& cell : report.cells) {
    auto ep = open_out(out_dir / ("episodes_" + cell.label + "_noise" +
                                  noise_tag(cell.noise_level) + ".csv"));
    write_episode_csv(ep, cell.episodes);
  }
  write_report_table(std::cout, report);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Highway lane-change simulator: DQN training and benchmarks"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  bool no_reference = false;
  bool quiet = false;
  auto* train = app.add_subcommand("train", "Train a DQN agent");
  train->add_option("--config", config_path, "key = value config file")
      ->required();
  train->add_option("--out", out_dir, "output directory")->required();
  train->add_flag("--no-reference", no_reference,
                  "skip the MOBIL reward column in the training log");
  train->add_flag("--quiet", quiet, "do not print validation progress");

  std::string policy;
  int episodes = 100;
  double noise = 0.0;
  std::uint64_t seed = 0;
  auto* eval = app.add_subcommand("eval", "Evaluate one policy");
  eval->add_option("--policy", policy, "mobil or ckpt:PATH")->required();
  eval->add_option("--episodes", episodes, "number of episodes")
      ->check(CLI::PositiveNumber);
  eval->add_option("--noise", noise, "observation noise sigma")
      ->check(CLI::NonNegativeNumber);
  eval->add_option("--seed", seed, "first episode seed");
  eval->add_option("--out", out_dir, "output directory")->required();
  eval->add_option("--config", config_path, "environment config file");

  std::vector<std::string> policies;
  std::vector<double> noise_levels{0.0, 0.05, 0.15};
  auto* cmp = app.add_subcommand("compare", "Compare policies against MOBIL");
  cmp->add_option("--policies", policies,
                  "policies as [label=]mobil or [label=]ckpt:PATH")
      ->required();
  cmp->add_option("--noise-levels", noise_levels, "noise sigmas")
      ->check(CLI::NonNegativeNumber);
  cmp->add_option("--episodes", episodes, "episodes per cell")
      ->check(CLI::PositiveNumber);
  cmp->add_option("--seed", seed, "first episode seed");
  cmp->add_option("--out", out_dir, "output directory")->required();
  cmp->add_option("--config", config_path, "environment config file");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) return cmd_train(config_path, out_dir, !no_reference, quiet);
    if (*eval) {
      return cmd_eval(policy, episodes, noise, seed, out_dir, config_path);
    }
    if (*cmp) {
      return cmd_compare(policies, noise_levels, episodes, seed, out_dir,
                         config_path);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
