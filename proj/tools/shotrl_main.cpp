#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "shotrl/harness.hpp"
#include "shotrl/rl.hpp"

namespace fs = std::filesystem;
using namespace shotrl;

namespace {

int cmd_train(int episodes, std::uint64_t seed, const std::string& out_dir,
              const std::string& hamiltonian_path, const std::string& ansatz_path,
              long long budget, double lr, int max_iterations) {
  const HamiltonianSpec spec = load_hamiltonian_file(hamiltonian_path);
  const AnsatzCircuit circuit = load_circuit_file(ansatz_path);
  const CliquePartition partition = group_cliques(spec);

  OptimizerConfig opt;
  opt.kind = OptimizerConfig::Kind::GD;
  opt.learning_rate = lr;
  opt.max_iterations = max_iterations;

  Td3Hyper hp;
  Rng rng(seed);
  PolicyBundle bundle(hp, rng);
  ShotBudgetEnv env(circuit, spec, partition, opt, AllocationMethod::Uniform,
                    budget, hp);

  std::cout << "training " << episodes << " episodes on " << spec.molecule
            << " R=" << spec.bond_length_angstrom << " (budget " << budget
            << ", seed " << seed << ")\n";
  const auto log = train_policy(env, episodes, bundle, rng);

  fs::create_directories(out_dir);
  const std::string ck = (fs::path(out_dir) / "checkpoint.json").string();
  bundle.save_checkpoint(ck, {
      {"molecule", spec.molecule},
      {"bond_length_angstrom", std::to_string(spec.bond_length_angstrom)},
      {"hamiltonian", hamiltonian_path},
      {"ansatz", ansatz_path},
      {"shot_budget", std::to_string(budget)},
      {"episodes", std::to_string(episodes)},
      {"seed", std::to_string(seed)},
  });
  std::ofstream((fs::path(out_dir) / "train_log.csv").string())
      << episode_log_to_csv(log);

  double tail_reward = 0.0;
  const int tail = std::min<int>(20, log.size());
  for (int i = 0; i < tail; ++i) tail_reward += log[log.size() - 1 - i].total_reward;
  std::cout << "saved " << ck << "\n"
            << "mean reward over final " << tail
            << " episodes: " << tail_reward / tail << "\n";
  return 0;
}

int cmd_run(const std::string& config_path) {
  const ExperimentConfig config = load_config_file(config_path);
  const CampaignResult res = run_campaign(config);
  std::cout << "method " << method_name(config.method) << ": " << res.summary.reached
            << "/" << res.summary.trials << " runs reached the 1% band";
  if (res.summary.shots_stats) {
    std::cout << ", median shots " << res.summary.shots_stats->median;
  }
  std::cout << "\n";
  if (!config.output_dir.empty()) {
    std::cout << "records in " << config.output_dir << "\n";
  }
  return 0;
}

int cmd_transfer(const std::string& checkpoint,
                 const std::vector<std::string>& config_paths) {
  if (config_paths.size() < 2 || config_paths.size() % 2 != 0) {
    std::cerr << "transfer: expected (baseline, rl) config pairs\n";
    return 1;
  }
  std::vector<std::pair<ExperimentConfig, ExperimentConfig>> pairs;
  for (std::size_t i = 0; i < config_paths.size(); i += 2) {
    pairs.emplace_back(load_config_file(config_paths[i]),
                       load_config_file(config_paths[i + 1]));
  }
  const auto rows = transfer_eval(checkpoint, pairs);
  std::cout << transfer_table(rows);
  return 0;
}

int cmd_stats(const std::string& dir) {
  const CampaignResult res = recompute_stats(dir);
  std::cout << "recomputed " << res.records.size() << " records; reached "
            << res.summary.reached << ", never " << res.summary.never_reached;
  if (res.summary.shots_stats) {
    std::cout << ", median shots " << res.summary.shots_stats->median;
  }
  std::cout << "\nsummary.json updated in " << dir << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"VQE shot-allocation laboratory"};
  app.require_subcommand(1);

  auto* train = app.add_subcommand("train", "train a shot-allocation policy");
  int episodes = 200;
  std::uint64_t seed = 1;
  std::string out_dir = "out/policy";
  std::string hamiltonian = "data/hamiltonians/h2_sto3g_r1p75.json";
  std::string ansatz = "data/ansatz/h2_ry2.json";
  long long budget = 3000;
  double lr = 0.1;
  int iters = 500;
  train->add_option("--episodes", episodes, "training episodes");
  train->add_option("--seed", seed, "rng seed");
  train->add_option("--out", out_dir, "output directory");
  train->add_option("--hamiltonian", hamiltonian, "hamiltonian fixture");
  train->add_option("--ansatz", ansatz, "ansatz circuit file");
  train->add_option("--budget", budget, "per-evaluation shot budget N");
  train->add_option("--lr", lr, "optimizer learning rate");
  train->add_option("--iterations", iters, "max VQE iterations per episode");

  auto* run = app.add_subcommand("run", "run an evaluation campaign");
  std::string config_path;
  run->add_option("--config", config_path, "campaign config file")->required();

  auto* transfer = app.add_subcommand("transfer", "paired baseline/RL comparison");
  std::string checkpoint;
  std::vector<std::string> configs;
  transfer->add_option("--checkpoint", checkpoint, "policy checkpoint")->required();
  transfer->add_option("--configs", configs, "baseline,rl config pairs")->required();

  auto* stats = app.add_subcommand("stats", "recompute summaries from records");
  std::string dir;
  stats->add_option("--dir", dir, "campaign directory")->required();

  CLI11_PARSE(app, argc, argv);
  try {
    if (train->parsed()) {
      return cmd_train(episodes, seed, out_dir, hamiltonian, ansatz, budget, lr,
                       iters);
    }
    if (run->parsed()) return cmd_run(config_path);
    if (transfer->parsed()) return cmd_transfer(checkpoint, configs);
    if (stats->parsed()) return cmd_stats(dir);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
