#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "shotrl/rl.hpp"
#include "shotrl/vqe.hpp"

namespace shotrl {

enum class Method { Uniform, VM, RLUniform, RLVM };

std::string method_name(Method m);
Method method_from_name(const std::string& name);
bool method_uses_policy(Method m);

struct ExperimentConfig {
  std::string hamiltonian_path;
  std::string ansatz_path;
  OptimizerConfig optimizer;
  long long shot_budget = 0;
  Method method = Method::Uniform;
  std::string checkpoint_path;  // RL methods only
  int trials = 1;
  std::uint64_t base_seed = 0;
  std::string output_dir;
  bool exact_mode = false;  // debug: exact expectations, no shot metrics
  int window_p = 10;
  double convergence_threshold = 3.5;
};

ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config_file(const std::string& path);
std::string serialize_config(const ExperimentConfig& config);

struct RunRecord {
  int trial = 0;
  std::uint64_t seed = 0;
  VqeTrace trace;
  /// Cumulative shots at the first iteration with
  /// |estimated - E_gs| < 0.01 |E_gs|; absent if never reached or exact mode.
  std::optional<long long> shots_to_threshold;
  /// Same metric on the exact-energy diagnostic column.
  std::optional<long long> shots_to_threshold_exact;
  double wall_seconds = 0.0;  // in-memory only, never serialized
};

struct BoxplotStats {
  double min = 0.0, q25 = 0.0, median = 0.0, q75 = 0.0, max = 0.0;
  std::vector<double> outliers;
};

/// Five-number summary with linearly interpolated quartiles; outliers flagged
/// beyond 1.5*IQR from the quartiles (still included in min/max).
BoxplotStats boxplot_stats(std::vector<double> values);

struct CampaignSummary {
  int trials = 0;
  int reached = 0;
  int never_reached = 0;
  double ground_energy = 0.0;
  std::optional<BoxplotStats> shots_stats;  // absent when nothing reached
};

struct CampaignResult {
  std::vector<RunRecord> records;
  CampaignSummary summary;
};

std::optional<long long> shots_to_threshold(const VqeTrace& trace,
                                            double ground_energy,
                                            bool use_exact_column);

/// Runs `trials` independent seeded runs on a worker pool (size from the
/// SHOTRL_WORKERS environment variable) and, when output_dir is set, writes
/// config.json, per-run trace CSVs, records.json and summary.json there.
CampaignResult run_campaign(const ExperimentConfig& config);

/// Rebuilds records and summary from a campaign directory's config and trace
/// files.
CampaignResult recompute_stats(const std::string& campaign_dir);

struct TransferRow {
  std::string label;
  double median_baseline = 0.0;
  double median_rl = 0.0;
  double reduction = 0.0;  // 1 - median_rl / median_baseline
  int baseline_never = 0;
  int rl_never = 0;
};

/// Runs (baseline, RL) config pairs with the given checkpoint and reports the
/// median shots-to-threshold reduction per pair.
std::vector<TransferRow> transfer_eval(
    const std::string& checkpoint_path,
    const std::vector<std::pair<ExperimentConfig, ExperimentConfig>>& pairs);

std::string transfer_table(const std::vector<TransferRow>& rows);

}  // namespace shotrl
