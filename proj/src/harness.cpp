#include "shotrl/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "json.hpp"

namespace shotrl {

namespace fs = std::filesystem;
using json = nlohmann::json;

std::string method_name(Method m) {
  switch (m) {
    case Method::Uniform: return "Uniform";
    case Method::VM: return "VM";
    case Method::RLUniform: return "RL-Uniform";
    case Method::RLVM: return "RL-VM";
  }
  return "?";
}

Method method_from_name(const std::string& name) {
  if (name == "Uniform") return Method::Uniform;
  if (name == "VM") return Method::VM;
  if (name == "RL-Uniform") return Method::RLUniform;
  if (name == "RL-VM") return Method::RLVM;
  throw std::invalid_argument("unknown method '" + name + "'");
}

bool method_uses_policy(Method m) {
  return m == Method::RLUniform || m == Method::RLVM;
}

ExperimentConfig parse_config(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
  ExperimentConfig c;
  c.hamiltonian_path = doc.at("hamiltonian").get<std::string>();
  c.ansatz_path = doc.at("ansatz").get<std::string>();
  c.shot_budget = doc.at("shot_budget").get<long long>();
  c.method = method_from_name(doc.at("method").get<std::string>());
  c.checkpoint_path = doc.value("checkpoint", "");
  c.trials = doc.at("trials").get<int>();
  c.base_seed = doc.at("base_seed").get<std::uint64_t>();
  c.output_dir = doc.value("output_dir", "");
  c.exact_mode = doc.value("exact_mode", false);
  c.window_p = doc.value("window_p", 10);
  c.convergence_threshold = doc.value("convergence_threshold", 3.5);

  const auto& opt = doc.at("optimizer");
  const std::string kind = opt.at("kind").get<std::string>();
  if (kind == "GD") {
    c.optimizer.kind = OptimizerConfig::Kind::GD;
  } else if (kind == "Adam") {
    c.optimizer.kind = OptimizerConfig::Kind::Adam;
  } else {
    throw std::invalid_argument("config: optimizer kind must be GD or Adam");
  }
  c.optimizer.learning_rate = opt.at("learning_rate").get<double>();
  c.optimizer.cosine_decay = opt.value("cosine_decay", false);
  c.optimizer.max_iterations = opt.at("max_iterations").get<int>();
  if (c.optimizer.learning_rate <= 0.0) {
    throw std::invalid_argument("config: learning_rate must be positive");
  }
  if (c.optimizer.max_iterations < 1) {
    throw std::invalid_argument("config: max_iterations must be >= 1");
  }
  if (c.trials < 1) throw std::invalid_argument("config: trials must be >= 1");
  if (method_uses_policy(c.method) && c.checkpoint_path.empty()) {
    throw std::invalid_argument("config: RL method requires a checkpoint");
  }
  return c;
}

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_config(ss.str());
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(path + ": " + e.what());
  }
}

std::string serialize_config(const ExperimentConfig& c) {
  json doc;
  doc["hamiltonian"] = c.hamiltonian_path;
  doc["ansatz"] = c.ansatz_path;
  doc["shot_budget"] = c.shot_budget;
  doc["method"] = method_name(c.method);
  if (!c.checkpoint_path.empty()) doc["checkpoint"] = c.checkpoint_path;
  doc["trials"] = c.trials;
  doc["base_seed"] = c.base_seed;
  if (!c.output_dir.empty()) doc["output_dir"] = c.output_dir;
  doc["exact_mode"] = c.exact_mode;
  doc["window_p"] = c.window_p;
  doc["convergence_threshold"] = c.convergence_threshold;
  json opt;
  opt["kind"] = c.optimizer.kind == OptimizerConfig::Kind::GD ? "GD" : "Adam";
  opt["learning_rate"] = c.optimizer.learning_rate;
  opt["cosine_decay"] = c.optimizer.cosine_decay;
  opt["max_iterations"] = c.optimizer.max_iterations;
  doc["optimizer"] = opt;
  return doc.dump(2) + "\n";
}

BoxplotStats boxplot_stats(std::vector<double> values) {
  if (values.empty()) {
    throw std::invalid_argument("boxplot_stats: empty list");
  }
  std::sort(values.begin(), values.end());
  const auto quantile = [&](double f) {
    const double pos = f * static_cast<double>(values.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(lo);
    if (lo + 1 >= values.size()) return values.back();
    return values[lo] + (values[lo + 1] - values[lo]) * frac;
  };
  BoxplotStats s;
  s.min = values.front();
  s.max = values.back();
  s.q25 = quantile(0.25);
  s.median = quantile(0.5);
  s.q75 = quantile(0.75);
  const double iqr = s.q75 - s.q25;
  for (double v : values) {
    if (v < s.q25 - 1.5 * iqr || v > s.q75 + 1.5 * iqr) s.outliers.push_back(v);
  }
  return s;
}

std::optional<long long> shots_to_threshold(const VqeTrace& trace,
                                            double ground_energy,
                                            bool use_exact_column) {
  const double band = 0.01 * std::abs(ground_energy);
  for (const auto& row : trace.rows) {
    const double e = use_exact_column ? row.exact_energy : row.estimated_energy;
    if (std::abs(e - ground_energy) < band) return row.cumulative_shots;
  }
  return std::nullopt;
}

namespace {

int worker_count(int trials) {
  int n = static_cast<int>(std::thread::hardware_concurrency());
  if (const char* env = std::getenv("SHOTRL_WORKERS")) {
    n = std::atoi(env);
  }
  n = std::max(1, n);
  return std::min(n, trials);
}

json summary_to_json(const CampaignSummary& s, const ExperimentConfig& c) {
  json doc;
  doc["method"] = method_name(c.method);
  doc["trials"] = s.trials;
  doc["reached"] = s.reached;
  doc["never_reached"] = s.never_reached;
  doc["ground_energy"] = s.ground_energy;
  if (s.shots_stats) {
    json b;
    b["min"] = s.shots_stats->min;
    b["q25"] = s.shots_stats->q25;
    b["median"] = s.shots_stats->median;
    b["q75"] = s.shots_stats->q75;
    b["max"] = s.shots_stats->max;
    b["outliers"] = s.shots_stats->outliers;
    doc["shots_to_threshold"] = b;
  }
  return doc;
}

CampaignSummary summarize(const std::vector<RunRecord>& records,
                          double ground_energy, int trials) {
  CampaignSummary s;
  s.trials = trials;
  s.ground_energy = ground_energy;
  std::vector<double> reached_values;
  for (const auto& r : records) {
    if (r.shots_to_threshold) {
      reached_values.push_back(static_cast<double>(*r.shots_to_threshold));
    }
  }
  s.reached = static_cast<int>(reached_values.size());
  s.never_reached = trials - s.reached;
  if (!reached_values.empty()) s.shots_stats = boxplot_stats(reached_values);
  return s;
}

}  // namespace

CampaignResult run_campaign(const ExperimentConfig& config) {
  // fail on missing inputs before any run starts
  const HamiltonianSpec spec = load_hamiltonian_file(config.hamiltonian_path);
  const AnsatzCircuit circuit = load_circuit_file(config.ansatz_path);
  if (circuit.n_qubits != spec.n_qubits) {
    throw std::invalid_argument("config: ansatz and hamiltonian qubit mismatch");
  }
  const CliquePartition partition = group_cliques(spec);
  if (config.shot_budget < partition.n_cliques()) {
    throw std::invalid_argument("config: shot_budget below the clique count");
  }
  std::optional<PolicyBundle> policy;
  if (method_uses_policy(config.method)) {
    policy = PolicyBundle::load_checkpoint(config.checkpoint_path);
    const long long floor_shots =
        std::llround(config.shot_budget * policy->hyper().a_min);
    if (floor_shots < partition.n_cliques()) {
      throw std::invalid_argument(
          "config: budget * a_min below the clique count");
    }
  }
  const double e_gs = exact_ground_energy(spec);
  const AllocationMethod alloc =
      (config.method == Method::VM || config.method == Method::RLVM)
          ? AllocationMethod::VarianceMinimization
          : AllocationMethod::Uniform;

  std::vector<RunRecord> records(config.trials);
  std::atomic<int> next{0};
  auto work = [&]() {
    for (;;) {
      const int trial = next.fetch_add(1);
      if (trial >= config.trials) break;
      const auto t0 = std::chrono::steady_clock::now();
      RunRecord rec;
      rec.trial = trial;
      rec.seed = config.base_seed + static_cast<std::uint64_t>(trial);
      Rng rng(rec.seed);
      std::unique_ptr<ShotController> controller;
      if (method_uses_policy(config.method)) {
        controller = std::make_unique<PolicyShotController>(
            policy->actor(), config.shot_budget, config.window_p,
            config.convergence_threshold);
      } else {
        controller = std::make_unique<FixedShotController>(config.shot_budget);
      }
      rec.trace = run_vqe(circuit, spec, partition, config.optimizer,
                          *controller, alloc, rng, config.exact_mode);
      if (!config.exact_mode) {
        rec.shots_to_threshold = shots_to_threshold(rec.trace, e_gs, false);
        rec.shots_to_threshold_exact = shots_to_threshold(rec.trace, e_gs, true);
      }
      rec.wall_seconds = std::chrono::duration<double>(
                             std::chrono::steady_clock::now() - t0)
                             .count();
      records[trial] = std::move(rec);
    }
  };
  const int n_workers = worker_count(config.trials);
  if (n_workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < n_workers; ++i) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }

  CampaignResult result;
  result.records = std::move(records);
  result.summary = summarize(result.records, e_gs, config.trials);

  if (!config.output_dir.empty()) {
    fs::create_directories(fs::path(config.output_dir) / "runs");
    std::ofstream(fs::path(config.output_dir) / "config.json")
        << serialize_config(config);
    json recs = json::array();
    for (const auto& r : result.records) {
      const std::string trace_name =
          "trace_seed" + std::to_string(r.seed) + ".csv";
      write_trace_csv(r.trace,
                      (fs::path(config.output_dir) / "runs" / trace_name).string());
      json jr;
      jr["trial"] = r.trial;
      jr["seed"] = r.seed;
      jr["trace"] = "runs/" + trace_name;
      jr["iterations"] = r.trace.rows.size();
      jr["total_shots"] = r.trace.total_shots();
      if (r.shots_to_threshold) jr["shots_to_threshold"] = *r.shots_to_threshold;
      if (r.shots_to_threshold_exact) {
        jr["shots_to_threshold_exact"] = *r.shots_to_threshold_exact;
      }
      recs.push_back(jr);
    }
    std::ofstream(fs::path(config.output_dir) / "records.json")
        << recs.dump(2) << "\n";
    std::ofstream(fs::path(config.output_dir) / "summary.json")
        << summary_to_json(result.summary, config).dump(2) << "\n";
  }
  return result;
}

CampaignResult recompute_stats(const std::string& campaign_dir) {
  const fs::path dir(campaign_dir);
  const ExperimentConfig config = load_config_file((dir / "config.json").string());
  const HamiltonianSpec spec = load_hamiltonian_file(config.hamiltonian_path);
  const double e_gs = exact_ground_energy(spec);

  CampaignResult result;
  for (int trial = 0; trial < config.trials; ++trial) {
    const std::uint64_t seed = config.base_seed + trial;
    RunRecord rec;
    rec.trial = trial;
    rec.seed = seed;
    rec.trace = read_trace_csv(
        (dir / "runs" / ("trace_seed" + std::to_string(seed) + ".csv")).string());
    if (!config.exact_mode) {
      rec.shots_to_threshold = shots_to_threshold(rec.trace, e_gs, false);
      rec.shots_to_threshold_exact = shots_to_threshold(rec.trace, e_gs, true);
    }
    result.records.push_back(std::move(rec));
  }
  result.summary = summarize(result.records, e_gs, config.trials);
  std::ofstream(dir / "summary.json")
      << summary_to_json(result.summary, config).dump(2) << "\n";
  return result;
}

std::vector<TransferRow> transfer_eval(
    const std::string& checkpoint_path,
    const std::vector<std::pair<ExperimentConfig, ExperimentConfig>>& pairs) {
  std::vector<TransferRow> rows;
  for (const auto& [base_cfg, rl_cfg] : pairs) {
    if (method_uses_policy(base_cfg.method) ||
        !method_uses_policy(rl_cfg.method)) {
      throw std::invalid_argument(
          "transfer_eval: each pair must be (baseline, RL)");
    }
    if (base_cfg.hamiltonian_path != rl_cfg.hamiltonian_path) {
      throw std::invalid_argument(
          "transfer_eval: pair members target different systems");
    }
    ExperimentConfig rl = rl_cfg;
    rl.checkpoint_path = checkpoint_path;
    const CampaignResult base_res = run_campaign(base_cfg);
    const CampaignResult rl_res = run_campaign(rl);
    if (!base_res.summary.shots_stats || !rl_res.summary.shots_stats) {
      throw std::runtime_error(
          "transfer_eval: no runs reached the threshold for " +
          base_cfg.hamiltonian_path);
    }
    TransferRow row;
    const HamiltonianSpec spec = load_hamiltonian_file(base_cfg.hamiltonian_path);
    std::ostringstream label;
    label << spec.molecule << " R=" << spec.bond_length_angstrom;
    row.label = label.str();
    row.median_baseline = base_res.summary.shots_stats->median;
    row.median_rl = rl_res.summary.shots_stats->median;
    row.reduction = 1.0 - row.median_rl / row.median_baseline;
    row.baseline_never = base_res.summary.never_reached;
    row.rl_never = rl_res.summary.never_reached;
    rows.push_back(row);
  }
  return rows;
}

std::string transfer_table(const std::vector<TransferRow>& rows) {
  std::ostringstream out;
  out << "system\tmedian_baseline\tmedian_rl\treduction_pct\tnever_base\t"
         "never_rl\n";
  for (const auto& r : rows) {
    out << r.label << '\t' << r.median_baseline << '\t' << r.median_rl << '\t'
        << 100.0 * r.reduction << '\t' << r.baseline_never << '\t' << r.rl_never
        << '\n';
  }
  return out.str();
}

}  // namespace shotrl
