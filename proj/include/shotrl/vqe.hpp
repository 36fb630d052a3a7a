#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "shotrl/hamiltonian.hpp"
#include "shotrl/measurement.hpp"
#include "shotrl/rng.hpp"
#include "shotrl/simulator.hpp"

namespace shotrl {

struct OptimizerConfig {
  enum class Kind { GD, Adam };
  Kind kind = Kind::GD;
  double learning_rate = 0.1;
  bool cosine_decay = false;
  int max_iterations = 500;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Moment accumulators for Adam; unused by plain gradient descent.
struct OptimizerState {
  std::vector<double> m, v;
  long step = 0;
};

/// lr * (1 + cos(pi * t / T)) / 2 when cosine_decay is set, else lr.
double effective_learning_rate(const OptimizerConfig& config, int iteration);

std::vector<double> optimizer_step(const OptimizerConfig& config,
                                   OptimizerState& state,
                                   const std::vector<double>& params,
                                   const std::vector<double>& gradient,
                                   int iteration);

struct VqeIterationRow {
  int iteration = 0;
  double estimated_energy = 0.0;
  double exact_energy = 0.0;  // diagnostic
  long long shots_this_iter = 0;
  long long cumulative_shots = 0;
  std::vector<double> params;
};

struct VqeTrace {
  std::vector<VqeIterationRow> rows;

  long long total_shots() const {
    return rows.empty() ? 0 : rows.back().cumulative_shots;
  }
};

/// One row per iteration: iteration, estimated_energy, exact_energy,
/// shots_this_iter, cumulative_shots.
std::string trace_to_csv(const VqeTrace& trace);
VqeTrace trace_from_csv(const std::string& text);
void write_trace_csv(const VqeTrace& trace, const std::string& path);
VqeTrace read_trace_csv(const std::string& path);

enum class AllocationMethod { Uniform, VarianceMinimization };

/// Per-run allocator: dispatches to the uniform or VM split and keeps the
/// EMA clique statistics fed by every energy estimate of the run.
class AllocatorState {
 public:
  AllocatorState(AllocationMethod method, int n_cliques)
      : method_(method), stats_(CliqueStats::cold(n_cliques)) {}

  ShotAllocation allocate(long long n_total) const {
    if (method_ == AllocationMethod::VarianceMinimization) {
      return allocate_vm(n_total, stats_);
    }
    return allocate_uniform(n_total, static_cast<int>(stats_.ema_std.size()));
  }

  void observe(const EnergyEstimate& estimate) { update_stats(stats_, estimate); }

  const CliqueStats& stats() const { return stats_; }
  AllocationMethod method() const { return method_; }

 private:
  AllocationMethod method_;
  CliqueStats stats_;
};

/// Supplies the per-evaluation shot count for each iteration and an optional
/// early-stop signal, queried after each completed iteration.
class ShotController {
 public:
  virtual ~ShotController() = default;
  virtual long long shots_for_iteration(int iteration, const VqeTrace& trace) = 0;
  virtual bool should_stop(int iteration, const VqeTrace& trace) = 0;
};

class FixedShotController final : public ShotController {
 public:
  explicit FixedShotController(long long shots) : shots_(shots) {}
  long long shots_for_iteration(int, const VqeTrace&) override { return shots_; }
  bool should_stop(int, const VqeTrace&) override { return false; }

 private:
  long long shots_;
};

struct GradientResult {
  std::vector<double> gradient;
  long long shots_consumed = 0;
};

/// Parameter-shift rule: dE/dtheta_k = (E(theta + pi/2 e_k) - E(theta - pi/2
/// e_k)) / 2, each evaluation with its own allocation of shots_per_eval shots
/// (exact expectation and zero shots in exact mode). Requires every parameter
/// to drive exactly one rotation gate.
GradientResult parameter_shift_gradient(const AnsatzCircuit& circuit,
                                        const HamiltonianSpec& spec,
                                        const CliquePartition& partition,
                                        const std::vector<double>& params,
                                        long long shots_per_eval,
                                        AllocatorState& allocator, Rng& rng,
                                        bool exact_mode);

/// Stepwise VQE driver: iteration t evaluates the energy at theta_t (one
/// trace evaluation plus 2*n_params gradient evaluations, all at the
/// controller-supplied shot count) and then applies the optimizer update.
class VqeRun {
 public:
  VqeRun(const AnsatzCircuit& circuit, const HamiltonianSpec& spec,
         const CliquePartition& partition, const OptimizerConfig& optimizer,
         AllocationMethod method, Rng& rng, bool exact_mode = false,
         std::optional<std::vector<double>> initial_params = std::nullopt);

  bool finished() const { return iteration_ >= config_.max_iterations; }
  int iteration() const { return iteration_; }
  void step(long long shots_per_eval);

  const VqeTrace& trace() const { return trace_; }
  const std::vector<double>& params() const { return params_; }
  const AllocatorState& allocator() const { return allocator_; }

 private:
  const AnsatzCircuit& circuit_;
  const HamiltonianSpec& spec_;
  const CliquePartition& partition_;
  OptimizerConfig config_;
  OptimizerState opt_state_;
  AllocatorState allocator_;
  Rng& rng_;
  bool exact_mode_;
  std::vector<double> params_;
  VqeTrace trace_;
  int iteration_ = 0;
};

/// Runs up to max_iterations, honoring the controller's shot counts and
/// early-stop signal. Initial parameters are drawn uniformly from
/// [-0.1, 0.1] with the run's rng.
VqeTrace run_vqe(const AnsatzCircuit& circuit, const HamiltonianSpec& spec,
                 const CliquePartition& partition,
                 const OptimizerConfig& optimizer, ShotController& controller,
                 AllocationMethod method, Rng& rng, bool exact_mode = false,
                 std::optional<std::vector<double>> initial_params = std::nullopt);

}  // namespace shotrl
