#include "shotrl/vqe.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace shotrl {

double effective_learning_rate(const OptimizerConfig& config, int iteration) {
  if (!config.cosine_decay) return config.learning_rate;
  const double t = static_cast<double>(iteration);
  const double T = static_cast<double>(config.max_iterations);
  return config.learning_rate * (1.0 + std::cos(M_PI * t / T)) / 2.0;
}

std::vector<double> optimizer_step(const OptimizerConfig& config,
                                   OptimizerState& state,
                                   const std::vector<double>& params,
                                   const std::vector<double>& gradient,
                                   int iteration) {
  const std::size_t n = params.size();
  if (gradient.size() != n) {
    throw std::invalid_argument("optimizer_step: gradient size mismatch");
  }
  for (double g : gradient) {
    if (!std::isfinite(g)) {
      throw std::runtime_error("optimizer_step: non-finite gradient at iteration " +
                               std::to_string(iteration));
    }
  }
  const double lr = effective_learning_rate(config, iteration);
  std::vector<double> out(n);
  if (config.kind == OptimizerConfig::Kind::GD) {
    for (std::size_t i = 0; i < n; ++i) out[i] = params[i] - lr * gradient[i];
    return out;
  }
  if (state.m.size() != n) {
    state.m.assign(n, 0.0);
    state.v.assign(n, 0.0);
    state.step = 0;
  }
  ++state.step;
  const double b1 = config.beta1, b2 = config.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < n; ++i) {
    state.m[i] = b1 * state.m[i] + (1.0 - b1) * gradient[i];
    state.v[i] = b2 * state.v[i] + (1.0 - b2) * gradient[i] * gradient[i];
    const double mhat = state.m[i] / c1;
    const double vhat = state.v[i] / c2;
    out[i] = params[i] - lr * mhat / (std::sqrt(vhat) + config.epsilon);
  }
  return out;
}

std::string trace_to_csv(const VqeTrace& trace) {
  std::ostringstream out;
  out << "iteration,estimated_energy,exact_energy,shots_this_iter,"
         "cumulative_shots\n";
  out.precision(17);
  for (const auto& r : trace.rows) {
    out << r.iteration << ',' << r.estimated_energy << ',' << r.exact_energy
        << ',' << r.shots_this_iter << ',' << r.cumulative_shots << '\n';
  }
  return out.str();
}

VqeTrace trace_from_csv(const std::string& text) {
  VqeTrace trace;
  std::istringstream in(text);
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (header) {
      header = false;
      continue;
    }
    VqeIterationRow row;
    std::istringstream ls(line);
    char comma;
    if (!(ls >> row.iteration >> comma >> row.estimated_energy >> comma >>
          row.exact_energy >> comma >> row.shots_this_iter >> comma >>
          row.cumulative_shots)) {
      throw std::invalid_argument("trace csv: malformed row '" + line + "'");
    }
    trace.rows.push_back(row);
  }
  return trace;
}

void write_trace_csv(const VqeTrace& trace, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write trace: " + path);
  out << trace_to_csv(trace);
}

VqeTrace read_trace_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read trace: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return trace_from_csv(ss.str());
}

namespace {

double evaluate(const AnsatzCircuit& circuit, const HamiltonianSpec& spec,
                const CliquePartition& partition,
                const std::vector<double>& params, long long shots_per_eval,
                AllocatorState& allocator, Rng& rng, bool exact_mode,
                long long* shots_out) {
  const StateVector state = prepare_state(circuit, ParameterVector{params});
  if (exact_mode) {
    if (shots_out) *shots_out = 0;
    return exact_expectation(state, spec);
  }
  const EnergyEstimate est =
      estimate_energy(state, spec, partition, allocator.allocate(shots_per_eval), rng);
  allocator.observe(est);
  if (shots_out) *shots_out = est.total_shots;
  return est.value;
}

}  // namespace

GradientResult parameter_shift_gradient(const AnsatzCircuit& circuit,
                                        const HamiltonianSpec& spec,
                                        const CliquePartition& partition,
                                        const std::vector<double>& params,
                                        long long shots_per_eval,
                                        AllocatorState& allocator, Rng& rng,
                                        bool exact_mode) {
  std::vector<int> uses(circuit.n_params, 0);
  for (const Gate& g : circuit.gates) {
    if (g.param_index >= 0) {
      if (g.kind != GateKind::RX && g.kind != GateKind::RY &&
          g.kind != GateKind::RZ) {
        throw std::invalid_argument(
            "parameter_shift_gradient: parameterized gate is not a rotation");
      }
      ++uses[g.param_index];
    }
  }
  for (int k = 0; k < circuit.n_params; ++k) {
    if (uses[k] != 1) {
      throw std::invalid_argument(
          "parameter_shift_gradient: unsupported ansatz, parameter " +
          std::to_string(k) + " drives " + std::to_string(uses[k]) + " gates");
    }
  }

  GradientResult result;
  result.gradient.resize(circuit.n_params);
  std::vector<double> shifted = params;
  for (int k = 0; k < circuit.n_params; ++k) {
    long long shots = 0;
    shifted[k] = params[k] + M_PI / 2.0;
    const double e_plus = evaluate(circuit, spec, partition, shifted,
                                   shots_per_eval, allocator, rng, exact_mode,
                                   &shots);
    result.shots_consumed += shots;
    shifted[k] = params[k] - M_PI / 2.0;
    const double e_minus = evaluate(circuit, spec, partition, shifted,
                                    shots_per_eval, allocator, rng, exact_mode,
                                    &shots);
    result.shots_consumed += shots;
    shifted[k] = params[k];
    result.gradient[k] = 0.5 * (e_plus - e_minus);
  }
  return result;
}

VqeRun::VqeRun(const AnsatzCircuit& circuit, const HamiltonianSpec& spec,
               const CliquePartition& partition,
               const OptimizerConfig& optimizer, AllocationMethod method,
               Rng& rng, bool exact_mode,
               std::optional<std::vector<double>> initial_params)
    : circuit_(circuit),
      spec_(spec),
      partition_(partition),
      config_(optimizer),
      allocator_(method, partition.n_cliques()),
      rng_(rng),
      exact_mode_(exact_mode) {
  if (circuit.n_qubits != spec.n_qubits) {
    throw std::invalid_argument("vqe: circuit and hamiltonian qubit mismatch");
  }
  if (initial_params) {
    if (static_cast<int>(initial_params->size()) != circuit.n_params) {
      throw std::invalid_argument("vqe: initial parameter count mismatch");
    }
    params_ = std::move(*initial_params);
  } else {
    params_.resize(circuit.n_params);
    for (auto& p : params_) p = rng_.uniform(-0.1, 0.1);
  }
}

void VqeRun::step(long long shots_per_eval) {
  if (finished()) throw std::logic_error("vqe: step() after finish");
  const StateVector state = prepare_state(circuit_, ParameterVector{params_});
  const double exact = exact_expectation(state, spec_);

  VqeIterationRow row;
  row.iteration = iteration_;
  row.exact_energy = exact;
  row.params = params_;

  long long shots = 0;
  if (exact_mode_) {
    row.estimated_energy = exact;
  } else {
    const EnergyEstimate est = estimate_energy(
        state, spec_, partition_, allocator_.allocate(shots_per_eval), rng_);
    allocator_.observe(est);
    row.estimated_energy = est.value;
    shots += est.total_shots;
  }

  GradientResult grad;
  try {
    grad = parameter_shift_gradient(circuit_, spec_, partition_, params_,
                                    shots_per_eval, allocator_, rng_,
                                    exact_mode_);
  } catch (const std::exception& e) {
    throw std::runtime_error("vqe iteration " + std::to_string(iteration_) +
                             ": " + e.what());
  }
  shots += grad.shots_consumed;

  row.shots_this_iter = shots;
  row.cumulative_shots = trace_.total_shots() + shots;
  trace_.rows.push_back(std::move(row));

  params_ = optimizer_step(config_, opt_state_, params_, grad.gradient,
                           iteration_);
  ++iteration_;
}

VqeTrace run_vqe(const AnsatzCircuit& circuit, const HamiltonianSpec& spec,
                 const CliquePartition& partition,
                 const OptimizerConfig& optimizer, ShotController& controller,
                 AllocationMethod method, Rng& rng, bool exact_mode,
                 std::optional<std::vector<double>> initial_params) {
  VqeRun run(circuit, spec, partition, optimizer, method, rng, exact_mode,
             std::move(initial_params));
  while (!run.finished()) {
    const long long shots =
        controller.shots_for_iteration(run.iteration(), run.trace());
    run.step(shots);
    if (controller.should_stop(run.iteration() - 1, run.trace())) break;
  }
  return run.trace();
}

}  // namespace shotrl
