#include "shotrl/simulator.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace shotrl {

namespace {

using json = nlohmann::json;
using cd = std::complex<double>;

void apply_single(std::vector<cd>& amps, int n, int q, const cd u00, const cd u01,
                  const cd u10, const cd u11) {
  const std::size_t stride = std::size_t{1} << (n - 1 - q);
  const std::size_t dim = amps.size();
  for (std::size_t base = 0; base < dim; base += 2 * stride) {
    for (std::size_t i = base; i < base + stride; ++i) {
      const cd a0 = amps[i];
      const cd a1 = amps[i + stride];
      amps[i] = u00 * a0 + u01 * a1;
      amps[i + stride] = u10 * a0 + u11 * a1;
    }
  }
}

void apply_cnot(std::vector<cd>& amps, int n, int control, int target) {
  const std::size_t cb = std::size_t{1} << (n - 1 - control);
  const std::size_t tb = std::size_t{1} << (n - 1 - target);
  const std::size_t dim = amps.size();
  for (std::size_t i = 0; i < dim; ++i) {
    if ((i & cb) && !(i & tb)) std::swap(amps[i], amps[i | tb]);
  }
}

GateKind gate_kind_from(const std::string& s, const std::string& where) {
  if (s == "RX") return GateKind::RX;
  if (s == "RY") return GateKind::RY;
  if (s == "RZ") return GateKind::RZ;
  if (s == "CNOT") return GateKind::CNOT;
  if (s == "H") return GateKind::H;
  if (s == "SDG") return GateKind::SDG;
  throw std::invalid_argument(where + ": unknown gate '" + s + "'");
}

bool is_rotation(GateKind k) {
  return k == GateKind::RX || k == GateKind::RY || k == GateKind::RZ;
}

}  // namespace

double StateVector::norm() const {
  double s = 0.0;
  for (const auto& a : amplitudes) s += std::norm(a);
  return std::sqrt(s);
}

void AnsatzCircuit::validate() const {
  if (n_qubits < 1) throw std::invalid_argument("circuit: n_qubits must be >= 1");
  if (n_params < 0) throw std::invalid_argument("circuit: negative n_params");
  if (reference_state >= (std::uint64_t{1} << n_qubits)) {
    throw std::invalid_argument("circuit: reference_state out of range");
  }
  std::vector<bool> used(n_params, false);
  for (std::size_t i = 0; i < gates.size(); ++i) {
    const Gate& g = gates[i];
    const std::string where = "gates[" + std::to_string(i) + "]";
    if (g.kind == GateKind::CNOT) {
      if (g.control < 0 || g.control >= n_qubits || g.target < 0 ||
          g.target >= n_qubits || g.control == g.target) {
        throw std::invalid_argument(where + ": bad CNOT qubits");
      }
    } else {
      if (g.qubit < 0 || g.qubit >= n_qubits) {
        throw std::invalid_argument(where + ": qubit out of range");
      }
      if (g.param_index >= 0) {
        if (!is_rotation(g.kind)) {
          throw std::invalid_argument(where + ": only rotations take parameters");
        }
        if (g.param_index >= n_params) {
          throw std::invalid_argument(where + ": parameter index out of range");
        }
        used[g.param_index] = true;
      }
    }
  }
  for (int k = 0; k < n_params; ++k) {
    if (!used[k]) {
      throw std::invalid_argument("circuit: parameter " + std::to_string(k) +
                                  " is never used");
    }
  }
}

AnsatzCircuit parse_circuit(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("circuit: ") + e.what());
  }
  AnsatzCircuit c;
  c.name = doc.value("name", "");
  for (const char* field : {"n_qubits", "n_params", "reference_state", "gates"}) {
    if (!doc.contains(field)) {
      throw std::invalid_argument(std::string("circuit: missing field '") +
                                  field + "'");
    }
  }
  c.n_qubits = doc["n_qubits"].get<int>();
  c.n_params = doc["n_params"].get<int>();
  c.reference_state = doc["reference_state"].get<std::uint64_t>();
  int i = 0;
  for (const auto& g : doc["gates"]) {
    const std::string where = "gates[" + std::to_string(i++) + "]";
    Gate gate;
    gate.kind = gate_kind_from(g.at("gate").get<std::string>(), where);
    if (gate.kind == GateKind::CNOT) {
      gate.control = g.at("control").get<int>();
      gate.target = g.at("target").get<int>();
    } else {
      gate.qubit = g.at("qubit").get<int>();
      if (g.contains("param")) {
        gate.param_index = g["param"].get<int>();
      } else if (g.contains("angle")) {
        gate.fixed_angle = g["angle"].get<double>();
      } else if (is_rotation(gate.kind)) {
        throw std::invalid_argument(where + ": rotation needs 'param' or 'angle'");
      }
    }
    c.gates.push_back(gate);
  }
  c.validate();
  return c;
}

AnsatzCircuit load_circuit_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open circuit file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_circuit(ss.str());
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(path + ": " + e.what());
  }
}

StateVector prepare_state(const AnsatzCircuit& circuit,
                          const ParameterVector& params) {
  if (static_cast<int>(params.values.size()) != circuit.n_params) {
    throw std::invalid_argument("prepare_state: parameter count mismatch");
  }
  StateVector state;
  state.n_qubits = circuit.n_qubits;
  state.amplitudes.assign(std::size_t{1} << circuit.n_qubits, cd{0.0, 0.0});
  state.amplitudes[circuit.reference_state] = cd{1.0, 0.0};

  const cd im(0.0, 1.0);
  for (const Gate& g : circuit.gates) {
    switch (g.kind) {
      case GateKind::CNOT:
        apply_cnot(state.amplitudes, circuit.n_qubits, g.control, g.target);
        break;
      case GateKind::H: {
        const double s = 1.0 / std::sqrt(2.0);
        apply_single(state.amplitudes, circuit.n_qubits, g.qubit, s, s, s, -s);
        break;
      }
      case GateKind::SDG:
        apply_single(state.amplitudes, circuit.n_qubits, g.qubit, 1.0, 0.0, 0.0,
                     -im);
        break;
      default: {
        const double theta =
            g.param_index >= 0 ? params.values[g.param_index] : g.fixed_angle;
        const double c = std::cos(theta / 2.0);
        const double s = std::sin(theta / 2.0);
        if (g.kind == GateKind::RX) {
          apply_single(state.amplitudes, circuit.n_qubits, g.qubit, c, -im * s,
                       -im * s, c);
        } else if (g.kind == GateKind::RY) {
          apply_single(state.amplitudes, circuit.n_qubits, g.qubit, c, -s, s, c);
        } else {
          apply_single(state.amplitudes, circuit.n_qubits, g.qubit,
                       std::exp(-im * (theta / 2.0)), 0.0, 0.0,
                       std::exp(im * (theta / 2.0)));
        }
      }
    }
  }
  if (std::abs(state.norm() - 1.0) > 1e-10) {
    throw std::runtime_error("prepare_state: norm drifted beyond 1e-10");
  }
  return state;
}

double exact_expectation(const StateVector& state, const HamiltonianSpec& spec) {
  if (state.n_qubits != spec.n_qubits) {
    throw std::invalid_argument("exact_expectation: dimension mismatch");
  }
  const int n = state.n_qubits;
  const std::size_t dim = state.amplitudes.size();
  const cd im(0.0, 1.0);
  cd acc(0.0, 0.0);
  for (const auto& t : spec.terms) {
    std::size_t flip = 0;
    for (int q = 0; q < n; ++q) {
      if (t.ops[q] == 'X' || t.ops[q] == 'Y') flip |= std::size_t{1} << (n - 1 - q);
    }
    cd term_acc(0.0, 0.0);
    for (std::size_t j = 0; j < dim; ++j) {
      cd phase(1.0, 0.0);
      for (int q = 0; q < n; ++q) {
        const std::size_t bit = (j >> (n - 1 - q)) & 1u;
        if (t.ops[q] == 'Z') {
          if (bit) phase = -phase;
        } else if (t.ops[q] == 'Y') {
          phase *= bit ? -im : im;
        }
      }
      term_acc += std::conj(state.amplitudes[j ^ flip]) * phase *
                  state.amplitudes[j];
    }
    acc += t.coefficient * term_acc;
  }
  if (std::abs(acc.imag()) > 1e-10) {
    throw std::runtime_error("exact_expectation: imaginary residue too large");
  }
  return acc.real();
}

CliqueSample sample_clique(const StateVector& state, const HamiltonianSpec& spec,
                           const CliquePartition& partition, int clique_id,
                           long long n_shots, Rng& rng) {
  if (n_shots < 1) throw std::invalid_argument("sample_clique: zero shots");
  if (clique_id < 0 || clique_id >= partition.n_cliques()) {
    throw std::invalid_argument("sample_clique: clique_id out of range");
  }
  const int n = state.n_qubits;
  const std::size_t dim = state.amplitudes.size();
  const std::string& basis = partition.measurement_basis[clique_id];

  // rotate into the measurement basis: H for X, Sdg then H for Y
  std::vector<cd> amps = state.amplitudes;
  const double s = 1.0 / std::sqrt(2.0);
  const cd im(0.0, 1.0);
  for (int q = 0; q < n; ++q) {
    if (basis[q] == 'X') {
      apply_single(amps, n, q, s, s, s, -s);
    } else if (basis[q] == 'Y') {
      apply_single(amps, n, q, 1.0, 0.0, 0.0, -im);
      apply_single(amps, n, q, s, s, s, -s);
    }
  }

  // cumulative distribution over basis states
  std::vector<double> cum(dim);
  double run = 0.0;
  for (std::size_t k = 0; k < dim; ++k) {
    run += std::norm(amps[k]);
    cum[k] = run;
  }
  const double total = cum.back();

  // per-basis-state +-1 eigenvalue of each term, and the clique energy
  const auto& members = partition.cliques[clique_id];
  const int n_terms = static_cast<int>(members.size());
  std::vector<std::size_t> masks(n_terms, 0);
  for (int t = 0; t < n_terms; ++t) {
    const std::string& ops = spec.terms[members[t]].ops;
    for (int q = 0; q < n; ++q) {
      if (ops[q] != 'I') masks[t] |= std::size_t{1} << (n - 1 - q);
    }
  }
  std::vector<double> energy(dim, 0.0);
  std::vector<std::vector<double>> eig(n_terms, std::vector<double>(dim));
  for (std::size_t k = 0; k < dim; ++k) {
    double e = 0.0;
    for (int t = 0; t < n_terms; ++t) {
      const double sgn = (std::popcount(k & masks[t]) & 1) ? -1.0 : 1.0;
      eig[t][k] = sgn;
      e += spec.terms[members[t]].coefficient * sgn;
    }
    energy[k] = e;
  }

  // sample a histogram of outcomes
  std::vector<long long> counts(dim, 0);
  for (long long shot = 0; shot < n_shots; ++shot) {
    const double u = rng.uniform() * total;
    const std::size_t k =
        std::lower_bound(cum.begin(), cum.end(), u) - cum.begin();
    ++counts[std::min(k, dim - 1)];
  }

  CliqueSample out;
  out.shots = n_shots;
  out.term_means.assign(n_terms, 0.0);
  double sum_e = 0.0, sum_e2 = 0.0;
  for (std::size_t k = 0; k < dim; ++k) {
    if (counts[k] == 0) continue;
    const double w = static_cast<double>(counts[k]);
    sum_e += w * energy[k];
    sum_e2 += w * energy[k] * energy[k];
    for (int t = 0; t < n_terms; ++t) out.term_means[t] += w * eig[t][k];
  }
  const double nd = static_cast<double>(n_shots);
  for (auto& m : out.term_means) m /= nd;
  out.mean = sum_e / nd;
  if (n_shots > 1) {
    const double var = std::max(0.0, (sum_e2 - nd * out.mean * out.mean) /
                                         (nd - 1.0));
    out.sample_std = std::sqrt(var);
    out.std_valid = true;
  }
  return out;
}

EnergyEstimate estimate_energy(const StateVector& state,
                               const HamiltonianSpec& spec,
                               const CliquePartition& partition,
                               const ShotAllocation& allocation, Rng& rng) {
  if (static_cast<int>(allocation.per_clique.size()) != partition.n_cliques()) {
    throw std::invalid_argument(
        "estimate_energy: allocation does not match partition");
  }
  EnergyEstimate est;
  est.value = spec.identity_coefficient();
  for (int c = 0; c < partition.n_cliques(); ++c) {
    const CliqueSample s =
        sample_clique(state, spec, partition, c, allocation.per_clique[c], rng);
    est.value += s.mean;
    est.total_shots += s.shots;
    est.clique_means.push_back(s.mean);
    est.clique_stds.push_back(s.sample_std);
    est.stds_valid.push_back(s.std_valid);
    est.clique_shots.push_back(s.shots);
  }
  return est;
}

}  // namespace shotrl
