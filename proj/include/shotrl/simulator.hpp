#pragma once

#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "shotrl/hamiltonian.hpp"
#include "shotrl/measurement.hpp"
#include "shotrl/rng.hpp"

namespace shotrl {

/// Dense statevector; amplitude index bit (n-1-q) carries qubit q, so qubit 0
/// is the leftmost/most significant position, matching HamiltonianTerm::ops.
struct StateVector {
  int n_qubits = 0;
  std::vector<std::complex<double>> amplitudes;

  double norm() const;
};

enum class GateKind { RX, RY, RZ, CNOT, H, SDG };

struct Gate {
  GateKind kind = GateKind::RY;
  int qubit = -1;    // single-qubit gates
  int control = -1;  // CNOT
  int target = -1;
  int param_index = -1;     // >= 0 for parameterized rotations
  double fixed_angle = 0.0; // rotations with param_index < 0
};

struct AnsatzCircuit {
  std::string name;
  int n_qubits = 0;
  int n_params = 0;
  std::uint64_t reference_state = 0;
  std::vector<Gate> gates;

  /// Throws std::invalid_argument on out-of-range qubits or parameter
  /// indices.
  void validate() const;
};

struct ParameterVector {
  std::vector<double> values;
};

AnsatzCircuit parse_circuit(const std::string& text);
AnsatzCircuit load_circuit_file(const std::string& path);

/// Applies the circuit to its reference state. Norm is checked to 1e-10.
StateVector prepare_state(const AnsatzCircuit& circuit,
                          const ParameterVector& params);

/// <psi|H|psi>; asserts the imaginary residue is below 1e-10.
double exact_expectation(const StateVector& state, const HamiltonianSpec& spec);

/// One clique measurement: n_shots bitstrings sampled in the clique's rotated
/// basis.
struct CliqueSample {
  std::vector<double> term_means;  // mean +-1 eigenvalue per clique term
  double mean = 0.0;               // shot-mean of the clique energy
  double sample_std = 0.0;         // unbiased; 0 and flagged when shots == 1
  bool std_valid = false;
  long long shots = 0;
};

CliqueSample sample_clique(const StateVector& state, const HamiltonianSpec& spec,
                           const CliquePartition& partition, int clique_id,
                           long long n_shots, Rng& rng);

/// Shot-sampled energy: sum of clique means plus the analytic identity
/// constant.
struct EnergyEstimate {
  double value = 0.0;
  long long total_shots = 0;
  std::vector<double> clique_means;
  std::vector<double> clique_stds;
  std::vector<bool> stds_valid;
  std::vector<long long> clique_shots;
};

EnergyEstimate estimate_energy(const StateVector& state,
                               const HamiltonianSpec& spec,
                               const CliquePartition& partition,
                               const ShotAllocation& allocation, Rng& rng);

}  // namespace shotrl
