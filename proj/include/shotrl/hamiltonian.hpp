#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace shotrl {

/// A weighted Pauli string. `ops` holds one letter of {I,X,Y,Z} per qubit;
/// position 0 is the leftmost factor of the Kronecker product (most
/// significant bit of a basis-state index).
struct HamiltonianTerm {
  double coefficient = 0.0;
  std::string ops;

  bool is_identity() const { return ops.find_first_not_of('I') == std::string::npos; }
};

struct HamiltonianSpec {
  int n_qubits = 0;
  std::vector<HamiltonianTerm> terms;
  std::string molecule;
  double bond_length_angstrom = 0.0;
  std::string source;

  /// Coefficient of the all-identity term (0 if absent). The identity is
  /// never measured; estimators add it as a constant.
  double identity_coefficient() const;
  /// Indices of the non-identity terms, in file order.
  std::vector<int> measurable_terms() const;
};

/// Disjoint grouping of the non-identity terms into qubitwise-commuting
/// cliques, plus the rotated measurement basis of each clique.
struct CliquePartition {
  std::vector<std::vector<int>> cliques;
  std::vector<std::string> measurement_basis;  // per clique: X/Y/Z per qubit

  int n_cliques() const { return static_cast<int>(cliques.size()); }
};

/// True when the strings agree or have an I on every qubit position.
bool qubitwise_commuting(const std::string& a, const std::string& b);

/// Parses and validates the JSON Hamiltonian document. Duplicate strings are
/// merged by summing coefficients. Throws std::invalid_argument naming the
/// offending field on malformed input.
HamiltonianSpec parse_hamiltonian(const std::string& text);
HamiltonianSpec load_hamiltonian_file(const std::string& path);

/// Canonical serialization; byte-identical for equal specs.
std::string serialize_hamiltonian(const HamiltonianSpec& spec);
std::string serialize_partition(const CliquePartition& partition);

/// Greedy first-fit grouping over terms sorted by descending |coefficient|.
CliquePartition group_cliques(const HamiltonianSpec& spec);

/// Dense 2^n x 2^n matrix of the Pauli sum.
Eigen::MatrixXcd dense_matrix(const HamiltonianSpec& spec);

/// Minimum eigenvalue of the dense matrix. Requires n_qubits <= 12.
double exact_ground_energy(const HamiltonianSpec& spec);

}  // namespace shotrl
