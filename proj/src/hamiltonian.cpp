#include "shotrl/hamiltonian.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "json.hpp"

namespace shotrl {

namespace {

using json = nlohmann::json;

void check_letters(const std::string& ops, const std::string& where) {
  for (char c : ops) {
    if (c != 'I' && c != 'X' && c != 'Y' && c != 'Z') {
      throw std::invalid_argument(where + ": invalid Pauli letter '" +
                                  std::string(1, c) + "'");
    }
  }
}

}  // namespace

double HamiltonianSpec::identity_coefficient() const {
  double c = 0.0;
  for (const auto& t : terms) {
    if (t.is_identity()) c += t.coefficient;
  }
  return c;
}

std::vector<int> HamiltonianSpec::measurable_terms() const {
  std::vector<int> idx;
  for (int i = 0; i < static_cast<int>(terms.size()); ++i) {
    if (!terms[i].is_identity()) idx.push_back(i);
  }
  return idx;
}

bool qubitwise_commuting(const std::string& a, const std::string& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t q = 0; q < a.size(); ++q) {
    if (a[q] != 'I' && b[q] != 'I' && a[q] != b[q]) return false;
  }
  return true;
}

HamiltonianSpec parse_hamiltonian(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    // includes number overflow (coefficients that do not fit a double)
    throw std::invalid_argument(std::string("hamiltonian: ") + e.what());
  }
  for (const char* field : {"molecule", "bond_length_angstrom", "n_qubits",
                            "source", "terms"}) {
    if (!doc.contains(field)) {
      throw std::invalid_argument(std::string("hamiltonian: missing field '") +
                                  field + "'");
    }
  }
  HamiltonianSpec spec;
  spec.molecule = doc["molecule"].get<std::string>();
  spec.bond_length_angstrom = doc["bond_length_angstrom"].get<double>();
  spec.source = doc["source"].get<std::string>();
  if (!doc["n_qubits"].is_number_integer() || doc["n_qubits"].get<int>() < 1) {
    throw std::invalid_argument("n_qubits: must be a positive integer");
  }
  spec.n_qubits = doc["n_qubits"].get<int>();
  if (!doc["terms"].is_array() || doc["terms"].empty()) {
    throw std::invalid_argument("terms: must be a non-empty array");
  }

  // merge duplicates, preserving first-occurrence order
  std::vector<HamiltonianTerm> merged;
  std::unordered_map<std::string, int> seen;
  int i = 0;
  for (const auto& entry : doc["terms"]) {
    const std::string where = "terms[" + std::to_string(i) + "]";
    if (!entry.is_array() || entry.size() != 2 || !entry[0].is_number() ||
        !entry[1].is_string()) {
      throw std::invalid_argument(where + ": expected [coefficient, string]");
    }
    const double c = entry[0].get<double>();
    const std::string ops = entry[1].get<std::string>();
    if (!std::isfinite(c)) {
      throw std::invalid_argument(where + ": non-finite coefficient");
    }
    check_letters(ops, where);
    if (static_cast<int>(ops.size()) != spec.n_qubits) {
      throw std::invalid_argument(
          where + ": string length " + std::to_string(ops.size()) +
          " does not match n_qubits " + std::to_string(spec.n_qubits));
    }
    auto it = seen.find(ops);
    if (it == seen.end()) {
      seen.emplace(ops, static_cast<int>(merged.size()));
      merged.push_back({c, ops});
    } else {
      merged[it->second].coefficient += c;
    }
    ++i;
  }
  // drop terms that cancelled exactly
  for (const auto& t : merged) {
    if (t.coefficient != 0.0) spec.terms.push_back(t);
  }
  if (spec.terms.empty()) {
    throw std::invalid_argument("terms: all coefficients cancelled to zero");
  }
  return spec;
}

HamiltonianSpec load_hamiltonian_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open hamiltonian file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_hamiltonian(ss.str());
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(path + ": " + e.what());
  }
}

std::string serialize_hamiltonian(const HamiltonianSpec& spec) {
  json doc;
  doc["molecule"] = spec.molecule;
  doc["bond_length_angstrom"] = spec.bond_length_angstrom;
  doc["n_qubits"] = spec.n_qubits;
  doc["source"] = spec.source;
  json terms = json::array();
  for (const auto& t : spec.terms) terms.push_back({t.coefficient, t.ops});
  doc["terms"] = terms;
  return doc.dump(2) + "\n";
}

std::string serialize_partition(const CliquePartition& partition) {
  json doc;
  doc["cliques"] = partition.cliques;
  doc["measurement_basis"] = partition.measurement_basis;
  return doc.dump(2) + "\n";
}

CliquePartition group_cliques(const HamiltonianSpec& spec) {
  std::vector<int> order = spec.measurable_terms();
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return std::abs(spec.terms[a].coefficient) >
           std::abs(spec.terms[b].coefficient);
  });

  CliquePartition part;
  // per clique, the basis letter fixed so far at each qubit ('\0' = free)
  std::vector<std::string> fixed;
  for (int idx : order) {
    const std::string& ops = spec.terms[idx].ops;
    bool placed = false;
    for (std::size_t c = 0; c < part.cliques.size() && !placed; ++c) {
      bool fits = true;
      for (int q = 0; q < spec.n_qubits; ++q) {
        if (ops[q] != 'I' && fixed[c][q] != '\0' && fixed[c][q] != ops[q]) {
          fits = false;
          break;
        }
      }
      if (fits) {
        part.cliques[c].push_back(idx);
        for (int q = 0; q < spec.n_qubits; ++q) {
          if (ops[q] != 'I') fixed[c][q] = ops[q];
        }
        placed = true;
      }
    }
    if (!placed) {
      part.cliques.push_back({idx});
      fixed.push_back(std::string(spec.n_qubits, '\0'));
      for (int q = 0; q < spec.n_qubits; ++q) {
        if (ops[q] != 'I') fixed.back()[q] = ops[q];
      }
    }
  }
  for (auto& f : fixed) {
    std::string basis = f;
    for (auto& ch : basis) {
      if (ch == '\0') ch = 'Z';
    }
    part.measurement_basis.push_back(basis);
  }
  return part;
}

Eigen::MatrixXcd dense_matrix(const HamiltonianSpec& spec) {
  const int n = spec.n_qubits;
  if (n > 24) throw std::invalid_argument("dense_matrix: dimension overflow");
  const std::size_t dim = std::size_t{1} << n;
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(dim, dim);
  const std::complex<double> im(0.0, 1.0);
  for (const auto& t : spec.terms) {
    for (std::size_t col = 0; col < dim; ++col) {
      std::size_t row = col;
      std::complex<double> phase(1.0, 0.0);
      for (int q = 0; q < n; ++q) {
        const std::size_t bit = (col >> (n - 1 - q)) & 1u;
        switch (t.ops[q]) {
          case 'I':
            break;
          case 'X':
            row ^= std::size_t{1} << (n - 1 - q);
            break;
          case 'Y':
            row ^= std::size_t{1} << (n - 1 - q);
            phase *= bit ? -im : im;
            break;
          case 'Z':
            if (bit) phase = -phase;
            break;
        }
      }
      m(row, col) += t.coefficient * phase;
    }
  }
  return m;
}

double exact_ground_energy(const HamiltonianSpec& spec) {
  if (spec.n_qubits > 12) {
    throw std::invalid_argument(
        "exact_ground_energy: n_qubits > 12, dense diagonalization refused");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(
      dense_matrix(spec), Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

}  // namespace shotrl
