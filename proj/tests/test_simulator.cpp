#include "shotrl/simulator.hpp"

#include <cmath>

#include "doctest.h"
#include "oracles.hpp"
#include "shotrl/measurement.hpp"

using namespace shotrl;

namespace {

AnsatzCircuit ry_circuit() {
  AnsatzCircuit c;
  c.n_qubits = 1;
  c.n_params = 1;
  c.reference_state = 0;
  c.gates.push_back({GateKind::RY, 0, -1, -1, 0, 0.0});
  return c;
}

AnsatzCircuit bell_circuit() {
  AnsatzCircuit c;
  c.n_qubits = 2;
  c.n_params = 0;
  c.reference_state = 0;
  Gate h;
  h.kind = GateKind::H;
  h.qubit = 0;
  Gate cx;
  cx.kind = GateKind::CNOT;
  cx.control = 0;
  cx.target = 1;
  c.gates = {h, cx};
  return c;
}

HamiltonianSpec inline_spec(int n, std::vector<HamiltonianTerm> terms) {
  HamiltonianSpec s;
  s.n_qubits = n;
  s.terms = std::move(terms);
  return s;
}

AnsatzCircuit random_circuit(int n_qubits, int n_params, Rng& rng) {
  AnsatzCircuit c;
  c.n_qubits = n_qubits;
  c.n_params = n_params;
  c.reference_state = rng.below(std::uint64_t{1} << n_qubits);
  int placed = 0;
  while (placed < n_params || c.gates.size() < 4) {
    const int pick = static_cast<int>(rng.below(5));
    if (pick == 0 && n_qubits == 1) continue;
    Gate g;
    if (pick == 0) {
      g.kind = GateKind::CNOT;
      g.control = static_cast<int>(rng.below(n_qubits));
      do {
        g.target = static_cast<int>(rng.below(n_qubits));
      } while (g.target == g.control);
    } else if (pick == 1) {
      g.kind = rng.below(2) ? GateKind::H : GateKind::SDG;
      g.qubit = static_cast<int>(rng.below(n_qubits));
    } else {
      g.kind = pick == 2   ? GateKind::RX
               : pick == 3 ? GateKind::RY
                           : GateKind::RZ;
      g.qubit = static_cast<int>(rng.below(n_qubits));
      if (placed < n_params) {
        g.param_index = placed++;
      } else {
        g.fixed_angle = rng.uniform(-3.0, 3.0);
      }
    }
    c.gates.push_back(g);
  }
  c.validate();
  return c;
}

}  // namespace

TEST_CASE("prepare_state textbook checks") {
  const auto c = ry_circuit();
  auto s0 = prepare_state(c, {{0.0}});
  CHECK(std::abs(s0.amplitudes[0] - 1.0) < 1e-15);
  CHECK(std::abs(s0.amplitudes[1]) < 1e-15);

  auto s1 = prepare_state(c, {{M_PI}});
  CHECK(std::abs(s1.amplitudes[0]) < 1e-15);
  CHECK(std::abs(std::abs(s1.amplitudes[1]) - 1.0) < 1e-15);

  auto bell = prepare_state(bell_circuit(), {{}});
  const double r = 1.0 / std::sqrt(2.0);
  CHECK(std::abs(bell.amplitudes[0] - r) < 1e-15);
  CHECK(std::abs(bell.amplitudes[1]) < 1e-15);
  CHECK(std::abs(bell.amplitudes[2]) < 1e-15);
  CHECK(std::abs(bell.amplitudes[3] - r) < 1e-15);

  CHECK_THROWS_AS(prepare_state(c, {{0.0, 1.0}}), std::invalid_argument);
}

TEST_CASE("unitarity over random circuits") {
  Rng rng(2024);
  for (int rep = 0; rep < 50; ++rep) {
    const int n = 1 + static_cast<int>(rng.below(5));
    const auto c = random_circuit(n, 1 + static_cast<int>(rng.below(4)), rng);
    ParameterVector params;
    for (int k = 0; k < c.n_params; ++k) {
      params.values.push_back(rng.uniform(-M_PI, M_PI));
    }
    const auto state = prepare_state(c, params);
    CHECK(std::abs(state.norm() - 1.0) < 1e-10);
  }
}

TEST_CASE("exact expectation on stabilizer states") {
  const auto zspec = inline_spec(1, {{1.0, "Z"}});
  AnsatzCircuit id = ry_circuit();
  CHECK(exact_expectation(prepare_state(id, {{0.0}}), zspec) ==
        doctest::Approx(1.0).epsilon(1e-12));

  // |+> with X
  AnsatzCircuit plus;
  plus.n_qubits = 1;
  plus.n_params = 0;
  Gate h;
  h.kind = GateKind::H;
  h.qubit = 0;
  plus.gates = {h};
  CHECK(exact_expectation(prepare_state(plus, {{}}), inline_spec(1, {{1.0, "X"}})) ==
        doctest::Approx(1.0).epsilon(1e-12));

  const auto bell = prepare_state(bell_circuit(), {{}});
  CHECK(exact_expectation(bell, inline_spec(2, {{1.0, "ZZ"}, {1.0, "XX"}})) ==
        doctest::Approx(2.0).epsilon(1e-12));

  CHECK_THROWS_AS(exact_expectation(bell, zspec), std::invalid_argument);
}

TEST_CASE("sample_clique deterministic outcomes") {
  Rng rng(7);
  const auto zspec = inline_spec(1, {{1.0, "Z"}});
  const auto part = group_cliques(zspec);
  const auto s0 = prepare_state(ry_circuit(), {{0.0}});

  for (long long shots : {1LL, 10LL, 1000LL}) {
    const auto sample = sample_clique(s0, zspec, part, 0, shots, rng);
    CHECK(sample.mean == 1.0);
    CHECK(sample.term_means == std::vector<double>{1.0});
    CHECK(sample.sample_std == 0.0);
    CHECK(sample.std_valid == (shots > 1));
  }
  CHECK_THROWS_AS(sample_clique(s0, zspec, part, 0, 0, rng),
                  std::invalid_argument);

  const auto bell = prepare_state(bell_circuit(), {{}});
  const auto zz = inline_spec(2, {{1.0, "ZZ"}});
  const auto s = sample_clique(bell, zz, group_cliques(zz), 0, 1000, rng);
  CHECK(s.mean == 1.0);  // perfect correlation
}

TEST_CASE("sample_clique fair coin statistics") {
  Rng rng(11);
  AnsatzCircuit plus;
  plus.n_qubits = 1;
  plus.n_params = 0;
  Gate h;
  h.kind = GateKind::H;
  h.qubit = 0;
  plus.gates = {h};
  const auto state = prepare_state(plus, {{}});
  const auto zspec = inline_spec(1, {{1.0, "Z"}});
  const auto part = group_cliques(zspec);

  const long long n = 200000;
  const auto s = sample_clique(state, zspec, part, 0, n, rng);
  CHECK(std::abs(s.mean) < 4.0 / std::sqrt(static_cast<double>(n)));
  CHECK(s.sample_std == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("estimate_energy identity handling and accounting") {
  Rng rng(5);
  const auto id_only = inline_spec(2, {{-0.5, "II"}});
  const auto part = group_cliques(id_only);
  REQUIRE(part.n_cliques() == 0);
  const auto bell = prepare_state(bell_circuit(), {{}});
  const auto est = estimate_energy(bell, id_only, part, {}, rng);
  CHECK(est.value == -0.5);
  CHECK(est.total_shots == 0);

  const auto zspec = inline_spec(1, {{1.0, "Z"}});
  const auto zpart = group_cliques(zspec);
  const auto s0 = prepare_state(ry_circuit(), {{0.0}});
  const auto e2 = estimate_energy(s0, zspec, zpart, allocate_uniform(100, 1), rng);
  CHECK(e2.value == 1.0);
  CHECK(e2.total_shots == 100);

  CHECK_THROWS_AS(estimate_energy(s0, zspec, zpart, {}, rng),
                  std::invalid_argument);
}

TEST_CASE("fixed seed gives bit-identical estimates") {
  const auto spec = load_hamiltonian_file(
      oracle::data_path("hamiltonians/h2_sto3g_r1p75.json"));
  const auto part = group_cliques(spec);
  const auto circuit =
      load_circuit_file(oracle::data_path("ansatz/h2_ry2.json"));
  const auto state = prepare_state(circuit, {{0.9432, 0.0}});
  Rng a(77), b(77);
  const auto ea = estimate_energy(state, spec, part, allocate_uniform(3000, 2), a);
  const auto eb = estimate_energy(state, spec, part, allocate_uniform(3000, 2), b);
  CHECK(ea.value == eb.value);
  CHECK(ea.clique_stds == eb.clique_stds);
}

TEST_CASE("estimator is unbiased and variance scales as 1/N") {
  const auto spec = load_hamiltonian_file(
      oracle::data_path("hamiltonians/h2_sto3g_r1p75.json"));
  const auto part = group_cliques(spec);
  const auto circuit =
      load_circuit_file(oracle::data_path("ansatz/h2_ry2.json"));
  const auto state = prepare_state(circuit, {{0.7, 0.3}});
  const double exact = exact_expectation(state, spec);

  const int seeds = 10000;
  double sum = 0.0, sum2 = 0.0, sum4 = 0.0, sum4sq = 0.0;
  for (int s = 0; s < seeds; ++s) {
    Rng rng(1000 + s);
    const auto e1 =
        estimate_energy(state, spec, part, allocate_uniform(1000, 2), rng);
    const auto e4 =
        estimate_energy(state, spec, part, allocate_uniform(4000, 2), rng);
    sum += e1.value;
    sum2 += e1.value * e1.value;
    sum4 += e4.value;
    sum4sq += e4.value * e4.value;
  }
  const double mean = sum / seeds;
  const double var = (sum2 - seeds * mean * mean) / (seeds - 1);
  const double mean4 = sum4 / seeds;
  const double var4 = (sum4sq - seeds * mean4 * mean4) / (seeds - 1);

  const double se = std::sqrt(var / seeds);
  CHECK(std::abs(mean - exact) < 4.0 * se);
  CHECK(var / var4 == doctest::Approx(4.0).epsilon(0.15));
}

TEST_CASE("million-shot estimate stays within the pilot standard error") {
  // std error frozen from a 1000-seed pilot at the optimal angles
  const double kPilotSe = 2.889e-4;
  const auto spec = load_hamiltonian_file(
      oracle::data_path("hamiltonians/h2_sto3g_r1p75.json"));
  const auto part = group_cliques(spec);
  const auto circuit =
      load_circuit_file(oracle::data_path("ansatz/h2_ry2.json"));
  const auto state = prepare_state(circuit, {{0.943216149, 0.0}});
  const double exact = exact_expectation(state, spec);

  const int seeds = 1000;
  int within = 0;
  for (int s = 0; s < seeds; ++s) {
    Rng rng(50000 + s);
    const auto est =
        estimate_energy(state, spec, part, allocate_uniform(1000000, 2), rng);
    if (std::abs(est.value - exact) < 3.0 * kPilotSe) ++within;
  }
  CHECK(within >= 990);
}

TEST_CASE("six-qubit expectation matches the naive oracle") {
  const auto spec = load_hamiltonian_file(
      oracle::data_path("hamiltonians/h2_sto3g_mb_6q.json"));
  const auto circuit =
      load_circuit_file(oracle::data_path("ansatz/ryrz24_6q.json"));
  const auto dense = oracle::naive_dense(spec);
  Rng rng(64);
  for (int rep = 0; rep < 3; ++rep) {
    ParameterVector params;
    for (int k = 0; k < circuit.n_params; ++k) {
      params.values.push_back(rng.uniform(-1.0, 1.0));
    }
    const auto state = prepare_state(circuit, params);
    // <psi|M|psi> from the kronecker-built matrix
    std::complex<double> acc{0.0, 0.0};
    const std::size_t dim = state.amplitudes.size();
    for (std::size_t i = 0; i < dim; ++i) {
      for (std::size_t j = 0; j < dim; ++j) {
        acc += std::conj(state.amplitudes[i]) * dense[i][j] *
               state.amplitudes[j];
      }
    }
    CHECK(exact_expectation(state, spec) ==
          doctest::Approx(acc.real()).epsilon(1e-10));
  }
}

TEST_CASE("circuit file validation") {
  CHECK_THROWS_AS(parse_circuit(R"({"n_qubits":1,"n_params":1,)"
                                R"("reference_state":0,"gates":[)"
                                R"({"gate":"RY","qubit":3,"param":0}]})"),
                  std::invalid_argument);
  CHECK_THROWS_AS(parse_circuit(R"({"n_qubits":1,"n_params":0,)"
                                R"("reference_state":2,"gates":[]})"),
                  std::invalid_argument);
  const auto presets = {"ansatz/h2_ry2.json", "ansatz/hehp_ucc3.json",
                        "ansatz/hea8_4q.json", "ansatz/ryrz24_6q.json"};
  const int expected_params[] = {2, 3, 8, 24};
  int i = 0;
  for (const char* p : presets) {
    const auto c = load_circuit_file(oracle::data_path(p));
    CHECK(c.n_params == expected_params[i++]);
  }
}
