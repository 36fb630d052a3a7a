#include "shotrl/vqe.hpp"

#include <cmath>

#include "doctest.h"
#include "oracles.hpp"

using namespace shotrl;

namespace {

struct H2Setup {
  HamiltonianSpec spec;
  AnsatzCircuit circuit;
  CliquePartition partition;
  double e_gs;
};

H2Setup h2_setup() {
  H2Setup s;
  s.spec = load_hamiltonian_file(
      oracle::data_path("hamiltonians/h2_sto3g_r1p75.json"));
  s.circuit = load_circuit_file(oracle::data_path("ansatz/h2_ry2.json"));
  s.partition = group_cliques(s.spec);
  s.e_gs = exact_ground_energy(s.spec);
  return s;
}

AnsatzCircuit random_rotation_circuit(int n_qubits, int n_params, Rng& rng) {
  AnsatzCircuit c;
  c.n_qubits = n_qubits;
  c.n_params = n_params;
  c.reference_state = rng.below(std::uint64_t{1} << n_qubits);
  for (int k = 0; k < n_params; ++k) {
    Gate g;
    const int pick = static_cast<int>(rng.below(3));
    g.kind = pick == 0 ? GateKind::RX : pick == 1 ? GateKind::RY : GateKind::RZ;
    g.qubit = static_cast<int>(rng.below(n_qubits));
    g.param_index = k;
    c.gates.push_back(g);
    if (n_qubits > 1 && rng.below(2)) {
      Gate cx;
      cx.kind = GateKind::CNOT;
      cx.control = static_cast<int>(rng.below(n_qubits));
      do {
        cx.target = static_cast<int>(rng.below(n_qubits));
      } while (cx.target == cx.control);
      c.gates.push_back(cx);
    }
  }
  c.validate();
  return c;
}

HamiltonianSpec random_spec(int n_qubits, int n_terms, Rng& rng) {
  HamiltonianSpec spec;
  spec.n_qubits = n_qubits;
  const char letters[] = {'I', 'X', 'Y', 'Z'};
  for (int t = 0; t < n_terms; ++t) {
    std::string ops;
    for (int q = 0; q < n_qubits; ++q) ops += letters[rng.below(4)];
    spec.terms.push_back({rng.uniform(-1.0, 1.0), ops});
  }
  return spec;
}

}  // namespace

TEST_CASE("gradient descent step") {
  OptimizerConfig cfg;
  cfg.kind = OptimizerConfig::Kind::GD;
  cfg.learning_rate = 0.1;
  OptimizerState st;
  const auto out = optimizer_step(cfg, st, {0.5}, {1.0}, 0);
  CHECK(out[0] == doctest::Approx(0.4).epsilon(1e-15));
}

TEST_CASE("adam first step moves by ~lr in the sign direction") {
  OptimizerConfig cfg;
  cfg.kind = OptimizerConfig::Kind::Adam;
  cfg.learning_rate = 0.1;
  OptimizerState st;
  const auto out = optimizer_step(cfg, st, {0.0, 0.0}, {3.7, -0.02}, 0);
  CHECK(std::abs(std::abs(out[0]) - 0.1) < 1e-6);
  CHECK(std::abs(std::abs(out[1]) - 0.1) < 1e-6);
  CHECK(out[0] < 0.0);
  CHECK(out[1] > 0.0);
}

TEST_CASE("cosine decay schedule endpoints") {
  OptimizerConfig cfg;
  cfg.learning_rate = 0.1;
  cfg.cosine_decay = true;
  cfg.max_iterations = 500;
  CHECK(effective_learning_rate(cfg, 0) == doctest::Approx(0.1));
  CHECK(effective_learning_rate(cfg, 250) == doctest::Approx(0.05));
  CHECK(effective_learning_rate(cfg, 500) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(effective_learning_rate(cfg, 499) > 0.0);
}

TEST_CASE("nan gradient aborts with a diagnostic") {
  OptimizerConfig cfg;
  OptimizerState st;
  CHECK_THROWS_WITH_AS(
      optimizer_step(cfg, st, {0.0}, {std::nan("")}, 7),
      doctest::Contains("iteration 7"), std::runtime_error);
}

TEST_CASE("parameter shift matches the closed form for <Z> = cos(theta)") {
  HamiltonianSpec zspec;
  zspec.n_qubits = 1;
  zspec.terms = {{1.0, "Z"}};
  const auto part = group_cliques(zspec);
  AnsatzCircuit c;
  c.n_qubits = 1;
  c.n_params = 1;
  c.gates.push_back({GateKind::RY, 0, -1, -1, 0, 0.0});

  Rng rng(1);
  AllocatorState alloc(AllocationMethod::Uniform, part.n_cliques());
  for (double theta : {0.0, 0.4, 1.3, -2.2}) {
    const auto g = parameter_shift_gradient(c, zspec, part, {theta}, 0, alloc,
                                            rng, /*exact_mode=*/true);
    CHECK(g.gradient[0] == doctest::Approx(-std::sin(theta)).epsilon(1e-10));
    CHECK(g.shots_consumed == 0);
  }
}

TEST_CASE("parameter shift agrees with finite differences in exact mode") {
  Rng rng(404);
  int checked = 0;
  for (int rep = 0; rep < 100; ++rep) {
    const int n = 1 + static_cast<int>(rng.below(3));
    const int k = 1 + static_cast<int>(rng.below(4));
    const auto circuit = random_rotation_circuit(n, k, rng);
    const auto spec = random_spec(n, 2 + static_cast<int>(rng.below(4)), rng);
    const auto part = group_cliques(spec);
    std::vector<double> params;
    for (int i = 0; i < k; ++i) params.push_back(rng.uniform(-M_PI, M_PI));

    AllocatorState alloc(AllocationMethod::Uniform, part.n_cliques());
    const auto g = parameter_shift_gradient(circuit, spec, part, params, 0,
                                            alloc, rng, true);
    const double h = 1e-5;
    for (int i = 0; i < k; ++i) {
      auto pp = params, pm = params;
      pp[i] += h;
      pm[i] -= h;
      const double ep =
          exact_expectation(prepare_state(circuit, {pp}), spec);
      const double em =
          exact_expectation(prepare_state(circuit, {pm}), spec);
      const double fd = (ep - em) / (2.0 * h);
      const double scale =
          std::max({1e-8, std::abs(fd), std::abs(g.gradient[i])});
      if (scale > 1e-6) {
        CHECK(std::abs(g.gradient[i] - fd) / scale < 1e-6);
        ++checked;
      }
    }
  }
  CHECK(checked > 100);
}

TEST_CASE("parameter sharing is rejected") {
  AnsatzCircuit c;
  c.n_qubits = 1;
  c.n_params = 1;
  c.gates.push_back({GateKind::RY, 0, -1, -1, 0, 0.0});
  c.gates.push_back({GateKind::RZ, 0, -1, -1, 0, 0.0});
  HamiltonianSpec zspec;
  zspec.n_qubits = 1;
  zspec.terms = {{1.0, "Z"}};
  const auto part = group_cliques(zspec);
  AllocatorState alloc(AllocationMethod::Uniform, 1);
  Rng rng(2);
  CHECK_THROWS_WITH_AS(
      parameter_shift_gradient(c, zspec, part, {0.1}, 0, alloc, rng, true),
      doctest::Contains("unsupported ansatz"), std::invalid_argument);
}

TEST_CASE("exact-mode vqe reaches the ground state") {
  const auto s = h2_setup();
  OptimizerConfig opt;
  opt.kind = OptimizerConfig::Kind::GD;
  opt.learning_rate = 0.1;
  opt.max_iterations = 500;
  FixedShotController ctrl(3000);
  Rng rng(42);
  const auto trace =
      run_vqe(s.circuit, s.spec, s.partition, opt, ctrl,
              AllocationMethod::Uniform, rng, true,
              std::vector<double>{0.1, 0.1});
  REQUIRE(trace.rows.size() == 500);
  CHECK(std::abs(trace.rows.back().exact_energy - s.e_gs) < 1e-3);
  CHECK(trace.total_shots() == 0);

  // random initializations as well
  Rng rng2(43);
  const auto t2 = run_vqe(s.circuit, s.spec, s.partition, opt, ctrl,
                          AllocationMethod::Uniform, rng2, true);
  CHECK(std::abs(t2.rows.back().exact_energy - s.e_gs) < 1e-3);
}

TEST_CASE("exact-mode descent is monotone and deterministic") {
  const auto s = h2_setup();
  OptimizerConfig opt;
  opt.kind = OptimizerConfig::Kind::GD;
  opt.learning_rate = 0.1;
  opt.max_iterations = 120;
  FixedShotController ctrl(1);

  Rng rng1(9), rng2(9);
  const auto t1 = run_vqe(s.circuit, s.spec, s.partition, opt, ctrl,
                          AllocationMethod::Uniform, rng1, true);
  const auto t2 = run_vqe(s.circuit, s.spec, s.partition, opt, ctrl,
                          AllocationMethod::Uniform, rng2, true);
  REQUIRE(t1.rows.size() == t2.rows.size());
  for (std::size_t i = 0; i < t1.rows.size(); ++i) {
    CHECK(t1.rows[i].exact_energy == t2.rows[i].exact_energy);
    if (i > 0) {
      CHECK(t1.rows[i].exact_energy <= t1.rows[i - 1].exact_energy + 1e-9);
    }
  }
}

TEST_CASE("shot accounting: 1 trace + 2 n_params gradient evaluations") {
  const auto s = h2_setup();
  OptimizerConfig opt;
  opt.kind = OptimizerConfig::Kind::GD;
  opt.learning_rate = 0.1;
  opt.max_iterations = 7;
  FixedShotController ctrl(3000);
  Rng rng(11);
  const auto trace = run_vqe(s.circuit, s.spec, s.partition, opt, ctrl,
                             AllocationMethod::Uniform, rng, false);
  REQUIRE(trace.rows.size() == 7);
  long long cum = 0;
  for (const auto& row : trace.rows) {
    CHECK(row.shots_this_iter == (1 + 2 * 2) * 3000);
    cum += row.shots_this_iter;
    CHECK(row.cumulative_shots == cum);
  }
}

TEST_CASE("noisy trace tracks the exact trace") {
  const auto s = h2_setup();
  OptimizerConfig opt;
  opt.kind = OptimizerConfig::Kind::GD;
  opt.learning_rate = 0.1;
  opt.max_iterations = 150;
  FixedShotController ctrl(3000);
  Rng rng(2023);
  const auto trace = run_vqe(s.circuit, s.spec, s.partition, opt, ctrl,
                             AllocationMethod::Uniform, rng, false);
  double se = 0, sx = 0, see = 0, sxx = 0, sex = 0;
  const int n = static_cast<int>(trace.rows.size());
  for (const auto& r : trace.rows) {
    se += r.estimated_energy;
    sx += r.exact_energy;
    see += r.estimated_energy * r.estimated_energy;
    sxx += r.exact_energy * r.exact_energy;
    sex += r.estimated_energy * r.exact_energy;
  }
  const double r = (n * sex - se * sx) /
                   std::sqrt((n * see - se * se) * (n * sxx - sx * sx));
  CHECK(r > 0.95);
}

TEST_CASE("vm allocation shifts shots toward the noisier clique") {
  const auto s = h2_setup();
  OptimizerConfig opt;
  opt.kind = OptimizerConfig::Kind::GD;
  opt.learning_rate = 0.1;
  opt.max_iterations = 30;
  FixedShotController ctrl(3000);
  Rng rng(5);
  VqeRun run(s.circuit, s.spec, s.partition, opt,
             AllocationMethod::VarianceMinimization, rng, false);
  while (!run.finished()) run.step(3000);
  CHECK(run.allocator().stats().all_warm());
  const auto alloc = run.allocator().allocate(3000);
  CHECK(alloc.total == 3000);
  CHECK(alloc.per_clique.size() == 2);
}

TEST_CASE("trace csv round trip") {
  VqeTrace t;
  t.rows.push_back({0, -1.25, -1.3, 15000, 15000, {}});
  t.rows.push_back({1, -1.3141592653589793, -1.32, 15000, 30000, {}});
  const auto back = trace_from_csv(trace_to_csv(t));
  REQUIRE(back.rows.size() == 2);
  CHECK(back.rows[1].estimated_energy == t.rows[1].estimated_energy);
  CHECK(back.rows[1].cumulative_shots == 30000);
}
