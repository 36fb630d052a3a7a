#include "shotrl/measurement.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "shotrl/simulator.hpp"

namespace shotrl {

CliqueStats CliqueStats::cold(int n_cliques, double beta) {
  CliqueStats s;
  s.ema_std.assign(n_cliques, 0.0);
  s.warm.assign(n_cliques, false);
  s.beta = beta;
  return s;
}

bool CliqueStats::all_warm() const {
  return std::all_of(warm.begin(), warm.end(), [](bool w) { return w; });
}

ShotAllocation allocate_uniform(long long n_total, int n_cliques) {
  ShotAllocation a;
  if (n_cliques == 0) return a;  // identity-only spec
  if (n_total < n_cliques) {
    throw std::invalid_argument("allocate_uniform: n_total below clique count");
  }
  const long long base = n_total / n_cliques;
  const long long extra = n_total % n_cliques;
  a.per_clique.assign(n_cliques, base);
  for (long long i = 0; i < extra; ++i) ++a.per_clique[i];
  a.total = n_total;
  return a;
}

ShotAllocation allocate_vm(long long n_total, const CliqueStats& stats) {
  const int n = static_cast<int>(stats.ema_std.size());
  for (double s : stats.ema_std) {
    if (!(s >= 0.0)) throw std::invalid_argument("allocate_vm: negative std");
  }
  if (!stats.all_warm()) return allocate_uniform(n_total, n);
  const double sum = std::accumulate(stats.ema_std.begin(), stats.ema_std.end(), 0.0);
  if (sum == 0.0) return allocate_uniform(n_total, n);
  if (n == 0) return {};
  if (n_total < n) {
    throw std::invalid_argument("allocate_vm: n_total below clique count");
  }

  ShotAllocation a;
  a.per_clique.resize(n);
  std::vector<double> ideal(n);
  for (int i = 0; i < n; ++i) {
    ideal[i] = static_cast<double>(n_total) * stats.ema_std[i] / sum;
    a.per_clique[i] = std::max<long long>(1, std::llround(ideal[i]));
  }
  long long diff =
      n_total - std::accumulate(a.per_clique.begin(), a.per_clique.end(), 0LL);
  if (diff != 0) {
    // largest-remainder correction, ties broken by lower clique index
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int x, int y) {
      const double rx = ideal[x] - static_cast<double>(a.per_clique[x]);
      const double ry = ideal[y] - static_cast<double>(a.per_clique[y]);
      return diff > 0 ? rx > ry : rx < ry;
    });
    std::size_t cursor = 0;
    while (diff != 0) {
      const int i = order[cursor];
      if (diff > 0) {
        ++a.per_clique[i];
        --diff;
      } else if (a.per_clique[i] > 1) {
        --a.per_clique[i];
        ++diff;
      }
      cursor = (cursor + 1) % order.size();
    }
  }
  a.total = n_total;
  return a;
}

void update_stats(CliqueStats& stats, const EnergyEstimate& estimate) {
  if (estimate.clique_stds.size() != stats.ema_std.size()) {
    throw std::invalid_argument("update_stats: clique count mismatch");
  }
  for (std::size_t i = 0; i < stats.ema_std.size(); ++i) {
    if (!estimate.stds_valid[i]) continue;
    if (!stats.warm[i]) {
      stats.ema_std[i] = estimate.clique_stds[i];
      stats.warm[i] = true;
    } else {
      stats.ema_std[i] = stats.beta * stats.ema_std[i] +
                         (1.0 - stats.beta) * estimate.clique_stds[i];
    }
  }
}

}  // namespace shotrl
