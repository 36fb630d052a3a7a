#pragma once

#include <cstdint>
#include <vector>

namespace shotrl {

struct EnergyEstimate;  // simulator.hpp

/// Shots assigned to each clique of a partition. Every entry is >= 1 and
/// `total` is the exact sum (empty for a partition with no cliques).
struct ShotAllocation {
  std::vector<long long> per_clique;
  long long total = 0;
};

/// Exponentially averaged per-clique sample standard deviations, used by the
/// variance-minimization allocator. A clique is cold until the first valid
/// sample std has been observed for it.
struct CliqueStats {
  std::vector<double> ema_std;
  std::vector<bool> warm;
  double beta = 0.7;

  static CliqueStats cold(int n_cliques, double beta = 0.7);
  bool all_warm() const;
};

/// Splits n_total as evenly as possible; the first (n_total mod n) cliques
/// receive the extra shot.
ShotAllocation allocate_uniform(long long n_total, int n_cliques);

/// Shots proportional to ema_std with a floor of 1 per clique and a
/// largest-remainder correction so the sum is exactly n_total. Falls back to
/// the uniform split while any clique is cold or all stds are zero.
ShotAllocation allocate_vm(long long n_total, const CliqueStats& stats);

/// Folds the estimate's per-clique sample stds into the EMA. Cliques whose
/// sample variance was flagged invalid (single-shot) are left untouched.
void update_stats(CliqueStats& stats, const EnergyEstimate& estimate);

}  // namespace shotrl
