#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "polymerlab/disorder.hpp"

namespace polymerlab {

enum class Surrogate {
  Terminal,    // open edges on the root path at the last level, over depth
  RunningMin,  // min over k in [ceil(n/2), n] of open edges up to k, over k
};

/// Best open-edge fraction over the rays of generation `depth`. A vertex is
/// open when its weight equals the law's `one` value. Requires a Bernoulli law.
double best_open_fraction(const DisorderOracle& oracle, int depth, Surrogate surrogate = Surrogate::Terminal);

/// Same search with vertex (level, i) open iff uniform(level, i) >= 1 - p,
/// the rule the Bernoulli(p) law itself uses. Any law may back the oracle;
/// only its uniforms are read, so all p share the same deviates.
double best_open_fraction_coupled(const DisorderOracle& oracle, double p, int depth,
                                  Surrogate surrogate = Surrogate::Terminal);

struct PercolationRun {
  int d = 2;
  double p = 0.0;
  double rho = 0.0;
  int depth = 0;
  int replicas = 0;
  std::vector<double> best_fraction;  // per replica
  double occurrence_freq = 0.0;       // fraction with best_fraction >= rho
  double mean_best_fraction = 0.0;
};

/// Replica r reads the uniforms of seed derive_seed(salt, Replica, r) at every
/// grid point, so best fractions are nondecreasing in p for each replica.
std::vector<PercolationRun> percolation_curve(int d, double rho, std::span<const double> p_grid, int depth,
                                              int replicas, std::uint64_t salt = 0, int workers = 1,
                                              Surrogate surrogate = Surrogate::Terminal);

}  // namespace polymerlab
