#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "polymerlab/treesim.hpp"

namespace polymerlab {

/// Slack sequence delta_k used by the prefix filter.
struct DeltaSchedule {
  enum class Kind { Infinite, Constant, InvSqrt };

  Kind kind = Kind::Infinite;
  double a = 0.0;

  double at(int k) const;

  /// `inf`, `const:x` or `a/sqrt:a`.
  static DeltaSchedule parse(std::string_view text);
  std::string to_string() const;

  /// a/sqrt(k) with a = 2 sigma, sigma the standard deviation of the law tilted at beta.
  static DeltaSchedule default_for(const Model& model, double beta);
};

/// Standard deviation of the law tilted at beta, i.e. sqrt(lambda''(beta)).
double tilted_sigma(const WeightLaw& law, double beta);

struct SubtreeLevel {
  int n = 0;
  std::uint64_t size = 0;
  double log_restricted_sum = 0.0;  // -inf when the level is empty
  double log_Z = 0.0;
  double survivor_fraction = 0.0;   // size / d^n
};

struct SubtreeReport {
  DeltaSchedule schedule;
  double beta = 0.0;
  std::vector<SubtreeLevel> levels;
  LinearFit growth;        // log size against n over levels ceil(depth/2)..depth
  LinearFit free_energy;   // log restricted sum against n, same levels
  int first_empty_level = 0;  // 0 when no level is empty
  /// Fraction of terminal survivors v with mu_n(v) >= exp(-n (f(beta) + delta_n)).
  double ball_mass_fraction = 0.0;
};

/// Keeps vertex v at level k iff its parent survived and S(v)/k >= lambda'(beta) - delta_k.
/// Requires 0 < beta < beta_c.
SubtreeReport extract_supporting_subtree(const DisorderOracle& oracle, int depth, double beta,
                                         const DeltaSchedule& schedule, int workers = 1,
                                         std::uint64_t leaf_budget = kArrayLeafBudget);

struct TopKResult {
  double empirical = 0.0;
  double predicted = 0.0;
  double phi_beta = 0.0;
  std::uint64_t k = 0;
};

/// log of sum exp(beta S) over the K vertices of generation `depth` with the
/// largest prefix sums (ties to the lower index).
double restricted_topk_log_sum(const DisorderOracle& oracle, int depth, double beta, std::uint64_t k,
                               int workers = 1);

/// A_n = the ceil(exp(c n)) largest vertices of T_n. Requires 0 < c < f(beta).
TopKResult topk_restricted_energy(const DisorderOracle& oracle, int depth, double beta, double c, int workers = 1);

}  // namespace polymerlab
