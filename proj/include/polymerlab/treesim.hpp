#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "polymerlab/disorder.hpp"
#include "polymerlab/numeric.hpp"

namespace polymerlab {

enum class Engine { Array, Stream };

/// Largest generation (in vertices) the level-array engine will materialise.
inline constexpr std::uint64_t kArrayLeafBudget = std::uint64_t{1} << 26;

struct ScanOptions {
  Engine engine = Engine::Array;
  int workers = 1;
  std::uint64_t leaf_budget = kArrayLeafBudget;
};

/// Per-generation statistics. `log_Z`/`log_M` follow the order of the betas
/// passed to level_scan, `counts` the order of the alphas. The streaming
/// engine leaves `counts` empty.
struct LevelAggregates {
  int level = 0;
  std::vector<double> log_Z;
  std::vector<double> log_M;
  double max_sum = 0.0;
  std::vector<std::uint64_t> counts;
};

/// Throws ResourceError when d^depth exceeds `budget`.
void require_array_budget(int d, int depth, std::uint64_t budget);

/// Calls visit(level, prefix_sums) for level = 1..depth, where prefix_sums[i]
/// is the path sum of vertex (level, i). The span is valid only during the call.
void for_each_level(const DisorderOracle& oracle, int depth, int workers, std::uint64_t leaf_budget,
                    const std::function<void(int, std::span<const double>)>& visit);

/// Log-sum-exp of beta * prefix[i] over the vertices with mask[i] != 0 (all
/// vertices when the mask is empty). Reduced in fixed-size chunks merged in
/// index order, so the result does not depend on `workers`.
LogSumExp level_log_sum_exp(std::span<const double> prefix, double beta, int workers,
                            std::span<const std::uint8_t> mask = {});

/// log M_n from the log-sum-exp of beta * S over generation n.
double log_martingale(const LogSumExp& lse, const Model& model, double beta, int n);

std::vector<LevelAggregates> level_scan(const DisorderOracle& oracle, int depth, std::span<const double> betas,
                                        std::span<const double> alphas, const ScanOptions& options = {});

struct MeanEstimate {
  double mean = 0.0;
  double std_err = 0.0;
};

/// Average of M_depth(beta) over independent disorders seeded by
/// derive_seed(salt, Replica, r), r = 0..replicas-1.
MeanEstimate martingale_mean(const Model& model, double beta, int depth, int replicas, std::uint64_t salt = 0,
                             int workers = 1);

struct RayTrace {
  std::vector<int> path;  // child index chosen at each generation
  std::vector<double> prefix_sums;
  std::vector<double> log_ball_mass;  // log mu_n(B(xi_k)), k = 1..n
};

/// Exact sampler for the finite-volume Gibbs measure mu_n on generation n.
/// Construction contracts subtree partition functions bottom-up; each ray is
/// then drawn top-down.
class GibbsSampler {
 public:
  GibbsSampler(const DisorderOracle& oracle, int depth, double beta, int workers = 1,
               std::uint64_t leaf_budget = kArrayLeafBudget);

  RayTrace sample(const std::function<double()>& uniform) const;

  double log_partition() const noexcept { return subtree_log_z_.front().front(); }
  int depth() const noexcept { return depth_; }

 private:
  const DisorderOracle& oracle_;
  int depth_;
  double beta_;
  // subtree_log_z_[k][i]: log sum over leaves below (k, i) of exp(beta * (S_leaf - S_(k,i))).
  std::vector<std::vector<double>> subtree_log_z_;
};

RayTrace sample_gibbs_ray(const DisorderOracle& oracle, int depth, double beta,
                          const std::function<double()>& uniform);

}  // namespace polymerlab
