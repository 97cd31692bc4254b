#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "polymerlab/treesim.hpp"

namespace polymerlab {

/// Quantities shared by the spinal constructions: beta_c, the drift
/// lambda'(beta_c) and the size-biased law V* (the law tilted at beta_c).
struct SpineSetup {
  Model model;
  double beta_c;
  double drift;
  WeightLaw size_biased;
};

/// Requires a finite-support law with finite beta_c whose size-biased law is
/// not a point mass.
SpineSetup spine_setup(const Model& model);

struct RenewalEstimate {
  std::vector<double> x_grid;
  std::vector<double> h_hat;
  std::vector<double> std_err;
  std::uint64_t walks_used = 0;
  double truncated_fraction = 0.0;
};

/// 64 geometric points on [0.01, 50 sigma(V*)].
std::vector<double> default_h_grid(const SpineSetup& setup);

/// Visits of the walk sum_j (V*_j - drift) to [0, x) at times 0..tau-1, where
/// tau is the first time the walk is negative. Walk w draws from
/// UniformStream(derive_seed(salt, Walk, w)). h_hat is exactly 1 at x = 0.
RenewalEstimate estimate_h(const Model& model, std::vector<double> x_grid, std::uint64_t walks,
                           std::uint64_t max_steps = 1000000, std::uint64_t salt = 0, int workers = 1);

struct HarmonicityCheck {
  double x = 0.0;
  double h = 0.0;          // estimate of h(x)
  double shifted = 0.0;    // estimate of E[h(x - V* + drift); x - V* + drift > 0]
  double residual = 0.0;   // shifted - h
  double std_err = 0.0;   // standard error of the residual across walks
};

/// Both sides are estimated from the same walks, so their noise largely cancels.
std::vector<HarmonicityCheck> harmonicity_check(const Model& model, const std::vector<double>& points,
                                                std::uint64_t walks, std::uint64_t max_steps = 1000000,
                                                std::uint64_t salt = 0, int workers = 1);

/// Evaluable renewal function. `eval` throws DomainError above `domain_max`.
struct RenewalFunction {
  std::function<double(double)> eval;
  double domain_max = 0.0;

  double operator()(double x) const { return eval(x); }
};

/// h = 1 on [0, x_1), linear between grid points. With `extrapolate`, h grows
/// proportionally to x beyond the last grid point; otherwise it is undefined there.
RenewalFunction interpolate_h(const RenewalEstimate& estimate, bool extrapolate = false);

/// W_n^x: killed when S_k >= x + k drift at some k <= n, survivors weighted by
/// h(x - S_n + n drift) / h(x) exp(beta_c S_n - n(lambda(beta_c) + log d)).
double martingale_W(const DisorderOracle& oracle, int depth, double x, const RenewalFunction& h,
                    int workers = 1);

/// Average of W_depth^x over disorders seeded by derive_seed(salt, Replica, r).
MeanEstimate martingale_W_mean(const Model& model, int depth, double x, const RenewalFunction& h, int replicas,
                               std::uint64_t salt = 0, int workers = 1);

struct SpinePath {
  std::vector<double> weights;
  std::vector<double> prefix_deviation;  // n drift - sum_{j <= n} V(xi_j), n = 1..depth
};

/// Probabilities of the atoms of V for the next spine step from deviation
/// `deviation`; inadmissible atoms get 0. All zeros when none is admissible.
std::vector<double> spine_transition(const SpineSetup& setup, const RenewalFunction& h, double deviation);

/// Doob-conditioned spine. A path that reaches a state with no admissible atom
/// is restarted, at most 100 times before SamplingError.
SpinePath conditioned_spine(const SpineSetup& setup, const RenewalFunction& h, int depth,
                            const std::function<double()>& uniform);

/// max{(1/i)^(2/i), p}.
double bernoulli_tilt_schedule(std::uint64_t i, double p);

/// Smallest m with (1/i)^(2/i) >= p for every i >= m.
std::uint64_t schedule_crossover(double p);

/// Independent Bernoulli(p_i) weights along a spine, drift 1. With
/// `constant_schedule` every p_i equals p. Requires 1/d <= p <= 1.
SpinePath tilted_bernoulli_spine(double p, int d, int depth, const std::function<double()>& uniform,
                                 bool constant_schedule = false);

}  // namespace polymerlab
