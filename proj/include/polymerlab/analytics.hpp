#pragma once

#include <utility>
#include <vector>

#include "polymerlab/weights.hpp"

namespace polymerlab {

/// A d-ary tree (d >= 2) carrying i.i.d. weights with the given law.
struct Model {
  int d;
  WeightLaw law;

  Model(int branching, WeightLaw weight_law);
};

/// Entropy function f(beta) = lambda(beta) + log d - beta lambda'(beta), beta >= 0.
double entropy_f(const Model& model, double beta);

/// Positive root of f, or +inf when the law is bounded above with an atom of
/// mass >= 1/d at its essential supremum.
double critical_beta(const Model& model);

/// Limit free energy: lambda(beta) + log d up to beta_c, linear beyond.
double free_energy(const Model& model, double beta);

/// Legendre-Fenchel transform of lambda. At a finite essential supremum
/// (or infimum) carrying an atom the value is -log(atom mass); without an
/// atom it is +inf. Outside the closed range of lambda' throws DomainError.
double legendre(const WeightLaw& law, double alpha);

/// Solves lambda'(beta) = alpha for beta (alpha strictly inside the range of lambda').
double legendre_argmax(const WeightLaw& law, double alpha);

/// Growth rate log d - lambda*(alpha) of the number of vertices whose path
/// average is at least alpha; requires alpha >= E V and lambda*(alpha) < log d.
double spectrum_prediction(const Model& model, double alpha);

/// Level alpha(c) > E V with spectrum_prediction(alpha) = c, for c in (0, log d).
double spectrum_level(const Model& model, double c);

/// Largest achievable open-edge fraction for Bernoulli(p) disorder.
double alpha_critical(int d, double p);

/// Binary relative entropy alpha log(alpha/p) + (1-alpha) log((1-alpha)/(1-p)).
double binary_relative_entropy(double alpha, double p);

/// Threshold p_c of rho-percolation on the d-ary tree.
double rho_percolation_pc(int d, double rho);

/// Linear growth rate of the maximal path sum: lambda'(beta_c), or ess sup V
/// when beta_c is infinite.
double max_path_growth(const Model& model);

struct AnalyticProfile {
  double beta_c = 0.0;
  double slope_c = 0.0;
  std::vector<std::pair<double, double>> free_energy_curve;
  std::vector<std::pair<double, double>> entropy_curve;
  std::vector<std::pair<double, double>> legendre_curve;
};

/// Default beta grid: `points` values on [0, 4 beta_c], or [0, 8] if beta_c is infinite.
std::vector<double> default_beta_grid(const Model& model, int points = 400);

/// Default alpha grid: `points` interior values of (E V, ess sup V), or of
/// (E V, lambda'(8)) for laws unbounded above.
std::vector<double> default_alpha_grid(const Model& model, int points = 400);

/// Tabulates the curves. Empty grids select the defaults. Grid points are
/// evaluated independently, optionally on `workers` threads.
AnalyticProfile build_profile(const Model& model, std::vector<double> beta_grid = {},
                              std::vector<double> alpha_grid = {}, int workers = 1);

}  // namespace polymerlab
