#include "polymerlab/analytics.hpp"

#include <cmath>
#include <string>

#include "polymerlab/error.hpp"
#include "polymerlab/numeric.hpp"
#include "polymerlab/parallel.hpp"

namespace polymerlab {

namespace {

constexpr double kRootTol = 1e-13;

void require_nonnegative_beta(double beta) {
  if (!(beta >= 0.0) || !std::isfinite(beta))
    throw DomainError("beta must be finite and >= 0", "beta=" + std::to_string(beta));
}

struct LambdaRange {
  double lo;
  double hi;
};

// Closure of the range of lambda'.
LambdaRange derivative_range(const WeightLaw& law) {
  switch (law.kind()) {
    case WeightLaw::Kind::StandardNormal:
      return {-kInf, kInf};
    case WeightLaw::Kind::Uniform01:
      return {0.0, 1.0};
    default:
      return {law.atoms().front().value, law.atoms().back().value};
  }
}

double atom_mass_at(const WeightLaw& law, double value) {
  for (const auto& a : law.atoms())
    if (a.value == value) return a.prob;
  return 0.0;
}

double free_energy_given(const Model& model, double beta, double beta_c) {
  const double log_d = std::log(static_cast<double>(model.d));
  if (beta <= beta_c) return log_mgf(model.law, beta) + log_d;
  return beta / beta_c * (log_mgf(model.law, beta_c) + log_d);
}

}  // namespace

Model::Model(int branching, WeightLaw weight_law) : d(branching), law(std::move(weight_law)) {
  if (d < 2) throw DomainError("branching number d must be >= 2", "d=" + std::to_string(d));
}

double entropy_f(const Model& model, double beta) {
  require_nonnegative_beta(beta);
  if (beta == 0.0) return std::log(static_cast<double>(model.d));
  return log_mgf(model.law, beta) + std::log(static_cast<double>(model.d)) - beta * log_mgf_deriv(model.law, beta);
}

double critical_beta(const Model& model) {
  const EssSup top = ess_sup(model.law);
  if (std::isfinite(top.value) && top.atom_mass >= 1.0 / model.d) return kInf;

  auto f = [&](double b) { return entropy_f(model, b); };
  double lo = 1e-8, hi = 1.0;
  while (f(hi) > 0.0) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e4)
      throw InconsistencyError("no sign change of the entropy function below beta = 1e4",
                               "law=" + model.law.to_string() + " d=" + std::to_string(model.d));
  }
  return bisect(f, lo, hi, kRootTol);
}

double free_energy(const Model& model, double beta) {
  require_nonnegative_beta(beta);
  return free_energy_given(model, beta, critical_beta(model));
}

double legendre_argmax(const WeightLaw& law, double alpha) {
  const LambdaRange range = derivative_range(law);
  if (!(alpha > range.lo && alpha < range.hi))
    throw DomainError("alpha must lie strictly inside the range of lambda'",
                      "[" + std::to_string(range.lo) + ", " + std::to_string(range.hi) + "]");
  auto g = [&](double b) { return log_mgf_deriv(law, b) - alpha; };
  double lo = -1.0, hi = 1.0;
  while (g(hi) < 0.0 && hi < 1e6) {
    lo = hi;
    hi *= 2.0;
  }
  while (g(lo) > 0.0 && lo > -1e6) {
    hi = lo;
    lo *= 2.0;
  }
  return bisect(g, lo, hi, kRootTol);
}

double legendre(const WeightLaw& law, double alpha) {
  if (!std::isfinite(alpha)) throw DomainError("alpha must be finite");
  const LambdaRange range = derivative_range(law);
  const std::string interval = "[" + std::to_string(range.lo) + ", " + std::to_string(range.hi) + "]";
  if (alpha < range.lo || alpha > range.hi)
    throw DomainError("alpha outside the achievable range of lambda'", interval);
  if (alpha == range.lo || alpha == range.hi) {
    double mass = atom_mass_at(law, alpha);
    return mass > 0.0 ? -std::log(mass) : kInf;
  }
  const double beta = legendre_argmax(law, alpha);
  return alpha * beta - log_mgf(law, beta);
}

double spectrum_prediction(const Model& model, double alpha) {
  const double mean = model.law.mean();
  if (alpha < mean - 1e-12)
    throw DomainError("spectrum prediction requires alpha >= E V", "E V=" + std::to_string(mean));
  const double log_d = std::log(static_cast<double>(model.d));
  const double rate = legendre(model.law, alpha);
  if (rate >= log_d + 1e-9)
    throw DomainError("spectrum prediction requires lambda*(alpha) < log d", "lambda*=" + std::to_string(rate));
  return log_d - rate;
}

double spectrum_level(const Model& model, double c) {
  const double log_d = std::log(static_cast<double>(model.d));
  if (!(c > 0.0 && c < log_d)) throw DomainError("spectrum level needs c in (0, log d)");
  const double mean = model.law.mean();
  auto g = [&](double a) { return log_d - legendre(model.law, a) - c; };
  const EssSup top = ess_sup(model.law);
  double hi;
  if (std::isfinite(top.value)) {
    hi = top.value;
    if (g(hi) >= 0.0) throw DomainError("count growth never drops to c", "c=" + std::to_string(c));
  } else {
    double width = 1.0;
    while (g(mean + width) > 0.0) width *= 2.0;
    hi = mean + width;
  }
  return bisect(g, mean, hi, kRootTol);
}

double binary_relative_entropy(double alpha, double p) {
  double r = 0.0;
  if (alpha > 0.0) r += alpha * std::log(alpha / p);
  if (alpha < 1.0) r += (1.0 - alpha) * std::log((1.0 - alpha) / (1.0 - p));
  return r;
}

double alpha_critical(int d, double p) {
  if (d < 2) throw DomainError("d must be >= 2");
  if (!(p > 0.0 && p < 1.0)) throw DomainError("p must lie in (0, 1)", "p=" + std::to_string(p));
  if (p >= 1.0 / d) return 1.0;
  const double log_d = std::log(static_cast<double>(d));
  return bisect([&](double a) { return binary_relative_entropy(a, p) - log_d; }, p, 1.0, kRootTol);
}

double rho_percolation_pc(int d, double rho) {
  if (d < 2) throw DomainError("d must be >= 2");
  if (!(rho > 0.0 && rho <= 1.0)) throw DomainError("rho must lie in (0, 1]", "rho=" + std::to_string(rho));
  if (rho == 1.0) return 1.0 / d;
  // Work in s = log p so that thresholds far below 1e-12 are still resolved.
  const double rhs = rho * std::log(rho) + (1.0 - rho) * std::log1p(-rho);
  const double log_d = std::log(static_cast<double>(d));
  auto g = [&](double s) { return rho * s + (1.0 - rho) * std::log1p(-std::exp(s)) + log_d - rhs; };
  const double s_hi = std::log(rho);
  const double s_lo = std::min(s_hi, (rhs - log_d) / rho) - 1.0;
  return std::exp(bisect(g, s_lo, s_hi, 1e-15));
}

double max_path_growth(const Model& model) {
  const double bc = critical_beta(model);
  if (std::isfinite(bc)) return log_mgf_deriv(model.law, bc);
  const EssSup top = ess_sup(model.law);
  if (!std::isfinite(top.value))
    throw InconsistencyError("infinite beta_c with unbounded weights", model.law.to_string());
  return top.value;
}

std::vector<double> default_beta_grid(const Model& model, int points) {
  const double bc = critical_beta(model);
  const double hi = std::isfinite(bc) ? 4.0 * bc : 8.0;
  std::vector<double> grid(points);
  for (int i = 0; i < points; ++i) grid[i] = points == 1 ? 0.0 : hi * i / (points - 1);
  return grid;
}

std::vector<double> default_alpha_grid(const Model& model, int points) {
  const double mean = model.law.mean();
  const EssSup top = ess_sup(model.law);
  const double hi = std::isfinite(top.value) ? top.value : log_mgf_deriv(model.law, 8.0);
  std::vector<double> grid(points);
  for (int i = 0; i < points; ++i) grid[i] = mean + (hi - mean) * (i + 1) / (points + 1);
  return grid;
}

AnalyticProfile build_profile(const Model& model, std::vector<double> beta_grid, std::vector<double> alpha_grid,
                              int workers) {
  if (beta_grid.empty()) beta_grid = default_beta_grid(model);
  if (alpha_grid.empty()) alpha_grid = default_alpha_grid(model);
  AnalyticProfile prof;
  prof.beta_c = critical_beta(model);
  prof.slope_c = max_path_growth(model);
  prof.free_energy_curve.resize(beta_grid.size());
  prof.entropy_curve.resize(beta_grid.size());
  prof.legendre_curve.resize(alpha_grid.size());
  parallel_for(beta_grid.size(), workers, [&](std::size_t i) {
    double b = beta_grid[i];
    prof.free_energy_curve[i] = {b, free_energy_given(model, b, prof.beta_c)};
    prof.entropy_curve[i] = {b, entropy_f(model, b)};
  });
  parallel_for(alpha_grid.size(), workers, [&](std::size_t i) {
    prof.legendre_curve[i] = {alpha_grid[i], legendre(model.law, alpha_grid[i])};
  });
  return prof;
}

}  // namespace polymerlab
