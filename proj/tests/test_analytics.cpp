#include <doctest.h>

#include <cmath>

#include "polymerlab/analytics.hpp"
#include "polymerlab/error.hpp"

using namespace polymerlab;

namespace {

const WeightLaw kFig = WeightLaw::discrete({{1.0, 0.25}, {-1.0, 0.75}});

// Newton iteration on f using f'(b) = -b lambda''(b), lambda'' by finite differences.
double newton_root_of_f(const Model& m, double start) {
  double b = start;
  for (int i = 0; i < 100; ++i) {
    const double h = 1e-6;
    const double second = (log_mgf_deriv(m.law, b + h) - log_mgf_deriv(m.law, b - h)) / (2 * h);
    const double step = entropy_f(m, b) / (-b * second);
    b -= step;
    if (std::abs(step) < 1e-15) break;
  }
  return b;
}

}  // namespace

TEST_CASE("Gaussian critical temperature is sqrt(2 log d)") {
  for (int d : {2, 3, 4, 7}) {
    const Model m(d, WeightLaw::normal());
    CHECK(critical_beta(m) == doctest::Approx(std::sqrt(2 * std::log(d))).epsilon(1e-12));
    CHECK(max_path_growth(m) == doctest::Approx(std::sqrt(2 * std::log(d))).epsilon(1e-12));
  }
}

TEST_CASE("critical temperature of the two-point law solves f = 0") {
  const Model m(2, kFig);
  const double bc = critical_beta(m);
  CHECK(bc == doctest::Approx(newton_root_of_f(m, 1.0)).epsilon(1e-11));
  CHECK(std::abs(entropy_f(m, bc)) < 1e-10);
  CHECK(entropy_f(m, 0.5 * bc) > 0.0);
  CHECK(entropy_f(m, 2.0 * bc) < 0.0);
}

TEST_CASE("atoms of mass >= 1/d at the top give an infinite critical temperature") {
  for (double p : {0.5, 0.6, 0.9}) CHECK(std::isinf(critical_beta(Model(2, WeightLaw::bernoulli(p)))));
  for (double p : {0.1, 0.25, 0.49}) {
    const Model m(2, WeightLaw::bernoulli(p));
    const double bc = critical_beta(m);
    REQUIRE(std::isfinite(bc));
    CHECK(std::abs(entropy_f(m, bc)) < 1e-8);
  }
  CHECK(std::isinf(critical_beta(Model(3, WeightLaw::bernoulli(0.34)))));
  CHECK(std::isfinite(critical_beta(Model(3, WeightLaw::bernoulli(0.33)))));
  CHECK(max_path_growth(Model(2, WeightLaw::bernoulli(0.6))) == 1.0);
}

TEST_CASE("entropy function at zero is log d") {
  CHECK(entropy_f(Model(3, kFig), 0.0) == doctest::Approx(std::log(3.0)));
  CHECK_THROWS_AS(entropy_f(Model(2, kFig), -0.1), DomainError);
  CHECK_THROWS_AS(Model(1, kFig), DomainError);
}

TEST_CASE("duality f + beta lambda' = phi below the critical temperature") {
  for (const auto& law : {kFig, WeightLaw::normal(), WeightLaw::uniform01(), WeightLaw::bernoulli(0.25)}) {
    const Model m(2, law);
    const double bc = critical_beta(m);
    for (int i = 0; i < 200; ++i) {
      const double b = bc * i / 200.0;
      const double lhs = entropy_f(m, b) + b * log_mgf_deriv(law, b);
      CHECK(std::abs(lhs - free_energy(m, b)) < 1e-9);
    }
  }
}

TEST_CASE("free energy is linear beyond the critical temperature and C1 at it") {
  const Model m(2, kFig);
  const double bc = critical_beta(m);
  const double slope = (log_mgf(kFig, bc) + std::log(2.0)) / bc;
  CHECK(free_energy(m, 3.0) == doctest::Approx(3.0 * slope));
  const double h = 1e-6;
  const double left = (free_energy(m, bc) - free_energy(m, bc - h)) / h;
  const double right = (free_energy(m, bc + h) - free_energy(m, bc)) / h;
  CHECK(std::abs(left - right) < 1e-5);
  CHECK(slope == doctest::Approx(log_mgf_deriv(kFig, bc)).epsilon(1e-9));
}

TEST_CASE("Legendre transform closed forms") {
  for (double a : {-2.0, 0.0, 0.7, 3.0}) CHECK(legendre(WeightLaw::normal(), a) == doctest::Approx(a * a / 2));
  const WeightLaw b = WeightLaw::bernoulli(0.3);
  for (double a : {0.05, 0.3, 0.5, 0.9})
    CHECK(legendre(b, a) == doctest::Approx(binary_relative_entropy(a, 0.3)).epsilon(1e-10));
  CHECK(legendre(b, 1.0) == doctest::Approx(-std::log(0.3)));
  CHECK(legendre(b, 0.0) == doctest::Approx(-std::log(0.7)));
  CHECK(legendre(kFig, kFig.mean()) == doctest::Approx(0.0).scale(1));
  CHECK(std::isinf(legendre(WeightLaw::uniform01(), 1.0)));
  CHECK_THROWS_AS(legendre(b, 1.2), DomainError);
}

TEST_CASE("spectrum level inverts the coarse spectrum") {
  const Model g(2, WeightLaw::normal());
  for (double c : {0.05, 0.2, 0.4, 0.69}) {
    CHECK(spectrum_level(g, c) == doctest::Approx(std::sqrt(2 * (std::log(2.0) - c))).epsilon(1e-10));
  }
  const Model m(2, kFig);
  for (double c : {0.1, 0.3, 0.6}) CHECK(spectrum_prediction(m, spectrum_level(m, c)) == doctest::Approx(c));
  CHECK_THROWS_AS(spectrum_prediction(m, -0.9), DomainError);
}

TEST_CASE("restricted energy prediction at c = f(beta') stays strictly below phi(beta)") {
  for (const auto& law : {kFig, WeightLaw::normal()}) {
    const Model m(2, law);
    const double bc = critical_beta(m);
    for (int i = 1; i < 10; ++i)
      for (int j = i + 1; j < 10; ++j) {
        const double b = bc * i / 10.0, b2 = bc * j / 10.0;
        const double c = entropy_f(m, b2);
        const double predicted = c + b * spectrum_level(m, c);
        CHECK(predicted < free_energy(m, b));
      }
    // c -> f(beta) recovers phi(beta).
    const double b = 0.4 * bc;
    const double c = entropy_f(m, b) - 1e-9;
    CHECK(c + b * spectrum_level(m, c) == doctest::Approx(free_energy(m, b)).epsilon(1e-6));
  }
}

TEST_CASE("rho-percolation threshold") {
  for (int d : {2, 3, 4, 5}) CHECK(rho_percolation_pc(d, 1.0) == 1.0 / d);
  for (int d : {2, 3, 5, 10})
    for (double rho : {0.05, 0.3, 0.5, 0.77, 0.99}) {
      const double p = rho_percolation_pc(d, rho);
      const double lhs = std::pow(p, rho) * std::pow(1 - p, 1 - rho) * d;
      const double rhs = std::pow(rho, rho) * std::pow(1 - rho, 1 - rho);
      CHECK(std::abs(lhs - rhs) < 1e-10);
      CHECK(p < rho);
      CHECK(alpha_critical(d, p) == doctest::Approx(rho).epsilon(1e-8));
    }
  CHECK(alpha_critical(2, 0.5) == 1.0);
  CHECK_THROWS_AS(rho_percolation_pc(2, 0.0), DomainError);
}

TEST_CASE("profile grids") {
  const Model m(2, kFig);
  const AnalyticProfile a = build_profile(m, {}, {}, 1);
  const AnalyticProfile b = build_profile(m, {}, {}, 4);
  CHECK(a.free_energy_curve.size() == 400);
  CHECK(a.free_energy_curve == b.free_energy_curve);
  CHECK(a.legendre_curve == b.legendre_curve);
  CHECK(a.free_energy_curve.back().first == doctest::Approx(4 * a.beta_c));
}
