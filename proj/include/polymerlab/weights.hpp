#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace polymerlab {

struct Atom {
  double value;
  double prob;

  friend bool operator==(const Atom&, const Atom&) = default;
};

/// Law of a single vertex weight V. Finite-support kinds keep their atoms
/// sorted by value; Bernoulli is a two-atom law that remembers its
/// parameterisation.
class WeightLaw {
 public:
  enum class Kind { DiscreteFinite, StandardNormal, Uniform01, Bernoulli };

  static WeightLaw discrete(std::vector<Atom> atoms);
  static WeightLaw normal();
  static WeightLaw uniform01();
  static WeightLaw bernoulli(double p, double one_value = 1.0, double zero_value = 0.0);

  /// Parses `bernoulli:p=0.25[,one=..][,zero=..]`, `discrete:1@0.25,-1@0.75`,
  /// `normal` or `uniform01`.
  static WeightLaw parse(std::string_view text);

  /// Canonical text form; parse(to_string()) reproduces the law exactly.
  std::string to_string() const;

  Kind kind() const noexcept { return kind_; }
  bool finite_support() const noexcept {
    return kind_ == Kind::DiscreteFinite || kind_ == Kind::Bernoulli;
  }
  /// Atoms in ascending value order (finite-support kinds only; empty otherwise).
  std::span<const Atom> atoms() const noexcept { return atoms_; }

  double bernoulli_p() const noexcept { return p_; }
  double one_value() const noexcept { return one_; }
  double zero_value() const noexcept { return zero_; }

  double mean() const;
  double variance() const;

  friend bool operator==(const WeightLaw&, const WeightLaw&) = default;

 private:
  WeightLaw() = default;

  Kind kind_ = Kind::StandardNormal;
  std::vector<Atom> atoms_;
  std::vector<double> cumulative_;
  double p_ = 0.0;
  double one_ = 1.0;
  double zero_ = 0.0;

  void build_cumulative();
  friend double sample(const WeightLaw&, double);
};

/// lambda(beta) = log E exp(beta V).
double log_mgf(const WeightLaw& law, double beta);

/// lambda'(beta) = E[V exp(beta V)] / E[exp(beta V)].
double log_mgf_deriv(const WeightLaw& law, double beta);

struct EssSup {
  double value;      // +inf when unbounded above
  double atom_mass;  // P{V = value}
};
EssSup ess_sup(const WeightLaw& law);

/// Exponential tilt: probabilities p_i exp(beta v_i - lambda(beta)). Finite
/// support only; Bernoulli input yields a Bernoulli with the tilted p.
WeightLaw exponential_tilt(const WeightLaw& law, double beta);

/// Inverse-CDF map from a uniform deviate u in [0, 1).
double sample(const WeightLaw& law, double u);

/// Inverse of the standard normal CDF, |error| below 1e-12 on (0, 1).
double normal_quantile(double u);

}  // namespace polymerlab
