#include "polymerlab/weights.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <numbers>

#include "polymerlab/error.hpp"
#include "polymerlab/numeric.hpp"

namespace polymerlab {

namespace {

void require_finite_beta(double beta) {
  if (!std::isfinite(beta)) throw DomainError("beta must be finite", "beta=" + std::to_string(beta));
}

std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

double parse_real(std::string_view s, std::string_view what) {
  std::string tmp(trim(s));
  char* end = nullptr;
  double v = std::strtod(tmp.c_str(), &end);
  if (tmp.empty() || end != tmp.c_str() + tmp.size() || !std::isfinite(v))
    throw DomainError("cannot parse " + std::string(what) + " in weight law", tmp);
  return v;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    std::size_t pos = s.find(sep, start);
    out.push_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

// Uniform01 transforms near zero use Taylor series; the closed forms cancel.
constexpr double kUniformSeriesCutoff = 1e-4;

}  // namespace

void WeightLaw::build_cumulative() {
  cumulative_.clear();
  double c = 0.0;
  for (const auto& a : atoms_) {
    c += a.prob;
    cumulative_.push_back(c);
  }
}

WeightLaw WeightLaw::discrete(std::vector<Atom> atoms) {
  if (atoms.empty()) throw DomainError("discrete law needs at least one atom");
  double total = 0.0;
  for (const auto& a : atoms) {
    if (!std::isfinite(a.value)) throw DomainError("atom value must be finite");
    if (!(a.prob > 0.0) || !std::isfinite(a.prob))
      throw DomainError("atom probabilities must be strictly positive", "prob=" + fmt17(a.prob));
    total += a.prob;
  }
  if (std::abs(total - 1.0) > 1e-12)
    throw DomainError("atom probabilities must sum to 1", "sum=" + fmt17(total));
  std::sort(atoms.begin(), atoms.end(), [](const Atom& x, const Atom& y) { return x.value < y.value; });
  std::vector<Atom> merged;
  for (const auto& a : atoms) {
    if (!merged.empty() && merged.back().value == a.value)
      merged.back().prob += a.prob;
    else
      merged.push_back(a);
  }
  WeightLaw law;
  law.kind_ = Kind::DiscreteFinite;
  law.atoms_ = std::move(merged);
  law.build_cumulative();
  return law;
}

WeightLaw WeightLaw::normal() {
  WeightLaw law;
  law.kind_ = Kind::StandardNormal;
  return law;
}

WeightLaw WeightLaw::uniform01() {
  WeightLaw law;
  law.kind_ = Kind::Uniform01;
  return law;
}

WeightLaw WeightLaw::bernoulli(double p, double one_value, double zero_value) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("bernoulli p must lie in (0, 1)", "p=" + fmt17(p));
  if (!std::isfinite(one_value) || !std::isfinite(zero_value) || one_value == zero_value)
    throw DomainError("bernoulli values must be finite and distinct");
  WeightLaw law;
  law.kind_ = Kind::Bernoulli;
  law.p_ = p;
  law.one_ = one_value;
  law.zero_ = zero_value;
  if (zero_value < one_value)
    law.atoms_ = {{zero_value, 1.0 - p}, {one_value, p}};
  else
    law.atoms_ = {{one_value, p}, {zero_value, 1.0 - p}};
  law.build_cumulative();
  return law;
}

WeightLaw WeightLaw::parse(std::string_view text) {
  text = trim(text);
  auto colon = text.find(':');
  std::string_view name = trim(text.substr(0, colon));
  std::string_view args = colon == std::string_view::npos ? std::string_view{} : trim(text.substr(colon + 1));
  if (name == "normal") {
    if (!args.empty()) throw DomainError("normal takes no parameters", std::string(text));
    return normal();
  }
  if (name == "uniform01") {
    if (!args.empty()) throw DomainError("uniform01 takes no parameters", std::string(text));
    return uniform01();
  }
  if (name == "bernoulli") {
    double p = -1.0, one = 1.0, zero = 0.0;
    bool have_p = false;
    for (auto kv : split(args, ',')) {
      auto eq = kv.find('=');
      if (eq == std::string_view::npos) throw DomainError("expected key=value in bernoulli law", std::string(kv));
      auto key = trim(kv.substr(0, eq));
      double val = parse_real(kv.substr(eq + 1), key);
      if (key == "p") {
        p = val;
        have_p = true;
      } else if (key == "one") {
        one = val;
      } else if (key == "zero") {
        zero = val;
      } else {
        throw DomainError("unknown bernoulli parameter", std::string(key));
      }
    }
    if (!have_p) throw DomainError("bernoulli law requires p=", std::string(text));
    return bernoulli(p, one, zero);
  }
  if (name == "discrete") {
    std::vector<Atom> atoms;
    for (auto item : split(args, ',')) {
      auto at = item.find('@');
      if (at == std::string_view::npos) throw DomainError("expected value@prob in discrete law", std::string(item));
      atoms.push_back({parse_real(item.substr(0, at), "atom value"), parse_real(item.substr(at + 1), "atom probability")});
    }
    return discrete(std::move(atoms));
  }
  throw DomainError("unknown weight law", std::string(text));
}

std::string WeightLaw::to_string() const {
  switch (kind_) {
    case Kind::StandardNormal:
      return "normal";
    case Kind::Uniform01:
      return "uniform01";
    case Kind::Bernoulli: {
      std::string s = "bernoulli:p=" + fmt17(p_);
      if (one_ != 1.0) s += ",one=" + fmt17(one_);
      if (zero_ != 0.0) s += ",zero=" + fmt17(zero_);
      return s;
    }
    case Kind::DiscreteFinite: {
      std::string s = "discrete:";
      for (std::size_t i = 0; i < atoms_.size(); ++i) {
        if (i) s += ',';
        s += fmt17(atoms_[i].value) + '@' + fmt17(atoms_[i].prob);
      }
      return s;
    }
  }
  return {};
}

double WeightLaw::mean() const {
  switch (kind_) {
    case Kind::StandardNormal:
      return 0.0;
    case Kind::Uniform01:
      return 0.5;
    default: {
      double m = 0.0;
      for (const auto& a : atoms_) m += a.prob * a.value;
      return m;
    }
  }
}

double WeightLaw::variance() const {
  switch (kind_) {
    case Kind::StandardNormal:
      return 1.0;
    case Kind::Uniform01:
      return 1.0 / 12.0;
    default: {
      double m = mean(), v = 0.0;
      for (const auto& a : atoms_) v += a.prob * (a.value - m) * (a.value - m);
      return v;
    }
  }
}

double log_mgf(const WeightLaw& law, double beta) {
  require_finite_beta(beta);
  if (beta == 0.0) return 0.0;
  switch (law.kind()) {
    case WeightLaw::Kind::StandardNormal:
      return 0.5 * beta * beta;
    case WeightLaw::Kind::Uniform01:
      if (std::abs(beta) < kUniformSeriesCutoff) {
        double b2 = beta * beta;
        return beta / 2.0 + b2 / 24.0 - b2 * b2 / 2880.0;
      }
      if (beta > 0.0) return beta + std::log(-std::expm1(-beta)) - std::log(beta);
      return std::log(-std::expm1(beta)) - std::log(-beta);
    default: {
      LogSumExp acc;
      for (const auto& a : law.atoms()) acc.add(std::log(a.prob) + beta * a.value);
      return acc.value();
    }
  }
}

double log_mgf_deriv(const WeightLaw& law, double beta) {
  require_finite_beta(beta);
  switch (law.kind()) {
    case WeightLaw::Kind::StandardNormal:
      return beta;
    case WeightLaw::Kind::Uniform01:
      if (std::abs(beta) < kUniformSeriesCutoff) return 0.5 + beta / 12.0 - beta * beta * beta / 720.0;
      return 1.0 / (-std::expm1(-beta)) - 1.0 / beta;
    default: {
      double m = -kInf;
      for (const auto& a : law.atoms()) m = std::max(m, std::log(a.prob) + beta * a.value);
      double num = 0.0, den = 0.0;
      for (const auto& a : law.atoms()) {
        double w = std::exp(std::log(a.prob) + beta * a.value - m);
        num += a.value * w;
        den += w;
      }
      return num / den;
    }
  }
}

EssSup ess_sup(const WeightLaw& law) {
  switch (law.kind()) {
    case WeightLaw::Kind::StandardNormal:
      return {kInf, 0.0};
    case WeightLaw::Kind::Uniform01:
      return {1.0, 0.0};
    default:
      return {law.atoms().back().value, law.atoms().back().prob};
  }
}

WeightLaw exponential_tilt(const WeightLaw& law, double beta) {
  require_finite_beta(beta);
  if (!law.finite_support())
    throw UnsupportedError("exponential tilt is implemented for finite-support laws only", law.to_string());
  if (beta == 0.0) return law;
  const double lambda = log_mgf(law, beta);
  std::vector<Atom> tilted;
  double total = 0.0;
  for (const auto& a : law.atoms()) {
    double q = std::exp(std::log(a.prob) + beta * a.value - lambda);
    if (q > 0.0) {
      tilted.push_back({a.value, q});
      total += q;
    }
  }
  for (auto& a : tilted) a.prob /= total;
  if (law.kind() == WeightLaw::Kind::Bernoulli && tilted.size() == 2) {
    double p = tilted[0].value == law.one_value() ? tilted[0].prob : tilted[1].prob;
    if (p > 0.0 && p < 1.0) return WeightLaw::bernoulli(p, law.one_value(), law.zero_value());
  }
  return WeightLaw::discrete(std::move(tilted));
}

double normal_quantile(double u) {
  if (!(u > 0.0 && u < 1.0)) {
    if (u == 0.0) return -kInf;
    if (u == 1.0) return kInf;
    throw DomainError("normal quantile needs u in (0, 1)");
  }
  // Acklam's rational approximation followed by one Halley step.
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                                 1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                                 6.680131188771972e+01,  -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                                 -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                                 3.754408661907416e+00};
  constexpr double plow = 0.02425;
  double x;
  if (u < plow) {
    double q = std::sqrt(-2.0 * std::log(u));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (u <= 1.0 - plow) {
    double q = u - 0.5, r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    double q = std::sqrt(-2.0 * std::log1p(-u));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double e = 0.5 * std::erfc(-x / std::numbers::sqrt2) - u;
  const double step = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
  return x - step / (1.0 + 0.5 * x * step);
}

double sample(const WeightLaw& law, double u) {
  if (!(u >= 0.0 && u < 1.0)) throw DomainError("sample needs u in [0, 1)", "u=" + fmt17(u));
  switch (law.kind()) {
    case WeightLaw::Kind::StandardNormal:
      // u = 0 has probability 2^-53 under the counter generator; map it half a step in.
      return normal_quantile(u == 0.0 ? 0x1.0p-54 : u);
    case WeightLaw::Kind::Uniform01:
      return u;
    default: {
      const auto& cum = law.cumulative_;
      for (std::size_t i = 0; i + 1 < cum.size(); ++i)
        if (u < cum[i]) return law.atoms_[i].value;
      return law.atoms_.back().value;
    }
  }
}

}  // namespace polymerlab
