#include "polymerlab/localization.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "polymerlab/error.hpp"
#include "polymerlab/parallel.hpp"

namespace polymerlab {

namespace {

double parse_real(std::string_view s, std::string_view whole) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw DomainError("malformed delta schedule", std::string(whole));
  return v;
}

std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

LinearFit fit_tail(const std::vector<SubtreeLevel>& levels, bool sizes) {
  const int depth = static_cast<int>(levels.size());
  const int from = (depth + 1) / 2;
  std::vector<double> x, y;
  for (int n = std::max(from, 1); n <= depth; ++n) {
    const auto& lv = levels[n - 1];
    const double v = sizes ? (lv.size ? std::log(static_cast<double>(lv.size)) : -kInf) : lv.log_restricted_sum;
    if (!std::isfinite(v)) return {NAN, NAN, NAN};
    x.push_back(n);
    y.push_back(v);
  }
  return least_squares(x, y);
}

constexpr std::size_t kChunk = std::size_t{1} << 15;

}  // namespace

double DeltaSchedule::at(int k) const {
  switch (kind) {
    case Kind::Infinite:
      return kInf;
    case Kind::Constant:
      return a;
    case Kind::InvSqrt:
      return a / std::sqrt(static_cast<double>(k));
  }
  return kInf;
}

DeltaSchedule DeltaSchedule::parse(std::string_view text) {
  if (text == "inf") return {Kind::Infinite, 0.0};
  DeltaSchedule s;
  if (text.starts_with("const:")) {
    s = {Kind::Constant, parse_real(text.substr(6), text)};
  } else if (text.starts_with("a/sqrt:")) {
    s = {Kind::InvSqrt, parse_real(text.substr(7), text)};
  } else {
    throw DomainError("unknown delta schedule; expected inf, const:x or a/sqrt:a", std::string(text));
  }
  if (!(s.a >= 0.0)) throw DomainError("delta schedule parameter must be >= 0", std::string(text));
  return s;
}

std::string DeltaSchedule::to_string() const {
  switch (kind) {
    case Kind::Infinite:
      return "inf";
    case Kind::Constant:
      return "const:" + fmt17(a);
    case Kind::InvSqrt:
      return "a/sqrt:" + fmt17(a);
  }
  return "inf";
}

double tilted_sigma(const WeightLaw& law, double beta) {
  switch (law.kind()) {
    case WeightLaw::Kind::StandardNormal:
      return 1.0;
    case WeightLaw::Kind::Uniform01: {
      const double h = 1e-4;
      return std::sqrt((log_mgf_deriv(law, beta + h) - log_mgf_deriv(law, beta - h)) / (2 * h));
    }
    default:
      return std::sqrt(exponential_tilt(law, beta).variance());
  }
}

DeltaSchedule DeltaSchedule::default_for(const Model& model, double beta) {
  return {Kind::InvSqrt, 2.0 * tilted_sigma(model.law, beta)};
}

SubtreeReport extract_supporting_subtree(const DisorderOracle& oracle, int depth, double beta,
                                         const DeltaSchedule& schedule, int workers, std::uint64_t leaf_budget) {
  const Model& model = oracle.model();
  const double bc = critical_beta(model);
  if (!(beta > 0.0 && beta < bc))
    throw DomainError("supporting subtree needs 0 < beta < beta_c", "beta_c=" + fmt17(bc));
  const int d = model.d;
  const double target = log_mgf_deriv(model.law, beta);

  SubtreeReport report;
  report.schedule = schedule;
  report.beta = beta;
  std::vector<std::uint8_t> alive{1}, next;
  for_each_level(oracle, depth, workers, leaf_budget, [&](int k, std::span<const double> s) {
    const double floor_avg = target - schedule.at(k);
    next.assign(s.size(), 0);
    const std::size_t nchunks = (s.size() + kChunk - 1) / kChunk;
    std::vector<std::uint64_t> sizes(nchunks, 0);
    parallel_for(nchunks, workers, [&](std::size_t c) {
      const std::size_t lo = c * kChunk, hi = std::min(s.size(), lo + kChunk);
      std::uint64_t n = 0;
      for (std::size_t i = lo; i < hi; ++i) {
        const bool keep = alive[i / d] && s[i] / k >= floor_avg;
        next[i] = keep;
        n += keep;
      }
      sizes[c] = n;
    });
    std::swap(alive, next);

    SubtreeLevel lv;
    lv.n = k;
    lv.size = std::accumulate(sizes.begin(), sizes.end(), std::uint64_t{0});
    lv.log_restricted_sum = level_log_sum_exp(s, beta, workers, alive).value();
    lv.log_Z = level_log_sum_exp(s, beta, workers).value();
    lv.survivor_fraction = static_cast<double>(lv.size) / static_cast<double>(s.size());
    if (lv.size == 0 && report.first_empty_level == 0) report.first_empty_level = k;
    report.levels.push_back(lv);

    if (k == depth && lv.size > 0) {
      const double cut = lv.log_Z - depth * (entropy_f(model, beta) + schedule.at(depth));
      std::uint64_t ok = 0;
      for (std::size_t i = 0; i < s.size(); ++i) ok += alive[i] && beta * s[i] >= cut;
      report.ball_mass_fraction = static_cast<double>(ok) / static_cast<double>(lv.size);
    }
  });
  report.growth = fit_tail(report.levels, true);
  report.free_energy = fit_tail(report.levels, false);
  return report;
}

double restricted_topk_log_sum(const DisorderOracle& oracle, int depth, double beta, std::uint64_t k, int workers) {
  if (k == 0) return -kInf;
  double result = -kInf;
  for_each_level(oracle, depth, workers, kArrayLeafBudget, [&](int n, std::span<const double> s) {
    if (n != depth) return;
    if (k >= s.size()) {
      result = level_log_sum_exp(s, beta, workers).value();
      return;
    }
    std::vector<std::uint32_t> idx(s.size());
    std::iota(idx.begin(), idx.end(), 0u);
    auto before = [&](std::uint32_t a, std::uint32_t b) { return s[a] > s[b] || (s[a] == s[b] && a < b); };
    std::nth_element(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(), before);
    std::vector<std::uint8_t> mask(s.size(), 0);
    for (std::uint64_t j = 0; j < k; ++j) mask[idx[j]] = 1;
    result = level_log_sum_exp(s, beta, workers, mask).value();
  });
  return result;
}

TopKResult topk_restricted_energy(const DisorderOracle& oracle, int depth, double beta, double c, int workers) {
  const Model& model = oracle.model();
  if (!(beta > 0.0)) throw DomainError("top-K energy needs beta > 0");
  const double f = entropy_f(model, beta);
  if (!(c > 0.0 && c < f)) throw DomainError("top-K energy needs 0 < c < f(beta)", "f(beta)=" + fmt17(f));
  require_array_budget(model.d, depth, kArrayLeafBudget);
  TopKResult r;
  r.k = static_cast<std::uint64_t>(std::ceil(std::exp(c * depth)));
  r.empirical = restricted_topk_log_sum(oracle, depth, beta, r.k, workers) / depth;
  r.predicted = c + beta * spectrum_level(model, c);
  r.phi_beta = free_energy(model, beta);
  return r;
}

}  // namespace polymerlab
