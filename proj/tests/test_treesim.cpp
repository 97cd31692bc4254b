#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "polymerlab/error.hpp"
#include "polymerlab/random.hpp"
#include "polymerlab/treesim.hpp"

using namespace polymerlab;

namespace {

const WeightLaw kFig = WeightLaw::discrete({{1.0, 0.25}, {-1.0, 0.75}});

// Explicit enumeration of every root-to-leaf path, recursing through checked accessors.
void enumerate(const DisorderOracle& o, int level, std::uint64_t index, double s, int depth,
               std::vector<double>& leaves) {
  if (level == depth) {
    leaves.push_back(s);
    return;
  }
  for (int j = 0; j < o.d(); ++j) {
    const std::uint64_t child = index * o.d() + j;
    enumerate(o, level + 1, child, s + o.vertex_weight(level + 1, child), depth, leaves);
  }
}

double naive_log_z(const std::vector<double>& leaves, double beta) {
  long double m = -INFINITY;
  for (double s : leaves) m = std::max<long double>(m, beta * s);
  long double acc = 0;
  for (double s : leaves) acc += std::exp(static_cast<long double>(beta * s) - m);
  return static_cast<double>(m + std::log(acc));
}

}  // namespace

TEST_CASE("disorder is a pure function of (seed, level, index)") {
  const Model m(2, WeightLaw::normal());
  const DisorderOracle a(m, 9), b(m, 9);
  for (int l = 1; l < 10; ++l)
    for (std::uint64_t i = 0; i < std::min<std::uint64_t>(20, std::uint64_t{1} << l); ++i)
      CHECK(a.vertex_weight(l, i) == b.vertex_weight(l, i));
  int collisions = 0;
  for (std::uint64_t s = 1; s <= 100; ++s)
    collisions += DisorderOracle(m, s).vertex_weight(1, 0) == DisorderOracle(m, s + 1).vertex_weight(1, 0);
  CHECK(collisions == 0);
  CHECK_THROWS_AS(a.vertex_weight(2, 4), DomainError);
  CHECK_THROWS_AS(a.vertex_weight(0, 0), DomainError);
}

TEST_CASE("vertex weights have the law's mean") {
  const Model m(2, kFig);
  const DisorderOracle o(m, 3);
  const int n = 1 << 20;
  double sum = 0;
  for (int i = 0; i < n; ++i) sum += o.vertex_weight(20, i);
  CHECK(std::abs(sum / n - kFig.mean()) < 4 * std::sqrt(kFig.variance() / n));
}

TEST_CASE("depth one: two-leaf arithmetic") {
  const Model m(2, WeightLaw::normal());
  const DisorderOracle o(m, 11);
  const double a = o.vertex_weight(1, 0), b = o.vertex_weight(1, 1);
  const double betas[] = {0.0, 0.7};
  const double alphas[] = {std::min(a, b), std::max(a, b) + 1e-9};
  for (Engine e : {Engine::Array, Engine::Stream}) {
    const auto lv = level_scan(o, 1, betas, alphas, {e, 1});
    CHECK(lv[0].log_Z[1] == doctest::Approx(std::log(std::exp(0.7 * a) + std::exp(0.7 * b))).epsilon(1e-14));
    CHECK(lv[0].log_Z[0] == doctest::Approx(std::log(2.0)));
    CHECK(lv[0].log_M[0] == 0.0);
    CHECK(lv[0].max_sum == std::max(a, b));
    if (e == Engine::Array) {
      CHECK(lv[0].counts[0] == 2);
      CHECK(lv[0].counts[1] == 0);
    } else {
      CHECK(lv[0].counts.empty());
    }
  }
}

TEST_CASE("both engines agree with full enumeration for shallow trees") {
  UniformStream pick(1234);
  const WeightLaw laws[] = {kFig, WeightLaw::normal(), WeightLaw::uniform01(), WeightLaw::bernoulli(0.3)};
  for (int t = 0; t < 20; ++t) {
    const int d = 2 + static_cast<int>(pick() * 3);
    const int depth = 1 + static_cast<int>(pick() * 6);
    const Model m(d, laws[t % 4]);
    const DisorderOracle o(m, static_cast<std::uint64_t>(pick() * 1e9));
    const double beta = 2.0 * pick();
    std::vector<double> leaves;
    enumerate(o, 0, 0, 0.0, depth, leaves);
    const double betas[] = {beta};
    const auto arr = level_scan(o, depth, betas, {}, {Engine::Array, 1});
    const auto str = level_scan(o, depth, betas, {}, {Engine::Stream, 3});
    const double expect = naive_log_z(leaves, beta);
    CHECK(std::abs(arr.back().log_Z[0] - expect) < 1e-12);
    CHECK(std::abs(str.back().log_Z[0] - expect) < 1e-12);
    const double mx = *std::max_element(leaves.begin(), leaves.end());
    CHECK(arr.back().max_sum == mx);
    CHECK(str.back().max_sum == mx);
  }
}

TEST_CASE("engine reconciliation on deeper trees") {
  UniformStream pick(77);
  for (int t = 0; t < 20; ++t) {
    const int depth = 6 + static_cast<int>(pick() * 9);
    const Model m(2, t % 2 ? kFig : WeightLaw::normal());
    const DisorderOracle o(m, static_cast<std::uint64_t>(pick() * 1e9));
    const double betas[] = {0.3 + 2 * pick()};
    const auto arr = level_scan(o, depth, betas, {}, {Engine::Array, 2});
    const auto str = level_scan(o, depth, betas, {}, {Engine::Stream, 2});
    for (int k = 0; k < depth; ++k) {
      CHECK(std::abs(arr[k].log_Z[0] - str[k].log_Z[0]) < 1e-9);
      CHECK(arr[k].max_sum == str[k].max_sum);
    }
  }
}

TEST_CASE("level aggregates invariants") {
  const Model m(2, kFig);
  const DisorderOracle o(m, 5);
  const double betas[] = {0.0, 0.4, 1.0, 2.5};
  std::vector<double> alphas;
  for (int i = 0; i <= 20; ++i) alphas.push_back(-1.0 + 0.1 * i);
  const auto lv = level_scan(o, 14, betas, alphas);
  for (const auto& a : lv) {
    for (std::size_t b = 0; b < 4; ++b) {
      const double expect = a.log_Z[b] - a.level * (log_mgf(kFig, betas[b]) + std::log(2.0));
      CHECK(std::abs(a.log_M[b] - expect) < 1e-9);
    }
    CHECK(a.counts[0] == (std::uint64_t{1} << a.level));
    for (std::size_t i = 1; i < alphas.size(); ++i) {
      CHECK(a.counts[i] <= a.counts[i - 1]);
      CHECK((a.counts[i] >= 1) == (a.max_sum >= alphas[i] * a.level));
    }
  }
}

TEST_CASE("maximum is sub-multiplicative across a 4 + 4 split") {
  const Model m(2, WeightLaw::normal());
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const DisorderOracle o(m, seed);
    const auto lv = level_scan(o, 8, {}, {});
    double sub_max = -INFINITY;
    for (std::uint64_t root = 0; root < 16; ++root) {
      // Paths below (4, root), summed from level 5 on.
      std::vector<double> leaves{0.0};
      for (int l = 5; l <= 8; ++l) {
        std::vector<double> next;
        const std::uint64_t first = root << (l - 4);
        for (std::size_t i = 0; i < leaves.size() * 2; ++i) next.push_back(leaves[i / 2] + o.vertex_weight(l, first + i));
        leaves = next;
      }
      sub_max = std::max(sub_max, *std::max_element(leaves.begin(), leaves.end()));
    }
    CHECK(lv[7].max_sum <= lv[3].max_sum + sub_max + 1e-12);
  }
}

TEST_CASE("array engine refuses generations above its budget") {
  const DisorderOracle o(Model(2, kFig), 0);
  CHECK_THROWS_AS(level_scan(o, 40, {}, {}), ResourceError);
  CHECK_THROWS_AS(level_scan(o, 27, {}, {}), ResourceError);
  CHECK_THROWS_AS(level_scan(o, 70, {}, {}, {Engine::Stream, 1}), ResourceError);
  try {
    level_scan(o, 40, {}, {});
  } catch (const ResourceError& e) {
    CHECK(std::string(e.what()).find("67108864") != std::string::npos);
  }
}

TEST_CASE("results do not depend on the worker count") {
  const DisorderOracle o(Model(3, WeightLaw::normal()), 8);
  const double betas[] = {0.2, 1.1};
  const double alphas[] = {0.0, 0.5};
  for (Engine e : {Engine::Array, Engine::Stream}) {
    const auto a = level_scan(o, 13, betas, e == Engine::Array ? std::span<const double>(alphas) : std::span<const double>(),
                              {e, 1});
    const auto b = level_scan(o, 13, betas, e == Engine::Array ? std::span<const double>(alphas) : std::span<const double>(),
                              {e, 8});
    for (std::size_t k = 0; k < a.size(); ++k) {
      CHECK(a[k].log_Z == b[k].log_Z);
      CHECK(a[k].log_M == b[k].log_M);
      CHECK(a[k].counts == b[k].counts);
    }
  }
}

TEST_CASE("martingale mean") {
  const Model m(2, kFig);
  const MeanEstimate zero = martingale_mean(m, 0.0, 7, 10);
  CHECK(zero.mean == 1.0);
  CHECK(zero.std_err == 0.0);
  const double bc = critical_beta(m);
  const MeanEstimate sub = martingale_mean(m, 0.5 * bc, 8, 2000, 0, 2);
  CHECK(std::abs(sub.mean - 1.0) < 3 * sub.std_err);
  CHECK(martingale_mean(m, 0.5 * bc, 8, 500, 0, 1).mean == martingale_mean(m, 0.5 * bc, 8, 500, 0, 4).mean);
  CHECK_THROWS_AS(martingale_mean(m, 0.5, 4, 1), DomainError);
}

TEST_CASE("strong disorder: the median of log M_n decays with depth") {
  const Model m(2, kFig);
  const double b[] = {2 * critical_beta(m)};
  double prev = INFINITY;
  for (int depth : {4, 8, 12, 16}) {
    std::vector<double> logs;
    for (std::uint64_t r = 0; r < 101; ++r)
      logs.push_back(level_scan(DisorderOracle(m, derive_seed(0, StreamTag::Replica, r)), depth, b, {}).back().log_M[0]);
    std::nth_element(logs.begin(), logs.begin() + 50, logs.end());
    CHECK(logs[50] < prev);
    prev = logs[50];
  }
}

TEST_CASE("Gibbs ray at depth one picks the left child below the threshold") {
  const Model m(2, WeightLaw::normal());
  const DisorderOracle o(m, 21);
  const double beta = 0.9, a = o.vertex_weight(1, 0), b = o.vertex_weight(1, 1);
  const double left = std::exp(beta * a) / (std::exp(beta * a) + std::exp(beta * b));
  CHECK(sample_gibbs_ray(o, 1, beta, [&] { return left * 0.999; }).path[0] == 0);
  CHECK(sample_gibbs_ray(o, 1, beta, [&] { return left + (1 - left) * 0.001; }).path[0] == 1);
  const RayTrace t = sample_gibbs_ray(o, 1, beta, [] { return 0.0; });
  CHECK(t.log_ball_mass[0] == doctest::Approx(std::log(left)).epsilon(1e-13));
}

TEST_CASE("Gibbs rays at beta = 0 are uniform") {
  const Model m(2, kFig);
  const DisorderOracle o(m, 2);
  const GibbsSampler g(o, 3, 0.0);
  UniformStream s(99);
  std::vector<int> hits(8, 0);
  const int n = 10000;
  for (int r = 0; r < n; ++r) {
    const RayTrace t = g.sample([&] { return s(); });
    ++hits[t.path[0] * 4 + t.path[1] * 2 + t.path[2]];
  }
  double chi2 = 0;
  for (int h : hits) chi2 += (h - n / 8.0) * (h - n / 8.0) / (n / 8.0);
  CHECK(chi2 < 24.32);  // 0.999 quantile of chi-square with 7 degrees of freedom
}

TEST_CASE("Gibbs rays: nested balls and valid steps") {
  const Model m(2, kFig);
  const DisorderOracle o(m, 4);
  const GibbsSampler g(o, 12, 0.8);
  UniformStream s(1);
  for (int r = 0; r < 50; ++r) {
    const RayTrace t = g.sample([&] { return s(); });
    double prev_sum = 0, prev_mass = 0;
    for (int k = 0; k < 12; ++k) {
      const double step = t.prefix_sums[k] - prev_sum;
      CHECK((step == 1.0 || step == -1.0));
      CHECK(t.log_ball_mass[k] <= prev_mass + 1e-12);
      prev_sum = t.prefix_sums[k];
      prev_mass = t.log_ball_mass[k];
    }
  }
  const double betas[] = {0.8};
  CHECK(g.log_partition() == doctest::Approx(level_scan(o, 12, betas, {}).back().log_Z[0]).epsilon(1e-12));
}
