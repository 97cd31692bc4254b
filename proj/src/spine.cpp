#include "polymerlab/spine.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>

#include "polymerlab/error.hpp"
#include "polymerlab/parallel.hpp"

namespace polymerlab {

namespace {

std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

constexpr std::uint64_t kWalkChunk = 256;

struct WalkCounts {
  std::vector<double> counts;  // visits to [0, q_j) for each query point
  bool truncated = false;
};

// One run of the normalised size-biased walk. The position is formed as
// (sum of weights) - i * drift so that rounding does not accumulate.
WalkCounts run_walk(const SpineSetup& setup, const std::vector<double>& queries, std::uint64_t max_steps,
                    std::uint64_t seed) {
  UniformStream u(seed);
  std::vector<double> hist(queries.size() + 1, 0.0);
  double value_sum = 0.0;
  double pos = 0.0;
  WalkCounts out;
  for (std::uint64_t i = 0;; ++i) {
    if (i > 0) {
      value_sum += sample(setup.size_biased, u());
      pos = value_sum - static_cast<double>(i) * setup.drift;
      if (pos < 0.0) break;
    }
    if (i >= max_steps) {
      out.truncated = true;
      break;
    }
    hist[std::upper_bound(queries.begin(), queries.end(), pos) - queries.begin()] += 1.0;
  }
  out.counts.resize(queries.size());
  double running = 0.0;
  for (std::size_t j = 0; j < queries.size(); ++j) {
    running += hist[j];
    out.counts[j] = running;
  }
  return out;
}

struct Moments {
  std::vector<double> sum, sum_sq;
  std::uint64_t truncated = 0;
};

// Runs walks in fixed chunks; `per_walk` maps a walk's counts to the
// statistics whose mean and variance are wanted. Chunks merge in order.
template <class PerWalk>
Moments walk_moments(const SpineSetup& setup, const std::vector<double>& queries, std::size_t nstats,
                     std::uint64_t walks, std::uint64_t max_steps, std::uint64_t salt, int workers,
                     PerWalk per_walk) {
  const std::size_t nchunks = (walks + kWalkChunk - 1) / kWalkChunk;
  std::vector<Moments> parts(nchunks);
  parallel_for(nchunks, workers, [&](std::size_t c) {
    Moments& m = parts[c];
    m.sum.assign(nstats, 0.0);
    m.sum_sq.assign(nstats, 0.0);
    std::vector<double> stats(nstats);
    const std::uint64_t lo = c * kWalkChunk, hi = std::min<std::uint64_t>(walks, lo + kWalkChunk);
    for (std::uint64_t w = lo; w < hi; ++w) {
      WalkCounts wc = run_walk(setup, queries, max_steps, derive_seed(salt, StreamTag::Walk, w));
      m.truncated += wc.truncated;
      per_walk(wc.counts, stats);
      for (std::size_t j = 0; j < nstats; ++j) {
        m.sum[j] += stats[j];
        m.sum_sq[j] += stats[j] * stats[j];
      }
    }
  });
  Moments total{std::vector<double>(nstats, 0.0), std::vector<double>(nstats, 0.0), 0};
  for (const auto& m : parts) {
    for (std::size_t j = 0; j < nstats; ++j) {
      total.sum[j] += m.sum[j];
      total.sum_sq[j] += m.sum_sq[j];
    }
    total.truncated += m.truncated;
  }
  return total;
}

std::pair<double, double> mean_stderr(double sum, double sum_sq, std::uint64_t n) {
  const double mean = sum / n;
  if (n < 2) return {mean, 0.0};
  const double var = std::max(0.0, (sum_sq - n * mean * mean) / (n - 1));
  return {mean, std::sqrt(var / n)};
}

std::vector<double> sorted_unique(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

std::size_t position_of(const std::vector<double>& sorted, double x) {
  return static_cast<std::size_t>(std::lower_bound(sorted.begin(), sorted.end(), x) - sorted.begin());
}

}  // namespace

SpineSetup spine_setup(const Model& model) {
  if (!model.law.finite_support())
    throw DomainError("spine constructions need a finite-support law", model.law.to_string());
  const double bc = critical_beta(model);
  if (!std::isfinite(bc))
    throw DomainError("spine constructions need a finite beta_c", model.law.to_string());
  WeightLaw tilted = exponential_tilt(model.law, bc);
  if (tilted.atoms().size() < 2 || !(tilted.variance() > 0.0))
    throw DomainError("size-biased law is degenerate (zero-drift walk never moves)", model.law.to_string());
  return {model, bc, log_mgf_deriv(model.law, bc), std::move(tilted)};
}

std::vector<double> default_h_grid(const SpineSetup& setup) {
  const double lo = 0.01, hi = 50.0 * std::sqrt(setup.size_biased.variance());
  std::vector<double> grid(64);
  for (int i = 0; i < 64; ++i) grid[i] = lo * std::pow(hi / lo, i / 63.0);
  return grid;
}

RenewalEstimate estimate_h(const Model& model, std::vector<double> x_grid, std::uint64_t walks,
                           std::uint64_t max_steps, std::uint64_t salt, int workers) {
  const SpineSetup setup = spine_setup(model);
  if (walks < 1) throw DomainError("estimate_h needs at least one walk");
  if (x_grid.empty()) x_grid = default_h_grid(setup);
  for (double x : x_grid)
    if (!(x >= 0.0) || !std::isfinite(x)) throw DomainError("h grid points must be finite and >= 0", fmt17(x));
  const std::vector<double> queries = sorted_unique(x_grid);
  Moments m = walk_moments(setup, queries, queries.size(), walks, max_steps, salt, workers,
                           [](const std::vector<double>& counts, std::vector<double>& stats) { stats = counts; });
  RenewalEstimate est;
  est.x_grid = x_grid;
  est.walks_used = walks;
  est.truncated_fraction = static_cast<double>(m.truncated) / walks;
  for (double x : x_grid) {
    if (x == 0.0) {
      est.h_hat.push_back(1.0);
      est.std_err.push_back(0.0);
      continue;
    }
    const std::size_t j = position_of(queries, x);
    auto [mean, se] = mean_stderr(m.sum[j], m.sum_sq[j], walks);
    est.h_hat.push_back(mean);
    est.std_err.push_back(se);
  }
  return est;
}

std::vector<HarmonicityCheck> harmonicity_check(const Model& model, const std::vector<double>& points,
                                                std::uint64_t walks, std::uint64_t max_steps, std::uint64_t salt,
                                                int workers) {
  const SpineSetup setup = spine_setup(model);
  if (walks < 2) throw DomainError("harmonicity check needs at least two walks");
  const auto atoms = setup.size_biased.atoms();
  std::vector<double> all;
  for (double x : points) {
    if (!(x > 0.0)) throw DomainError("harmonicity test points must be > 0", fmt17(x));
    all.push_back(x);
    for (const auto& a : atoms)
      if (x - (a.value - setup.drift) > 0.0) all.push_back(x - (a.value - setup.drift));
  }
  const std::vector<double> queries = sorted_unique(all);
  const std::size_t np = points.size();
  // Stats per point: h(x), shifted expectation, residual.
  Moments m = walk_moments(setup, queries, 3 * np, walks, max_steps, salt, workers,
                           [&](const std::vector<double>& counts, std::vector<double>& stats) {
                             for (std::size_t i = 0; i < np; ++i) {
                               const double x = points[i];
                               const double h = counts[position_of(queries, x)];
                               double shifted = 0.0;
                               for (const auto& a : atoms) {
                                 const double y = x - (a.value - setup.drift);
                                 if (y > 0.0) shifted += a.prob * counts[position_of(queries, y)];
                               }
                               stats[3 * i] = h;
                               stats[3 * i + 1] = shifted;
                               stats[3 * i + 2] = shifted - h;
                             }
                           });
  std::vector<HarmonicityCheck> out(np);
  for (std::size_t i = 0; i < np; ++i) {
    out[i].x = points[i];
    out[i].h = m.sum[3 * i] / walks;
    out[i].shifted = m.sum[3 * i + 1] / walks;
    auto [res, se] = mean_stderr(m.sum[3 * i + 2], m.sum_sq[3 * i + 2], walks);
    out[i].residual = res;
    out[i].std_err = se;
  }
  return out;
}

RenewalFunction interpolate_h(const RenewalEstimate& estimate, bool extrapolate) {
  std::vector<std::pair<double, double>> pts;
  for (std::size_t i = 0; i < estimate.x_grid.size(); ++i)
    if (estimate.x_grid[i] > 0.0) pts.emplace_back(estimate.x_grid[i], estimate.h_hat[i]);
  std::sort(pts.begin(), pts.end());
  if (pts.empty()) throw DomainError("renewal estimate has no positive grid points");
  const double last = pts.back().first;
  RenewalFunction h;
  h.domain_max = extrapolate ? kInf : last;
  h.eval = [pts = std::move(pts), extrapolate, last](double x) {
    if (!(x >= 0.0)) throw DomainError("h evaluated at a negative argument", fmt17(x));
    if (x < pts.front().first) return 1.0;
    if (x > last) {
      if (!extrapolate) throw DomainError("h evaluated beyond its grid", "[0, " + fmt17(last) + "]");
      return pts.back().second * x / last;
    }
    auto it = std::lower_bound(pts.begin(), pts.end(), std::make_pair(x, -kInf));
    if (it->first == x) return it->second;
    auto prev = it - 1;
    const double t = (x - prev->first) / (it->first - prev->first);
    return prev->second + t * (it->second - prev->second);
  };
  return h;
}

double martingale_W(const DisorderOracle& oracle, int depth, double x, const RenewalFunction& h, int workers) {
  const Model& model = oracle.model();
  const double bc = critical_beta(model);
  if (!std::isfinite(bc)) throw DomainError("W needs a finite beta_c", model.law.to_string());
  if (!(x >= 0.0)) throw DomainError("W needs x >= 0", fmt17(x));
  const double drift = log_mgf_deriv(model.law, bc);
  const int d = model.d;
  std::vector<std::uint8_t> alive{1}, next;
  double log_w = -kInf;
  for_each_level(oracle, depth, workers, kArrayLeafBudget, [&](int k, std::span<const double> s) {
    const double bound = x + k * drift;
    next.resize(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) next[i] = alive[i / d] && s[i] < bound;
    std::swap(alive, next);
    if (k < depth) return;
    std::vector<double> terms(s.size(), -kInf);
    parallel_for(s.size(), workers, [&](std::size_t i) {
      if (alive[i]) terms[i] = std::log(h(bound - s[i])) + bc * s[i];
    });
    log_w = log_sum_exp_scaled(terms, 1.0).value();
  });
  if (log_w == -kInf) return 0.0;
  const double norm = depth * (log_mgf(model.law, bc) + std::log(static_cast<double>(d)));
  return std::exp(log_w - norm - std::log(h(x)));
}

MeanEstimate martingale_W_mean(const Model& model, int depth, double x, const RenewalFunction& h, int replicas,
                               std::uint64_t salt, int workers) {
  if (replicas < 2) throw DomainError("W mean needs at least 2 replicas");
  std::vector<double> values(replicas);
  parallel_for(static_cast<std::size_t>(replicas), workers, [&](std::size_t r) {
    values[r] = martingale_W(DisorderOracle(model, derive_seed(salt, StreamTag::Replica, r)), depth, x, h);
  });
  double sum = 0.0, sum_sq = 0.0;
  for (double v : values) {
    sum += v;
    sum_sq += v * v;
  }
  auto [mean, se] = mean_stderr(sum, sum_sq, static_cast<std::uint64_t>(replicas));
  return {mean, se};
}

std::vector<double> spine_transition(const SpineSetup& setup, const RenewalFunction& h, double deviation) {
  const auto atoms = setup.size_biased.atoms();
  std::vector<double> probs(atoms.size(), 0.0);
  double total = 0.0;
  for (std::size_t a = 0; a < atoms.size(); ++a) {
    const double next = deviation + setup.drift - atoms[a].value;
    if (next > 0.0) {
      probs[a] = h(next) * atoms[a].prob;
      total += probs[a];
    }
  }
  if (total > 0.0)
    for (double& p : probs) p /= total;
  return probs;
}

SpinePath conditioned_spine(const SpineSetup& setup, const RenewalFunction& h, int depth,
                            const std::function<double()>& uniform) {
  if (depth < 1) throw DomainError("spine depth must be >= 1");
  const auto atoms = setup.size_biased.atoms();
  for (int attempt = 0; attempt < 100; ++attempt) {
    SpinePath path;
    path.weights.reserve(depth);
    path.prefix_deviation.reserve(depth);
    double value_sum = 0.0, deviation = 0.0;
    bool stuck = false;
    for (int n = 1; n <= depth; ++n) {
      const std::vector<double> probs = spine_transition(setup, h, deviation);
      const double u = uniform();
      double cum = 0.0;
      std::size_t pick = atoms.size();
      for (std::size_t a = 0; a < atoms.size(); ++a) {
        if (probs[a] == 0.0) continue;
        cum += probs[a];
        pick = a;
        if (u < cum) break;
      }
      if (pick == atoms.size()) {
        stuck = true;
        break;
      }
      value_sum += atoms[pick].value;
      deviation = n * setup.drift - value_sum;
      path.weights.push_back(atoms[pick].value);
      path.prefix_deviation.push_back(deviation);
    }
    if (!stuck) return path;
  }
  throw SamplingError("conditioned spine found no admissible atom in 100 attempts", setup.model.law.to_string());
}

double bernoulli_tilt_schedule(std::uint64_t i, double p) {
  if (i < 1) throw DomainError("schedule index must be >= 1");
  const double di = static_cast<double>(i);
  return std::max(std::pow(1.0 / di, 2.0 / di), p);
}

std::uint64_t schedule_crossover(double p) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("p must lie in (0, 1)", fmt17(p));
  auto g = [](std::uint64_t i) {
    const double di = static_cast<double>(i);
    return std::pow(1.0 / di, 2.0 / di);
  };
  // g decreases on {1, 2, 3} and increases from 3 on.
  std::uint64_t m = 3;
  while (g(m) < p) ++m;
  return m > 3 ? m : 1;
}

SpinePath tilted_bernoulli_spine(double p, int d, int depth, const std::function<double()>& uniform,
                                 bool constant_schedule) {
  if (d < 2) throw DomainError("d must be >= 2");
  if (!(p >= 1.0 / d && p <= 1.0)) throw DomainError("tilted Bernoulli spine needs 1/d <= p <= 1", fmt17(p));
  if (depth < 1) throw DomainError("spine depth must be >= 1");
  SpinePath path;
  double count = 0.0;
  for (int i = 1; i <= depth; ++i) {
    const double pi = constant_schedule || p == 1.0 ? p : bernoulli_tilt_schedule(i, p);
    const double v = uniform() < pi ? 1.0 : 0.0;
    count += v;
    path.weights.push_back(v);
    path.prefix_deviation.push_back(i - count);
  }
  return path;
}

}  // namespace polymerlab
