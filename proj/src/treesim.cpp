#include "polymerlab/treesim.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "polymerlab/error.hpp"
#include "polymerlab/parallel.hpp"

namespace polymerlab {

namespace {

// Fixed reduction granularity; independent of the worker count.
constexpr std::size_t kChunk = std::size_t{1} << 15;

std::size_t chunk_count(std::size_t n) { return (n + kChunk - 1) / kChunk; }

// Smallest level whose generation has at least 256 vertices (capped at depth);
// the streaming engine fans out one task per vertex of that level.
int stream_split_level(int d, int depth) {
  int s = 0;
  std::uint64_t n = 1;
  while (s < depth && n < 256) {
    n *= static_cast<std::uint64_t>(d);
    ++s;
  }
  return s;
}

struct StreamTask {
  std::vector<LogSumExp> lse;  // [level offset * nbeta + b]
  std::vector<double> max_sum;
};

void stream_dfs(const DisorderOracle& oracle, int depth, int base_level, int level, std::uint64_t index,
                double prefix, std::span<const double> betas, StreamTask& task) {
  const int d = oracle.d();
  const std::size_t nb = betas.size();
  const std::size_t row = static_cast<std::size_t>(level + 1 - base_level - 1);
  for (int j = 0; j < d; ++j) {
    const std::uint64_t child = index * static_cast<std::uint64_t>(d) + static_cast<std::uint64_t>(j);
    const double s = prefix + oracle.weight(level + 1, child);
    for (std::size_t b = 0; b < nb; ++b) task.lse[row * nb + b].add(betas[b] * s);
    task.max_sum[row] = std::max(task.max_sum[row], s);
    if (level + 1 < depth) stream_dfs(oracle, depth, base_level, level + 1, child, s, betas, task);
  }
}

std::vector<LevelAggregates> stream_scan(const DisorderOracle& oracle, int depth, std::span<const double> betas,
                                         int workers) {
  const int d = oracle.d();
  const Model& model = oracle.model();
  const std::size_t nb = betas.size();
  level_size(d, depth);  // overflow guard for vertex indices

  std::vector<LogSumExp> lse(static_cast<std::size_t>(depth) * nb);
  std::vector<double> max_sum(depth, -kInf);

  // Generations up to the split level are enumerated directly.
  const int split = stream_split_level(d, depth);
  std::vector<double> prefix{0.0};
  for (int k = 1; k <= split; ++k) {
    std::vector<double> next(prefix.size() * d);
    for (std::size_t i = 0; i < next.size(); ++i) {
      next[i] = prefix[i / d] + oracle.weight(k, i);
      for (std::size_t b = 0; b < nb; ++b) lse[(k - 1) * nb + b].add(betas[b] * next[i]);
      max_sum[k - 1] = std::max(max_sum[k - 1], next[i]);
    }
    prefix = std::move(next);
  }

  if (split < depth) {
    const std::size_t rows = static_cast<std::size_t>(depth - split);
    std::vector<StreamTask> tasks(prefix.size());
    parallel_for(prefix.size(), workers, [&](std::size_t t) {
      StreamTask& task = tasks[t];
      task.lse.assign(rows * nb, LogSumExp{});
      task.max_sum.assign(rows, -kInf);
      stream_dfs(oracle, depth, split, split, t, prefix[t], betas, task);
    });
    for (const auto& task : tasks) {
      for (std::size_t r = 0; r < rows; ++r) {
        const std::size_t k = static_cast<std::size_t>(split) + r;
        for (std::size_t b = 0; b < nb; ++b) lse[k * nb + b].merge(task.lse[r * nb + b]);
        max_sum[k] = std::max(max_sum[k], task.max_sum[r]);
      }
    }
  }

  std::vector<LevelAggregates> out(depth);
  for (int k = 1; k <= depth; ++k) {
    auto& agg = out[k - 1];
    agg.level = k;
    agg.max_sum = max_sum[k - 1];
    for (std::size_t b = 0; b < nb; ++b) {
      const LogSumExp& acc = lse[(k - 1) * nb + b];
      agg.log_Z.push_back(acc.value());
      agg.log_M.push_back(log_martingale(acc, model, betas[b], k));
    }
  }
  return out;
}

}  // namespace

void require_array_budget(int d, int depth, std::uint64_t budget) {
  if (depth < 1) throw DomainError("depth must be >= 1", "depth=" + std::to_string(depth));
  std::uint64_t n = 0;
  try {
    n = level_size(d, depth);
  } catch (const ResourceError&) {
    n = UINT64_MAX;
  }
  if (n > budget)
    throw ResourceError("array engine limited to " + std::to_string(budget) + " vertices per generation",
                        "d=" + std::to_string(d) + " depth=" + std::to_string(depth) +
                            " leaf cap=" + std::to_string(budget));
}

void for_each_level(const DisorderOracle& oracle, int depth, int workers, std::uint64_t leaf_budget,
                    const std::function<void(int, std::span<const double>)>& visit) {
  const int d = oracle.d();
  require_array_budget(d, depth, leaf_budget);
  std::vector<double> cur{0.0};
  std::vector<double> next;
  for (int k = 1; k <= depth; ++k) {
    next.resize(cur.size() * d);
    parallel_for(chunk_count(next.size()), workers, [&](std::size_t c) {
      const std::size_t lo = c * kChunk, hi = std::min(next.size(), lo + kChunk);
      for (std::size_t i = lo; i < hi; ++i) next[i] = cur[i / d] + oracle.weight(k, i);
    });
    std::swap(cur, next);
    visit(k, cur);
  }
}

LogSumExp level_log_sum_exp(std::span<const double> prefix, double beta, int workers,
                            std::span<const std::uint8_t> mask) {
  const bool masked = !mask.empty();
  std::vector<LogSumExp> parts(chunk_count(prefix.size()));
  parallel_for(parts.size(), workers, [&](std::size_t c) {
    const std::size_t lo = c * kChunk, hi = std::min(prefix.size(), lo + kChunk);
    double m = -kInf;
    for (std::size_t i = lo; i < hi; ++i)
      if (!masked || mask[i]) m = std::max(m, beta * prefix[i]);
    if (m == -kInf) return;
    double s = 0.0;
    for (std::size_t i = lo; i < hi; ++i)
      if (!masked || mask[i]) s += std::exp(beta * prefix[i] - m);
    parts[c] = LogSumExp{m, s};
  });
  LogSumExp total;
  for (const auto& p : parts) total.merge(p);
  return total;
}

double log_martingale(const LogSumExp& lse, const Model& model, double beta, int n) {
  // log Z_n - n(lambda + log d) written so that beta = 0 gives exactly 0.
  const double count = std::pow(static_cast<double>(model.d), n);
  return (lse.max - n * log_mgf(model.law, beta)) + std::log(lse.sum / count);
}

std::vector<LevelAggregates> level_scan(const DisorderOracle& oracle, int depth, std::span<const double> betas,
                                        std::span<const double> alphas, const ScanOptions& options) {
  if (depth < 1) throw DomainError("depth must be >= 1", "depth=" + std::to_string(depth));
  for (double b : betas)
    if (!std::isfinite(b)) throw DomainError("beta must be finite");
  if (options.engine == Engine::Stream) return stream_scan(oracle, depth, betas, options.workers);

  const Model& model = oracle.model();
  std::vector<LevelAggregates> out;
  out.reserve(depth);
  for_each_level(oracle, depth, options.workers, options.leaf_budget, [&](int k, std::span<const double> s) {
    LevelAggregates agg;
    agg.level = k;
    for (double b : betas) {
      LogSumExp acc = level_log_sum_exp(s, b, options.workers);
      agg.log_Z.push_back(acc.value());
      agg.log_M.push_back(log_martingale(acc, model, b, k));
    }
    const std::size_t nchunks = chunk_count(s.size());
    std::vector<double> chunk_max(nchunks, -kInf);
    std::vector<std::uint64_t> chunk_counts(nchunks * alphas.size(), 0);
    parallel_for(nchunks, options.workers, [&](std::size_t c) {
      const std::size_t lo = c * kChunk, hi = std::min(s.size(), lo + kChunk);
      double m = -kInf;
      for (std::size_t i = lo; i < hi; ++i) m = std::max(m, s[i]);
      chunk_max[c] = m;
      for (std::size_t a = 0; a < alphas.size(); ++a) {
        const double threshold = alphas[a] * k;
        std::uint64_t n = 0;
        for (std::size_t i = lo; i < hi; ++i) n += s[i] >= threshold;
        chunk_counts[c * alphas.size() + a] = n;
      }
    });
    agg.max_sum = *std::max_element(chunk_max.begin(), chunk_max.end());
    agg.counts.assign(alphas.size(), 0);
    for (std::size_t c = 0; c < nchunks; ++c)
      for (std::size_t a = 0; a < alphas.size(); ++a) agg.counts[a] += chunk_counts[c * alphas.size() + a];
    out.push_back(std::move(agg));
  });
  return out;
}

MeanEstimate martingale_mean(const Model& model, double beta, int depth, int replicas, std::uint64_t salt,
                             int workers) {
  if (replicas < 2) throw DomainError("martingale_mean needs at least 2 replicas");
  if (depth < 1) throw DomainError("depth must be >= 1");
  std::vector<double> values(replicas);
  parallel_for(static_cast<std::size_t>(replicas), workers, [&](std::size_t r) {
    DisorderOracle oracle(model, derive_seed(salt, StreamTag::Replica, r));
    for_each_level(oracle, depth, 1, kArrayLeafBudget, [&](int k, std::span<const double> s) {
      if (k == depth) values[r] = std::exp(log_martingale(level_log_sum_exp(s, beta, 1), model, beta, k));
    });
  });
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= replicas;
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  var /= (replicas - 1);
  return {mean, std::sqrt(var / replicas)};
}

GibbsSampler::GibbsSampler(const DisorderOracle& oracle, int depth, double beta, int workers,
                           std::uint64_t leaf_budget)
    : oracle_(oracle), depth_(depth), beta_(beta) {
  const int d = oracle.d();
  require_array_budget(d, depth, leaf_budget);
  if (!std::isfinite(beta)) throw DomainError("beta must be finite");
  subtree_log_z_.resize(depth);
  for (int k = depth - 1; k >= 0; --k) {
    auto& cur = subtree_log_z_[k];
    cur.assign(level_size(d, k), 0.0);
    const std::vector<double>* below = k + 1 < depth ? &subtree_log_z_[k + 1] : nullptr;
    parallel_for(chunk_count(cur.size()), workers, [&](std::size_t c) {
      const std::size_t lo = c * kChunk, hi = std::min(cur.size(), lo + kChunk);
      for (std::size_t i = lo; i < hi; ++i) {
        LogSumExp acc;
        for (int j = 0; j < d; ++j) {
          const std::uint64_t child = i * d + j;
          acc.add(beta * oracle.weight(k + 1, child) + (below ? (*below)[child] : 0.0));
        }
        cur[i] = acc.value();
      }
    });
  }
}

RayTrace GibbsSampler::sample(const std::function<double()>& uniform) const {
  const int d = oracle_.d();
  const double log_z = log_partition();
  RayTrace ray;
  ray.path.reserve(depth_);
  ray.prefix_sums.reserve(depth_);
  ray.log_ball_mass.reserve(depth_);
  std::uint64_t index = 0;
  double prefix = 0.0;
  std::vector<double> logits(d), weights(d);
  for (int k = 0; k < depth_; ++k) {
    const double parent = subtree_log_z_[k][index];
    for (int j = 0; j < d; ++j) {
      const std::uint64_t child = index * d + j;
      weights[j] = oracle_.weight(k + 1, child);
      logits[j] = beta_ * weights[j] + (k + 1 < depth_ ? subtree_log_z_[k + 1][child] : 0.0);
    }
    const double u = uniform();
    int chosen = d - 1;
    double cum = 0.0;
    for (int j = 0; j < d; ++j) {
      cum += std::exp(logits[j] - parent);
      if (u < cum) {
        chosen = j;
        break;
      }
    }
    index = index * d + chosen;
    prefix += weights[chosen];
    ray.path.push_back(chosen);
    ray.prefix_sums.push_back(prefix);
    const double below = k + 1 < depth_ ? subtree_log_z_[k + 1][index] : 0.0;
    ray.log_ball_mass.push_back(std::min(0.0, beta_ * prefix + below - log_z));
  }
  return ray;
}

RayTrace sample_gibbs_ray(const DisorderOracle& oracle, int depth, double beta,
                          const std::function<double()>& uniform) {
  return GibbsSampler(oracle, depth, beta).sample(uniform);
}

}  // namespace polymerlab
