#include "polymerlab/percolation.hpp"

#include <algorithm>
#include <string>

#include "polymerlab/error.hpp"
#include "polymerlab/parallel.hpp"

namespace polymerlab {

namespace {

// Depth-first branch and bound; open children are explored first so that a
// good incumbent appears early.
template <class IsOpen>
class BestPathSearch {
 public:
  BestPathSearch(int d, int depth, Surrogate surrogate, IsOpen is_open)
      : d_(d), depth_(depth), half_((depth + 1) / 2), surrogate_(surrogate), is_open_(is_open) {}

  double run() {
    if (surrogate_ == Surrogate::Terminal) {
      terminal(0, 0, 0);
      return static_cast<double>(best_count_) / depth_;
    }
    running_min(0, 0, 0, kNone);
    return best_min_;
  }

 private:
  static constexpr double kNone = 2.0;

  void order_children(int level, std::uint64_t index, std::vector<std::pair<std::uint64_t, int>>& out) const {
    out.clear();
    for (int pass = 1; pass >= 0; --pass)
      for (int j = 0; j < d_; ++j) {
        const std::uint64_t child = index * d_ + j;
        const int open = is_open_(level + 1, child) ? 1 : 0;
        if (open == pass) out.emplace_back(child, open);
      }
  }

  void terminal(int level, std::uint64_t index, int count) {
    if (level == depth_) {
      best_count_ = std::max(best_count_, count);
      return;
    }
    if (count + (depth_ - level) <= best_count_) return;
    std::vector<std::pair<std::uint64_t, int>> kids;
    order_children(level, index, kids);
    for (const auto& [child, open] : kids) {
      if (best_count_ == depth_) return;
      terminal(level + 1, child, count + open);
    }
  }

  void running_min(int level, std::uint64_t index, int count, double cur) {
    if (level >= half_ && level > 0) cur = std::min(cur, static_cast<double>(count) / level);
    if (level == depth_) {
      best_min_ = std::max(best_min_, cur);
      return;
    }
    const double bound = std::min(cur, static_cast<double>(count + depth_ - level) / depth_);
    if (bound <= best_min_) return;
    std::vector<std::pair<std::uint64_t, int>> kids;
    order_children(level, index, kids);
    for (const auto& [child, open] : kids) {
      if (best_min_ >= 1.0) return;
      running_min(level + 1, child, count + open, cur);
    }
  }

  int d_;
  int depth_;
  int half_;
  Surrogate surrogate_;
  IsOpen is_open_;
  int best_count_ = -1;
  double best_min_ = -1.0;
};

template <class IsOpen>
double search(int d, int depth, Surrogate surrogate, IsOpen is_open) {
  if (depth < 1) throw DomainError("depth must be >= 1", "depth=" + std::to_string(depth));
  level_size(d, depth);
  return BestPathSearch<IsOpen>(d, depth, surrogate, is_open).run();
}

}  // namespace

double best_open_fraction(const DisorderOracle& oracle, int depth, Surrogate surrogate) {
  const WeightLaw& law = oracle.law();
  if (law.kind() != WeightLaw::Kind::Bernoulli)
    throw DomainError("best open fraction needs a Bernoulli law", law.to_string());
  const double one = law.one_value();
  return search(oracle.d(), depth, surrogate,
                [&](int level, std::uint64_t i) { return oracle.weight(level, i) == one; });
}

double best_open_fraction_coupled(const DisorderOracle& oracle, double p, int depth, Surrogate surrogate) {
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("p must lie in [0, 1]", "p=" + std::to_string(p));
  const double cut = 1.0 - p;
  return search(oracle.d(), depth, surrogate,
                [&](int level, std::uint64_t i) { return oracle.uniform(level, i) >= cut; });
}

std::vector<PercolationRun> percolation_curve(int d, double rho, std::span<const double> p_grid, int depth,
                                              int replicas, std::uint64_t salt, int workers, Surrogate surrogate) {
  if (replicas < 1) throw DomainError("replicas must be >= 1");
  if (!(rho > 0.0 && rho <= 1.0)) throw DomainError("rho must lie in (0, 1]");
  const Model model(d, WeightLaw::bernoulli(0.5));
  const std::size_t np = p_grid.size();
  std::vector<double> best(np * static_cast<std::size_t>(replicas));
  parallel_for(np * static_cast<std::size_t>(replicas), workers, [&](std::size_t task) {
    const std::size_t r = task / np, j = task % np;
    const DisorderOracle oracle(model, derive_seed(salt, StreamTag::Replica, r));
    best[task] = best_open_fraction_coupled(oracle, p_grid[j], depth, surrogate);
  });
  std::vector<PercolationRun> runs(np);
  for (std::size_t j = 0; j < np; ++j) {
    auto& run = runs[j];
    run.d = d;
    run.p = p_grid[j];
    run.rho = rho;
    run.depth = depth;
    run.replicas = replicas;
    double hits = 0.0, total = 0.0;
    for (int r = 0; r < replicas; ++r) {
      const double b = best[static_cast<std::size_t>(r) * np + j];
      run.best_fraction.push_back(b);
      hits += b >= rho;
      total += b;
    }
    run.occurrence_freq = hits / replicas;
    run.mean_best_fraction = total / replicas;
  }
  return runs;
}

}  // namespace polymerlab
