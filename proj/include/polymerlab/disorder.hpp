#pragma once

#include <cstdint>

#include "polymerlab/analytics.hpp"
#include "polymerlab/random.hpp"

namespace polymerlab {

/// d^level, throwing ResourceError if it does not fit in 64 bits.
std::uint64_t level_size(int d, int level);

/// Deterministic disorder on the d-ary tree. The weight of vertex (level,
/// index) is sample(law, u) with u a counter-based uniform of
/// (seed, level, index); the children of (l, i) are (l+1, d*i + j).
class DisorderOracle {
 public:
  DisorderOracle(Model model, std::uint64_t seed) : model_(std::move(model)), seed_(seed), key_(mix_pair(seed, static_cast<std::uint64_t>(StreamTag::Disorder))) {}

  const Model& model() const noexcept { return model_; }
  const WeightLaw& law() const noexcept { return model_.law; }
  int d() const noexcept { return model_.d; }
  std::uint64_t seed() const noexcept { return seed_; }

  /// Uniform deviate behind vertex (level, index); no range check.
  double uniform(int level, std::uint64_t index) const noexcept {
    return to_unit(mix_pair(mix_pair(key_, static_cast<std::uint64_t>(level)), index));
  }

  /// Weight of vertex (level, index) without range checking.
  double weight(int level, std::uint64_t index) const { return sample(model_.law, uniform(level, index)); }

  /// Checked access: level >= 1 and index < d^level.
  double vertex_weight(int level, std::uint64_t index) const;

 private:
  Model model_;
  std::uint64_t seed_;
  std::uint64_t key_;
};

}  // namespace polymerlab
