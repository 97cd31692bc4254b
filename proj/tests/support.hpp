#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>

#include "polymerlab/disorder.hpp"

namespace testsupport {

// First seed whose disorder satisfies `want`; used to force small configurations.
inline std::uint64_t find_seed(const polymerlab::Model& m,
                               const std::function<bool(const polymerlab::DisorderOracle&)>& want) {
  for (std::uint64_t s = 0; s < 1000000; ++s)
    if (want(polymerlab::DisorderOracle(m, s))) return s;
  throw std::runtime_error("no seed found");
}

}  // namespace testsupport
