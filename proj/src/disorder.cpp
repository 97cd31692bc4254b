#include "polymerlab/disorder.hpp"

#include <string>

#include "polymerlab/error.hpp"

namespace polymerlab {

std::uint64_t level_size(int d, int level) {
  if (level < 0) throw DomainError("level must be >= 0");
  std::uint64_t n = 1;
  for (int k = 0; k < level; ++k) {
    if (n > UINT64_MAX / static_cast<std::uint64_t>(d))
      throw ResourceError("d^level overflows 64-bit vertex indices",
                          "d=" + std::to_string(d) + " level=" + std::to_string(level));
    n *= static_cast<std::uint64_t>(d);
  }
  return n;
}

double DisorderOracle::vertex_weight(int level, std::uint64_t index) const {
  if (level < 1) throw DomainError("vertex level must be >= 1", "level=" + std::to_string(level));
  if (index >= level_size(d(), level))
    throw DomainError("vertex index out of range",
                      "level=" + std::to_string(level) + " index=" + std::to_string(index));
  return weight(level, index);
}

}  // namespace polymerlab
