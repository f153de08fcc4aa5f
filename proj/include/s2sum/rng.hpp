// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace s2sum {

/// mt19937_64 with hand-derived uniforms; std distributions are
/// implementation-defined and would break cross-platform reproducibility.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);
  std::uint64_t next();
  /// Uniform in [0, 1).
  double uniform();
  /// Uniform integer in [0, n).
  std::size_t below(std::size_t n);

 private:
  std::mt19937_64 engine_;
};

/// Fisher-Yates shuffle of 0..n-1 driven by `rng`.
std::vector<std::size_t> shuffled_indices(std::size_t n, Rng& rng);

}  // namespace s2sum
