#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

#include "csca/tensor.hpp"

namespace csca {

using Rng = std::mt19937_64;

// Derives an independent generator for a named purpose ("data", "init",
// "partition", ...) from one user seed, so paired runs share each stream.
Rng substream(std::uint64_t seed, std::string_view name, std::uint64_t index = 0);

template <typename T>
Tensor<T> uniform_tensor(const Shape& shape, T low, T high, Rng& rng, bool requires_grad = false);

template <typename T>
Tensor<T> normal_tensor(const Shape& shape, T stddev, Rng& rng, bool requires_grad = false);

}  // namespace csca
