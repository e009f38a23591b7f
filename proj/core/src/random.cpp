#include "csca/random.hpp"

namespace csca {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// FNV-1a
std::uint64_t hash_name(std::string_view name) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : name) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

Rng substream(std::uint64_t seed, std::string_view name, std::uint64_t index) {
  const std::uint64_t mixed = splitmix64(splitmix64(seed) ^ hash_name(name) ^ splitmix64(index + 0x51));
  std::seed_seq seq{static_cast<std::uint32_t>(mixed), static_cast<std::uint32_t>(mixed >> 32)};
  return Rng(seq);
}

template <typename T>
Tensor<T> uniform_tensor(const Shape& shape, T low, T high, Rng& rng, bool requires_grad) {
  std::uniform_real_distribution<double> dist(static_cast<double>(low), static_cast<double>(high));
  std::vector<T> data(numel(shape));
  for (auto& v : data) v = static_cast<T>(dist(rng));
  return Tensor<T>(shape, std::move(data), requires_grad);
}

template <typename T>
Tensor<T> normal_tensor(const Shape& shape, T stddev, Rng& rng, bool requires_grad) {
  std::normal_distribution<double> dist(0.0, static_cast<double>(stddev));
  std::vector<T> data(numel(shape));
  for (auto& v : data) v = static_cast<T>(dist(rng));
  return Tensor<T>(shape, std::move(data), requires_grad);
}

template Tensor<float> uniform_tensor<float>(const Shape&, float, float, Rng&, bool);
template Tensor<double> uniform_tensor<double>(const Shape&, double, double, Rng&, bool);
template Tensor<float> normal_tensor<float>(const Shape&, float, Rng&, bool);
template Tensor<double> normal_tensor<double>(const Shape&, double, Rng&, bool);

}  // namespace csca
