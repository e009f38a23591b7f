#include "csca/metrics.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "csca/error.hpp"

namespace csca::metrics {

namespace {

struct Plane {
  std::size_t height;
  std::size_t width;
};

template <typename T>
Plane plane_of(const Tensor<T>& d) {
  const auto& s = d.shape();
  if (s.size() == 2) return {s[0], s[1]};
  if (s.size() == 3 && s[0] == 1) return {s[1], s[2]};
  throw DimensionError("density map must be H×W or 1×H×W, got " + to_string(s));
}

template <typename T>
double region_sum(std::span<const T> values, std::size_t width, std::size_t y0, std::size_t y1, std::size_t x0,
                  std::size_t x1) {
  double total = 0.0;
  for (std::size_t y = y0; y < y1; ++y) {
    for (std::size_t x = x0; x < x1; ++x) total += static_cast<double>(values[y * width + x]);
  }
  return total;
}

// Boundary k of `parts` cells over `extent` sits at floor(k·extent/parts), so
// level L+1 boundaries always contain the level L ones.
std::vector<std::size_t> cuts(std::size_t extent, std::size_t parts) {
  std::vector<std::size_t> c(parts + 1);
  for (std::size_t i = 0; i <= parts; ++i) c[i] = i * extent / parts;
  return c;
}

template <typename T>
void check_pairs(std::span<const Tensor<T>> preds, std::span<const Tensor<T>> gts) {
  if (preds.empty() || preds.size() != gts.size()) {
    throw ContractError("metrics need equally many predictions and ground truths (at least one), got " +
                        std::to_string(preds.size()) + " and " + std::to_string(gts.size()));
  }
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const auto p = plane_of(preds[i]);
    const auto g = plane_of(gts[i]);
    if (p.height != g.height || p.width != g.width) {
      throw ContractError("prediction " + std::to_string(i) + " has shape " + to_string(preds[i].shape()) +
                          ", ground truth " + to_string(gts[i].shape()));
    }
  }
}

}  // namespace

template <typename T>
double count_of(const Tensor<T>& density) {
  const auto p = plane_of(density);
  return region_sum(density.data(), p.width, 0, p.height, 0, p.width);
}

template <typename T>
std::vector<double> region_counts(const Tensor<T>& density, unsigned level) {
  const auto p = plane_of(density);
  const std::size_t parts = std::size_t{1} << level;
  const auto ys = cuts(p.height, parts);
  const auto xs = cuts(p.width, parts);
  std::vector<double> out;
  out.reserve(parts * parts);
  for (std::size_t r = 0; r < parts; ++r) {
    for (std::size_t c = 0; c < parts; ++c) out.push_back(region_sum(density.data(), p.width, ys[r], ys[r + 1], xs[c], xs[c + 1]));
  }
  return out;
}

template <typename T>
double game(std::span<const Tensor<T>> preds, std::span<const Tensor<T>> gts, unsigned level) {
  check_pairs(preds, gts);
  if (level > 16) throw ContractError("GAME level too large: " + std::to_string(level));
  double total = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const auto pr = region_counts(preds[i], level);
    const auto gr = region_counts(gts[i], level);
    double err = 0.0;
    for (std::size_t r = 0; r < pr.size(); ++r) err += std::abs(pr[r] - gr[r]);
    total += err;
  }
  return total / static_cast<double>(preds.size());
}

template <typename T>
double mae(std::span<const Tensor<T>> preds, std::span<const Tensor<T>> gts) {
  check_pairs(preds, gts);
  double total = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) total += std::abs(count_of(preds[i]) - count_of(gts[i]));
  return total / static_cast<double>(preds.size());
}

template <typename T>
double rmse(std::span<const Tensor<T>> preds, std::span<const Tensor<T>> gts) {
  check_pairs(preds, gts);
  double total = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const double d = count_of(preds[i]) - count_of(gts[i]);
    total += d * d;
  }
  return std::sqrt(total / static_cast<double>(preds.size()));
}

template double count_of(const Tensor<float>&);
template double count_of(const Tensor<double>&);
template std::vector<double> region_counts(const Tensor<float>&, unsigned);
template std::vector<double> region_counts(const Tensor<double>&, unsigned);
template double game(std::span<const Tensor<float>>, std::span<const Tensor<float>>, unsigned);
template double game(std::span<const Tensor<double>>, std::span<const Tensor<double>>, unsigned);
template double mae(std::span<const Tensor<float>>, std::span<const Tensor<float>>);
template double mae(std::span<const Tensor<double>>, std::span<const Tensor<double>>);
template double rmse(std::span<const Tensor<float>>, std::span<const Tensor<float>>);
template double rmse(std::span<const Tensor<double>>, std::span<const Tensor<double>>);

}  // namespace csca::metrics
