#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "csca/tensor.hpp"

// Counting-error metrics over density maps. A density map is an H×W tensor
// (a leading singleton channel, 1×H×W, is also accepted); its count is the
// sum of its values. All accumulation is in double precision.
namespace csca::metrics {

template <typename T>
double count_of(const Tensor<T>& density);

// Grid Average Mean absolute Error: each map is split into a 2^L × 2^L grid
// of regions (boundary k at floor(k·extent/2^L), so every level refines the
// previous one), the absolute count error is summed over regions and averaged over
// images. GAME(0) is the MAE.
template <typename T>
double game(std::span<const Tensor<T>> preds, std::span<const Tensor<T>> gts, unsigned level);

template <typename T>
double mae(std::span<const Tensor<T>> preds, std::span<const Tensor<T>> gts);

template <typename T>
double rmse(std::span<const Tensor<T>> preds, std::span<const Tensor<T>> gts);

// Counts per region, row-major over the 2^L × 2^L grid.
template <typename T>
std::vector<double> region_counts(const Tensor<T>& density, unsigned level);

}  // namespace csca::metrics
