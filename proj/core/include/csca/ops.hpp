#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "csca/tensor.hpp"

// Differentiable operations. None of them broadcast: operand shapes must
// match exactly (concat excepts its joined axis). Every op records its adjoint
// when any input requires gradients; otherwise no graph is retained.
namespace csca {

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b);

// 2-D transpose, materialized.
template <typename T>
Tensor<T> transpose(const Tensor<T>& x);

template <typename T>
Tensor<T> permute(const Tensor<T>& x, const std::vector<std::size_t>& perm);

template <typename T>
Tensor<T> reshape(const Tensor<T>& x, const Shape& shape);

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b);

template <typename T>
Tensor<T> hadamard(const Tensor<T>& a, const Tensor<T>& b);

template <typename T>
Tensor<T> scale(const Tensor<T>& x, T factor);

template <typename T>
Tensor<T> relu(const Tensor<T>& x);

// While alive on the current thread, every relu forward folds its activation
// pattern (which inputs are > 0) into `signature()`. Two evaluations with equal
// signatures took the same branch at every kink.
class KinkPatternScope {
 public:
  KinkPatternScope();
  ~KinkPatternScope();
  KinkPatternScope(const KinkPatternScope&) = delete;
  KinkPatternScope& operator=(const KinkPatternScope&) = delete;

  std::uint64_t signature() const { return hash_; }
  void reset() { hash_ = 0xcbf29ce484222325ULL; }
  void fold(bool active) { hash_ = (hash_ ^ (active ? 0x9eULL : 0x37ULL)) * 0x100000001b3ULL; }

 private:
  std::uint64_t hash_ = 0xcbf29ce484222325ULL;
  KinkPatternScope* previous_;
};

// Full reductions to a rank-0 tensor.
template <typename T>
Tensor<T> sum(const Tensor<T>& x);

template <typename T>
Tensor<T> mean(const Tensor<T>& x);

template <typename T>
Tensor<T> concat(const std::vector<Tensor<T>>& parts, std::size_t axis);

// Half-open range [begin, end) along `axis`.
template <typename T>
Tensor<T> slice(const Tensor<T>& x, std::size_t axis, std::size_t begin, std::size_t end);

// Numerically stable (max-subtracted) softmax along `axis`.
template <typename T>
Tensor<T> softmax(const Tensor<T>& x, std::size_t axis);

// x[C_in×H×W], weight[C_out×C_in], bias[C_out] -> [C_out×H×W]
template <typename T>
Tensor<T> conv1x1(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias);

// Square-kernel convolution with zero padding k/2.
// x[C_in×H×W], weight[C_out×C_in×k×k], bias[C_out] -> [C_out×H'×W'],
// H' = (H + 2·(k/2) − k)/stride + 1.
template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias,
                 std::size_t stride);

// out.flat[i] = x.flat[index[i]]; `index` must be a permutation-like map into
// x (repeats allowed; the adjoint scatter-adds).
template <typename T>
Tensor<T> gather(const Tensor<T>& x, std::vector<std::size_t> index, const Shape& out_shape);

// mean((pred − target)²)
template <typename T>
Tensor<T> mse_loss(const Tensor<T>& pred, const Tensor<T>& target);

}  // namespace csca
