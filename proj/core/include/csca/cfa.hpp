#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "csca/random.hpp"
#include "csca/serialize.hpp"
#include "csca/tensor.hpp"

namespace csca {

// Per-pixel bottleneck MLP over the concatenated modality streams:
// 2C -> 2C/r -> 2C with ReLU in between.
template <typename T>
struct CfaWeights {
  Tensor<T> w1, b1;  // [(2C/r)×2C], [2C/r]
  Tensor<T> w2, b2;  // [2C×(2C/r)], [2C]
  std::size_t reduction = 4;

  std::size_t channels() const { return w1.extent(1) / 2; }

  // Throws ConfigError when 2C is not divisible by r.
  static CfaWeights init(std::size_t channels, std::size_t reduction, Rng& rng, bool requires_grad = false);
  static CfaWeights zeros(std::size_t channels, std::size_t reduction, bool requires_grad = false);

  io::NamedTensors<T> named(const std::string& prefix) const;
  static CfaWeights from_named(const io::NamedTensors<T>& tensors, const std::string& prefix, std::size_t reduction);
  std::vector<Tensor<T>> parameters() const;
};

template <typename T>
struct ModalityWeightPair {
  Tensor<T> w_a;
  Tensor<T> w_b;
};

template <typename T>
struct CfaOutput {
  Tensor<T> f_agg;
  ModalityWeightPair<T> weights;
};

// Modality weights are a softmax over the pair {logit[c], logit[C + c]} at
// every (c, h, w), so w_a + w_b = 1; f_agg = w_a ⊙ z_a + w_b ⊙ z_b.
template <typename T>
CfaOutput<T> cfa_forward(const Tensor<T>& z_a, const Tensor<T>& z_b, const CfaWeights<T>& weights);

// Same weights (computed from z_a, z_b) applied to a different pair of
// features, e.g. the raw backbone features of each modality.
template <typename T>
CfaOutput<T> cfa_forward(const Tensor<T>& z_a, const Tensor<T>& z_b, const Tensor<T>& feat_a,
                         const Tensor<T>& feat_b, const CfaWeights<T>& weights);

// (f_agg + f_modality) / 2
template <typename T>
Tensor<T> propagate_update(const Tensor<T>& f_agg, const Tensor<T>& f_modality);

}  // namespace csca
