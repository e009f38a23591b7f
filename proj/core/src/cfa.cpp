#include "csca/cfa.hpp"

#include <cmath>

#include "csca/error.hpp"
#include "csca/ops.hpp"

namespace csca {

namespace {

void validate_reduction(std::size_t channels, std::size_t reduction) {
  if (channels == 0 || reduction == 0 || (2 * channels) % reduction != 0) {
    throw ConfigError("CFA: 2C=" + std::to_string(2 * channels) + " is not divisible by r=" +
                      std::to_string(reduction));
  }
}

template <typename T>
const Tensor<T>& find_named(const io::NamedTensors<T>& tensors, const std::string& name) {
  for (const auto& [n, t] : tensors) {
    if (n == name) return t;
  }
  throw IoError("missing tensor '" + name + "'");
}

}  // namespace

template <typename T>
CfaWeights<T> CfaWeights<T>::init(std::size_t channels, std::size_t reduction, Rng& rng, bool requires_grad) {
  validate_reduction(channels, reduction);
  const std::size_t wide = 2 * channels, hidden = wide / reduction;
  const T bound1 = static_cast<T>(std::sqrt(1.0 / static_cast<double>(wide)));
  const T bound2 = static_cast<T>(std::sqrt(1.0 / static_cast<double>(hidden)));
  CfaWeights w;
  w.w1 = uniform_tensor<T>({hidden, wide}, -bound1, bound1, rng, requires_grad);
  w.b1 = Tensor<T>::zeros({hidden}, requires_grad);
  w.w2 = uniform_tensor<T>({wide, hidden}, -bound2, bound2, rng, requires_grad);
  w.b2 = Tensor<T>::zeros({wide}, requires_grad);
  w.reduction = reduction;
  return w;
}

template <typename T>
CfaWeights<T> CfaWeights<T>::zeros(std::size_t channels, std::size_t reduction, bool requires_grad) {
  validate_reduction(channels, reduction);
  const std::size_t wide = 2 * channels, hidden = wide / reduction;
  CfaWeights w;
  w.w1 = Tensor<T>::zeros({hidden, wide}, requires_grad);
  w.b1 = Tensor<T>::zeros({hidden}, requires_grad);
  w.w2 = Tensor<T>::zeros({wide, hidden}, requires_grad);
  w.b2 = Tensor<T>::zeros({wide}, requires_grad);
  w.reduction = reduction;
  return w;
}

template <typename T>
io::NamedTensors<T> CfaWeights<T>::named(const std::string& prefix) const {
  return {{prefix + "w1", w1}, {prefix + "b1", b1}, {prefix + "w2", w2}, {prefix + "b2", b2}};
}

template <typename T>
CfaWeights<T> CfaWeights<T>::from_named(const io::NamedTensors<T>& tensors, const std::string& prefix,
                                        std::size_t reduction) {
  CfaWeights w;
  w.w1 = find_named(tensors, prefix + "w1");
  w.b1 = find_named(tensors, prefix + "b1");
  w.w2 = find_named(tensors, prefix + "w2");
  w.b2 = find_named(tensors, prefix + "b2");
  w.reduction = reduction;
  validate_reduction(w.channels(), reduction);
  if (w.w1.extent(0) != 2 * w.channels() / reduction || w.w2.shape() != Shape{w.w1.extent(1), w.w1.extent(0)}) {
    throw ConfigError("inconsistent CFA shapes under '" + prefix + "'");
  }
  return w;
}

template <typename T>
std::vector<Tensor<T>> CfaWeights<T>::parameters() const {
  return {w1, b1, w2, b2};
}

template <typename T>
CfaOutput<T> cfa_forward(const Tensor<T>& z_a, const Tensor<T>& z_b, const Tensor<T>& feat_a,
                         const Tensor<T>& feat_b, const CfaWeights<T>& weights) {
  if (z_a.rank() != 3 || z_a.shape() != z_b.shape() || feat_a.shape() != z_a.shape() ||
      feat_b.shape() != z_a.shape()) {
    throw DimensionError("cfa_forward: shape mismatch " + to_string(z_a.shape()) + " vs " + to_string(z_b.shape()));
  }
  const std::size_t c = z_a.extent(0), h = z_a.extent(1), w = z_a.extent(2);
  validate_reduction(c, weights.reduction);
  if (weights.channels() != c) {
    throw DimensionError("cfa_forward: weights expect C=" + std::to_string(weights.channels()) + ", input is " +
                         to_string(z_a.shape()));
  }
  const auto fused = concat<T>({z_a, z_b}, 0);
  const auto hidden = relu(conv1x1(fused, weights.w1, weights.b1));
  const auto logits = reshape(conv1x1(hidden, weights.w2, weights.b2), {2, c, h, w});
  const auto pair = softmax(logits, 0);
  auto w_a = reshape(slice(pair, 0, 0, 1), {c, h, w});
  auto w_b = reshape(slice(pair, 0, 1, 2), {c, h, w});
  // w_a ⊙ a + w_b ⊙ b written as b + w_a ⊙ (a − b), using w_b = 1 − w_a; this
  // form returns b bit-exactly when a == b.
  auto f_agg = add(feat_b, hadamard(w_a, sub(feat_a, feat_b)));
  return {f_agg, {w_a, w_b}};
}

template <typename T>
CfaOutput<T> cfa_forward(const Tensor<T>& z_a, const Tensor<T>& z_b, const CfaWeights<T>& weights) {
  return cfa_forward(z_a, z_b, z_a, z_b, weights);
}

template <typename T>
Tensor<T> propagate_update(const Tensor<T>& f_agg, const Tensor<T>& f_modality) {
  if (f_agg.shape() != f_modality.shape()) {
    throw DimensionError("propagate_update: shape mismatch " + to_string(f_agg.shape()) + " vs " +
                         to_string(f_modality.shape()));
  }
  return scale(add(f_agg, f_modality), T(0.5));
}

template struct CfaWeights<float>;
template struct CfaWeights<double>;
template CfaOutput<float> cfa_forward(const Tensor<float>&, const Tensor<float>&, const CfaWeights<float>&);
template CfaOutput<double> cfa_forward(const Tensor<double>&, const Tensor<double>&, const CfaWeights<double>&);
template CfaOutput<float> cfa_forward(const Tensor<float>&, const Tensor<float>&, const Tensor<float>&,
                                      const Tensor<float>&, const CfaWeights<float>&);
template CfaOutput<double> cfa_forward(const Tensor<double>&, const Tensor<double>&, const Tensor<double>&,
                                       const Tensor<double>&, const CfaWeights<double>&);
template Tensor<float> propagate_update(const Tensor<float>&, const Tensor<float>&);
template Tensor<double> propagate_update(const Tensor<double>&, const Tensor<double>&);

}  // namespace csca
