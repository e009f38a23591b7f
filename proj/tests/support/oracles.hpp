#pragma once

// Scalar reference implementations written straight from the definitions,
// sharing no code with the library beyond reading tensor values.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "csca/attention.hpp"
#include "csca/cfa.hpp"
#include "csca/tensor.hpp"

namespace oracle {

using Mat = std::vector<std::vector<double>>;

template <typename T>
double at2(const csca::Tensor<T>& t, std::size_t i, std::size_t j) {
  return static_cast<double>(t.data()[i * t.extent(1) + j]);
}

// 1×1 projection of a C×H×W map into an N×Cout matrix (row = spatial index).
template <typename T>
Mat project(const csca::Tensor<T>& x, const csca::Tensor<T>& w, const csca::Tensor<T>& b) {
  const std::size_t c_in = x.extent(0), n = x.extent(1) * x.extent(2), c_out = w.extent(0);
  Mat out(n, std::vector<double>(c_out, 0.0));
  for (std::size_t p = 0; p < n; ++p) {
    for (std::size_t o = 0; o < c_out; ++o) {
      double acc = static_cast<double>(b.data()[o]);
      for (std::size_t c = 0; c < c_in; ++c) acc += at2(w, o, c) * static_cast<double>(x.data()[c * n + p]);
      out[p][o] = acc;
    }
  }
  return out;
}

// out[i] = sum_j softmax_j(scale · q_i·k_j) v_j, three nested loops.
inline Mat attend(const Mat& q, const Mat& k, const Mat& v, double scale) {
  const std::size_t n = q.size(), m = k.size(), d = q[0].size(), e = v[0].size();
  Mat out(n, std::vector<double>(e, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> logits(m);
    for (std::size_t j = 0; j < m; ++j) {
      double dot = 0.0;
      for (std::size_t c = 0; c < d; ++c) dot += q[i][c] * k[j][c];
      logits[j] = scale * dot;
    }
    const double mx = *std::max_element(logits.begin(), logits.end());
    double z = 0.0;
    for (auto& l : logits) z += (l = std::exp(l - mx));
    for (std::size_t j = 0; j < m; ++j) {
      for (std::size_t c = 0; c < e; ++c) out[i][c] += logits[j] / z * v[j][c];
    }
  }
  return out;
}

// Output projection of an N×C′ attention result back to C×H×W, plus residual.
template <typename T>
std::vector<double> unproject(const Mat& z, const csca::Tensor<T>& w_out, const csca::Tensor<T>& b_out,
                              const csca::Tensor<T>* residual) {
  const std::size_t n = z.size(), c_out = w_out.extent(0), c_in = w_out.extent(1);
  std::vector<double> out(c_out * n);
  for (std::size_t o = 0; o < c_out; ++o) {
    for (std::size_t p = 0; p < n; ++p) {
      double acc = static_cast<double>(b_out.data()[o]);
      for (std::size_t c = 0; c < c_in; ++c) acc += at2(w_out, o, c) * z[p][c];
      if (residual) acc += static_cast<double>(residual->data()[o * n + p]);
      out[o * n + p] = acc;
    }
  }
  return out;
}

template <typename T>
std::vector<double> nonlocal(const csca::Tensor<T>& x, const csca::ProjectionSet<T>& p, bool residual) {
  const auto q = project(x, p.w_q, p.b_q);
  const auto k = project(x, p.w_k, p.b_k);
  const auto v = project(x, p.w_v, p.b_v);
  return unproject(attend(q, k, v, 1.0), p.w_out, p.b_out, residual ? &x : nullptr);
}

// Cross-modal attention without any re-assembly: keys and values from `kv`,
// query from `query_src`, logits scaled by 1/sqrt(C′).
template <typename T>
std::vector<double> dense_cross(const csca::Tensor<T>& kv, const csca::ProjectionSet<T>& p_kv,
                                const csca::Tensor<T>& query_src, const csca::ProjectionSet<T>& p_query,
                                bool residual) {
  const auto q = project(query_src, p_query.w_q, p_query.b_q);
  const auto k = project(kv, p_kv.w_k, p_kv.b_k);
  const auto v = project(kv, p_kv.w_v, p_kv.b_v);
  const double scale = 1.0 / std::sqrt(static_cast<double>(q[0].size()));
  return unproject(attend(q, k, v, scale), p_kv.w_out, p_kv.b_out, residual ? &kv : nullptr);
}

struct CfaResult {
  std::vector<double> f_agg, w_a, w_b;
};

// Per-position literal evaluation: concat, two-layer MLP with ReLU, pairwise
// softmax per channel, convex combination.
template <typename T>
CfaResult cfa(const csca::Tensor<T>& z_a, const csca::Tensor<T>& z_b, const csca::CfaWeights<T>& w) {
  const std::size_t c = z_a.extent(0), n = z_a.extent(1) * z_a.extent(2);
  const std::size_t hidden = w.w1.extent(0);
  CfaResult r{std::vector<double>(c * n), std::vector<double>(c * n), std::vector<double>(c * n)};
  for (std::size_t p = 0; p < n; ++p) {
    std::vector<double> fc(2 * c);
    for (std::size_t i = 0; i < c; ++i) {
      fc[i] = static_cast<double>(z_a.data()[i * n + p]);
      fc[c + i] = static_cast<double>(z_b.data()[i * n + p]);
    }
    std::vector<double> h(hidden);
    for (std::size_t j = 0; j < hidden; ++j) {
      double acc = static_cast<double>(w.b1.data()[j]);
      for (std::size_t i = 0; i < 2 * c; ++i) acc += at2(w.w1, j, i) * fc[i];
      h[j] = std::max(acc, 0.0);
    }
    std::vector<double> logit(2 * c);
    for (std::size_t i = 0; i < 2 * c; ++i) {
      double acc = static_cast<double>(w.b2.data()[i]);
      for (std::size_t j = 0; j < hidden; ++j) acc += at2(w.w2, i, j) * h[j];
      logit[i] = acc;
    }
    for (std::size_t i = 0; i < c; ++i) {
      const double la = logit[i], lb = logit[c + i], mx = std::max(la, lb);
      const double ea = std::exp(la - mx), eb = std::exp(lb - mx);
      const double wa = ea / (ea + eb), wb = eb / (ea + eb);
      r.w_a[i * n + p] = wa;
      r.w_b[i * n + p] = wb;
      r.f_agg[i * n + p] = wa * fc[i] + wb * fc[c + i];
    }
  }
  return r;
}

template <typename T>
double max_abs_diff(std::span<const T> a, const std::vector<double>& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < b.size(); ++i) worst = std::max(worst, std::abs(static_cast<double>(a[i]) - b[i]));
  return worst;
}

}  // namespace oracle
