#include "csca/ops.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <utility>

#include "csca/error.hpp"
#include "csca/kernels.hpp"

namespace csca {

namespace {

template <typename T>
using NodePtr = std::shared_ptr<detail::Node<T>>;

template <typename T>
using Adjoint = std::function<void(const detail::Node<T>&, std::span<const T>)>;

// Wraps freshly computed values in a tensor; attaches history only when some
// input tracks gradients.
template <typename T>
Tensor<T> make_result(Shape shape, std::vector<T> data, std::string op,
                      std::initializer_list<const Tensor<T>*> inputs, Adjoint<T> adjoint) {
  Tensor<T> out(std::move(shape), std::move(data));
  bool tracked = false;
  for (const auto* in : inputs) tracked = tracked || in->requires_grad();
  auto& node = *out.node();
  node.op = std::move(op);
  if (tracked) {
    node.requires_grad = true;
    for (const auto* in : inputs) node.inputs.push_back(in->node());
    node.adjoint = std::move(adjoint);
  }
  return out;
}

template <typename T>
std::span<T> grad_of(const NodePtr<T>& n) {
  if (!n->requires_grad) return {};
  n->ensure_grad();
  return n->grad;
}

template <typename T>
void require_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + to_string(a.shape()) + " vs " +
                         to_string(b.shape()));
  }
}

std::vector<std::size_t> row_major_strides(const Shape& shape) {
  std::vector<std::size_t> strides(shape.size(), 1);
  for (std::size_t i = shape.size(); i-- > 1;) strides[i - 1] = strides[i] * shape[i];
  return strides;
}

// Decomposes `shape` around `axis` into (outer, extent, inner) block sizes.
struct AxisBlocks {
  std::size_t outer = 1;
  std::size_t extent = 1;
  std::size_t inner = 1;
};

AxisBlocks blocks_around(const Shape& shape, std::size_t axis) {
  AxisBlocks b;
  for (std::size_t i = 0; i < axis; ++i) b.outer *= shape[i];
  b.extent = shape[axis];
  for (std::size_t i = axis + 1; i < shape.size(); ++i) b.inner *= shape[i];
  return b;
}

thread_local KinkPatternScope* t_kink_scope = nullptr;

}  // namespace

KinkPatternScope::KinkPatternScope() : previous_(t_kink_scope) { t_kink_scope = this; }
KinkPatternScope::~KinkPatternScope() { t_kink_scope = previous_; }

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.extent(1) != b.extent(0)) {
    throw DimensionError("matmul: incompatible shapes " + to_string(a.shape()) + " and " +
                         to_string(b.shape()));
  }
  const std::size_t m = a.extent(0), k = a.extent(1), p = b.extent(1);
  std::vector<T> out(m * p, T(0));
  kernels::gemm_nn<T>(m, k, p, a.data(), b.data(), out);
  return make_result<T>({m, p}, std::move(out), "matmul", {&a, &b},
                        [m, k, p](const detail::Node<T>& self, std::span<const T> g) {
                          const auto& an = self.inputs[0];
                          const auto& bn = self.inputs[1];
                          if (auto ga = grad_of<T>(an); !ga.empty()) {
                            kernels::gemm_nt<T>(m, p, k, g, bn->data, ga);
                          }
                          if (auto gb = grad_of<T>(bn); !gb.empty()) {
                            kernels::gemm_tn<T>(m, k, p, an->data, g, gb);
                          }
                        });
}

template <typename T>
Tensor<T> permute(const Tensor<T>& x, const std::vector<std::size_t>& perm) {
  const std::size_t r = x.rank();
  if (perm.size() != r) {
    throw DimensionError("permute: permutation of length " + std::to_string(perm.size()) +
                         " for shape " + to_string(x.shape()));
  }
  std::vector<bool> used(r, false);
  for (auto p : perm) {
    if (p >= r || used[p]) throw DimensionError("permute: invalid permutation for shape " + to_string(x.shape()));
    used[p] = true;
  }
  Shape out_shape(r);
  for (std::size_t i = 0; i < r; ++i) out_shape[i] = x.shape()[perm[i]];
  const auto in_strides = row_major_strides(x.shape());
  // Source index of every destination element.
  std::vector<std::size_t> src(x.numel());
  std::vector<std::size_t> counter(r, 0);
  for (std::size_t flat = 0; flat < src.size(); ++flat) {
    std::size_t s = 0;
    for (std::size_t i = 0; i < r; ++i) s += counter[i] * in_strides[perm[i]];
    src[flat] = s;
    for (std::size_t i = r; i-- > 0;) {
      if (++counter[i] < out_shape[i]) break;
      counter[i] = 0;
    }
  }
  const auto xd = x.data();
  std::vector<T> out(src.size());
  for (std::size_t i = 0; i < src.size(); ++i) out[i] = xd[src[i]];
  return make_result<T>(std::move(out_shape), std::move(out), "permute", {&x},
                        [src = std::move(src)](const detail::Node<T>& self, std::span<const T> g) {
                          auto gx = grad_of<T>(self.inputs[0]);
                          for (std::size_t i = 0; i < src.size(); ++i) gx[src[i]] += g[i];
                        });
}

template <typename T>
Tensor<T> transpose(const Tensor<T>& x) {
  if (x.rank() != 2) throw DimensionError("transpose: expected a matrix, got " + to_string(x.shape()));
  return permute(x, {1, 0});
}

template <typename T>
Tensor<T> reshape(const Tensor<T>& x, const Shape& shape) {
  if (numel(shape) != x.numel()) {
    throw DimensionError("reshape: cannot view " + to_string(x.shape()) + " as " + to_string(shape));
  }
  std::vector<T> out(x.data().begin(), x.data().end());
  return make_result<T>(shape, std::move(out), "reshape", {&x},
                        [](const detail::Node<T>& self, std::span<const T> g) {
                          auto gx = grad_of<T>(self.inputs[0]);
                          for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
                        });
}

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a, b, "add");
  std::vector<T> out(a.numel());
  const auto ad = a.data(), bd = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = ad[i] + bd[i];
  return make_result<T>(a.shape(), std::move(out), "add", {&a, &b},
                        [](const detail::Node<T>& self, std::span<const T> g) {
                          for (const auto& in : self.inputs) {
                            auto gi = grad_of<T>(in);
                            for (std::size_t i = 0; i < gi.size(); ++i) gi[i] += g[i];
                          }
                        });
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a, b, "sub");
  std::vector<T> out(a.numel());
  const auto ad = a.data(), bd = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = ad[i] - bd[i];
  return make_result<T>(a.shape(), std::move(out), "sub", {&a, &b},
                        [](const detail::Node<T>& self, std::span<const T> g) {
                          auto ga = grad_of<T>(self.inputs[0]);
                          for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g[i];
                          auto gb = grad_of<T>(self.inputs[1]);
                          for (std::size_t i = 0; i < gb.size(); ++i) gb[i] -= g[i];
                        });
}

template <typename T>
Tensor<T> hadamard(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a, b, "hadamard");
  std::vector<T> out(a.numel());
  const auto ad = a.data(), bd = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = ad[i] * bd[i];
  return make_result<T>(a.shape(), std::move(out), "hadamard", {&a, &b},
                        [](const detail::Node<T>& self, std::span<const T> g) {
                          const auto& an = self.inputs[0];
                          const auto& bn = self.inputs[1];
                          auto ga = grad_of<T>(an);
                          for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g[i] * bn->data[i];
                          auto gb = grad_of<T>(bn);
                          for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += g[i] * an->data[i];
                        });
}

template <typename T>
Tensor<T> scale(const Tensor<T>& x, T factor) {
  std::vector<T> out(x.numel());
  const auto xd = x.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = xd[i] * factor;
  return make_result<T>(x.shape(), std::move(out), "scale", {&x},
                        [factor](const detail::Node<T>& self, std::span<const T> g) {
                          auto gx = grad_of<T>(self.inputs[0]);
                          for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g[i] * factor;
                        });
}

template <typename T>
Tensor<T> relu(const Tensor<T>& x) {
  std::vector<T> out(x.numel());
  const auto xd = x.data();
  // NaN passes through so callers' finiteness checks still see it.
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = xd[i] < T(0) ? T(0) : xd[i];
  if (t_kink_scope)
    for (std::size_t i = 0; i < out.size(); ++i) t_kink_scope->fold(xd[i] > T(0));
  return make_result<T>(x.shape(), std::move(out), "relu", {&x},
                        [](const detail::Node<T>& self, std::span<const T> g) {
                          const auto& xn = self.inputs[0];
                          auto gx = grad_of<T>(xn);
                          for (std::size_t i = 0; i < gx.size(); ++i) {
                            if (xn->data[i] > T(0)) gx[i] += g[i];
                          }
                        });
}

template <typename T>
Tensor<T> sum(const Tensor<T>& x) {
  T total = T(0);
  for (auto v : x.data()) total += v;
  return make_result<T>({}, {total}, "sum", {&x},
                        [](const detail::Node<T>& self, std::span<const T> g) {
                          auto gx = grad_of<T>(self.inputs[0]);
                          for (auto& v : gx) v += g[0];
                        });
}

template <typename T>
Tensor<T> mean(const Tensor<T>& x) {
  T total = T(0);
  for (auto v : x.data()) total += v;
  const T n = static_cast<T>(x.numel());
  return make_result<T>({}, {total / n}, "mean", {&x},
                        [n](const detail::Node<T>& self, std::span<const T> g) {
                          auto gx = grad_of<T>(self.inputs[0]);
                          for (auto& v : gx) v += g[0] / n;
                        });
}

template <typename T>
Tensor<T> concat(const std::vector<Tensor<T>>& parts, std::size_t axis) {
  if (parts.empty()) throw ContractError("concat: no operands");
  const Shape& ref = parts.front().shape();
  if (axis >= ref.size()) throw DimensionError("concat: axis out of range for " + to_string(ref));
  Shape out_shape = ref;
  out_shape[axis] = 0;
  for (const auto& p : parts) {
    const auto& s = p.shape();
    bool ok = s.size() == ref.size();
    for (std::size_t i = 0; ok && i < s.size(); ++i) ok = i == axis || s[i] == ref[i];
    if (!ok) {
      throw DimensionError("concat: shape mismatch " + to_string(ref) + " vs " + to_string(s) +
                           " on axis " + std::to_string(axis));
    }
    out_shape[axis] += s[axis];
  }
  const auto ob = blocks_around(out_shape, axis);
  std::vector<T> out(numel(out_shape));
  std::vector<std::size_t> offsets;
  std::size_t offset = 0;
  for (const auto& p : parts) {
    offsets.push_back(offset);
    const std::size_t chunk = p.extent(axis) * ob.inner;
    const auto pd = p.data();
    for (std::size_t o = 0; o < ob.outer; ++o) {
      std::copy_n(pd.begin() + o * chunk, chunk, out.begin() + o * ob.extent * ob.inner + offset * ob.inner);
    }
    offset += p.extent(axis);
  }
  auto result = Tensor<T>(out_shape, std::move(out));
  bool tracked = false;
  for (const auto& p : parts) tracked = tracked || p.requires_grad();
  auto& node = *result.node();
  node.op = "concat";
  if (tracked) {
    node.requires_grad = true;
    for (const auto& p : parts) node.inputs.push_back(p.node());
    node.adjoint = [ob, offsets](const detail::Node<T>& self, std::span<const T> g) {
      for (std::size_t k = 0; k < self.inputs.size(); ++k) {
        auto gp = grad_of<T>(self.inputs[k]);
        if (gp.empty()) continue;
        const std::size_t chunk = gp.size() / ob.outer;
        for (std::size_t o = 0; o < ob.outer; ++o) {
          const T* src = g.data() + o * ob.extent * ob.inner + offsets[k] * ob.inner;
          T* dst = gp.data() + o * chunk;
          for (std::size_t i = 0; i < chunk; ++i) dst[i] += src[i];
        }
      }
    };
  }
  return result;
}

template <typename T>
Tensor<T> slice(const Tensor<T>& x, std::size_t axis, std::size_t begin, std::size_t end) {
  if (axis >= x.rank() || begin >= end || end > x.extent(axis)) {
    throw DimensionError("slice: range [" + std::to_string(begin) + "," + std::to_string(end) +
                         ") invalid on axis " + std::to_string(axis) + " of " + to_string(x.shape()));
  }
  const auto b = blocks_around(x.shape(), axis);
  Shape out_shape = x.shape();
  out_shape[axis] = end - begin;
  const std::size_t chunk = (end - begin) * b.inner;
  std::vector<T> out(b.outer * chunk);
  const auto xd = x.data();
  for (std::size_t o = 0; o < b.outer; ++o) {
    std::copy_n(xd.begin() + o * b.extent * b.inner + begin * b.inner, chunk, out.begin() + o * chunk);
  }
  return make_result<T>(std::move(out_shape), std::move(out), "slice", {&x},
                        [b, begin, chunk](const detail::Node<T>& self, std::span<const T> g) {
                          auto gx = grad_of<T>(self.inputs[0]);
                          for (std::size_t o = 0; o < b.outer; ++o) {
                            T* dst = gx.data() + o * b.extent * b.inner + begin * b.inner;
                            const T* src = g.data() + o * chunk;
                            for (std::size_t i = 0; i < chunk; ++i) dst[i] += src[i];
                          }
                        });
}

template <typename T>
Tensor<T> softmax(const Tensor<T>& x, std::size_t axis) {
  if (axis >= x.rank()) {
    throw DimensionError("softmax: axis " + std::to_string(axis) + " invalid for shape " + to_string(x.shape()));
  }
  const auto b = blocks_around(x.shape(), axis);
  const auto xd = x.data();
  std::vector<T> out(x.numel());
  for (std::size_t o = 0; o < b.outer; ++o) {
    for (std::size_t in = 0; in < b.inner; ++in) {
      const std::size_t base = o * b.extent * b.inner + in;
      T mx = xd[base];
      for (std::size_t e = 1; e < b.extent; ++e) mx = std::max(mx, xd[base + e * b.inner]);
      T total = T(0);
      for (std::size_t e = 0; e < b.extent; ++e) {
        const T v = std::exp(xd[base + e * b.inner] - mx);
        out[base + e * b.inner] = v;
        total += v;
      }
      const T inv = T(1) / total;
      for (std::size_t e = 0; e < b.extent; ++e) out[base + e * b.inner] *= inv;
    }
  }
  auto result = make_result<T>(x.shape(), std::move(out), "softmax", {&x}, {});
  if (result.requires_grad()) {
    // The adjoint reads the output values; capture them by value to avoid a
    // reference cycle through the node itself.
    std::vector<T> y(result.data().begin(), result.data().end());
    result.node()->adjoint = [b, y = std::move(y)](const detail::Node<T>& self, std::span<const T> g) {
      auto gx = grad_of<T>(self.inputs[0]);
      for (std::size_t o = 0; o < b.outer; ++o) {
        for (std::size_t in = 0; in < b.inner; ++in) {
          const std::size_t base = o * b.extent * b.inner + in;
          T dot = T(0);
          for (std::size_t e = 0; e < b.extent; ++e) dot += g[base + e * b.inner] * y[base + e * b.inner];
          for (std::size_t e = 0; e < b.extent; ++e) {
            const std::size_t i = base + e * b.inner;
            gx[i] += y[i] * (g[i] - dot);
          }
        }
      }
    };
  }
  return result;
}

template <typename T>
Tensor<T> conv1x1(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias) {
  if (x.rank() != 3 || weight.rank() != 2 || bias.rank() != 1 || weight.extent(1) != x.extent(0) ||
      bias.extent(0) != weight.extent(0)) {
    throw DimensionError("conv1x1: incompatible shapes x" + to_string(x.shape()) + " weight" +
                         to_string(weight.shape()) + " bias" + to_string(bias.shape()));
  }
  const std::size_t cin = x.extent(0), cout = weight.extent(0), hw = x.extent(1) * x.extent(2);
  std::vector<T> out(cout * hw);
  const auto bd = bias.data();
  for (std::size_t co = 0; co < cout; ++co) std::fill_n(out.begin() + co * hw, hw, bd[co]);
  // [C_out×C_in]·[C_in×HW]
  kernels::gemm_nn<T>(cout, cin, hw, weight.data(), x.data(), out);
  return make_result<T>({cout, x.extent(1), x.extent(2)}, std::move(out), "conv1x1", {&x, &weight, &bias},
                        [cin, cout, hw](const detail::Node<T>& self, std::span<const T> g) {
                          const auto& xn = self.inputs[0];
                          const auto& wn = self.inputs[1];
                          if (auto gx = grad_of<T>(xn); !gx.empty()) {
                            kernels::gemm_tn<T>(cout, cin, hw, wn->data, g, gx);
                          }
                          if (auto gw = grad_of<T>(wn); !gw.empty()) {
                            kernels::gemm_nt<T>(cout, hw, cin, g, xn->data, gw);
                          }
                          if (auto gb = grad_of<T>(self.inputs[2]); !gb.empty()) {
                            for (std::size_t co = 0; co < cout; ++co) {
                              T acc = T(0);
                              for (std::size_t i = 0; i < hw; ++i) acc += g[co * hw + i];
                              gb[co] += acc;
                            }
                          }
                        });
}

template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias, std::size_t stride) {
  if (x.rank() != 3 || weight.rank() != 4 || bias.rank() != 1 || weight.extent(1) != x.extent(0) ||
      weight.extent(2) != weight.extent(3) || bias.extent(0) != weight.extent(0) || stride == 0) {
    throw DimensionError("conv2d: incompatible shapes x" + to_string(x.shape()) + " weight" +
                         to_string(weight.shape()) + " bias" + to_string(bias.shape()));
  }
  const std::size_t cin = x.extent(0), h = x.extent(1), w = x.extent(2);
  const std::size_t cout = weight.extent(0), k = weight.extent(2);
  const auto pad = static_cast<std::ptrdiff_t>(k / 2);
  if (h + 2 * (k / 2) < k || w + 2 * (k / 2) < k) throw DimensionError("conv2d: kernel larger than padded input");
  const std::size_t oh = (h + 2 * (k / 2) - k) / stride + 1;
  const std::size_t ow = (w + 2 * (k / 2) - k) / stride + 1;

  struct Geometry {
    std::size_t cin, h, w, cout, k, oh, ow, stride;
    std::ptrdiff_t pad;
  };
  const Geometry geo{cin, h, w, cout, k, oh, ow, stride, pad};

  // Visits every (output, input, weight) index triple that contributes.
  auto for_each_tap = [geo](auto&& fn) {
    for (std::size_t co = 0; co < geo.cout; ++co) {
      for (std::size_t ci = 0; ci < geo.cin; ++ci) {
        for (std::size_t ky = 0; ky < geo.k; ++ky) {
          for (std::size_t kx = 0; kx < geo.k; ++kx) {
            const std::size_t widx = ((co * geo.cin + ci) * geo.k + ky) * geo.k + kx;
            for (std::size_t oy = 0; oy < geo.oh; ++oy) {
              const auto iy = static_cast<std::ptrdiff_t>(oy * geo.stride + ky) - geo.pad;
              if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(geo.h)) continue;
              const std::size_t obase = (co * geo.oh + oy) * geo.ow;
              const std::size_t ibase = (ci * geo.h + static_cast<std::size_t>(iy)) * geo.w;
              for (std::size_t ox = 0; ox < geo.ow; ++ox) {
                const auto ix = static_cast<std::ptrdiff_t>(ox * geo.stride + kx) - geo.pad;
                if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(geo.w)) continue;
                fn(obase + ox, ibase + static_cast<std::size_t>(ix), widx);
              }
            }
          }
        }
      }
    }
  };

  std::vector<T> out(cout * oh * ow);
  const auto xd = x.data(), wd = weight.data(), bd = bias.data();
  for (std::size_t co = 0; co < cout; ++co) std::fill_n(out.begin() + co * oh * ow, oh * ow, bd[co]);
  for_each_tap([&](std::size_t o, std::size_t i, std::size_t wi) { out[o] += wd[wi] * xd[i]; });

  return make_result<T>({cout, oh, ow}, std::move(out), "conv2d", {&x, &weight, &bias},
                        [geo, for_each_tap](const detail::Node<T>& self, std::span<const T> g) {
                          const auto& xn = self.inputs[0];
                          const auto& wn = self.inputs[1];
                          auto gx = grad_of<T>(xn);
                          auto gw = grad_of<T>(wn);
                          if (!gx.empty() && !gw.empty()) {
                            for_each_tap([&](std::size_t o, std::size_t i, std::size_t wi) {
                              gx[i] += wn->data[wi] * g[o];
                              gw[wi] += xn->data[i] * g[o];
                            });
                          } else if (!gx.empty()) {
                            for_each_tap([&](std::size_t o, std::size_t i, std::size_t wi) { gx[i] += wn->data[wi] * g[o]; });
                          } else if (!gw.empty()) {
                            for_each_tap([&](std::size_t o, std::size_t i, std::size_t wi) { gw[wi] += xn->data[i] * g[o]; });
                          }
                          if (auto gb = grad_of<T>(self.inputs[2]); !gb.empty()) {
                            const std::size_t plane = geo.oh * geo.ow;
                            for (std::size_t co = 0; co < geo.cout; ++co) {
                              T acc = T(0);
                              for (std::size_t i = 0; i < plane; ++i) acc += g[co * plane + i];
                              gb[co] += acc;
                            }
                          }
                        });
}

template <typename T>
Tensor<T> gather(const Tensor<T>& x, std::vector<std::size_t> index, const Shape& out_shape) {
  if (index.size() != numel(out_shape)) {
    throw DimensionError("gather: " + std::to_string(index.size()) + " indices for output shape " +
                         to_string(out_shape));
  }
  const auto xd = x.data();
  std::vector<T> out(index.size());
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (index[i] >= xd.size()) throw DimensionError("gather: index out of range for " + to_string(x.shape()));
    out[i] = xd[index[i]];
  }
  return make_result<T>(out_shape, std::move(out), "gather", {&x},
                        [index = std::move(index)](const detail::Node<T>& self, std::span<const T> g) {
                          auto gx = grad_of<T>(self.inputs[0]);
                          for (std::size_t i = 0; i < index.size(); ++i) gx[index[i]] += g[i];
                        });
}

template <typename T>
Tensor<T> mse_loss(const Tensor<T>& pred, const Tensor<T>& target) {
  require_same_shape(pred, target, "mse_loss");
  const auto diff = sub(pred, target);
  return mean(hadamard(diff, diff));
}

#define CSCA_INSTANTIATE_OPS(T)                                                                    \
  template Tensor<T> matmul(const Tensor<T>&, const Tensor<T>&);                                   \
  template Tensor<T> transpose(const Tensor<T>&);                                                  \
  template Tensor<T> permute(const Tensor<T>&, const std::vector<std::size_t>&);                   \
  template Tensor<T> reshape(const Tensor<T>&, const Shape&);                                      \
  template Tensor<T> add(const Tensor<T>&, const Tensor<T>&);                                      \
  template Tensor<T> sub(const Tensor<T>&, const Tensor<T>&);                                      \
  template Tensor<T> hadamard(const Tensor<T>&, const Tensor<T>&);                                 \
  template Tensor<T> scale(const Tensor<T>&, T);                                                   \
  template Tensor<T> relu(const Tensor<T>&);                                                       \
  template Tensor<T> sum(const Tensor<T>&);                                                        \
  template Tensor<T> mean(const Tensor<T>&);                                                       \
  template Tensor<T> concat(const std::vector<Tensor<T>>&, std::size_t);                           \
  template Tensor<T> slice(const Tensor<T>&, std::size_t, std::size_t, std::size_t);               \
  template Tensor<T> softmax(const Tensor<T>&, std::size_t);                                       \
  template Tensor<T> conv1x1(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);                \
  template Tensor<T> conv2d(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, std::size_t);    \
  template Tensor<T> gather(const Tensor<T>&, std::vector<std::size_t>, const Shape&);             \
  template Tensor<T> mse_loss(const Tensor<T>&, const Tensor<T>&);

CSCA_INSTANTIATE_OPS(float)
CSCA_INSTANTIATE_OPS(double)

#undef CSCA_INSTANTIATE_OPS

}  // namespace csca
