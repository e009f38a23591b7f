#include "csca/attention.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "csca/error.hpp"
#include "csca/ops.hpp"

namespace csca {

FlopLedger& FlopLedger::operator+=(const FlopLedger& other) {
  attention_mults += other.attention_mults;
  directions += other.directions;
  projection_mults += other.projection_mults;
  return *this;
}

namespace {

template <typename T>
Tensor<T> init_weight(std::size_t out, std::size_t in, Rng& rng, bool requires_grad) {
  const T bound = static_cast<T>(std::sqrt(1.0 / static_cast<double>(in)));
  return uniform_tensor<T>({out, in}, -bound, bound, rng, requires_grad);
}

template <typename T>
const Tensor<T>& find_named(const io::NamedTensors<T>& tensors, const std::string& name) {
  for (const auto& [n, t] : tensors) {
    if (n == name) return t;
  }
  throw IoError("missing tensor '" + name + "'");
}

std::uint64_t conv_macs(std::size_t cout, std::size_t cin, std::size_t positions) {
  return static_cast<std::uint64_t>(cout) * cin * positions;
}

std::uint64_t matmul_macs(std::size_t m, std::size_t k, std::size_t p) {
  return static_cast<std::uint64_t>(m) * k * p;
}

void require_feature_map(const Shape& s, const char* who) {
  if (s.size() != 3) throw DimensionError(std::string(who) + ": expected C×H×W input, got " + to_string(s));
}

// [C′×H×W] -> [N×C′]
template <typename T>
Tensor<T> flatten_positions(const Tensor<T>& x) {
  const std::size_t c = x.extent(0), n = x.extent(1) * x.extent(2);
  return transpose(reshape(x, {c, n}));
}

// [N×C′] -> [C′×H×W]
template <typename T>
Tensor<T> unflatten_positions(const Tensor<T>& x, std::size_t h, std::size_t w) {
  return reshape(transpose(x), {x.extent(1), h, w});
}

template <typename T>
Tensor<T> project(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b, FlopLedger& ledger) {
  ledger.projection_mults += conv_macs(w.extent(0), w.extent(1), x.extent(1) * x.extent(2));
  return conv1x1(x, w, b);
}

// softmax(q·kᵀ·scale)·v, counting both matmuls as one attention direction.
template <typename T>
Tensor<T> attend(const Tensor<T>& q, const Tensor<T>& k, const Tensor<T>& v, T logit_scale, bool scaled,
                 FlopLedger& ledger) {
  auto logits = matmul(q, transpose(k));
  ledger.attention_mults += matmul_macs(q.extent(0), q.extent(1), k.extent(0));
  if (scaled) logits = scale(logits, logit_scale);
  const auto weights = softmax(logits, 1);
  auto z = matmul(weights, v);
  ledger.attention_mults += matmul_macs(weights.extent(0), weights.extent(1), v.extent(1));
  ledger.directions += 1;
  return z;
}

void validate_grouping(std::size_t positions, std::size_t groups) {
  if (groups == 0) throw ConfigError("group factor must be positive");
  if (positions % groups != 0) {
    throw ConfigError("spatial size N=" + std::to_string(positions) + " is not divisible by G=" +
                      std::to_string(groups));
  }
}

}  // namespace

template <typename T>
ProjectionSet<T> ProjectionSet<T>::init(std::size_t channels, Rng& rng, bool requires_grad) {
  if (channels == 0 || channels % 2 != 0) {
    throw ConfigError("attention channels must be even, got C=" + std::to_string(channels));
  }
  const std::size_t e = channels / 2;
  ProjectionSet p;
  p.w_q = init_weight<T>(e, channels, rng, requires_grad);
  p.b_q = Tensor<T>::zeros({e}, requires_grad);
  p.w_k = init_weight<T>(e, channels, rng, requires_grad);
  p.b_k = Tensor<T>::zeros({e}, requires_grad);
  p.w_v = init_weight<T>(e, channels, rng, requires_grad);
  p.b_v = Tensor<T>::zeros({e}, requires_grad);
  p.w_out = init_weight<T>(channels, e, rng, requires_grad);
  p.b_out = Tensor<T>::zeros({channels}, requires_grad);
  return p;
}

template <typename T>
io::NamedTensors<T> ProjectionSet<T>::named(const std::string& prefix) const {
  return {{prefix + "w_q", w_q},     {prefix + "b_q", b_q},    {prefix + "w_k", w_k},
          {prefix + "b_k", b_k},     {prefix + "w_v", w_v},    {prefix + "b_v", b_v},
          {prefix + "w_out", w_out}, {prefix + "b_out", b_out}};
}

template <typename T>
ProjectionSet<T> ProjectionSet<T>::from_named(const io::NamedTensors<T>& tensors, const std::string& prefix) {
  ProjectionSet p;
  p.w_q = find_named(tensors, prefix + "w_q");
  p.b_q = find_named(tensors, prefix + "b_q");
  p.w_k = find_named(tensors, prefix + "w_k");
  p.b_k = find_named(tensors, prefix + "b_k");
  p.w_v = find_named(tensors, prefix + "w_v");
  p.b_v = find_named(tensors, prefix + "b_v");
  p.w_out = find_named(tensors, prefix + "w_out");
  p.b_out = find_named(tensors, prefix + "b_out");
  const std::size_t c = p.w_q.extent(1);
  if (c % 2 != 0 || p.w_q.extent(0) != c / 2 || p.w_k.shape() != p.w_q.shape() ||
      p.w_v.shape() != p.w_q.shape() || p.w_out.shape() != Shape{c, c / 2}) {
    throw ConfigError("inconsistent projection shapes under '" + prefix + "'");
  }
  return p;
}

template <typename T>
std::vector<Tensor<T>> ProjectionSet<T>::parameters() const {
  return {w_q, b_q, w_k, b_k, w_v, b_v, w_out, b_out};
}

template <typename T>
NonLocalOutput<T> nonlocal_forward(const Tensor<T>& x, const ProjectionSet<T>& proj, const NonLocalConfig& cfg) {
  require_feature_map(x.shape(), "nonlocal_forward");
  const std::size_t c = x.extent(0), h = x.extent(1), w = x.extent(2);
  if (c % 2 != 0) throw ConfigError("nonlocal_forward: channels must be even, got C=" + std::to_string(c));
  if (proj.channels() != c) {
    throw DimensionError("nonlocal_forward: projections expect C=" + std::to_string(proj.channels()) +
                         ", input is " + to_string(x.shape()));
  }
  FlopLedger ledger;
  const auto q = flatten_positions(project(x, proj.w_q, proj.b_q, ledger));
  const auto k = flatten_positions(project(x, proj.w_k, proj.b_k, ledger));
  const auto v = flatten_positions(project(x, proj.w_v, proj.b_v, ledger));
  const auto z = attend(q, k, v, T(1), false, ledger);
  auto out = project(unflatten_positions(z, h, w), proj.w_out, proj.b_out, ledger);
  if (cfg.residual) out = add(out, x);
  return {out, ledger};
}

std::vector<std::size_t> partition_order(std::size_t positions, const ScaConfig& cfg) {
  validate_grouping(positions, cfg.group_factor);
  std::vector<std::size_t> order(positions);
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (cfg.partition.kind == PartitionKind::SeededRandom) {
    auto rng = substream(cfg.partition.seed, "partition", positions);
    std::shuffle(order.begin(), order.end(), rng);
  }
  return order;
}

template <typename T>
Tensor<T> sca_reassemble(const Tensor<T>& x, const ScaConfig& cfg) {
  if (x.rank() != 2) throw DimensionError("sca_reassemble: expected N×C′, got " + to_string(x.shape()));
  const std::size_t n = x.extent(0), e = x.extent(1);
  const auto order = partition_order(n, cfg);
  const std::size_t g_count = cfg.group_factor, s_count = n / g_count, wide = e * g_count;
  std::vector<std::size_t> index(n * e);
  for (std::size_t s = 0; s < s_count; ++s) {
    for (std::size_t g = 0; g < g_count; ++g) {
      const std::size_t src_row = order[g * s_count + s];
      for (std::size_t c = 0; c < e; ++c) index[s * wide + g * e + c] = src_row * e + c;
    }
  }
  return gather(x, std::move(index), {s_count, wide});
}

template <typename T>
Tensor<T> sca_restore(const Tensor<T>& z, const ScaConfig& cfg, RestoreShape shape) {
  const std::size_t n = shape.height * shape.width;
  if (z.rank() != 2 || z.numel() != shape.channels * n || n % cfg.group_factor != 0 ||
      z.extent(0) != n / cfg.group_factor || z.extent(1) != shape.channels * cfg.group_factor) {
    throw DimensionError("sca_restore: " + to_string(z.shape()) + " is inconsistent with C′=" +
                         std::to_string(shape.channels) + ", H=" + std::to_string(shape.height) +
                         ", W=" + std::to_string(shape.width) + ", G=" + std::to_string(cfg.group_factor));
  }
  const auto order = partition_order(n, cfg);
  const std::size_t e = shape.channels, s_count = n / cfg.group_factor, wide = z.extent(1);
  // Output (c, order[p]) comes from z(p mod S, (p / S)·C′ + c).
  std::vector<std::size_t> index(e * n);
  for (std::size_t p = 0; p < n; ++p) {
    const std::size_t s = p % s_count, g = p / s_count, pos = order[p];
    for (std::size_t c = 0; c < e; ++c) index[c * n + pos] = s * wide + g * e + c;
  }
  return gather(z, std::move(index), {e, shape.height, shape.width});
}

template <typename T>
ScaOutput<T> sca_forward(const Tensor<T>& x_a, const Tensor<T>& x_b, const ProjectionSet<T>& proj_a,
                         const ProjectionSet<T>& proj_b, const ScaConfig& cfg) {
  require_feature_map(x_a.shape(), "sca_forward");
  if (x_a.shape() != x_b.shape()) {
    throw DimensionError("sca_forward: modality shapes differ: " + to_string(x_a.shape()) + " vs " +
                         to_string(x_b.shape()));
  }
  const std::size_t c = x_a.extent(0), h = x_a.extent(1), w = x_a.extent(2);
  if (c % 2 != 0) throw ConfigError("sca_forward: channels must be even, got C=" + std::to_string(c));
  if (proj_a.channels() != c || proj_b.channels() != c) {
    throw DimensionError("sca_forward: projections do not match input channels C=" + std::to_string(c));
  }
  validate_grouping(h * w, cfg.group_factor);

  FlopLedger ledger;
  const std::size_t e = c / 2;
  const T logit_scale = static_cast<T>(1.0 / std::sqrt(static_cast<double>(e * cfg.group_factor)));
  auto embed = [&](const Tensor<T>& x, const Tensor<T>& wt, const Tensor<T>& b) {
    return sca_reassemble(flatten_positions(project(x, wt, b, ledger)), cfg);
  };
  const auto q_a = embed(x_a, proj_a.w_q, proj_a.b_q);
  const auto k_a = embed(x_a, proj_a.w_k, proj_a.b_k);
  const auto v_a = embed(x_a, proj_a.w_v, proj_a.b_v);
  const auto q_b = embed(x_b, proj_b.w_q, proj_b.b_q);
  const auto k_b = embed(x_b, proj_b.w_k, proj_b.b_k);
  const auto v_b = embed(x_b, proj_b.w_v, proj_b.b_v);

  const RestoreShape restore_shape{e, h, w};
  auto finish = [&](const Tensor<T>& z, const ProjectionSet<T>& proj, const Tensor<T>& x) {
    auto out = project(sca_restore(z, cfg, restore_shape), proj.w_out, proj.b_out, ledger);
    return cfg.residual ? add(out, x) : out;
  };
  auto z_a = finish(attend(q_b, k_a, v_a, logit_scale, cfg.scale_logits, ledger), proj_a, x_a);
  auto z_b = finish(attend(q_a, k_b, v_b, logit_scale, cfg.scale_logits, ledger), proj_b, x_b);
  return {z_a, z_b, ledger};
}

template <typename T>
ScaBlock<T>::ScaBlock(ProjectionSet<T> proj_a, ProjectionSet<T> proj_b, ScaConfig cfg)
    : proj_a_(std::move(proj_a)), proj_b_(std::move(proj_b)), cfg_(cfg) {
  if (proj_a_.channels() != proj_b_.channels()) throw DimensionError("ScaBlock: modality projections differ in C");
  if (cfg_.group_factor == 0) throw ConfigError("ScaBlock: group factor must be positive");
}

template <typename T>
ScaBlock<T> ScaBlock<T>::init(std::size_t channels, const ScaConfig& cfg, Rng& rng, bool requires_grad) {
  auto a = ProjectionSet<T>::init(channels, rng, requires_grad);
  auto b = ProjectionSet<T>::init(channels, rng, requires_grad);
  return ScaBlock(std::move(a), std::move(b), cfg);
}

template <typename T>
io::NamedTensors<T> ScaBlock<T>::named(const std::string& prefix) const {
  auto out = proj_a_.named(prefix + "a.");
  auto b = proj_b_.named(prefix + "b.");
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

template <typename T>
std::vector<Tensor<T>> ScaBlock<T>::parameters() const {
  auto out = proj_a_.parameters();
  auto b = proj_b_.parameters();
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

template struct ProjectionSet<float>;
template struct ProjectionSet<double>;
template class ScaBlock<float>;
template class ScaBlock<double>;
template NonLocalOutput<float> nonlocal_forward(const Tensor<float>&, const ProjectionSet<float>&, const NonLocalConfig&);
template NonLocalOutput<double> nonlocal_forward(const Tensor<double>&, const ProjectionSet<double>&,
                                                 const NonLocalConfig&);
template Tensor<float> sca_reassemble(const Tensor<float>&, const ScaConfig&);
template Tensor<double> sca_reassemble(const Tensor<double>&, const ScaConfig&);
template Tensor<float> sca_restore(const Tensor<float>&, const ScaConfig&, RestoreShape);
template Tensor<double> sca_restore(const Tensor<double>&, const ScaConfig&, RestoreShape);
template ScaOutput<float> sca_forward(const Tensor<float>&, const Tensor<float>&, const ProjectionSet<float>&,
                                      const ProjectionSet<float>&, const ScaConfig&);
template ScaOutput<double> sca_forward(const Tensor<double>&, const Tensor<double>&, const ProjectionSet<double>&,
                                       const ProjectionSet<double>&, const ScaConfig&);

}  // namespace csca
