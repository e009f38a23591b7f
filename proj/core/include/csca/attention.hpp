#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "csca/random.hpp"
#include "csca/serialize.hpp"
#include "csca/tensor.hpp"

namespace csca {

// Multiply-accumulate counts, taken from the operand shapes of the matmuls and
// 1×1 convolutions actually executed.
struct FlopLedger {
  // MACs of Q·Kᵀ plus A·V, summed over every attention direction executed.
  std::uint64_t attention_mults = 0;
  // Number of attention directions folded into attention_mults.
  std::uint64_t directions = 0;
  // MACs of the query/key/value/output 1×1 projections.
  std::uint64_t projection_mults = 0;

  std::uint64_t total() const { return attention_mults + projection_mults; }
  std::uint64_t attention_mults_per_direction() const {
    return directions == 0 ? 0 : attention_mults / directions;
  }
  FlopLedger& operator+=(const FlopLedger& other);
};

// 1×1 projections of one attention block. Embedding width is C/2.
template <typename T>
struct ProjectionSet {
  Tensor<T> w_q, b_q;
  Tensor<T> w_k, b_k;
  Tensor<T> w_v, b_v;
  Tensor<T> w_out, b_out;

  std::size_t channels() const { return w_q.extent(1); }
  std::size_t embed() const { return w_q.extent(0); }

  // Zero-mean uniform weights with bound sqrt(1/fan_in), zero biases.
  // Throws ConfigError for odd C.
  static ProjectionSet init(std::size_t channels, Rng& rng, bool requires_grad = false);

  io::NamedTensors<T> named(const std::string& prefix) const;
  // Looks up "<prefix>w_q" etc. in `tensors`; throws IoError when missing.
  static ProjectionSet from_named(const io::NamedTensors<T>& tensors, const std::string& prefix);
  std::vector<Tensor<T>> parameters() const;
};

struct NonLocalConfig {
  bool residual = true;
};

template <typename T>
struct NonLocalOutput {
  Tensor<T> out;
  FlopLedger ledger;
};

// Z = softmax(Q·Kᵀ)·V over all N = H·W positions of one feature map, followed
// by the output projection (and x when residual).
template <typename T>
NonLocalOutput<T> nonlocal_forward(const Tensor<T>& x, const ProjectionSet<T>& proj, const NonLocalConfig& cfg = {});

enum class PartitionKind { Contiguous, SeededRandom };

struct Partition {
  PartitionKind kind = PartitionKind::Contiguous;
  std::uint64_t seed = 0;

  static Partition contiguous() { return {}; }
  static Partition seeded_random(std::uint64_t seed) { return {PartitionKind::SeededRandom, seed}; }
};

struct ScaConfig {
  std::size_t group_factor = 1;
  Partition partition;
  bool residual = true;
  bool scale_logits = true;
};

// Spatial index order used by re-assembly: position p of the ordering holds
// spatial index order[p]; group g owns positions [g·S, (g+1)·S).
std::vector<std::size_t> partition_order(std::size_t positions, const ScaConfig& cfg);

// [N×C′] -> [S×Ĉ] with S = N/G and Ĉ = C′·G:
// out(s, g·C′ + c) = x(order[g·S + s], c).
template <typename T>
Tensor<T> sca_reassemble(const Tensor<T>& x, const ScaConfig& cfg);

struct RestoreShape {
  std::size_t channels;  // C′
  std::size_t height;
  std::size_t width;
};

// Inverse of sca_reassemble followed by unflattening to [C′×H×W].
template <typename T>
Tensor<T> sca_restore(const Tensor<T>& z, const ScaConfig& cfg, RestoreShape shape);

template <typename T>
struct ScaOutput {
  Tensor<T> z_a;
  Tensor<T> z_b;
  FlopLedger ledger;
};

// Cross-modal attention with spatial re-assembly. Keys and values of z_a come
// from x_a, the query from x_b (and symmetrically for z_b).
template <typename T>
ScaOutput<T> sca_forward(const Tensor<T>& x_a, const Tensor<T>& x_b, const ProjectionSet<T>& proj_a,
                         const ProjectionSet<T>& proj_b, const ScaConfig& cfg);

template <typename T>
class ScaBlock {
 public:
  ScaBlock(ProjectionSet<T> proj_a, ProjectionSet<T> proj_b, ScaConfig cfg);
  static ScaBlock init(std::size_t channels, const ScaConfig& cfg, Rng& rng, bool requires_grad = false);

  ScaOutput<T> forward(const Tensor<T>& x_a, const Tensor<T>& x_b) const {
    return sca_forward(x_a, x_b, proj_a_, proj_b_, cfg_);
  }

  const ScaConfig& config() const { return cfg_; }
  const ProjectionSet<T>& proj_a() const { return proj_a_; }
  const ProjectionSet<T>& proj_b() const { return proj_b_; }
  io::NamedTensors<T> named(const std::string& prefix) const;
  std::vector<Tensor<T>> parameters() const;

 private:
  ProjectionSet<T> proj_a_;
  ProjectionSet<T> proj_b_;
  ScaConfig cfg_;
};

}  // namespace csca
