#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "csca/attention.hpp"
#include "csca/cfa.hpp"
#include "csca/tensor.hpp"

namespace csca {

enum class FusionMode { Csca, RgbOnly, AuxOnly, Early, Late };

const char* to_string(FusionMode mode);
FusionMode parse_fusion_mode(const std::string& text);

enum class AggregateSource { ScaOutput, BackboneFeature };

struct StageConfig {
  std::size_t in_channels = 1;
  std::size_t height = 32;
  std::size_t width = 32;
  std::vector<std::size_t> channels{8, 16};
  std::vector<std::size_t> strides{2, 2};
  std::vector<std::size_t> groups{4, 4};
  std::size_t kernel = 3;
  std::size_t cfa_reduction = 4;
  std::size_t decoder_hidden = 16;
  Partition partition;
  bool residual = true;
  bool scale_logits = true;
  AggregateSource aggregate_source = AggregateSource::ScaOutput;
  // Initial bias of the final decoder layer; positive keeps the output ReLU
  // active at the start of training.
  double decoder_output_bias = 0.01;

  std::size_t stages() const { return channels.size(); }
  // Spatial extents after each stage.
  std::vector<std::pair<std::size_t, std::size_t>> stage_extents() const;
  std::pair<std::size_t, std::size_t> output_extents() const;

  // Throws ConfigError on inconsistent lists, odd CSCA channels, or spatial
  // sizes not divisible by the stage's grouping factor.
  void validate(FusionMode mode = FusionMode::Csca) const;

  // "key=value" form shared by the CLI config files and checkpoints.
  std::map<std::string, std::string> to_key_values() const;
  static StageConfig from_key_values(const std::map<std::string, std::string>& kv);
};

template <typename T>
struct ConvLayer {
  Tensor<T> weight;  // [C_out×C_in×k×k]
  Tensor<T> bias;    // [C_out]
  std::size_t stride = 1;
};

template <typename T>
struct CscaStage {
  ScaBlock<T> sca;
  CfaWeights<T> cfa;
};

// Per-stage features recorded by forward() when requested.
template <typename T>
struct ForwardTrace {
  std::vector<Tensor<T>> stream_a;
  std::vector<Tensor<T>> stream_b;
  std::vector<Tensor<T>> aggregated;
  FlopLedger ledger;
};

template <typename T>
class CscaNetwork {
 public:
  CscaNetwork() = default;

  FusionMode mode() const { return mode_; }
  const StageConfig& config() const { return cfg_; }

  // Returns the H′×W′ density map.
  Tensor<T> forward(const Tensor<T>& x_a, const Tensor<T>& x_b, ForwardTrace<T>* trace = nullptr) const;

  // Named parameters in a fixed order (checkpoint layout).
  io::NamedTensors<T> named_parameters() const;
  std::vector<Tensor<T>> parameters() const;

  std::vector<ConvLayer<T>>& branch_a() { return branch_a_; }
  std::vector<ConvLayer<T>>& branch_b() { return branch_b_; }
  std::vector<CscaStage<T>>& csca_stages() { return csca_; }
  const std::vector<ConvLayer<T>>& branch_a() const { return branch_a_; }
  const std::vector<ConvLayer<T>>& branch_b() const { return branch_b_; }
  const std::vector<CscaStage<T>>& csca_stages() const { return csca_; }

  void save(const std::filesystem::path& dir) const;
  static CscaNetwork load(const std::filesystem::path& dir, bool requires_grad = false);

  template <typename U>
  friend CscaNetwork<U> build_network(const StageConfig& cfg, std::uint64_t seed, FusionMode mode,
                                      bool requires_grad);
  template <typename U>
  friend CscaNetwork<U> network_from_parameters(const StageConfig& cfg, FusionMode mode,
                                                const io::NamedTensors<U>& tensors);

 private:
  Tensor<T> run_branch(const std::vector<ConvLayer<T>>& branch, const Tensor<T>& x) const;
  Tensor<T> decode(const Tensor<T>& features) const;

  StageConfig cfg_;
  FusionMode mode_ = FusionMode::Csca;
  std::vector<ConvLayer<T>> branch_a_;
  std::vector<ConvLayer<T>> branch_b_;
  std::vector<CscaStage<T>> csca_;
  ConvLayer<T> decoder_hidden_;
  ConvLayer<T> decoder_out_;
};

// Deterministic initialization: identical (cfg, seed, mode) give bitwise
// identical parameters. Conv and hidden decoder weights are uniform in
// ±sqrt(6/fan_in); the decoder output layer starts near zero (±sqrt(0.01/fan_in))
// so the output ReLU is live from the first step. Biases are zero except the
// decoder output bias. Attention and CFA weights follow their own init().
template <typename T>
CscaNetwork<T> build_network(const StageConfig& cfg, std::uint64_t seed, FusionMode mode = FusionMode::Csca,
                             bool requires_grad = true);

template <typename T>
CscaNetwork<T> network_from_parameters(const StageConfig& cfg, FusionMode mode, const io::NamedTensors<T>& tensors);

// Alias of network.forward() for baseline modes; kept as a named entry point
// for the ablation harness.
template <typename T>
Tensor<T> fusion_forward(const CscaNetwork<T>& net, const Tensor<T>& x_a, const Tensor<T>& x_b) {
  return net.forward(x_a, x_b);
}

template <typename T>
struct TrainingPair {
  Tensor<T> x_a;
  Tensor<T> x_b;
  Tensor<T> gt_density;
};

// One plain gradient-descent update on the mean density MSE over `batch`.
// Returns the loss before the update. Throws DimensionError if a ground truth
// does not match the decoder output, NumericError on a non-finite loss.
template <typename T>
double train_step(CscaNetwork<T>& net, std::span<const TrainingPair<T>> batch, double lr);

template <typename T>
double train_step(CscaNetwork<T>& net, const TrainingPair<T>& pair, double lr) {
  return train_step<T>(net, std::span<const TrainingPair<T>>(&pair, 1), lr);
}

// Mean density MSE over `batch` without updating anything.
template <typename T>
double evaluate_loss(const CscaNetwork<T>& net, std::span<const TrainingPair<T>> batch);

}  // namespace csca
