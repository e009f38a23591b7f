#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "csca/tensor.hpp"

// Synthetic registered modality pairs with point-annotated crowds. Modality a
// is RGB-like (fails in darkness), modality b is thermal/depth-like (immune
// to illumination, but shows spurious warm objects proportional to clutter).
namespace csca::synth {

enum class Illumination { Bright, Dark };

const char* to_string(Illumination illum);
Illumination parse_illumination(const std::string& text);

struct HeadPoint {
  double x;     // column, pixel units
  double y;     // row, pixel units
  double size;  // blob standard deviation, pixels
};

struct Scene {
  std::size_t height = 32;
  std::size_t width = 32;
  std::vector<HeadPoint> points;
  Illumination illumination = Illumination::Bright;
  double clutter = 0.0;  // [0, 1]

  std::size_t count() const { return points.size(); }
  // Throws ConfigError when a point falls outside the extents or clutter is
  // outside [0, 1].
  void validate() const;
};

struct Extents {
  std::size_t height;
  std::size_t width;
};

// Sum of unit-mass Gaussians, one per point. Each kernel is truncated at 3σ
// and at the borders and then renormalized, so the map sums to the count.
// `sigma` is in input-image pixels; points and sigma are rescaled to `out`.
Tensor<float> density_from_points(const Scene& scene, double sigma, Extents out);

struct ModalPairSample {
  Tensor<float> mod_a;       // C_in×H×W
  Tensor<float> mod_b;       // C_in×H×W
  Tensor<float> gt_density;  // H′×W′
  Illumination illumination = Illumination::Bright;
  double clutter = 0.0;
  std::size_t count = 0;
};

struct RenderOptions {
  std::size_t channels = 1;
  // Background texture and sensor noise; disable for exact peak analysis.
  bool noise = true;
  double dark_attenuation = 0.1;
  double dark_noise = 0.2;
  double bright_noise = 0.02;
  double texture_amplitude = 0.15;
  // Spurious blobs in modality b = round(clutter · max_spurious).
  std::size_t max_spurious = 6;
};

struct RenderedPair {
  Tensor<float> mod_a;
  Tensor<float> mod_b;
};

// Deterministic in (scene, seed, options).
RenderedPair render_modalities(const Scene& scene, std::uint64_t seed, const RenderOptions& options = {});

struct SceneOptions {
  std::size_t height = 32;
  std::size_t width = 32;
  std::size_t min_count = 2;
  std::size_t max_count = 12;
  double min_size = 0.9;
  double max_size = 1.3;
  double min_separation = 4.0;
};

Scene random_scene(const SceneOptions& options, Illumination illumination, double clutter, std::uint64_t seed,
                   std::uint64_t index);

struct DatasetSpec {
  std::size_t count = 64;
  double train_fraction = 0.75;
  std::size_t height = 32;
  std::size_t width = 32;
  std::size_t out_height = 8;
  std::size_t out_width = 8;
  double sigma = 2.0;
  std::size_t channels = 1;
  std::uint64_t seed = 0;
};

enum class Split { Train, Test };

struct DatasetEntry {
  std::size_t id = 0;
  Split split = Split::Train;
  std::string mod_a_file;
  std::string mod_b_file;
  std::string gt_file;
  std::size_t count = 0;
  Illumination illumination = Illumination::Bright;
  double clutter = 0.0;
};

struct Dataset {
  DatasetSpec spec;
  std::vector<DatasetEntry> entries;
  std::vector<ModalPairSample> samples;  // parallel to entries

  std::vector<std::size_t> indices(Split split) const;
  std::vector<std::size_t> indices(Split split, Illumination illumination) const;
};

inline constexpr const char* kIndexName = "index.csv";

// Generates `spec.count` samples in memory. Even ids are bright, odd ids
// dark; the first round(count · train_fraction) ids form the training split.
Dataset generate_dataset(const DatasetSpec& spec);

// Writes three CST1 tensors per sample plus index.csv. Throws IoError.
void write_dataset(const Dataset& dataset, const std::filesystem::path& dir);
Dataset read_dataset(const std::filesystem::path& dir);

// generate_dataset + write_dataset.
Dataset make_dataset(const DatasetSpec& spec, const std::filesystem::path& dir);

}  // namespace csca::synth
