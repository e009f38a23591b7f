#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "csca/tensor.hpp"

// CST1 tensor files:
//   8 bytes  magic "CSCATNSR"
//   u32      rank
//   u32×rank extents
//   u8       dtype (0 = f32, 1 = f64)
//   payload  row-major values
// All integers and values little-endian.
namespace csca::io {

enum class DType : std::uint8_t { F32 = 0, F64 = 1 };

template <typename T>
constexpr DType dtype_of();
template <>
constexpr DType dtype_of<float>() { return DType::F32; }
template <>
constexpr DType dtype_of<double>() { return DType::F64; }

struct Cst1Tensor {
  Shape shape;
  std::variant<std::vector<float>, std::vector<double>> values;

  DType dtype() const { return values.index() == 0 ? DType::F32 : DType::F64; }
  // Converts to the requested precision when the stored one differs.
  template <typename T>
  Tensor<T> as(bool requires_grad = false) const;
};

template <typename T>
void write_cst1(std::ostream& os, const Tensor<T>& t);
Cst1Tensor read_cst1(std::istream& is);

template <typename T>
void save_cst1(const std::filesystem::path& path, const Tensor<T>& t);
Cst1Tensor load_cst1(const std::filesystem::path& path);

// Plain-text sidecar listing the tensors of a checkpoint directory, one
// "name shape file" line per tensor (shape written as 8x4x3x3).
struct ManifestEntry {
  std::string name;
  Shape shape;
  std::string file;
};

inline constexpr const char* kManifestName = "manifest.txt";

void write_manifest(const std::filesystem::path& dir, const std::vector<ManifestEntry>& entries);
std::vector<ManifestEntry> read_manifest(const std::filesystem::path& dir);

template <typename T>
using NamedTensors = std::vector<std::pair<std::string, Tensor<T>>>;

// Writes every tensor to "<dir>/<name>.cst" plus the manifest.
template <typename T>
void save_checkpoint(const std::filesystem::path& dir, const NamedTensors<T>& tensors);

// Reads the manifest and every listed tensor, checking shapes.
template <typename T>
NamedTensors<T> load_checkpoint(const std::filesystem::path& dir);

Shape parse_shape(const std::string& text);
std::string format_shape(const Shape& shape);

}  // namespace csca::io
