#include "csca/serialize.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "csca/error.hpp"

namespace csca::io {

namespace {

constexpr std::array<char, 8> kMagic{'C', 'S', 'C', 'A', 'T', 'N', 'S', 'R'};

template <typename U>
void put_le(std::ostream& os, U value) {
  std::array<char, sizeof(U)> bytes{};
  for (std::size_t i = 0; i < sizeof(U); ++i) bytes[i] = static_cast<char>((value >> (8 * i)) & 0xff);
  os.write(bytes.data(), bytes.size());
}

template <typename U>
U get_le(std::istream& is) {
  std::array<unsigned char, sizeof(U)> bytes{};
  is.read(reinterpret_cast<char*>(bytes.data()), bytes.size());
  if (!is) throw IoError("CST1: truncated stream");
  U value = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) value |= static_cast<U>(bytes[i]) << (8 * i);
  return value;
}

template <typename T>
using Bits = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;

}  // namespace

template <typename T>
Tensor<T> Cst1Tensor::as(bool requires_grad) const {
  return std::visit(
      [&](const auto& v) {
        std::vector<T> data(v.begin(), v.end());
        return Tensor<T>(shape, std::move(data), requires_grad);
      },
      values);
}

template <typename T>
void write_cst1(std::ostream& os, const Tensor<T>& t) {
  os.write(kMagic.data(), kMagic.size());
  put_le<std::uint32_t>(os, static_cast<std::uint32_t>(t.rank()));
  for (auto e : t.shape()) put_le<std::uint32_t>(os, static_cast<std::uint32_t>(e));
  put_le<std::uint8_t>(os, static_cast<std::uint8_t>(dtype_of<T>()));
  for (auto v : t.data()) put_le<Bits<T>>(os, std::bit_cast<Bits<T>>(v));
  if (!os) throw IoError("CST1: write failed");
}

Cst1Tensor read_cst1(std::istream& is) {
  std::array<char, 8> magic{};
  is.read(magic.data(), magic.size());
  if (!is || magic != kMagic) throw IoError("CST1: bad magic");
  const auto rank = get_le<std::uint32_t>(is);
  if (rank > 16) throw IoError("CST1: implausible rank " + std::to_string(rank));
  Cst1Tensor out;
  for (std::uint32_t i = 0; i < rank; ++i) {
    const auto e = get_le<std::uint32_t>(is);
    if (e == 0) throw IoError("CST1: zero extent");
    out.shape.push_back(e);
  }
  const auto tag = get_le<std::uint8_t>(is);
  const std::size_t n = numel(out.shape);
  if (tag == static_cast<std::uint8_t>(DType::F32)) {
    std::vector<float> v(n);
    for (auto& x : v) x = std::bit_cast<float>(get_le<std::uint32_t>(is));
    out.values = std::move(v);
  } else if (tag == static_cast<std::uint8_t>(DType::F64)) {
    std::vector<double> v(n);
    for (auto& x : v) x = std::bit_cast<double>(get_le<std::uint64_t>(is));
    out.values = std::move(v);
  } else {
    throw IoError("CST1: unknown dtype tag " + std::to_string(tag));
  }
  return out;
}

template <typename T>
void save_cst1(const std::filesystem::path& path, const Tensor<T>& t) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  write_cst1(os, t);
}

Cst1Tensor load_cst1(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  return read_cst1(is);
}

std::string format_shape(const Shape& shape) {
  if (shape.empty()) return "scalar";
  std::string s;
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += 'x';
    s += std::to_string(shape[i]);
  }
  return s;
}

Shape parse_shape(const std::string& text) {
  if (text == "scalar") return {};
  Shape shape;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, 'x')) {
    try {
      std::size_t used = 0;
      const auto v = std::stoull(part, &used);
      if (used != part.size() || v == 0) throw std::invalid_argument(part);
      shape.push_back(v);
    } catch (const std::exception&) {
      throw IoError("malformed shape '" + text + "'");
    }
  }
  if (shape.empty()) throw IoError("malformed shape '" + text + "'");
  return shape;
}

void write_manifest(const std::filesystem::path& dir, const std::vector<ManifestEntry>& entries) {
  std::ofstream os(dir / kManifestName, std::ios::trunc);
  if (!os) throw IoError("cannot write manifest in " + dir.string());
  os << "# name shape file\n";
  for (const auto& e : entries) os << e.name << ' ' << format_shape(e.shape) << ' ' << e.file << '\n';
}

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& dir) {
  std::ifstream is(dir / kManifestName);
  if (!is) throw IoError("no manifest in " + dir.string());
  std::vector<ManifestEntry> entries;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    ManifestEntry e;
    std::string shape;
    if (!(ls >> e.name >> shape >> e.file)) throw IoError("malformed manifest line: " + line);
    e.shape = parse_shape(shape);
    entries.push_back(std::move(e));
  }
  return entries;
}

template <typename T>
void save_checkpoint(const std::filesystem::path& dir, const NamedTensors<T>& tensors) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  std::vector<ManifestEntry> entries;
  for (const auto& [name, t] : tensors) {
    const std::string file = name + ".cst";
    save_cst1(dir / file, t);
    entries.push_back({name, t.shape(), file});
  }
  write_manifest(dir, entries);
}

template <typename T>
NamedTensors<T> load_checkpoint(const std::filesystem::path& dir) {
  NamedTensors<T> out;
  for (const auto& e : read_manifest(dir)) {
    auto t = load_cst1(dir / e.file);
    if (t.shape != e.shape) {
      throw IoError("tensor " + e.name + " has shape " + format_shape(t.shape) + ", manifest says " +
                    format_shape(e.shape));
    }
    out.emplace_back(e.name, t.as<T>());
  }
  return out;
}

template Tensor<float> Cst1Tensor::as<float>(bool) const;
template Tensor<double> Cst1Tensor::as<double>(bool) const;
template void write_cst1<float>(std::ostream&, const Tensor<float>&);
template void write_cst1<double>(std::ostream&, const Tensor<double>&);
template void save_cst1<float>(const std::filesystem::path&, const Tensor<float>&);
template void save_cst1<double>(const std::filesystem::path&, const Tensor<double>&);
template void save_checkpoint<float>(const std::filesystem::path&, const NamedTensors<float>&);
template void save_checkpoint<double>(const std::filesystem::path&, const NamedTensors<double>&);
template NamedTensors<float> load_checkpoint<float>(const std::filesystem::path&);
template NamedTensors<double> load_checkpoint<double>(const std::filesystem::path&);

}  // namespace csca::io
