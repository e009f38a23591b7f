#include "csca/synthdata.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <random>
#include <sstream>

#include "csca/error.hpp"
#include "csca/random.hpp"
#include "csca/serialize.hpp"

namespace csca::synth {

namespace {

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& s) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) throw IoError("malformed number '" + s + "'");
  return v;
}

std::size_t parse_size(const std::string& s) {
  std::size_t v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) throw IoError("malformed integer '" + s + "'");
  return v;
}

void add_blob(std::vector<float>& plane, std::size_t h, std::size_t w, double cx, double cy, double size,
              double amplitude) {
  const double radius = 4.0 * size;
  const auto y0 = static_cast<std::ptrdiff_t>(std::floor(cy - radius));
  const auto y1 = static_cast<std::ptrdiff_t>(std::ceil(cy + radius));
  const auto x0 = static_cast<std::ptrdiff_t>(std::floor(cx - radius));
  const auto x1 = static_cast<std::ptrdiff_t>(std::ceil(cx + radius));
  const double inv = 1.0 / (2.0 * size * size);
  for (auto y = std::max<std::ptrdiff_t>(0, y0); y <= std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(h) - 1, y1); ++y) {
    for (auto x = std::max<std::ptrdiff_t>(0, x0); x <= std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(w) - 1, x1); ++x) {
      const double dx = static_cast<double>(x) - cx, dy = static_cast<double>(y) - cy;
      plane[static_cast<std::size_t>(y) * w + static_cast<std::size_t>(x)] +=
          static_cast<float>(amplitude * std::exp(-(dx * dx + dy * dy) * inv));
    }
  }
}

std::uint64_t sample_seed(std::uint64_t seed, std::size_t id) {
  auto rng = substream(seed, "data", id);
  return rng();
}

std::string split_name(Split s) { return s == Split::Train ? "train" : "test"; }

Split parse_split(const std::string& s) {
  if (s == "train") return Split::Train;
  if (s == "test") return Split::Test;
  throw IoError("unknown split '" + s + "'");
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

}  // namespace

const char* to_string(Illumination illum) { return illum == Illumination::Bright ? "bright" : "dark"; }

Illumination parse_illumination(const std::string& text) {
  if (text == "bright") return Illumination::Bright;
  if (text == "dark") return Illumination::Dark;
  throw ConfigError("unknown illumination '" + text + "'");
}

void Scene::validate() const {
  if (height == 0 || width == 0) throw ConfigError("scene extents must be positive");
  if (!(clutter >= 0.0 && clutter <= 1.0)) throw ConfigError("clutter must lie in [0, 1]");
  for (const auto& p : points) {
    if (!(p.x >= 0.0 && p.x < static_cast<double>(width) && p.y >= 0.0 && p.y < static_cast<double>(height))) {
      throw ConfigError("head point outside the scene extents");
    }
    if (!(p.size > 0.0)) throw ConfigError("head size must be positive");
  }
}

Tensor<float> density_from_points(const Scene& scene, double sigma, Extents out) {
  if (!(sigma > 0.0)) throw ConfigError("density sigma must be positive, got " + format_double(sigma));
  if (out.height == 0 || out.width == 0) throw ConfigError("density extents must be positive");
  scene.validate();
  const double sy = static_cast<double>(out.height) / static_cast<double>(scene.height);
  const double sx = static_cast<double>(out.width) / static_cast<double>(scene.width);
  const double s = sigma * std::sqrt(sx * sy);
  const double reach = 3.0 * s;
  std::vector<double> map(out.height * out.width, 0.0);
  std::vector<double> kernel;
  for (const auto& p : scene.points) {
    // Pixel centres map to centres: (x + 0.5)·scale − 0.5.
    const double cx = (p.x + 0.5) * sx - 0.5;
    const double cy = (p.y + 0.5) * sy - 0.5;
    const auto y0 = std::max<std::ptrdiff_t>(0, static_cast<std::ptrdiff_t>(std::ceil(cy - reach)));
    const auto y1 = std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(out.height) - 1,
                                             static_cast<std::ptrdiff_t>(std::floor(cy + reach)));
    const auto x0 = std::max<std::ptrdiff_t>(0, static_cast<std::ptrdiff_t>(std::ceil(cx - reach)));
    const auto x1 = std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(out.width) - 1,
                                             static_cast<std::ptrdiff_t>(std::floor(cx + reach)));
    double mass = 0.0;
    kernel.clear();
    for (auto y = y0; y <= y1; ++y) {
      for (auto x = x0; x <= x1; ++x) {
        const double dx = static_cast<double>(x) - cx, dy = static_cast<double>(y) - cy;
        const double v = std::exp(-(dx * dx + dy * dy) / (2.0 * s * s));
        kernel.push_back(v);
        mass += v;
      }
    }
    if (mass <= 0.0) {
      // Truncation left nothing: put the unit mass on the nearest pixel.
      const auto ny = std::clamp<std::ptrdiff_t>(std::lround(cy), 0, static_cast<std::ptrdiff_t>(out.height) - 1);
      const auto nx = std::clamp<std::ptrdiff_t>(std::lround(cx), 0, static_cast<std::ptrdiff_t>(out.width) - 1);
      map[static_cast<std::size_t>(ny) * out.width + static_cast<std::size_t>(nx)] += 1.0;
      continue;
    }
    std::size_t k = 0;
    for (auto y = y0; y <= y1; ++y) {
      for (auto x = x0; x <= x1; ++x) {
        map[static_cast<std::size_t>(y) * out.width + static_cast<std::size_t>(x)] += kernel[k++] / mass;
      }
    }
  }
  std::vector<float> values(map.begin(), map.end());
  return Tensor<float>({out.height, out.width}, std::move(values));
}

RenderedPair render_modalities(const Scene& scene, std::uint64_t seed, const RenderOptions& options) {
  scene.validate();
  if (options.channels == 0) throw ConfigError("render: channel count must be positive");
  const std::size_t h = scene.height, w = scene.width, plane = h * w;
  const bool dark = scene.illumination == Illumination::Dark;

  std::vector<float> heads_a(plane, 0.0f), heads_b(plane, 0.0f);
  const double contrast_a = dark ? options.dark_attenuation : 1.0;
  for (const auto& p : scene.points) {
    add_blob(heads_a, h, w, p.x, p.y, p.size, contrast_a);
    add_blob(heads_b, h, w, p.x, p.y, p.size, 1.0);
  }

  // Spurious warm objects: wider and dimmer than heads.
  auto clutter_rng = substream(seed, "clutter");
  std::uniform_real_distribution<double> ux(0.0, static_cast<double>(w) - 1.0);
  std::uniform_real_distribution<double> uy(0.0, static_cast<double>(h) - 1.0);
  std::uniform_real_distribution<double> usize(1.8, 2.6);
  std::uniform_real_distribution<double> uamp(0.5, 0.9);
  const auto spurious = static_cast<std::size_t>(std::lround(scene.clutter * static_cast<double>(options.max_spurious)));
  for (std::size_t i = 0; i < spurious; ++i) {
    const double x = ux(clutter_rng), y = uy(clutter_rng), size = usize(clutter_rng), amp = uamp(clutter_rng);
    add_blob(heads_b, h, w, x, y, size, amp);
  }

  std::vector<float> texture(plane, 0.0f);
  if (options.noise) {
    auto tex_rng = substream(seed, "texture");
    std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
    std::uniform_real_distribution<double> freq(0.05, 0.2);
    for (int wave = 0; wave < 3; ++wave) {
      const double fx = freq(tex_rng), fy = freq(tex_rng), ph = phase(tex_rng);
      for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
          const double arg = 2.0 * std::numbers::pi * (fx * static_cast<double>(x) + fy * static_cast<double>(y)) + ph;
          texture[y * w + x] += static_cast<float>(options.texture_amplitude / 3.0 * (1.0 + std::sin(arg)));
        }
      }
    }
  }

  auto noise_rng = substream(seed, "noise");
  std::normal_distribution<double> noise_a(0.0, dark ? options.dark_noise : options.bright_noise);
  std::normal_distribution<double> noise_b(0.0, options.bright_noise);
  std::vector<float> a(options.channels * plane), b(options.channels * plane);
  for (std::size_t c = 0; c < options.channels; ++c) {
    for (std::size_t i = 0; i < plane; ++i) {
      float va = heads_a[i] + static_cast<float>(contrast_a) * texture[i];
      float vb = heads_b[i];
      if (options.noise) {
        va += static_cast<float>(noise_a(noise_rng));
        vb += static_cast<float>(noise_b(noise_rng));
      }
      a[c * plane + i] = va;
      b[c * plane + i] = vb;
    }
  }
  return {Tensor<float>({options.channels, h, w}, std::move(a)), Tensor<float>({options.channels, h, w}, std::move(b))};
}

Scene random_scene(const SceneOptions& options, Illumination illumination, double clutter, std::uint64_t seed,
                   std::uint64_t index) {
  auto rng = substream(seed, "scene", index);
  std::uniform_int_distribution<std::size_t> ucount(options.min_count, options.max_count);
  const double margin = 1.5;
  std::uniform_real_distribution<double> ux(margin, static_cast<double>(options.width) - 1.0 - margin);
  std::uniform_real_distribution<double> uy(margin, static_cast<double>(options.height) - 1.0 - margin);
  std::uniform_real_distribution<double> usize(options.min_size, options.max_size);
  Scene scene;
  scene.height = options.height;
  scene.width = options.width;
  scene.illumination = illumination;
  scene.clutter = clutter;
  const std::size_t target = ucount(rng);
  for (int attempt = 0; attempt < 10000 && scene.points.size() < target; ++attempt) {
    const HeadPoint p{ux(rng), uy(rng), usize(rng)};
    const bool clear = std::all_of(scene.points.begin(), scene.points.end(), [&](const HeadPoint& q) {
      return std::hypot(p.x - q.x, p.y - q.y) >= options.min_separation;
    });
    if (clear) scene.points.push_back(p);
  }
  return scene;
}

std::vector<std::size_t> Dataset::indices(Split split) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (entries[i].split == split) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> Dataset::indices(Split split, Illumination illumination) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (entries[i].split == split && entries[i].illumination == illumination) out.push_back(i);
  }
  return out;
}

Dataset generate_dataset(const DatasetSpec& spec) {
  if (spec.count == 0) throw ConfigError("dataset needs at least one sample");
  if (!(spec.train_fraction >= 0.0 && spec.train_fraction <= 1.0)) throw ConfigError("train fraction must lie in [0, 1]");
  Dataset ds;
  ds.spec = spec;
  const auto n_train = static_cast<std::size_t>(std::lround(static_cast<double>(spec.count) * spec.train_fraction));
  SceneOptions scene_opts;
  scene_opts.height = spec.height;
  scene_opts.width = spec.width;
  RenderOptions render_opts;
  render_opts.channels = spec.channels;
  for (std::size_t id = 0; id < spec.count; ++id) {
    const auto illum = id % 2 == 0 ? Illumination::Bright : Illumination::Dark;
    auto meta_rng = substream(spec.seed, "clutter-level", id);
    const double clutter = std::uniform_real_distribution<double>(0.0, 1.0)(meta_rng);
    const auto scene = random_scene(scene_opts, illum, clutter, spec.seed, id);
    auto pair = render_modalities(scene, sample_seed(spec.seed, id), render_opts);
    auto gt = density_from_points(scene, spec.sigma, {spec.out_height, spec.out_width});

    char stem[32];
    std::snprintf(stem, sizeof(stem), "sample_%04zu", id);
    DatasetEntry entry;
    entry.id = id;
    entry.split = id < n_train ? Split::Train : Split::Test;
    entry.mod_a_file = std::string(stem) + "_a.cst";
    entry.mod_b_file = std::string(stem) + "_b.cst";
    entry.gt_file = std::string(stem) + "_gt.cst";
    entry.count = scene.count();
    entry.illumination = illum;
    entry.clutter = clutter;
    ds.entries.push_back(entry);
    ds.samples.push_back({pair.mod_a, pair.mod_b, gt, illum, clutter, scene.count()});
  }
  return ds;
}

void write_dataset(const Dataset& dataset, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  std::ofstream index(dir / kIndexName, std::ios::trunc);
  if (!index) throw IoError("cannot write " + (dir / kIndexName).string());
  const auto& s = dataset.spec;
  index << "# csca-dataset count=" << s.count << " train_fraction=" << format_double(s.train_fraction)
        << " height=" << s.height << " width=" << s.width << " out_height=" << s.out_height
        << " out_width=" << s.out_width << " sigma=" << format_double(s.sigma) << " channels=" << s.channels
        << " seed=" << s.seed << '\n';
  index << "id,split,mod_a,mod_b,gt,count,illumination,clutter\n";
  for (std::size_t i = 0; i < dataset.entries.size(); ++i) {
    const auto& e = dataset.entries[i];
    const auto& smp = dataset.samples[i];
    io::save_cst1(dir / e.mod_a_file, smp.mod_a);
    io::save_cst1(dir / e.mod_b_file, smp.mod_b);
    io::save_cst1(dir / e.gt_file, smp.gt_density);
    index << e.id << ',' << split_name(e.split) << ',' << e.mod_a_file << ',' << e.mod_b_file << ',' << e.gt_file
          << ',' << e.count << ',' << to_string(e.illumination) << ',' << format_double(e.clutter) << '\n';
  }
  if (!index) throw IoError("write failed for " + (dir / kIndexName).string());
}

Dataset read_dataset(const std::filesystem::path& dir) {
  std::ifstream index(dir / kIndexName);
  if (!index) throw IoError("cannot read dataset index " + (dir / kIndexName).string());
  std::string line;
  if (!std::getline(index, line) || line.rfind("# csca-dataset", 0) != 0) throw IoError("missing dataset header");
  std::map<std::string, std::string> kv;
  {
    std::istringstream ls(line.substr(14));
    std::string tok;
    while (ls >> tok) {
      const auto eq = tok.find('=');
      if (eq == std::string::npos) throw IoError("malformed header token '" + tok + "'");
      kv[tok.substr(0, eq)] = tok.substr(eq + 1);
    }
  }
  auto need = [&](const char* key) -> const std::string& {
    const auto it = kv.find(key);
    if (it == kv.end()) throw IoError(std::string("dataset header lacks ") + key);
    return it->second;
  };
  Dataset ds;
  ds.spec.count = parse_size(need("count"));
  ds.spec.train_fraction = parse_double(need("train_fraction"));
  ds.spec.height = parse_size(need("height"));
  ds.spec.width = parse_size(need("width"));
  ds.spec.out_height = parse_size(need("out_height"));
  ds.spec.out_width = parse_size(need("out_width"));
  ds.spec.sigma = parse_double(need("sigma"));
  ds.spec.channels = parse_size(need("channels"));
  ds.spec.seed = parse_size(need("seed"));
  if (!std::getline(index, line) || line != "id,split,mod_a,mod_b,gt,count,illumination,clutter") {
    throw IoError("unexpected dataset column header");
  }
  while (std::getline(index, line)) {
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != 8) throw IoError("malformed index row: " + line);
    DatasetEntry e;
    e.id = parse_size(cells[0]);
    e.split = parse_split(cells[1]);
    e.mod_a_file = cells[2];
    e.mod_b_file = cells[3];
    e.gt_file = cells[4];
    e.count = parse_size(cells[5]);
    e.illumination = parse_illumination(cells[6]);
    e.clutter = parse_double(cells[7]);
    ModalPairSample smp;
    smp.mod_a = io::load_cst1(dir / e.mod_a_file).as<float>();
    smp.mod_b = io::load_cst1(dir / e.mod_b_file).as<float>();
    smp.gt_density = io::load_cst1(dir / e.gt_file).as<float>();
    smp.illumination = e.illumination;
    smp.clutter = e.clutter;
    smp.count = e.count;
    ds.entries.push_back(std::move(e));
    ds.samples.push_back(std::move(smp));
  }
  if (ds.entries.size() != ds.spec.count) throw IoError("dataset index row count disagrees with its header");
  return ds;
}

Dataset make_dataset(const DatasetSpec& spec, const std::filesystem::path& dir) {
  auto ds = generate_dataset(spec);
  write_dataset(ds, dir);
  return ds;
}

}  // namespace csca::synth
