#include "csca/network.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "csca/error.hpp"
#include "csca/ops.hpp"
#include "csca/random.hpp"
#include "csca/serialize.hpp"

namespace csca {

namespace {

constexpr const char* kConfigName = "config.txt";

std::string join(const std::vector<std::size_t>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(v[i]);
  }
  return s;
}

std::size_t parse_count(const std::string& key, const std::string& text) {
  std::size_t v = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw ConfigError("config key '" + key + "': expected a non-negative integer, got '" + text + "'");
  }
  return v;
}

std::vector<std::size_t> parse_list(const std::string& key, const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ',')) out.push_back(parse_count(key, part));
  if (out.empty()) throw ConfigError("config key '" + key + "' is empty");
  return out;
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "1" || text == "true" || text == "on") return true;
  if (text == "0" || text == "false" || text == "off") return false;
  throw ConfigError("config key '" + key + "': expected a boolean, got '" + text + "'");
}

double parse_real(const std::string& key, const std::string& text) {
  double v = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw ConfigError("config key '" + key + "': expected a number, got '" + text + "'");
  }
  return v;
}

std::string format_real(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

template <typename T>
ConvLayer<T> init_conv(std::size_t cout, std::size_t cin, std::size_t k, std::size_t stride, Rng& rng,
                       bool requires_grad) {
  const T bound = static_cast<T>(std::sqrt(6.0 / static_cast<double>(cin * k * k)));
  return {uniform_tensor<T>({cout, cin, k, k}, -bound, bound, rng, requires_grad), Tensor<T>::zeros({cout}, requires_grad),
          stride};
}

template <typename T>
ConvLayer<T> init_pointwise(std::size_t cout, std::size_t cin, Rng& rng, bool requires_grad, T bias, double gain = 6.0) {
  const T bound = static_cast<T>(std::sqrt(gain / static_cast<double>(cin)));
  return {uniform_tensor<T>({cout, cin}, -bound, bound, rng, requires_grad), Tensor<T>::full({cout}, bias, requires_grad), 1};
}

bool has_two_branches(FusionMode mode) { return mode == FusionMode::Csca || mode == FusionMode::Late; }

std::size_t branch_inputs(const StageConfig& cfg, FusionMode mode) {
  return mode == FusionMode::Early ? 2 * cfg.in_channels : cfg.in_channels;
}

std::size_t decoder_inputs(const StageConfig& cfg, FusionMode mode) {
  return mode == FusionMode::Late ? 2 * cfg.channels.back() : cfg.channels.back();
}

template <typename T>
const Tensor<T>& lookup(const io::NamedTensors<T>& tensors, const std::string& name, const Shape& expected) {
  for (const auto& [n, t] : tensors) {
    if (n != name) continue;
    if (t.shape() != expected) {
      throw ConfigError("parameter " + name + " has shape " + to_string(t.shape()) + ", expected " + to_string(expected));
    }
    return t;
  }
  throw IoError("checkpoint lacks parameter '" + name + "'");
}

}  // namespace

const char* to_string(FusionMode mode) {
  switch (mode) {
    case FusionMode::Csca: return "csca";
    case FusionMode::RgbOnly: return "rgb_only";
    case FusionMode::AuxOnly: return "aux_only";
    case FusionMode::Early: return "early";
    case FusionMode::Late: return "late";
  }
  return "unknown";
}

FusionMode parse_fusion_mode(const std::string& text) {
  for (auto m : {FusionMode::Csca, FusionMode::RgbOnly, FusionMode::AuxOnly, FusionMode::Early, FusionMode::Late}) {
    if (text == to_string(m)) return m;
  }
  throw ConfigError("unknown fusion mode '" + text + "' (csca, rgb_only, aux_only, early, late)");
}

std::vector<std::pair<std::size_t, std::size_t>> StageConfig::stage_extents() const {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  std::size_t h = height, w = width;
  const std::size_t pad = kernel / 2;
  for (std::size_t l = 0; l < channels.size() && l < strides.size(); ++l) {
    const std::size_t s = std::max<std::size_t>(1, strides[l]);
    h = h + 2 * pad < kernel ? 0 : (h + 2 * pad - kernel) / s + 1;
    w = w + 2 * pad < kernel ? 0 : (w + 2 * pad - kernel) / s + 1;
    out.emplace_back(h, w);
  }
  return out;
}

std::pair<std::size_t, std::size_t> StageConfig::output_extents() const {
  const auto e = stage_extents();
  return e.empty() ? std::pair<std::size_t, std::size_t>{height, width} : e.back();
}

void StageConfig::validate(FusionMode mode) const {
  if (channels.empty()) throw ConfigError("network needs at least one stage");
  if (strides.size() != channels.size() || groups.size() != channels.size()) {
    throw ConfigError("channels, strides and groups must list one value per stage (" + std::to_string(channels.size()) +
                      ", " + std::to_string(strides.size()) + ", " + std::to_string(groups.size()) + ")");
  }
  if (in_channels == 0 || height == 0 || width == 0 || kernel == 0 || kernel % 2 == 0 || decoder_hidden == 0) {
    throw ConfigError("input extents, kernel (odd) and decoder width must be positive");
  }
  const auto extents = stage_extents();
  for (std::size_t l = 0; l < channels.size(); ++l) {
    if (channels[l] == 0 || strides[l] == 0) throw ConfigError("stage " + std::to_string(l) + ": zero channels or stride");
    if (extents[l].first == 0 || extents[l].second == 0) throw ConfigError("stage " + std::to_string(l) + " collapses the input");
    if (mode != FusionMode::Csca) continue;
    if (channels[l] % 2 != 0) {
      throw ConfigError("stage " + std::to_string(l) + ": CSCA needs an even channel count, got " + std::to_string(channels[l]));
    }
    const std::size_t n = extents[l].first * extents[l].second;
    if (groups[l] == 0 || n % groups[l] != 0) {
      throw ConfigError("stage " + std::to_string(l) + ": H·W=" + std::to_string(n) + " is not divisible by G=" +
                        std::to_string(groups[l]));
    }
    if (cfa_reduction == 0 || (2 * channels[l]) % cfa_reduction != 0) {
      throw ConfigError("stage " + std::to_string(l) + ": 2C=" + std::to_string(2 * channels[l]) +
                        " is not divisible by the CFA reduction " + std::to_string(cfa_reduction));
    }
  }
}

std::map<std::string, std::string> StageConfig::to_key_values() const {
  std::map<std::string, std::string> kv;
  kv["in_channels"] = std::to_string(in_channels);
  kv["height"] = std::to_string(height);
  kv["width"] = std::to_string(width);
  kv["stages"] = std::to_string(channels.size());
  kv["channels"] = join(channels);
  kv["strides"] = join(strides);
  kv["groups"] = join(groups);
  kv["kernel"] = std::to_string(kernel);
  kv["cfa_reduction"] = std::to_string(cfa_reduction);
  kv["decoder_hidden"] = std::to_string(decoder_hidden);
  kv["partition"] = partition.kind == PartitionKind::Contiguous ? "contiguous" : "random:" + std::to_string(partition.seed);
  kv["residual"] = residual ? "1" : "0";
  kv["scale_logits"] = scale_logits ? "1" : "0";
  kv["aggregate_source"] = aggregate_source == AggregateSource::ScaOutput ? "sca_output" : "backbone_feature";
  kv["decoder_output_bias"] = format_real(decoder_output_bias);
  return kv;
}

StageConfig StageConfig::from_key_values(const std::map<std::string, std::string>& kv) {
  StageConfig cfg;
  std::optional<std::size_t> stage_count;
  for (const auto& [key, value] : kv) {
    if (key == "in_channels") cfg.in_channels = parse_count(key, value);
    else if (key == "height") cfg.height = parse_count(key, value);
    else if (key == "width") cfg.width = parse_count(key, value);
    else if (key == "stages") stage_count = parse_count(key, value);
    else if (key == "channels") cfg.channels = parse_list(key, value);
    else if (key == "strides") cfg.strides = parse_list(key, value);
    else if (key == "groups") cfg.groups = parse_list(key, value);
    else if (key == "kernel") cfg.kernel = parse_count(key, value);
    else if (key == "cfa_reduction") cfg.cfa_reduction = parse_count(key, value);
    else if (key == "decoder_hidden") cfg.decoder_hidden = parse_count(key, value);
    else if (key == "residual") cfg.residual = parse_bool(key, value);
    else if (key == "scale_logits") cfg.scale_logits = parse_bool(key, value);
    else if (key == "decoder_output_bias") cfg.decoder_output_bias = parse_real(key, value);
    else if (key == "partition") {
      if (value == "contiguous") {
        cfg.partition = Partition::contiguous();
      } else if (value.rfind("random:", 0) == 0) {
        cfg.partition = Partition::seeded_random(parse_count(key, value.substr(7)));
      } else {
        throw ConfigError("partition must be 'contiguous' or 'random:<seed>', got '" + value + "'");
      }
    } else if (key == "aggregate_source") {
      if (value == "sca_output") cfg.aggregate_source = AggregateSource::ScaOutput;
      else if (value == "backbone_feature") cfg.aggregate_source = AggregateSource::BackboneFeature;
      else throw ConfigError("aggregate_source must be sca_output or backbone_feature, got '" + value + "'");
    } else {
      throw ConfigError("unknown config key '" + key + "'");
    }
  }
  // A single stride or group value applies to every stage.
  if (cfg.strides.size() == 1 && cfg.channels.size() > 1) cfg.strides.assign(cfg.channels.size(), cfg.strides[0]);
  if (cfg.groups.size() == 1 && cfg.channels.size() > 1) cfg.groups.assign(cfg.channels.size(), cfg.groups[0]);
  if (stage_count && *stage_count != cfg.channels.size()) {
    throw ConfigError("stages=" + std::to_string(*stage_count) + " but " + std::to_string(cfg.channels.size()) +
                      " channel counts given");
  }
  return cfg;
}

template <typename T>
Tensor<T> CscaNetwork<T>::run_branch(const std::vector<ConvLayer<T>>& branch, const Tensor<T>& x) const {
  Tensor<T> f = x;
  for (const auto& layer : branch) f = relu(conv2d(f, layer.weight, layer.bias, layer.stride));
  return f;
}

template <typename T>
Tensor<T> CscaNetwork<T>::decode(const Tensor<T>& features) const {
  const auto hidden = relu(conv1x1(features, decoder_hidden_.weight, decoder_hidden_.bias));
  const auto density = relu(conv1x1(hidden, decoder_out_.weight, decoder_out_.bias));
  return reshape(density, {density.extent(1), density.extent(2)});
}

template <typename T>
Tensor<T> CscaNetwork<T>::forward(const Tensor<T>& x_a, const Tensor<T>& x_b, ForwardTrace<T>* trace) const {
  const Shape expected{cfg_.in_channels, cfg_.height, cfg_.width};
  if (x_a.shape() != expected || x_b.shape() != expected) {
    throw DimensionError("network expects inputs " + to_string(expected) + ", got " + to_string(x_a.shape()) + " and " +
                         to_string(x_b.shape()));
  }
  switch (mode_) {
    case FusionMode::RgbOnly: return decode(run_branch(branch_a_, x_a));
    case FusionMode::AuxOnly: return decode(run_branch(branch_a_, x_b));
    case FusionMode::Early: return decode(run_branch(branch_a_, concat<T>({x_a, x_b}, 0)));
    case FusionMode::Late: return decode(concat<T>({run_branch(branch_a_, x_a), run_branch(branch_b_, x_b)}, 0));
    case FusionMode::Csca: break;
  }

  Tensor<T> fa = x_a;
  Tensor<T> fb = x_b;
  Tensor<T> fused;
  const std::size_t last = branch_a_.size() - 1;
  for (std::size_t l = 0; l < branch_a_.size(); ++l) {
    const auto& la = branch_a_[l];
    const auto& lb = branch_b_[l];
    fa = relu(conv2d(fa, la.weight, la.bias, la.stride));
    fb = relu(conv2d(fb, lb.weight, lb.bias, lb.stride));
    const auto sca = csca_[l].sca.forward(fa, fb);
    const bool use_sca = cfg_.aggregate_source == AggregateSource::ScaOutput;
    const auto& src_a = use_sca ? sca.z_a : fa;
    const auto& src_b = use_sca ? sca.z_b : fb;
    const auto agg = cfa_forward(sca.z_a, sca.z_b, src_a, src_b, csca_[l].cfa);
    if (trace) {
      trace->ledger += sca.ledger;
      trace->aggregated.push_back(agg.f_agg);
    }
    if (l == last) {
      fused = agg.f_agg;
      break;
    }
    const auto next_a = propagate_update(agg.f_agg, src_a);
    const auto next_b = propagate_update(agg.f_agg, src_b);
    fa = next_a;
    fb = next_b;
    if (trace) {
      trace->stream_a.push_back(fa);
      trace->stream_b.push_back(fb);
    }
  }
  return decode(fused);
}

template <typename T>
io::NamedTensors<T> CscaNetwork<T>::named_parameters() const {
  io::NamedTensors<T> out;
  auto add_branch = [&](const std::vector<ConvLayer<T>>& branch, const std::string& name) {
    for (std::size_t l = 0; l < branch.size(); ++l) {
      out.emplace_back(name + "." + std::to_string(l) + ".weight", branch[l].weight);
      out.emplace_back(name + "." + std::to_string(l) + ".bias", branch[l].bias);
    }
  };
  add_branch(branch_a_, "branch_a");
  add_branch(branch_b_, "branch_b");
  for (std::size_t l = 0; l < csca_.size(); ++l) {
    const std::string stage = "stage" + std::to_string(l) + ".";
    for (auto& nt : csca_[l].sca.named(stage + "sca.")) out.push_back(nt);
    for (auto& nt : csca_[l].cfa.named(stage + "cfa.")) out.push_back(nt);
  }
  out.emplace_back("decoder.hidden.weight", decoder_hidden_.weight);
  out.emplace_back("decoder.hidden.bias", decoder_hidden_.bias);
  out.emplace_back("decoder.out.weight", decoder_out_.weight);
  out.emplace_back("decoder.out.bias", decoder_out_.bias);
  return out;
}

template <typename T>
std::vector<Tensor<T>> CscaNetwork<T>::parameters() const {
  std::vector<Tensor<T>> out;
  for (auto& [name, t] : named_parameters()) out.push_back(t);
  return out;
}

template <typename T>
void CscaNetwork<T>::save(const std::filesystem::path& dir) const {
  io::save_checkpoint(dir, named_parameters());
  std::ofstream os(dir / kConfigName, std::ios::trunc);
  if (!os) throw IoError("cannot write " + (dir / kConfigName).string());
  os << "mode=" << to_string(mode_) << '\n';
  for (const auto& [k, v] : cfg_.to_key_values()) os << k << '=' << v << '\n';
}

template <typename T>
CscaNetwork<T> CscaNetwork<T>::load(const std::filesystem::path& dir, bool requires_grad) {
  std::ifstream is(dir / kConfigName);
  if (!is) throw IoError("checkpoint lacks " + (dir / kConfigName).string());
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw IoError("malformed checkpoint config line: " + line);
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  const auto mode_it = kv.find("mode");
  if (mode_it == kv.end()) throw IoError("checkpoint config lacks mode");
  const auto mode = parse_fusion_mode(mode_it->second);
  kv.erase(mode_it);
  auto tensors = io::load_checkpoint<T>(dir);
  if (requires_grad) {
    for (auto& [name, t] : tensors) t = t.clone_leaf(true);
  }
  return network_from_parameters<T>(StageConfig::from_key_values(kv), mode, tensors);
}

template <typename T>
CscaNetwork<T> build_network(const StageConfig& cfg, std::uint64_t seed, FusionMode mode, bool requires_grad) {
  cfg.validate(mode);
  auto rng = substream(seed, "init");
  CscaNetwork<T> net;
  net.cfg_ = cfg;
  net.mode_ = mode;
  auto make_branch = [&](std::size_t in) {
    std::vector<ConvLayer<T>> branch;
    for (std::size_t l = 0; l < cfg.stages(); ++l) {
      branch.push_back(init_conv<T>(cfg.channels[l], in, cfg.kernel, cfg.strides[l], rng, requires_grad));
      in = cfg.channels[l];
    }
    return branch;
  };
  net.branch_a_ = make_branch(branch_inputs(cfg, mode));
  if (has_two_branches(mode)) net.branch_b_ = make_branch(branch_inputs(cfg, mode));
  if (mode == FusionMode::Csca) {
    for (std::size_t l = 0; l < cfg.stages(); ++l) {
      const ScaConfig sca_cfg{cfg.groups[l], cfg.partition, cfg.residual, cfg.scale_logits};
      auto sca = ScaBlock<T>::init(cfg.channels[l], sca_cfg, rng, requires_grad);
      auto cfa = CfaWeights<T>::init(cfg.channels[l], cfg.cfa_reduction, rng, requires_grad);
      net.csca_.push_back({std::move(sca), std::move(cfa)});
    }
  }
  net.decoder_hidden_ = init_pointwise<T>(cfg.decoder_hidden, decoder_inputs(cfg, mode), rng, requires_grad, T(0));
  net.decoder_out_ =
      init_pointwise<T>(1, cfg.decoder_hidden, rng, requires_grad, static_cast<T>(cfg.decoder_output_bias), 0.01);
  return net;
}

template <typename T>
CscaNetwork<T> network_from_parameters(const StageConfig& cfg, FusionMode mode, const io::NamedTensors<T>& tensors) {
  cfg.validate(mode);
  CscaNetwork<T> net;
  net.cfg_ = cfg;
  net.mode_ = mode;
  auto load_branch = [&](const std::string& name) {
    std::vector<ConvLayer<T>> branch;
    std::size_t in = branch_inputs(cfg, mode);
    for (std::size_t l = 0; l < cfg.stages(); ++l) {
      const std::string p = name + "." + std::to_string(l) + ".";
      branch.push_back({lookup(tensors, p + "weight", {cfg.channels[l], in, cfg.kernel, cfg.kernel}),
                        lookup(tensors, p + "bias", {cfg.channels[l]}), cfg.strides[l]});
      in = cfg.channels[l];
    }
    return branch;
  };
  net.branch_a_ = load_branch("branch_a");
  if (has_two_branches(mode)) net.branch_b_ = load_branch("branch_b");
  if (mode == FusionMode::Csca) {
    for (std::size_t l = 0; l < cfg.stages(); ++l) {
      const std::string stage = "stage" + std::to_string(l) + ".";
      const ScaConfig sca_cfg{cfg.groups[l], cfg.partition, cfg.residual, cfg.scale_logits};
      ScaBlock<T> sca(ProjectionSet<T>::from_named(tensors, stage + "sca.a."),
                      ProjectionSet<T>::from_named(tensors, stage + "sca.b."), sca_cfg);
      if (sca.proj_a().channels() != cfg.channels[l]) throw ConfigError("stage " + std::to_string(l) + ": SCA width mismatch");
      auto cfa = CfaWeights<T>::from_named(tensors, stage + "cfa.", cfg.cfa_reduction);
      if (cfa.channels() != cfg.channels[l]) throw ConfigError("stage " + std::to_string(l) + ": CFA width mismatch");
      net.csca_.push_back({std::move(sca), std::move(cfa)});
    }
  }
  const std::size_t dec_in = decoder_inputs(cfg, mode);
  net.decoder_hidden_ = {lookup(tensors, "decoder.hidden.weight", {cfg.decoder_hidden, dec_in}),
                         lookup(tensors, "decoder.hidden.bias", {cfg.decoder_hidden}), 1};
  net.decoder_out_ = {lookup(tensors, "decoder.out.weight", {1, cfg.decoder_hidden}),
                      lookup(tensors, "decoder.out.bias", {1}), 1};
  return net;
}

template <typename T>
double train_step(CscaNetwork<T>& net, std::span<const TrainingPair<T>> batch, double lr) {
  if (batch.empty()) throw ContractError("train_step: empty batch");
  Tensor<T> total;
  bool first = true;
  for (const auto& pair : batch) {
    const auto pred = net.forward(pair.x_a, pair.x_b);
    if (pred.shape() != pair.gt_density.shape()) {
      throw DimensionError("train_step: ground truth " + to_string(pair.gt_density.shape()) +
                           " does not match prediction " + to_string(pred.shape()));
    }
    const auto loss = mse_loss(pred, pair.gt_density);
    total = first ? loss : add(total, loss);
    first = false;
  }
  const auto loss = scale(total, static_cast<T>(1.0 / static_cast<double>(batch.size())));
  const double value = static_cast<double>(loss.item());
  if (!std::isfinite(value)) throw NumericError("train_step: non-finite loss");
  auto params = net.parameters();
  for (auto& p : params) p.zero_grad();
  backward(loss);
  const T step = static_cast<T>(lr);
  for (auto& p : params) {
    if (!p.has_grad()) continue;
    const auto g = p.grad();
    auto values = p.mutable_data();
    for (std::size_t i = 0; i < values.size(); ++i) values[i] -= step * g[i];
    p.zero_grad();
  }
  return value;
}

template <typename T>
double evaluate_loss(const CscaNetwork<T>& net, std::span<const TrainingPair<T>> batch) {
  if (batch.empty()) throw ContractError("evaluate_loss: empty batch");
  double total = 0.0;
  for (const auto& pair : batch) {
    const auto pred = net.forward(pair.x_a, pair.x_b);
    if (pred.shape() != pair.gt_density.shape()) {
      throw DimensionError("evaluate_loss: ground truth does not match prediction shape");
    }
    total += static_cast<double>(mse_loss(pred, pair.gt_density).item());
  }
  return total / static_cast<double>(batch.size());
}

template class CscaNetwork<float>;
template class CscaNetwork<double>;
template CscaNetwork<float> build_network<float>(const StageConfig&, std::uint64_t, FusionMode, bool);
template CscaNetwork<double> build_network<double>(const StageConfig&, std::uint64_t, FusionMode, bool);
template CscaNetwork<float> network_from_parameters<float>(const StageConfig&, FusionMode, const io::NamedTensors<float>&);
template CscaNetwork<double> network_from_parameters<double>(const StageConfig&, FusionMode,
                                                             const io::NamedTensors<double>&);
template double train_step<float>(CscaNetwork<float>&, std::span<const TrainingPair<float>>, double);
template double train_step<double>(CscaNetwork<double>&, std::span<const TrainingPair<double>>, double);
template double evaluate_loss<float>(const CscaNetwork<float>&, std::span<const TrainingPair<float>>);
template double evaluate_loss<double>(const CscaNetwork<double>&, std::span<const TrainingPair<double>>);

}  // namespace csca
