#include "commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <functional>
#include <map>
#include <numeric>
#include <ostream>
#include <random>
#include <tuple>
#include <sstream>

#include "csca/attention.hpp"
#include "csca/cfa.hpp"
#include "csca/error.hpp"
#include "csca/gradcheck.hpp"
#include "csca/kernels.hpp"
#include "csca/metrics.hpp"
#include "csca/ops.hpp"
#include "csca/random.hpp"

namespace csca::app {

namespace {

std::size_t to_size(const std::string& text, const std::string& what) {
  try {
    std::size_t used = 0;
    const auto v = std::stoull(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("malformed " + what + " '" + text + "'");
  }
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

template <typename Fn>
std::vector<double> time_runs(std::size_t repeats, Fn&& fn) {
  std::vector<double> ms;
  for (std::size_t r = 0; r < repeats; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    const auto t1 = std::chrono::steady_clock::now();
    ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
  }
  return ms;
}

std::string format_point(const GridPoint& p) {
  return std::to_string(p.channels) + ":" + std::to_string(p.height) + ":" + std::to_string(p.width) + ":" +
         std::to_string(p.groups);
}

}  // namespace

// ---- bench -----------------------------------------------------------------

std::vector<GridPoint> parse_grid(const std::string& text) {
  std::vector<GridPoint> grid;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream fs(item);
    std::string f;
    while (std::getline(fs, f, ':')) fields.push_back(f);
    if (fields.size() != 4) throw ConfigError("grid point '" + item + "' is not C:H:W:G");
    const auto c = to_size(fields[0], "channel count");
    const auto h = to_size(fields[1], "height");
    const auto w = to_size(fields[2], "width");
    std::stringstream gs(fields[3]);
    std::string g;
    while (std::getline(gs, g, '/')) grid.push_back({c, h, w, to_size(g, "group factor")});
  }
  if (grid.empty()) throw ConfigError("empty benchmark grid");
  return grid;
}

std::vector<GridPoint> default_grid() {
  return parse_grid("8:8:8:1/2/4/8/16,16:16:16:1/2/4/8/16,32:32:32:1/2/4/8/16,32:64:64:1/2/4/8/16");
}

BenchReport run_bench(const BenchOptions& options) {
  kernels::set_num_threads(options.threads);
  BenchReport report;
  struct Baseline {
    FlopLedger ledger;
    double wall_ms = 0.0;
  };
  std::map<std::tuple<std::size_t, std::size_t, std::size_t>, Baseline> baselines;

  for (const auto& point : options.grid) {
    const std::size_t n = point.height * point.width;
    if (point.channels == 0 || point.channels % 2 != 0 || n == 0 || point.groups == 0 || n % point.groups != 0) {
      BenchRow row;
      row.kind = "skipped";
      row.point = point;
      row.threads = options.threads;
      row.note = "invalid grid point (needs even C and G dividing H*W)";
      report.rows.push_back(row);
      continue;
    }
    auto data_rng = substream(options.seed, "data", point.channels * 1000003ULL + n);
    const Shape shape{point.channels, point.height, point.width};
    const auto x_a = uniform_tensor<float>(shape, -1.0f, 1.0f, data_rng);
    const auto x_b = uniform_tensor<float>(shape, -1.0f, 1.0f, data_rng);
    auto init_rng = substream(options.seed, "init", point.channels);
    const auto proj_a = ProjectionSet<float>::init(point.channels, init_rng);
    const auto proj_b = ProjectionSet<float>::init(point.channels, init_rng);

    const auto key = std::make_tuple(point.channels, point.height, point.width);
    auto it = baselines.find(key);
    if (it == baselines.end()) {
      Baseline base;
      auto run = [&] {
        auto la = nonlocal_forward(x_a, proj_a);
        auto lb = nonlocal_forward(x_b, proj_b);
        base.ledger = la.ledger;
        base.ledger += lb.ledger;
      };
      if (options.time) {
        run();  // warm-up
        base.wall_ms = median(time_runs(options.repeats, run));
      } else {
        run();
      }
      it = baselines.emplace(key, base).first;
      BenchRow row;
      row.kind = "nonlocal";
      row.point = {point.channels, point.height, point.width, 1};
      row.attention_mults = base.ledger.attention_mults_per_direction();
      row.total_mults = base.ledger.total();
      row.wall_ms = base.wall_ms;
      row.threads = options.threads;
      report.rows.push_back(row);
    }
    const auto& base = it->second;

    const ScaConfig cfg{point.groups, Partition::contiguous(), true, true};
    FlopLedger ledger;
    auto run = [&] { ledger = sca_forward(x_a, x_b, proj_a, proj_b, cfg).ledger; };
    double wall = 0.0;
    if (options.time) {
      run();
      wall = median(time_runs(options.repeats, run));
    } else {
      run();
    }
    BenchRow row;
    row.kind = "sca";
    row.point = point;
    row.attention_mults = ledger.attention_mults_per_direction();
    row.total_mults = ledger.total();
    row.wall_ms = wall;
    row.speedup = wall > 0.0 ? base.wall_ms / wall : 0.0;
    row.threads = options.threads;
    // Exact integer claim: baseline attention MACs = G × SCA attention MACs,
    // both per direction and summed over the modality pair.
    const bool per_direction = base.ledger.attention_mults_per_direction() == point.groups * row.attention_mults;
    const bool paired = base.ledger.attention_mults == point.groups * ledger.attention_mults;
    if (!per_direction || !paired) {
      report.flop_ratio_exact = false;
      report.violations.push_back("FLOP ratio violated at " + format_point(point));
      row.note = "ratio violated";
    }
    report.rows.push_back(row);
  }
  return report;
}

void write_bench_csv(std::ostream& os, const BenchReport& report) {
  os << "kind,C,H,W,G,attention_mults,total_mults,wall_ms,speedup,threads,note\n";
  for (const auto& r : report.rows) {
    os << r.kind << ',' << r.point.channels << ',' << r.point.height << ',' << r.point.width << ',' << r.point.groups
       << ',' << r.attention_mults << ',' << r.total_mults << ',' << std::fixed << std::setprecision(3) << r.wall_ms
       << ',' << r.speedup << std::defaultfloat << ',' << r.threads << ',' << r.note << '\n';
  }
}

// ---- gradcheck ---------------------------------------------------------------

namespace {

using TD = Tensor<double>;

// Weighted sum against a fixed random tensor so every output coordinate
// carries a distinct adjoint.
TD probe(const TD& y, Rng& rng) {
  const auto weights = uniform_tensor<double>(y.shape(), -1.0, 1.0, rng);
  return sum(hadamard(y, weights));
}

GradcheckRow check(const std::string& suite, const std::string& op, const std::function<TD()>& f,
                   std::vector<TD> leaves, double tol, std::size_t max_coords = 0, bool skip_kinks = false) {
  GradcheckRow row{suite, op, 0.0, tol, false};
  try {
    const auto rep =
        finite_diff_check<double>(f, std::move(leaves), GradCheckOptions{1e-4, tol, max_coords, skip_kinks});
    row.max_rel_error = rep.max_rel_error;
    row.passed = rep.passed;
    row.checked = rep.coordinates_checked;
    row.skipped = rep.coordinates_skipped;
  } catch (const std::exception& e) {
    row.max_rel_error = INFINITY;
    row.passed = false;
  }
  return row;
}

// Values bounded away from zero so ReLU kinks are never straddled by ±step.
TD away_from_zero(const Shape& shape, Rng& rng) {
  std::uniform_real_distribution<double> mag(0.2, 1.0);
  std::bernoulli_distribution sign(0.5);
  std::vector<double> v(numel(shape));
  for (auto& x : v) x = sign(rng) ? mag(rng) : -mag(rng);
  return TD(shape, std::move(v), true);
}

std::vector<GradcheckRow> tensor_suites(std::uint64_t seed) {
  std::vector<GradcheckRow> rows;
  auto rng = substream(seed, "gradcheck-ops");
  const double tol = 1e-4;
  auto leaf = [&](const Shape& s) { return uniform_tensor<double>(s, -1.0, 1.0, rng, true); };

  {
    auto a = leaf({4, 8}), b = leaf({8, 6});
    auto r = substream(seed, "probe", 1);
    rows.push_back(check("tensor-core", "matmul", [=]() mutable { auto rr = r; return probe(matmul(a, b), rr); }, {a, b}, tol));
  }
  {
    auto x = leaf({4, 8, 8});
    auto r = substream(seed, "probe", 2);
    rows.push_back(check("tensor-core", "permute", [=] { auto rr = r; return probe(permute(x, {2, 0, 1}), rr); }, {x}, tol));
    rows.push_back(check("tensor-core", "reshape", [=] { auto rr = r; return probe(reshape(x, {8, 32}), rr); }, {x}, tol));
    rows.push_back(check("tensor-core", "scale", [=] { auto rr = r; return probe(scale(x, 2.5), rr); }, {x}, tol));
    rows.push_back(check("tensor-core", "sum", [=] { return scale(sum(hadamard(x, x)), 0.5); }, {x}, tol));
    rows.push_back(check("tensor-core", "mean", [=] { return mean(hadamard(x, x)); }, {x}, tol));
    rows.push_back(check("tensor-core", "slice", [=] { auto rr = r; return probe(slice(x, 1, 2, 7), rr); }, {x}, tol));
    rows.push_back(check("tensor-core", "softmax", [=] { auto rr = r; return probe(softmax(scale(x, 3.0), 2), rr); }, {x}, tol));
    rows.push_back(check("tensor-core", "softmax-axis0", [=] { auto rr = r; return probe(softmax(x, 0), rr); }, {x}, tol));
  }
  {
    auto x = leaf({2, 3, 4}), y = leaf({2, 3, 4});
    auto r = substream(seed, "probe", 3);
    rows.push_back(check("tensor-core", "add", [=] { auto rr = r; return probe(add(x, y), rr); }, {x, y}, tol));
    rows.push_back(check("tensor-core", "sub", [=] { auto rr = r; return probe(sub(x, y), rr); }, {x, y}, tol));
    rows.push_back(check("tensor-core", "hadamard", [=] { auto rr = r; return probe(hadamard(x, y), rr); }, {x, y}, tol));
    rows.push_back(check("tensor-core", "concat", [=] { auto rr = r; return probe(concat<double>({x, y}, 1), rr); }, {x, y}, tol));
    rows.push_back(check("tensor-core", "mse_loss", [=] { return mse_loss(x, y); }, {x, y}, tol));
  }
  {
    auto x = away_from_zero({4, 8, 8}, rng);
    auto r = substream(seed, "probe", 4);
    rows.push_back(check("tensor-core", "relu", [=] { auto rr = r; return probe(relu(x), rr); }, {x}, tol));
  }
  {
    auto x = leaf({4, 8, 8}), w = leaf({3, 4}), b = leaf({3});
    auto r = substream(seed, "probe", 5);
    rows.push_back(check("tensor-core", "conv1x1", [=] { auto rr = r; return probe(conv1x1(x, w, b), rr); }, {x, w, b}, tol));
  }
  {
    auto x = leaf({2, 8, 8}), w = leaf({3, 2, 3, 3}), b = leaf({3});
    auto r = substream(seed, "probe", 6);
    rows.push_back(check("tensor-core", "conv2d", [=] { auto rr = r; return probe(conv2d(x, w, b, 1), rr); }, {x, w, b}, tol));
    rows.push_back(check("tensor-core", "conv2d-stride2", [=] { auto rr = r; return probe(conv2d(x, w, b, 2), rr); }, {x, w, b}, tol));
  }
  {
    auto x = leaf({4, 6});
    std::vector<std::size_t> idx{5, 0, 23, 7, 7, 12, 1, 19};
    auto r = substream(seed, "probe", 7);
    rows.push_back(check("tensor-core", "gather", [=] { auto rr = r; return probe(gather(x, idx, {2, 4}), rr); }, {x}, tol));
  }
  return rows;
}

std::vector<GradcheckRow> attention_suites(std::uint64_t seed) {
  std::vector<GradcheckRow> rows;
  auto rng = substream(seed, "gradcheck-attention");
  const double tol = 1e-4;
  const Shape shape{4, 8, 8};
  auto x_a = uniform_tensor<double>(shape, -1.0, 1.0, rng, true);
  auto x_b = uniform_tensor<double>(shape, -1.0, 1.0, rng, true);
  const auto pa = ProjectionSet<double>::init(4, rng, true);
  const auto pb = ProjectionSet<double>::init(4, rng, true);
  auto r = substream(seed, "probe", 10);

  std::vector<TD> leaves{x_a, x_b};
  for (auto& p : pa.parameters()) leaves.push_back(p);
  for (auto& p : pb.parameters()) leaves.push_back(p);

  for (const auto& [name, cfg] : std::vector<std::pair<std::string, ScaConfig>>{
           {"sca_forward(G=4)", ScaConfig{4, Partition::contiguous(), true, true}},
           {"sca_forward(G=2 random)", ScaConfig{2, Partition::seeded_random(seed + 7), true, true}},
           {"sca_forward(G=1 no-residual)", ScaConfig{1, Partition::contiguous(), false, true}}}) {
    rows.push_back(check("attention-blocks", name,
                         [=] {
                           auto rr = r;
                           const auto out = sca_forward(x_a, x_b, pa, pb, cfg);
                           return add(probe(out.z_a, rr), probe(out.z_b, rr));
                         },
                         leaves, tol));
  }
  {
    auto x = uniform_tensor<double>({4, 4, 4}, -1.0, 1.0, rng, true);
    std::vector<TD> nl{x};
    for (auto& p : pa.parameters()) nl.push_back(p);
    rows.push_back(check("attention-blocks", "nonlocal_forward",
                         [=] { auto rr = r; return probe(nonlocal_forward(x, pa).out, rr); }, nl, tol));
  }
  return rows;
}

std::vector<GradcheckRow> cfa_suites(std::uint64_t seed) {
  std::vector<GradcheckRow> rows;
  auto rng = substream(seed, "gradcheck-cfa");
  const double tol = 1e-4;
  const Shape shape{4, 8, 8};
  auto z_a = uniform_tensor<double>(shape, -1.0, 1.0, rng, true);
  auto z_b = uniform_tensor<double>(shape, -1.0, 1.0, rng, true);
  const auto w = CfaWeights<double>::init(4, 4, rng, true);
  auto r = substream(seed, "probe", 20);
  std::vector<TD> leaves{z_a, z_b};
  for (auto& p : w.parameters()) leaves.push_back(p);
  rows.push_back(check("cfa", "cfa_forward", [=] { auto rr = r; return probe(cfa_forward(z_a, z_b, w).f_agg, rr); }, leaves, tol, 0, true));
  rows.push_back(check("cfa", "propagate_update", [=] { auto rr = r; return probe(propagate_update(z_a, z_b), rr); }, {z_a, z_b}, tol));

  // SCA feeding CFA, then the propagation rule.
  auto x_a = uniform_tensor<double>(shape, -1.0, 1.0, rng, true);
  auto x_b = uniform_tensor<double>(shape, -1.0, 1.0, rng, true);
  const auto pa = ProjectionSet<double>::init(4, rng, true);
  const auto pb = ProjectionSet<double>::init(4, rng, true);
  const ScaConfig cfg{4, Partition::contiguous(), true, true};
  std::vector<TD> stack{x_a, x_b};
  for (auto& p : pa.parameters()) stack.push_back(p);
  for (auto& p : pb.parameters()) stack.push_back(p);
  for (auto& p : w.parameters()) stack.push_back(p);
  rows.push_back(check("csca", "sca+cfa",
                       [=] {
                         auto rr = r;
                         const auto s = sca_forward(x_a, x_b, pa, pb, cfg);
                         const auto agg = cfa_forward(s.z_a, s.z_b, w);
                         return add(probe(propagate_update(agg.f_agg, s.z_a), rr), probe(propagate_update(agg.f_agg, s.z_b), rr));
                       },
                       stack, tol, 0, true));
  return rows;
}

std::vector<GradcheckRow> network_suites(std::uint64_t seed) {
  StageConfig cfg;
  cfg.in_channels = 1;
  cfg.height = 16;
  cfg.width = 16;
  cfg.channels = {8, 8};
  cfg.strides = {2, 2};
  cfg.groups = {4, 4};
  cfg.decoder_hidden = 8;
  cfg.decoder_output_bias = 0.5;
  auto net = build_network<double>(cfg, seed, FusionMode::Csca, true);
  auto rng = substream(seed, "gradcheck-network");
  auto x_a = uniform_tensor<double>({1, 16, 16}, 0.0, 1.0, rng, true);
  auto x_b = uniform_tensor<double>({1, 16, 16}, 0.0, 1.0, rng, true);
  const auto gt = uniform_tensor<double>({4, 4}, 0.0, 1.0, rng);
  std::vector<TD> leaves{x_a, x_b};
  for (auto& p : net.parameters()) leaves.push_back(p);
  return {check("backbone-pipeline", "network(2 stages 8 ch 16x16)",
                [=] { return mse_loss(net.forward(x_a, x_b), gt); }, leaves, 1e-3, 48, true)};
}

}  // namespace

std::vector<GradcheckRow> run_gradcheck(const GradcheckOptions& options) {
  if (!options.corrupt_op.empty()) testing::corrupt_adjoint(options.corrupt_op, 1.5);
  struct Reset {
    bool active;
    ~Reset() {
      if (active) testing::clear_corruption();
    }
  } reset{!options.corrupt_op.empty()};

  std::vector<GradcheckRow> rows = tensor_suites(options.seed);
  for (auto& r : attention_suites(options.seed)) rows.push_back(r);
  for (auto& r : cfa_suites(options.seed)) rows.push_back(r);
  if (options.include_network) {
    for (auto& r : network_suites(options.seed)) rows.push_back(r);
  }
  return rows;
}

// ---- gen-data -----------------------------------------------------------------

synth::Dataset run_gen_data(const synth::DatasetSpec& spec, const std::filesystem::path& out) {
  return synth::make_dataset(spec, out);
}

// ---- train -------------------------------------------------------------------

namespace {

std::vector<TrainingPair<float>> pairs_for(const synth::Dataset& ds, const std::vector<std::size_t>& idx) {
  std::vector<TrainingPair<float>> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back({ds.samples[i].mod_a, ds.samples[i].mod_b, ds.samples[i].gt_density});
  return out;
}

struct CountErrors {
  double mae = 0.0;
  double rmse = 0.0;
};

CountErrors count_errors(const CscaNetwork<float>& net, const std::vector<TrainingPair<float>>& pairs) {
  if (pairs.empty()) return {};
  std::vector<Tensor<float>> preds, gts;
  for (const auto& p : pairs) {
    preds.push_back(net.forward(p.x_a, p.x_b));
    gts.push_back(p.gt_density);
  }
  return {metrics::mae<float>(preds, gts), metrics::rmse<float>(preds, gts)};
}

}  // namespace

TrainResult run_train(const synth::Dataset& dataset, TrainOptions options) {
  if (options.batch == 0) throw ConfigError("batch size must be positive");
  auto& cfg = options.network;
  cfg.in_channels = dataset.spec.channels;
  cfg.height = dataset.spec.height;
  cfg.width = dataset.spec.width;
  cfg.validate(options.mode);
  const auto out = cfg.output_extents();
  if (out.first != dataset.spec.out_height || out.second != dataset.spec.out_width) {
    throw ConfigError("network output " + std::to_string(out.first) + "x" + std::to_string(out.second) +
                      " does not match the dataset density maps " + std::to_string(dataset.spec.out_height) + "x" +
                      std::to_string(dataset.spec.out_width));
  }
  const auto train = pairs_for(dataset, dataset.indices(synth::Split::Train));
  const auto test = pairs_for(dataset, dataset.indices(synth::Split::Test));
  if (train.empty()) throw ConfigError("dataset has no training samples");

  TrainResult result{{}, build_network<float>(cfg, options.seed, options.mode, true)};
  auto& net = result.network;
  auto log_epoch = [&](std::size_t epoch) {
    const auto errs = count_errors(net, test);
    result.log.push_back({epoch, evaluate_loss<float>(net, train), errs.mae, errs.rmse});
  };
  log_epoch(0);
  std::vector<std::size_t> order(train.size());
  std::vector<TrainingPair<float>> batch;
  for (std::size_t epoch = 1; epoch <= options.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    auto shuffle_rng = substream(options.seed, "shuffle", epoch);
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    for (std::size_t start = 0; start < order.size(); start += options.batch) {
      batch.clear();
      for (std::size_t i = start; i < std::min(order.size(), start + options.batch); ++i) batch.push_back(train[order[i]]);
      train_step<float>(net, batch, options.lr);
    }
    log_epoch(epoch);
  }
  if (options.out) net.save(*options.out);
  return result;
}

void write_train_log(std::ostream& os, const TrainResult& result, const TrainOptions& options) {
  os << "# mode=" << to_string(options.mode) << " epochs=" << options.epochs << " lr=" << options.lr
     << " batch=" << options.batch << " seed=" << options.seed << '\n';
  os << "epoch,train_loss,test_mae,test_rmse\n";
  os << std::setprecision(9);
  for (const auto& e : result.log) os << e.epoch << ',' << e.train_loss << ',' << e.test_mae << ',' << e.test_rmse << '\n';
}

// ---- eval --------------------------------------------------------------------

EvalReport run_eval(const CscaNetwork<float>* net, const synth::Dataset& dataset, const EvalOptions& options) {
  if (!options.oracle && net == nullptr) throw ContractError("run_eval: no network given");
  if (net) {
    const auto& cfg = net->config();
    const auto out = cfg.output_extents();
    if (cfg.in_channels != dataset.spec.channels || cfg.height != dataset.spec.height || cfg.width != dataset.spec.width ||
        out.first != dataset.spec.out_height || out.second != dataset.spec.out_width) {
      throw ConfigError("checkpoint and dataset extents are incompatible");
    }
  }
  EvalReport report;
  auto evaluate = [&](const std::string& name, const std::vector<std::size_t>& idx) {
    if (idx.empty()) return;
    std::vector<Tensor<float>> preds, gts;
    for (auto i : idx) {
      const auto& s = dataset.samples[i];
      preds.push_back(options.oracle ? s.gt_density : net->forward(s.mod_a, s.mod_b));
      gts.push_back(s.gt_density);
    }
    SubsetMetrics m;
    m.subset = name;
    m.images = idx.size();
    for (unsigned l = 0; l <= options.max_level; ++l) m.game.push_back(metrics::game<float>(preds, gts, l));
    m.mae = metrics::mae<float>(preds, gts);
    m.rmse = metrics::rmse<float>(preds, gts);
    report.subsets.push_back(std::move(m));
  };
  evaluate("all", dataset.indices(options.split));
  evaluate("bright", dataset.indices(options.split, synth::Illumination::Bright));
  evaluate("dark", dataset.indices(options.split, synth::Illumination::Dark));
  if (report.subsets.empty()) throw ContractError("run_eval: the selected split is empty");
  return report;
}

void write_eval_csv(std::ostream& os, const EvalReport& report) {
  os << "metric,L,value\n";
  os << std::setprecision(17);
  for (const auto& s : report.subsets) {
    const std::string suffix = s.subset == "all" ? "" : "@" + s.subset;
    os << "images" << suffix << ",," << s.images << '\n';
    for (std::size_t l = 0; l < s.game.size(); ++l) os << "GAME" << suffix << ',' << l << ',' << s.game[l] << '\n';
    os << "MAE" << suffix << ",," << s.mae << '\n';
    os << "RMSE" << suffix << ",," << s.rmse << '\n';
  }
}

void write_eval_table(std::ostream& os, const EvalReport& report) {
  os << std::left << std::setw(8) << "subset" << std::setw(7) << "images";
  if (!report.subsets.empty()) {
    for (std::size_t l = 0; l < report.subsets.front().game.size(); ++l) os << std::setw(11) << ("GAME(" + std::to_string(l) + ")");
  }
  os << std::setw(11) << "MAE" << "RMSE\n";
  os << std::fixed << std::setprecision(4);
  for (const auto& s : report.subsets) {
    os << std::setw(8) << s.subset << std::setw(7) << s.images;
    for (auto g : s.game) os << std::setw(11) << g;
    os << std::setw(11) << s.mae << s.rmse << '\n';
  }
  os << std::defaultfloat;
}

std::map<std::string, std::string> read_key_values(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot read config " + path.string());
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(is, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("config line without '=': " + line);
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return kv;
}

}  // namespace csca::app
