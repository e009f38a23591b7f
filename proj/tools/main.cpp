#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "commands.hpp"
#include "csca/error.hpp"
#include "csca/kernels.hpp"

namespace {

using namespace csca;

std::vector<std::size_t> parse_sizes(const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ',')) out.push_back(std::stoull(part));
  return out;
}

std::ostream& open_or_stdout(const std::string& path, std::ofstream& file) {
  if (path.empty() || path == "-") return std::cout;
  file.open(path, std::ios::trunc);
  if (!file) throw IoError("cannot write " + path);
  return file;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App cli{"Cross-modal spatio-channel attention toolkit"};
  cli.require_subcommand(1);

  // bench
  auto* bench = cli.add_subcommand("bench", "Non-local vs SCA FLOP ledgers and wall-times");
  std::string grid_text;
  std::string bench_g;
  std::size_t repeats = 5;
  int threads = 1;
  std::uint64_t bench_seed = 0;
  std::string bench_out;
  bool no_time = false;
  bench->add_option("--grid", grid_text, "C:H:W:G points, comma separated; G may be a '/' list");
  bench->add_option("--g-factor", bench_g, "Override G for every grid shape (comma list)");
  bench->add_option("--repeats", repeats, "Timed repeats per point (median is reported)")->check(CLI::Range(1, 1000));
  bench->add_option("--threads", threads, "Matmul row-parallelism degree")->check(CLI::Range(1, 256));
  bench->add_option("--seed", bench_seed, "Seed for inputs and weights");
  bench->add_option("--out", bench_out, "CSV output path (default stdout)");
  bench->add_flag("--no-time", no_time, "Skip timing; ledger only");

  // gradcheck
  auto* grad = cli.add_subcommand("gradcheck", "Finite-difference gradient suites (64-bit)");
  std::uint64_t grad_seed = 0;
  std::string corrupt;
  std::string grad_out;
  grad->add_option("--seed", grad_seed, "Seed for random inputs");
  grad->add_option("--corrupt-adjoint", corrupt, "Test hook: scale this op's adjoint by 1.5");
  grad->add_option("--out", grad_out, "CSV output path (default stdout)");

  // gen-data
  auto* gen = cli.add_subcommand("gen-data", "Write a synthetic multimodal crowd dataset");
  synth::DatasetSpec spec;
  std::string gen_out;
  gen->add_option("--out", gen_out, "Output directory")->required();
  gen->add_option("--n", spec.count, "Number of samples")->check(CLI::Range(1, 1000000));
  gen->add_option("--seed", spec.seed, "Dataset seed");
  gen->add_option("--train-fraction", spec.train_fraction, "Fraction of samples in the training split");
  gen->add_option("--height", spec.height, "Image height");
  gen->add_option("--width", spec.width, "Image width");
  gen->add_option("--out-height", spec.out_height, "Density map height");
  gen->add_option("--out-width", spec.out_width, "Density map width");
  gen->add_option("--sigma", spec.sigma, "Gaussian sigma in image pixels");
  gen->add_option("--channels", spec.channels, "Channels per modality");

  // train
  auto* train = cli.add_subcommand("train", "Train one fusion variant on a synthetic dataset");
  app::TrainOptions topts;
  std::string data_dir, mode_text = "csca", stages_text, g_text, strides_text, config_path, train_out;
  train->add_option("--data", data_dir, "Dataset directory")->required();
  train->add_option("--mode", mode_text, "csca | rgb_only | aux_only | early | late");
  train->add_option("--epochs", topts.epochs, "Training epochs");
  train->add_option("--lr", topts.lr, "Gradient-descent step size");
  train->add_option("--batch", topts.batch, "Samples per update")->check(CLI::Range(1, 1000000));
  train->add_option("--seed", topts.seed, "Initialization and shuffling seed");
  train->add_option("--stages", stages_text, "Channels per stage, e.g. 8,16");
  train->add_option("--g-factor", g_text, "Grouping factor per stage (one value applies to all)");
  train->add_option("--strides", strides_text, "Stride per stage (one value applies to all)");
  train->add_option("--config", config_path, "key=value network config file");
  train->add_option("--out", train_out, "Checkpoint directory")->required();

  // eval
  auto* eval = cli.add_subcommand("eval", "GAME/MAE/RMSE report for a checkpoint");
  std::string ckpt, eval_data, eval_out, split_text = "test";
  unsigned levels = 3;
  bool oracle = false;
  eval->add_option("--checkpoint", ckpt, "Checkpoint directory");
  eval->add_option("--data", eval_data, "Dataset directory")->required();
  eval->add_option("--levels", levels, "Highest GAME level")->check(CLI::Range(0, 8));
  eval->add_option("--split", split_text, "test | train")->check(CLI::IsMember({"test", "train"}));
  eval->add_option("--out", eval_out, "CSV output path (default stdout)");
  eval->add_flag("--oracle", oracle, "Test hook: score the ground truth against itself");

  CLI11_PARSE(cli, argc, argv);

  try {
    if (*bench) {
      app::BenchOptions opts;
      if (!grid_text.empty()) opts.grid = app::parse_grid(grid_text);
      if (!bench_g.empty()) {
        std::vector<app::GridPoint> expanded;
        std::vector<std::tuple<std::size_t, std::size_t, std::size_t>> shapes;
        for (const auto& p : opts.grid) {
          auto key = std::make_tuple(p.channels, p.height, p.width);
          if (std::find(shapes.begin(), shapes.end(), key) == shapes.end()) shapes.push_back(key);
        }
        for (const auto& [c, h, w] : shapes) {
          for (auto g : parse_sizes(bench_g)) expanded.push_back({c, h, w, g});
        }
        opts.grid = expanded;
      }
      opts.repeats = repeats;
      opts.threads = threads;
      opts.seed = bench_seed;
      opts.time = !no_time;
      const auto report = app::run_bench(opts);
      std::ofstream file;
      app::write_bench_csv(open_or_stdout(bench_out, file), report);
      for (const auto& v : report.violations) std::cerr << "error: " << v << '\n';
      std::cerr << (report.flop_ratio_exact ? "FLOP ratio exact on every valid grid point\n"
                                            : "FLOP ratio check FAILED\n");
      return report.flop_ratio_exact ? 0 : 1;
    }
    if (*grad) {
      const auto rows = app::run_gradcheck({grad_seed, corrupt, true});
      std::ofstream file;
      auto& os = open_or_stdout(grad_out, file);
      os << "suite,op,max_rel_error,tolerance,checked,skipped_kinks,status\n";
      bool ok = true;
      for (const auto& r : rows) {
        os << r.suite << ',' << r.op << ',' << r.max_rel_error << ',' << r.tolerance << ',' << r.checked << ','
           << r.skipped << ',' << (r.passed ? "pass" : "FAIL") << '\n';
        if (!r.passed) {
          ok = false;
          std::cerr << "gradcheck failed: " << r.suite << "/" << r.op << " max relative error " << r.max_rel_error << '\n';
        }
      }
      return ok ? 0 : 1;
    }
    if (*gen) {
      const auto ds = app::run_gen_data(spec, gen_out);
      std::cout << "wrote " << ds.entries.size() << " samples to " << gen_out << '\n';
      return 0;
    }
    if (*train) {
      if (!config_path.empty()) topts.network = StageConfig::from_key_values(app::read_key_values(config_path));
      if (!stages_text.empty()) {
        topts.network.channels = parse_sizes(stages_text);
        const auto n = topts.network.channels.size();
        if (topts.network.strides.size() != n) topts.network.strides.assign(n, topts.network.strides.front());
        if (topts.network.groups.size() != n) topts.network.groups.assign(n, topts.network.groups.front());
      }
      auto broadcast = [&](const std::string& text, std::vector<std::size_t>& dst) {
        if (text.empty()) return;
        auto v = parse_sizes(text);
        if (v.size() == 1) v.assign(topts.network.channels.size(), v[0]);
        dst = v;
      };
      broadcast(g_text, topts.network.groups);
      broadcast(strides_text, topts.network.strides);
      topts.mode = parse_fusion_mode(mode_text);
      topts.out = train_out;
      const auto ds = synth::read_dataset(data_dir);
      const auto result = app::run_train(ds, topts);
      std::ofstream log(std::filesystem::path(train_out) / "train_log.csv", std::ios::trunc);
      app::write_train_log(log, result, topts);
      app::write_train_log(std::cout, result, topts);
      return 0;
    }
    if (*eval) {
      const auto ds = synth::read_dataset(eval_data);
      app::EvalOptions eopts;
      eopts.max_level = levels;
      eopts.split = split_text == "test" ? synth::Split::Test : synth::Split::Train;
      eopts.oracle = oracle;
      std::optional<CscaNetwork<float>> net;
      if (!oracle) {
        if (ckpt.empty()) throw ContractError("eval needs --checkpoint unless --oracle is given");
        net = CscaNetwork<float>::load(ckpt);
      }
      const auto report = app::run_eval(net ? &*net : nullptr, ds, eopts);
      std::ofstream file;
      app::write_eval_csv(open_or_stdout(eval_out, file), report);
      app::write_eval_table(eval_out.empty() ? std::cerr : std::cout, report);
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
