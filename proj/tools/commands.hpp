#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "csca/network.hpp"
#include "csca/synthdata.hpp"

// Subcommand implementations shared by the csca executable and the test
// suites. Each returns a structured result; printing and exit codes are the
// caller's business.
namespace csca::app {

// ---- bench -----------------------------------------------------------------

struct GridPoint {
  std::size_t channels;
  std::size_t height;
  std::size_t width;
  std::size_t groups;
};

// "C:H:W:G[,C:H:W:G...]"; a G field may list alternatives separated by '/'
// ("32:64:64:1/2/4/8/16").
std::vector<GridPoint> parse_grid(const std::string& text);
std::vector<GridPoint> default_grid();

struct BenchRow {
  std::string kind;  // "nonlocal", "sca", or "skipped"
  GridPoint point{};
  std::uint64_t attention_mults = 0;  // per attention direction
  std::uint64_t total_mults = 0;      // whole call(s), both modalities
  double wall_ms = 0.0;               // median
  double speedup = 1.0;               // baseline median / this median
  int threads = 1;
  std::string note;
};

struct BenchReport {
  std::vector<BenchRow> rows;
  bool flop_ratio_exact = true;
  std::vector<std::string> violations;
};

struct BenchOptions {
  std::vector<GridPoint> grid = default_grid();
  std::size_t repeats = 5;
  int threads = 1;
  std::uint64_t seed = 0;
  bool time = true;
};

// For every grid point: the baseline applies nonlocal_forward to each of the
// two modalities; SCA runs once on the pair. Invalid points produce a
// "skipped" row. The FLOP ratio check is integer-exact.
BenchReport run_bench(const BenchOptions& options);
void write_bench_csv(std::ostream& os, const BenchReport& report);

// ---- gradcheck ---------------------------------------------------------------

struct GradcheckRow {
  std::string suite;
  std::string op;
  double max_rel_error = 0.0;
  double tolerance = 0.0;
  bool passed = true;
  std::size_t checked = 0;
  // Coordinates whose perturbation crossed a relu kink.
  std::size_t skipped = 0;
};

struct GradcheckOptions {
  std::uint64_t seed = 0;
  // Fault injection: scale this op's adjoint during every suite.
  std::string corrupt_op;
  bool include_network = true;
};

std::vector<GradcheckRow> run_gradcheck(const GradcheckOptions& options);

// ---- gen-data -----------------------------------------------------------------

synth::Dataset run_gen_data(const synth::DatasetSpec& spec, const std::filesystem::path& out);

// ---- train -------------------------------------------------------------------

struct TrainOptions {
  FusionMode mode = FusionMode::Csca;
  std::size_t epochs = 30;
  double lr = 0.3;
  std::size_t batch = 4;
  std::uint64_t seed = 0;
  StageConfig network;
  std::optional<std::filesystem::path> out;  // checkpoint directory
};

struct EpochLog {
  std::size_t epoch = 0;  // 0 = before training
  double train_loss = 0.0;
  double test_mae = 0.0;
  double test_rmse = 0.0;
};

struct TrainResult {
  std::vector<EpochLog> log;
  CscaNetwork<float> network;

  double initial_loss() const { return log.front().train_loss; }
  double final_loss() const { return log.back().train_loss; }
};

// The network config's input extents and channels are taken from the
// dataset. Deterministic in (dataset, options).
TrainResult run_train(const synth::Dataset& dataset, TrainOptions options);
void write_train_log(std::ostream& os, const TrainResult& result, const TrainOptions& options);

// ---- eval --------------------------------------------------------------------

struct SubsetMetrics {
  std::string subset;  // "all", "bright", "dark"
  std::size_t images = 0;
  std::vector<double> game;  // GAME(0..L_max)
  double mae = 0.0;
  double rmse = 0.0;
};

struct EvalReport {
  std::vector<SubsetMetrics> subsets;
};

struct EvalOptions {
  unsigned max_level = 3;
  synth::Split split = synth::Split::Test;
  // Test hook: use the ground truth as the prediction.
  bool oracle = false;
};

EvalReport run_eval(const CscaNetwork<float>* net, const synth::Dataset& dataset, const EvalOptions& options);
// Columns metric,L,value. Subsets other than "all" are suffixed to the
// metric name ("MAE@dark"); an "images" row per subset carries its size.
void write_eval_csv(std::ostream& os, const EvalReport& report);
// Human-readable wide table.
void write_eval_table(std::ostream& os, const EvalReport& report);

// Reads "key=value" lines ('#' comments allowed).
std::map<std::string, std::string> read_key_values(const std::filesystem::path& path);

}  // namespace csca::app
