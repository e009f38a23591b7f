#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "commands.hpp"
#include "csca/error.hpp"

using namespace csca;
using namespace csca::app;

namespace {

const BenchRow* find_row(const BenchReport& r, const std::string& kind, std::size_t c, std::size_t hw, std::size_t g) {
  for (const auto& row : r.rows) {
    if (row.kind == kind && row.point.channels == c && row.point.height == hw && row.point.groups == g) return &row;
  }
  return nullptr;
}

synth::Dataset small_dataset(std::uint64_t seed) {
  synth::DatasetSpec spec;
  spec.count = 16;
  spec.seed = seed;
  return synth::generate_dataset(spec);
}

}  // namespace

TEST(Grid, Parse) {
  const auto g = parse_grid("8:8:8:1/2/4,16:4:4:2");
  ASSERT_EQ(g.size(), 4u);
  EXPECT_EQ(g[2].groups, 4u);
  EXPECT_EQ(g[3].channels, 16u);
  EXPECT_EQ(g[3].height, 4u);
  EXPECT_THROW(parse_grid("8:8:8"), ConfigError);
  EXPECT_THROW(parse_grid("8:x:8:1"), ConfigError);
  EXPECT_THROW(parse_grid(""), ConfigError);
  EXPECT_EQ(default_grid().size(), 20u);
}

TEST(Bench, FlopCountsAreExact) {
  BenchOptions opts;
  opts.grid = parse_grid("8:8:8:1/2/4/8/16,8:6:6:5");
  opts.time = false;
  const auto report = run_bench(opts);
  EXPECT_TRUE(report.flop_ratio_exact);
  EXPECT_TRUE(report.violations.empty());
  const auto* base = find_row(report, "nonlocal", 8, 8, 1);
  const auto* g4 = find_row(report, "sca", 8, 8, 4);
  const auto* g1 = find_row(report, "sca", 8, 8, 1);
  ASSERT_TRUE(base && g4 && g1);
  EXPECT_EQ(base->attention_mults, 32768u);
  EXPECT_EQ(g4->attention_mults, 8192u);
  EXPECT_EQ(g1->attention_mults, base->attention_mults);
  for (std::size_t g : {1u, 2u, 4u, 8u, 16u}) {
    const auto* row = find_row(report, "sca", 8, 8, g);
    ASSERT_TRUE(row);
    EXPECT_EQ(row->attention_mults * g, base->attention_mults);
  }
  EXPECT_TRUE(find_row(report, "skipped", 8, 6, 5));

  std::ostringstream csv;
  write_bench_csv(csv, report);
  EXPECT_EQ(csv.str().rfind("kind,", 0), 0u);
}

TEST(Gradcheck, SuitePassesAndIsDeterministic) {
  GradcheckOptions opts;
  const auto rows = run_gradcheck(opts);
  ASSERT_FALSE(rows.empty());
  for (const auto& r : rows) {
    EXPECT_TRUE(r.passed) << r.suite << "/" << r.op << " " << r.max_rel_error;
    EXPECT_GT(r.checked, 0u);
  }
  const auto again = run_gradcheck(opts);
  ASSERT_EQ(again.size(), rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) EXPECT_EQ(again[i].max_rel_error, rows[i].max_rel_error);
}

TEST(Gradcheck, CorruptedAdjointIsReported) {
  for (const std::string op : {"matmul", "softmax", "relu"}) {
    GradcheckOptions opts;
    opts.corrupt_op = op;
    opts.include_network = false;
    bool any_failed = false;
    for (const auto& r : run_gradcheck(opts)) any_failed |= !r.passed;
    EXPECT_TRUE(any_failed) << op;
  }
}

TEST(Eval, OracleHookGivesZeroErrors) {
  const auto ds = small_dataset(1);
  EvalOptions opts;
  opts.oracle = true;
  const auto report = run_eval(nullptr, ds, opts);
  ASSERT_EQ(report.subsets.size(), 3u);
  for (const auto& s : report.subsets) {
    for (double g : s.game) EXPECT_EQ(g, 0.0);
    EXPECT_EQ(s.mae, 0.0);
    EXPECT_EQ(s.rmse, 0.0);
  }
  EXPECT_THROW(run_eval(nullptr, ds, EvalOptions{}), ContractError);
}

TEST(Eval, MetricsAreConsistent) {
  const auto ds = small_dataset(2);
  TrainOptions topts;
  topts.epochs = 1;
  const auto trained = run_train(ds, topts);
  const auto report = run_eval(&trained.network, ds, EvalOptions{});
  const SubsetMetrics* all = nullptr;
  double weighted = 0.0;
  std::size_t images = 0;
  for (const auto& s : report.subsets) {
    ASSERT_EQ(s.game.size(), 4u);
    EXPECT_EQ(s.game[0], s.mae);
    for (std::size_t l = 1; l < s.game.size(); ++l) EXPECT_GE(s.game[l], s.game[l - 1] - 1e-9);
    if (s.subset == "all") {
      all = &s;
    } else {
      weighted += s.mae * static_cast<double>(s.images);
      images += s.images;
    }
  }
  ASSERT_TRUE(all);
  EXPECT_EQ(images, all->images);
  EXPECT_NEAR(weighted / static_cast<double>(images), all->mae, 1e-9);

  std::ostringstream csv;
  write_eval_csv(csv, report);
  EXPECT_NE(csv.str().find("MAE@dark"), std::string::npos);
}

TEST(Train, DeterministicAndLogged) {
  const auto ds = small_dataset(3);
  TrainOptions opts;
  opts.epochs = 2;
  const auto a = run_train(ds, opts);
  const auto b = run_train(ds, opts);
  ASSERT_EQ(a.log.size(), 3u);
  for (std::size_t i = 0; i < a.log.size(); ++i) EXPECT_EQ(a.log[i].train_loss, b.log[i].train_loss);
  const auto pa = a.network.named_parameters(), pb = b.network.named_parameters();
  ASSERT_EQ(pa.size(), pb.size());
  for (std::size_t i = 0; i < pa.size(); ++i) {
    EXPECT_TRUE(std::equal(pa[i].second.data().begin(), pa[i].second.data().end(), pb[i].second.data().begin()));
  }
  opts.batch = 0;
  EXPECT_THROW(run_train(ds, opts), ConfigError);
}
