#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "csca/attention.hpp"
#include "csca/error.hpp"
#include "csca/gradcheck.hpp"
#include "csca/ops.hpp"
#include "csca/random.hpp"
#include "oracles.hpp"

using namespace csca;

namespace {

ScaConfig grouped(std::size_t g, Partition p = Partition::contiguous()) {
  ScaConfig cfg;
  cfg.group_factor = g;
  cfg.partition = p;
  return cfg;
}

}  // namespace

TEST(Reassemble, HandExample) {
  const TensorD x({4, 1}, {1, 2, 3, 4});
  const auto y = sca_reassemble(x, grouped(2));
  EXPECT_EQ(y.shape(), (Shape{2, 2}));
  EXPECT_EQ(std::vector<double>(y.data().begin(), y.data().end()), (std::vector<double>{1, 3, 2, 4}));

  const auto back = sca_restore(y, grouped(2), {1, 2, 2});
  EXPECT_EQ(back.shape(), (Shape{1, 2, 2}));
  EXPECT_EQ(std::vector<double>(back.data().begin(), back.data().end()), (std::vector<double>{1, 2, 3, 4}));
}

TEST(Reassemble, GroupOfOneIsIdentity) {
  auto rng = substream(1, "reassemble");
  const auto x = uniform_tensor<double>({12, 3}, -1.0, 1.0, rng);
  const auto y = sca_reassemble(x, grouped(1));
  EXPECT_EQ(y.shape(), x.shape());
  for (std::size_t i = 0; i < x.numel(); ++i) EXPECT_EQ(y.data()[i], x.data()[i]);
  // restore with G = 1 is a pure reshape of the N×C′ layout's transpose
  const auto r = sca_restore(y, grouped(1), {3, 3, 4});
  for (std::size_t c = 0; c < 3; ++c) {
    for (std::size_t n = 0; n < 12; ++n) EXPECT_EQ(r.data()[c * 12 + n], x.data()[n * 3 + c]);
  }
}

TEST(Reassemble, RoundTripBothPartitionModes) {
  auto rng = substream(2, "reassemble");
  for (std::size_t g : {1u, 2u, 4u, 8u, 16u}) {
    for (const auto& part : {Partition::contiguous(), Partition::seeded_random(99)}) {
      const auto x = uniform_tensor<double>({4, 4, 4}, -1.0, 1.0, rng);
      const auto cfg = grouped(g, part);
      // [C′×H×W] -> [N×C′]
      const auto rows = transpose(reshape(x, {4, 16}));
      const auto y = sca_reassemble(rows, cfg);
      EXPECT_EQ(y.shape(), (Shape{16 / g, 4 * g}));
      auto sorted_in = std::vector<double>(x.data().begin(), x.data().end());
      auto sorted_out = std::vector<double>(y.data().begin(), y.data().end());
      std::sort(sorted_in.begin(), sorted_in.end());
      std::sort(sorted_out.begin(), sorted_out.end());
      EXPECT_EQ(sorted_in, sorted_out);
      const auto back = sca_restore(y, cfg, {4, 4, 4});
      for (std::size_t i = 0; i < x.numel(); ++i) ASSERT_EQ(back.data()[i], x.data()[i]);
    }
  }
}

TEST(Reassemble, SeededPartitionIsAPermutationAndDeterministic) {
  const auto cfg = grouped(4, Partition::seeded_random(5));
  const auto order = partition_order(64, cfg);
  EXPECT_EQ(order, partition_order(64, cfg));
  auto sorted = order;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < 64; ++i) EXPECT_EQ(sorted[i], i);
  EXPECT_NE(order, partition_order(64, grouped(4)));
  EXPECT_NE(order, partition_order(64, grouped(4, Partition::seeded_random(6))));
}

TEST(Reassemble, Errors) {
  EXPECT_THROW(sca_reassemble(TensorD::zeros({6, 2}), grouped(4)), ConfigError);
  try {
    sca_reassemble(TensorD::zeros({6, 2}), grouped(4));
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("6"), std::string::npos);
    EXPECT_NE(msg.find("4"), std::string::npos);
  }
  EXPECT_THROW(sca_restore(TensorD::zeros({2, 4}), grouped(2), {2, 3, 3}), DimensionError);
}

TEST(NonLocal, SingleLocationAttendsToItself) {
  auto rng = substream(3, "nonlocal");
  const auto proj = ProjectionSet<double>::init(2, rng);
  const auto x = uniform_tensor<double>({2, 1, 1}, -1.0, 1.0, rng);
  const auto out = nonlocal_forward(x, proj).out;
  // weight 1 on the only key: out = w_out·v + b_out + x
  oracle::Mat v = oracle::project(x, proj.w_v, proj.b_v);
  const auto want = oracle::unproject(v, proj.w_out, proj.b_out, &x);
  EXPECT_LT(oracle::max_abs_diff(out.data(), want), 1e-12);
}

TEST(NonLocal, ConstantInputGivesConstantOutput) {
  auto rng = substream(4, "nonlocal");
  const auto proj = ProjectionSet<double>::init(4, rng);
  std::vector<double> v(4 * 9);
  for (std::size_t c = 0; c < 4; ++c) std::fill_n(v.begin() + c * 9, 9, 0.3 * static_cast<double>(c) - 0.5);
  const auto out = nonlocal_forward(TensorD({4, 3, 3}, v), proj).out;
  for (std::size_t c = 0; c < 4; ++c) {
    for (std::size_t p = 1; p < 9; ++p) EXPECT_NEAR(out.data()[c * 9 + p], out.data()[c * 9], 1e-12);
  }
}

TEST(NonLocal, MatchesTripleLoopOracle) {
  auto rng = substream(5, "nonlocal");
  for (int trial = 0; trial < 5; ++trial) {
    const auto proj = ProjectionSet<double>::init(4, rng);
    const auto x = uniform_tensor<double>({4, 4, 4}, -1.0, 1.0, rng);
    for (bool residual : {true, false}) {
      const auto out = nonlocal_forward(x, proj, NonLocalConfig{residual}).out;
      EXPECT_LT(oracle::max_abs_diff(out.data(), oracle::nonlocal(x, proj, residual)), 1e-5);
    }
  }
}

TEST(NonLocal, OddChannelsRejected) {
  auto rng = substream(6, "nonlocal");
  EXPECT_THROW(ProjectionSet<double>::init(3, rng), ConfigError);
}

TEST(Sca, GroupOfOneMatchesDenseCrossAttention) {
  auto rng = substream(7, "sca");
  for (int trial = 0; trial < 5; ++trial) {
    const auto pa = ProjectionSet<double>::init(4, rng);
    const auto pb = ProjectionSet<double>::init(4, rng);
    const auto xa = uniform_tensor<double>({4, 4, 4}, -1.0, 1.0, rng);
    const auto xb = uniform_tensor<double>({4, 4, 4}, -1.0, 1.0, rng);
    const auto out = sca_forward(xa, xb, pa, pb, grouped(1));
    EXPECT_LT(oracle::max_abs_diff(out.z_a.data(), oracle::dense_cross(xa, pa, xb, pb, true)), 1e-5);
    EXPECT_LT(oracle::max_abs_diff(out.z_b.data(), oracle::dense_cross(xb, pb, xa, pa, true)), 1e-5);
  }
}

TEST(Sca, GroupedMatchesOracleOnReassembledLayout) {
  // For G > 1 the oracle attends over S rows of the folded Ĉ-wide layout.
  auto rng = substream(8, "sca");
  const auto pa = ProjectionSet<double>::init(4, rng);
  const auto pb = ProjectionSet<double>::init(4, rng);
  const auto xa = uniform_tensor<double>({4, 4, 4}, -1.0, 1.0, rng);
  const auto xb = uniform_tensor<double>({4, 4, 4}, -1.0, 1.0, rng);
  const std::size_t g = 4, n = 16, cp = 2, s = n / g;
  const auto cfg = grouped(g, Partition::seeded_random(3));
  const auto order = partition_order(n, cfg);
  auto fold = [&](const oracle::Mat& m) {
    oracle::Mat out(s, std::vector<double>(cp * g));
    for (std::size_t gi = 0; gi < g; ++gi)
      for (std::size_t si = 0; si < s; ++si)
        for (std::size_t c = 0; c < cp; ++c) out[si][gi * cp + c] = m[order[gi * s + si]][c];
    return out;
  };
  const auto q = fold(oracle::project(xb, pb.w_q, pb.b_q));
  const auto k = fold(oracle::project(xa, pa.w_k, pa.b_k));
  const auto v = fold(oracle::project(xa, pa.w_v, pa.b_v));
  const auto z = oracle::attend(q, k, v, 1.0 / std::sqrt(static_cast<double>(cp * g)));
  oracle::Mat unfolded(n, std::vector<double>(cp));
  for (std::size_t gi = 0; gi < g; ++gi)
    for (std::size_t si = 0; si < s; ++si)
      for (std::size_t c = 0; c < cp; ++c) unfolded[order[gi * s + si]][c] = z[si][gi * cp + c];
  const auto want = oracle::unproject(unfolded, pa.w_out, pa.b_out, &xa);
  EXPECT_LT(oracle::max_abs_diff(sca_forward(xa, xb, pa, pb, cfg).z_a.data(), want), 1e-10);
}

TEST(Sca, SymmetricInputsGiveEqualOutputs) {
  auto rng = substream(9, "sca");
  const auto p = ProjectionSet<double>::init(8, rng);
  const auto x = uniform_tensor<double>({8, 4, 4}, -1.0, 1.0, rng);
  const auto out = sca_forward(x, x, p, p, grouped(4));
  for (std::size_t i = 0; i < x.numel(); ++i) ASSERT_EQ(out.z_a.data()[i], out.z_b.data()[i]);
}

TEST(Sca, OutputShapeEqualsInputShape) {
  auto rng = substream(10, "sca");
  for (std::size_t g : {1u, 2u, 3u, 6u}) {
    const auto pa = ProjectionSet<double>::init(6, rng);
    const auto pb = ProjectionSet<double>::init(6, rng);
    const auto xa = uniform_tensor<double>({6, 2, 3}, -1.0, 1.0, rng);
    const auto xb = uniform_tensor<double>({6, 2, 3}, -1.0, 1.0, rng);
    const auto out = sca_forward(xa, xb, pa, pb, grouped(g));
    EXPECT_EQ(out.z_a.shape(), xa.shape());
    EXPECT_EQ(out.z_b.shape(), xb.shape());
  }
}

TEST(Sca, Errors) {
  auto rng = substream(11, "sca");
  const auto p = ProjectionSet<double>::init(4, rng);
  const auto x = uniform_tensor<double>({4, 3, 3}, -1.0, 1.0, rng);
  EXPECT_THROW(sca_forward(x, x, p, p, grouped(2)), ConfigError);
  EXPECT_THROW(sca_forward(x, uniform_tensor<double>({4, 3, 2}, -1.0, 1.0, rng), p, p, grouped(1)), DimensionError);
}

TEST(Sca, AttentionRowsSumToOne) {
  // With identity value/output maps and no residual, each output is a convex
  // mix of value rows; feeding constant values exposes the row sums.
  auto rng = substream(12, "sca");
  auto pa = ProjectionSet<double>::init(4, rng);
  auto pb = ProjectionSet<double>::init(4, rng);
  pa.w_v = TensorD::zeros({2, 4});
  pa.b_v = TensorD::full({2}, 1.0);
  pa.w_out = TensorD({4, 2}, {1, 0, 0, 1, 0, 0, 0, 0});
  pa.b_out = TensorD::zeros({4});
  ScaConfig cfg = grouped(4);
  cfg.residual = false;
  const auto xa = uniform_tensor<double>({4, 8, 8}, -3.0, 3.0, rng);
  const auto xb = uniform_tensor<double>({4, 8, 8}, -3.0, 3.0, rng);
  const auto z = sca_forward(xa, xb, pa, pb, cfg).z_a;
  for (std::size_t p = 0; p < 128; ++p) EXPECT_NEAR(z.data()[p], 1.0, 1e-6);
}

TEST(FlopLedger, HandCountAndExactRatio) {
  auto rng = substream(13, "ledger");
  const auto pa = ProjectionSet<double>::init(8, rng);
  const auto pb = ProjectionSet<double>::init(8, rng);
  const auto x = uniform_tensor<double>({8, 8, 8}, -1.0, 1.0, rng);
  const auto sca = sca_forward(x, x, pa, pb, grouped(4)).ledger;
  const auto nl = nonlocal_forward(x, pa).ledger;
  // 2·N²·C′ with N = 64, C′ = 4; SCA divides by G.
  EXPECT_EQ(nl.attention_mults_per_direction(), 32768u);
  EXPECT_EQ(sca.attention_mults_per_direction(), 8192u);
  EXPECT_EQ(sca.directions, 2u);
  EXPECT_EQ(nl.attention_mults_per_direction() % sca.attention_mults_per_direction(), 0u);
  EXPECT_EQ(nl.attention_mults_per_direction() / sca.attention_mults_per_direction(), 4u);
}

TEST(FlopLedger, RatioEqualsGroupFactorAcrossShapes) {
  auto rng = substream(14, "ledger");
  for (std::size_t c : {2u, 4u, 8u}) {
    const auto p = ProjectionSet<float>::init(c, rng);
    for (std::size_t hw : {2u, 4u, 6u}) {
      const auto x = uniform_tensor<float>({c, hw, hw}, -1.0f, 1.0f, rng);
      const auto base = nonlocal_forward(x, p).ledger.attention_mults_per_direction();
      const std::uint64_t n = hw * hw;
      EXPECT_EQ(base, 2 * n * n * (c / 2));
      for (std::size_t g = 1; g <= n; ++g) {
        if (n % g) continue;
        const auto led = sca_forward(x, x, p, p, grouped(g)).ledger;
        EXPECT_EQ(led.attention_mults_per_direction() * g, base) << "C=" << c << " HW=" << hw << " G=" << g;
      }
    }
  }
}

TEST(ScaGradients, MatchFiniteDifferences) {
  auto rng = substream(15, "sca-grad");
  auto xa = uniform_tensor<double>({4, 8, 8}, -1.0, 1.0, rng, true);
  auto xb = uniform_tensor<double>({4, 8, 8}, -1.0, 1.0, rng, true);
  const auto pa = ProjectionSet<double>::init(4, rng, true);
  const auto pb = ProjectionSet<double>::init(4, rng, true);
  const auto wa = uniform_tensor<double>({4, 8, 8}, -1.0, 1.0, rng);
  const auto wb = uniform_tensor<double>({4, 8, 8}, -1.0, 1.0, rng);
  std::vector<TensorD> leaves{xa, xb};
  for (auto& t : pa.parameters()) leaves.push_back(t);
  for (auto& t : pb.parameters()) leaves.push_back(t);
  for (std::size_t g : {1u, 4u, 16u}) {
    const auto cfg = grouped(g, Partition::seeded_random(g));
    const std::function<TensorD()> f = [&] {
      const auto out = sca_forward(xa, xb, pa, pb, cfg);
      return add(sum(hadamard(out.z_a, wa)), sum(hadamard(out.z_b, wb)));
    };
    const auto rep = finite_diff_check<double>(f, leaves, GradCheckOptions{1e-4, 1e-4, 0, false});
    EXPECT_TRUE(rep.passed) << "G=" << g << " error " << rep.max_rel_error;
  }
}

TEST(ScaBlock, NamedParametersRoundTrip) {
  auto rng = substream(16, "block");
  const auto block = ScaBlock<float>::init(4, grouped(2), rng);
  const auto named = block.named("stage0.sca.");
  ASSERT_EQ(named.size(), 16u);
  EXPECT_EQ(named.front().first, "stage0.sca.a.w_q");
  const auto restored = ProjectionSet<float>::from_named(named, "stage0.sca.b.");
  for (std::size_t i = 0; i < restored.w_v.numel(); ++i) EXPECT_EQ(restored.w_v.data()[i], block.proj_b().w_v.data()[i]);
}
