#include <gtest/gtest.h>

#include <algorithm>

#include "csca/cfa.hpp"
#include "csca/error.hpp"
#include "csca/gradcheck.hpp"
#include "csca/ops.hpp"
#include "csca/random.hpp"
#include "oracles.hpp"

using namespace csca;

namespace {

// Swaps the two C-wide halves of a tensor along `axis`.
TensorD swap_halves(const TensorD& t, std::size_t axis) {
  const std::size_t half = t.extent(axis) / 2;
  return concat<double>({slice(t, axis, half, 2 * half), slice(t, axis, 0, half)}, axis);
}

}  // namespace

TEST(Cfa, EqualInputsReturnedExactly) {
  auto rng = substream(1, "cfa");
  for (int trial = 0; trial < 10; ++trial) {
    const auto w = CfaWeights<double>::init(4, 4, rng);
    const auto x = uniform_tensor<double>({4, 3, 5}, -5.0, 5.0, rng);
    const auto out = cfa_forward(x, x, w);
    for (std::size_t i = 0; i < x.numel(); ++i) ASSERT_EQ(out.f_agg.data()[i], x.data()[i]);
  }
}

TEST(Cfa, ZeroWeightsAverage) {
  auto rng = substream(2, "cfa");
  const auto w = CfaWeights<double>::zeros(4, 2);
  const auto za = uniform_tensor<double>({4, 2, 2}, -1.0, 1.0, rng);
  const auto zb = uniform_tensor<double>({4, 2, 2}, -1.0, 1.0, rng);
  const auto out = cfa_forward(za, zb, w);
  for (std::size_t i = 0; i < za.numel(); ++i) {
    EXPECT_EQ(out.weights.w_a.data()[i], 0.5);
    EXPECT_EQ(out.weights.w_b.data()[i], 0.5);
    EXPECT_NEAR(out.f_agg.data()[i], 0.5 * (za.data()[i] + zb.data()[i]), 1e-15);
  }
}

TEST(Cfa, MatchesPerPositionLoopOracle) {
  auto rng = substream(3, "cfa");
  for (int trial = 0; trial < 20; ++trial) {
    auto w = CfaWeights<double>::init(2, 2, rng);
    // Non-zero biases so every term of the oracle is exercised.
    w.b1 = uniform_tensor<double>({2}, -0.5, 0.5, rng);
    w.b2 = uniform_tensor<double>({4}, -0.5, 0.5, rng);
    const auto za = uniform_tensor<double>({2, 2, 2}, -2.0, 2.0, rng);
    const auto zb = uniform_tensor<double>({2, 2, 2}, -2.0, 2.0, rng);
    const auto out = cfa_forward(za, zb, w);
    const auto ref = oracle::cfa(za, zb, w);
    EXPECT_LT(oracle::max_abs_diff(out.f_agg.data(), ref.f_agg), 1e-6);
    EXPECT_LT(oracle::max_abs_diff(out.weights.w_a.data(), ref.w_a), 1e-6);
    EXPECT_LT(oracle::max_abs_diff(out.weights.w_b.data(), ref.w_b), 1e-6);
  }
}

TEST(Cfa, WeightsArePositiveAndSumToOne) {
  auto rng = substream(4, "cfa");
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t c = 2 * (1 + rng() % 4);
    const auto w = CfaWeights<double>::init(c, 2, rng);
    const auto za = uniform_tensor<double>({c, 3, 3}, -10.0, 10.0, rng);
    const auto zb = uniform_tensor<double>({c, 3, 3}, -10.0, 10.0, rng);
    const auto pair = cfa_forward(za, zb, w).weights;
    for (std::size_t i = 0; i < za.numel(); ++i) {
      const double a = pair.w_a.data()[i], b = pair.w_b.data()[i];
      EXPECT_GT(a, 0.0);
      EXPECT_LT(a, 1.0);
      EXPECT_NEAR(a + b, 1.0, 1e-6);
    }
  }
}

TEST(Cfa, ConvexCombination) {
  auto rng = substream(5, "cfa");
  for (int trial = 0; trial < 50; ++trial) {
    const auto w = CfaWeights<double>::init(4, 4, rng);
    const auto za = uniform_tensor<double>({4, 4, 4}, -3.0, 3.0, rng);
    const auto zb = uniform_tensor<double>({4, 4, 4}, -3.0, 3.0, rng);
    const auto f = cfa_forward(za, zb, w).f_agg;
    for (std::size_t i = 0; i < za.numel(); ++i) {
      const double lo = std::min(za.data()[i], zb.data()[i]), hi = std::max(za.data()[i], zb.data()[i]);
      EXPECT_GE(f.data()[i], lo);
      EXPECT_LE(f.data()[i], hi);
    }
  }
}

TEST(Cfa, ModalityRelabelingEquivariance) {
  auto rng = substream(6, "cfa");
  for (int trial = 0; trial < 20; ++trial) {
    auto w = CfaWeights<double>::init(4, 4, rng);
    w.b2 = uniform_tensor<double>({8}, -0.5, 0.5, rng);
    const auto za = uniform_tensor<double>({4, 3, 3}, -2.0, 2.0, rng);
    const auto zb = uniform_tensor<double>({4, 3, 3}, -2.0, 2.0, rng);
    CfaWeights<double> swapped = w;
    swapped.w1 = swap_halves(w.w1, 1);  // input-channel blocks
    swapped.w2 = swap_halves(w.w2, 0);  // output-channel blocks
    swapped.b2 = swap_halves(w.b2, 0);
    const auto ref = cfa_forward(za, zb, w);
    const auto flip = cfa_forward(zb, za, swapped);
    for (std::size_t i = 0; i < za.numel(); ++i) {
      EXPECT_NEAR(flip.weights.w_a.data()[i], ref.weights.w_b.data()[i], 1e-12);
      EXPECT_NEAR(flip.weights.w_b.data()[i], ref.weights.w_a.data()[i], 1e-12);
      EXPECT_NEAR(flip.f_agg.data()[i], ref.f_agg.data()[i], 1e-12);
    }
  }
}

TEST(Cfa, Errors) {
  auto rng = substream(7, "cfa");
  EXPECT_THROW(CfaWeights<double>::init(3, 4, rng), ConfigError);
  const auto w = CfaWeights<double>::init(4, 4, rng);
  EXPECT_THROW(cfa_forward(TensorD::zeros({4, 2, 2}), TensorD::zeros({4, 2, 3}), w), DimensionError);
}

TEST(Cfa, GradientsMatchFiniteDifferences) {
  auto rng = substream(8, "cfa-grad");
  auto za = uniform_tensor<double>({4, 8, 8}, -1.0, 1.0, rng, true);
  auto zb = uniform_tensor<double>({4, 8, 8}, -1.0, 1.0, rng, true);
  const auto w = CfaWeights<double>::init(4, 4, rng, true);
  const auto probe = uniform_tensor<double>({4, 8, 8}, -1.0, 1.0, rng);
  std::vector<TensorD> leaves{za, zb};
  for (auto& p : w.parameters()) leaves.push_back(p);
  const std::function<TensorD()> f = [&] { return sum(hadamard(cfa_forward(za, zb, w).f_agg, probe)); };
  const auto rep = finite_diff_check<double>(f, leaves, GradCheckOptions{1e-4, 1e-4, 0, true});
  EXPECT_TRUE(rep.passed) << rep.max_rel_error;
  EXPECT_LT(rep.coordinates_skipped, rep.coordinates_checked / 10);
}

TEST(Propagate, Examples) {
  auto rng = substream(9, "propagate");
  const auto x = uniform_tensor<double>({2, 2, 2}, -1.0, 1.0, rng);
  const auto same = propagate_update(x, x);
  for (std::size_t i = 0; i < x.numel(); ++i) EXPECT_EQ(same.data()[i], x.data()[i]);
  const auto half = propagate_update(TensorD::zeros(x.shape()), x);
  for (std::size_t i = 0; i < x.numel(); ++i) EXPECT_EQ(half.data()[i], x.data()[i] / 2);
  EXPECT_EQ(propagate_update(TensorD({1}, {2}), TensorD({1}, {4})).item(), 3.0);
  EXPECT_THROW(propagate_update(x, TensorD::zeros({2, 2, 1})), DimensionError);
}
