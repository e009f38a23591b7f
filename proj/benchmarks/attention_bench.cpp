#include <benchmark/benchmark.h>

#include "csca/attention.hpp"
#include "csca/kernels.hpp"
#include "csca/random.hpp"

using namespace csca;

namespace {

struct Inputs {
  TensorF x_a, x_b;
  ProjectionSet<float> p_a, p_b;
};

Inputs make_inputs(std::size_t c, std::size_t hw) {
  auto rng = substream(0, "bench");
  Inputs in{uniform_tensor<float>({c, hw, hw}, -1.0f, 1.0f, rng), uniform_tensor<float>({c, hw, hw}, -1.0f, 1.0f, rng),
            ProjectionSet<float>::init(c, rng), ProjectionSet<float>::init(c, rng)};
  return in;
}

// args: C, H=W
void BM_NonLocalPair(benchmark::State& state) {
  kernels::set_num_threads(1);
  const auto in = make_inputs(state.range(0), state.range(1));
  FlopLedger ledger;
  for (auto _ : state) {
    auto a = nonlocal_forward(in.x_a, in.p_a);
    auto b = nonlocal_forward(in.x_b, in.p_b);
    benchmark::DoNotOptimize(a.out.data().data());
    benchmark::DoNotOptimize(b.out.data().data());
    ledger = a.ledger;
    ledger += b.ledger;
  }
  state.counters["attn_mults"] = static_cast<double>(ledger.attention_mults);
}

// args: C, H=W, G
void BM_Sca(benchmark::State& state) {
  kernels::set_num_threads(1);
  const auto in = make_inputs(state.range(0), state.range(1));
  ScaConfig cfg;
  cfg.group_factor = static_cast<std::size_t>(state.range(2));
  FlopLedger ledger;
  for (auto _ : state) {
    auto out = sca_forward(in.x_a, in.x_b, in.p_a, in.p_b, cfg);
    benchmark::DoNotOptimize(out.z_a.data().data());
    ledger = out.ledger;
  }
  state.counters["attn_mults"] = static_cast<double>(ledger.attention_mults);
}

}  // namespace

BENCHMARK(BM_NonLocalPair)->Args({16, 32})->Args({32, 64})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Sca)
    ->ArgsProduct({{16}, {32}, {1, 2, 4, 8, 16}})
    ->ArgsProduct({{32}, {64}, {1, 2, 4, 8, 16}})
    ->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
