#include "irsrs/channel_gen.hpp"
#include "irsrs/optimizer.hpp"

#include <benchmark/benchmark.h>

#include <cmath>

namespace {

irsrs::NetworkConfig config(double snr_db, int groups = 1) {
  irsrs::NetworkConfig cfg;
  cfg.groups = groups;
  cfg.transmit_power = std::pow(10.0, snr_db / 10.0);
  cfg.with_defaults();
  return cfg;
}

void BM_SolveRs(benchmark::State& state) {
  const auto cfg = config(static_cast<double>(state.range(0)));
  std::uint64_t seed = 1;
  for (auto _ : state) {
    const auto ch = irsrs::sample_channels(cfg, seed++);
    benchmark::DoNotOptimize(irsrs::ao_solve(ch, cfg, irsrs::SolverOptions{}).wsr);
  }
}
BENCHMARK(BM_SolveRs)->Arg(0)->Arg(20)->Arg(30)->Unit(benchmark::kMillisecond);

void BM_SolveNoma(benchmark::State& state) {
  const auto cfg = config(static_cast<double>(state.range(0)));
  std::uint64_t seed = 1;
  for (auto _ : state) {
    const auto ch = irsrs::sample_channels(cfg, seed++);
    benchmark::DoNotOptimize(irsrs::noma_solve(ch, cfg, irsrs::SolverOptions{}).wsr);
  }
}
BENCHMARK(BM_SolveNoma)->Arg(20)->Unit(benchmark::kMillisecond);

void BM_UpdatePrecoders(benchmark::State& state) {
  const auto cfg = config(20, static_cast<int>(state.range(0)));
  const irsrs::SolverOptions opts;
  const auto cb = irsrs::build_codebook(cfg.codebook_cols, cfg.ones_block);
  const auto ch = irsrs::sample_channels(cfg, 7);
  const auto sel = irsrs::initial_selection(ch, cb);
  const auto uc = irsrs::user_channels(ch, sel, cb);
  const auto pre = irsrs::init_precoders(ch, sel, cb, cfg, opts);
  const auto eq = irsrs::update_equalizers_weights(uc, pre);
  const auto alloc = irsrs::update_common_allocation(uc, pre, eq.g, eq.u, cfg,
                                                     irsrs::Scheme::RateSplitting);
  for (auto _ : state)
    benchmark::DoNotOptimize(irsrs::update_precoders(uc, pre, *alloc, eq.g, eq.u, cfg, opts,
                                                     irsrs::Scheme::RateSplitting));
}
BENCHMARK(BM_UpdatePrecoders)->Arg(1)->Arg(2)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
