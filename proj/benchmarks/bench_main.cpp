#include <benchmark/benchmark.h>

#include <cmath>
#include <vector>

#include "mtjsnn/characterization.hpp"
#include "mtjsnn/io.hpp"
#include "mtjsnn/magnetics.hpp"
#include "mtjsnn/snn.hpp"

namespace ch = mtjsnn::characterization;
namespace mg = mtjsnn::magnetics;
namespace snn = mtjsnn::snn;

namespace {

mg::Macrospin magnet20() {
  return ch::calibrated_magnet({}, {}, 20.0, 300.0);
}

void BM_HeunStep(benchmark::State &state) {
  const auto magnet = magnet20();
  mg::ThermalConfig cfg;
  cfg.rng_seed = 1;
  mg::HeunIntegrator integ(magnet, cfg);
  mg::MagnetizationState s = mg::easy_axis_state(-1.0);
  for (auto _ : state) {
    s = integ.step(s, {3e-4, 0.0, 0.0});
    benchmark::DoNotOptimize(s);
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_HeunStep);

void BM_SwitchingTrial(benchmark::State &state) {
  const ch::SwitchingContext ctx{magnet20(), {}, {}};
  std::uint64_t k = 0;
  for (auto _ : state)
    benchmark::DoNotOptimize(ch::run_switching_trial(ctx, 71e-6, 0.5e-9, 1, k++));
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_SwitchingTrial)->Unit(benchmark::kMillisecond);

void BM_SweepCell(benchmark::State &state) {
  const ch::SwitchingContext ctx{magnet20(), {}, {}};
  const int trials = static_cast<int>(state.range(0));
  for (auto _ : state)
    benchmark::DoNotOptimize(ch::estimate_cell(ctx, 71e-6, 0.5e-9, trials, 1, 2, 1));
  state.SetItemsProcessed(state.iterations() * trials);
}
BENCHMARK(BM_SweepCell)->Arg(50)->Unit(benchmark::kMillisecond);

void BM_NetworkStep(benchmark::State &state) {
  std::vector<double> x, y;
  for (int k = 0; k <= 100; ++k) {
    x.push_back(2e-6 * k);
    y.push_back(1.0 / (1.0 + std::exp(-(x.back() - 71e-6) / 6e-6)));
  }
  const mtjsnn::MonotoneCurve curve(x, y);
  const auto data = mtjsnn::io::synth_dataset(1, 1);
  snn::NetworkConfig cfg;
  snn::Network net(cfg, {}, {}, {}, curve);
  const auto mode = state.range(0) ? snn::Mode::Train : snn::Mode::Test;
  net.begin_image();
  for (auto _ : state) benchmark::DoNotOptimize(net.step(data.image(0), mode));
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_NetworkStep)->Arg(0)->Arg(1);

} // namespace

BENCHMARK_MAIN();
