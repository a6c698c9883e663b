// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include "phasecal/calibrator.hpp"
#include "phasecal/crlb.hpp"
#include "phasecal/model.hpp"
#include "phasecal/saf.hpp"

using namespace phasecal;

namespace {

const UeLocation kUe{-2.0, 1.0};

SystemConfig noiseless() {
  SystemConfig c;
  c.snr_db.reset();
  return c;
}

// Square grid of side `cells` around the UE, 0.02 m step.
SpatialGrid grid_of(int cells) {
  const double half = 0.01 * (cells - 1);
  return {kUe.x - half, kUe.x + half, 1.0 + 0.01, 1.0 + 0.01 + 2.0 * half, 0.02};
}

void BM_SafFastPath(benchmark::State& state) {
  const SystemConfig c = noiseless();
  const ArrayGeometry g = ArrayGeometry::ula(64, 0.07);
  const SpatialGrid grid = grid_of(static_cast<int>(state.range(0)));
  for (auto _ : state)
    benchmark::DoNotOptimize(saf_fast_path(c, g, kUe, std::span<const double>{}, grid).peak_power);
  state.SetItemsProcessed(state.iterations() * grid.nx() * grid.ny());
}
BENCHMARK(BM_SafFastPath)->Arg(51)->Arg(101)->Unit(benchmark::kMillisecond);

void BM_SafNaive(benchmark::State& state) {
  const SystemConfig c = noiseless();
  const ArrayGeometry g = ArrayGeometry::ula(64, 0.07);
  const SpatialGrid grid = grid_of(static_cast<int>(state.range(0)));
  const OffsetRealization off = sample_offsets(OffsetSpec{0.0, kPi / 4.0, 0.0, 1}, 64, 100);
  for (auto _ : state) benchmark::DoNotOptimize(saf_model(c, g, kUe, off, grid).peak_power);
  state.SetItemsProcessed(state.iterations() * grid.nx() * grid.ny());
}
BENCHMARK(BM_SafNaive)->Arg(51)->Arg(101)->Unit(benchmark::kMillisecond);

void BM_RangeMatchedFilter(benchmark::State& state) {
  const SystemConfig c = noiseless();
  const ArrayGeometry g = ArrayGeometry::ula(64, 0.07);
  const Snapshot s = mean_signal(c, g, kUe);
  const int oversampling = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(range_matched_filter(s, c, oversampling).bin_spacing);
}
BENCHMARK(BM_RangeMatchedFilter)->Arg(1)->Arg(8)->Arg(64)->Unit(benchmark::kMicrosecond);

void BM_EffectiveFim(benchmark::State& state) {
  SystemConfig c;
  c.num_antennas = static_cast<int>(state.range(0));
  const ArrayGeometry g = ArrayGeometry::ula(c.num_antennas, c.antenna_spacing);
  const auto kind = state.range(1) == 0 ? NuisanceKind::kFrequency : NuisanceKind::kSpatial;
  OffsetSpec spec;
  spec.freq_std = kPi / 4.0;
  spec.spatial_half_width = kPi;
  for (auto _ : state) benchmark::DoNotOptimize(effective_fim(fim_blocks(c, g, kUe, spec, kind)).rmse);
}
BENCHMARK(BM_EffectiveFim)->ArgsProduct({{8, 64}, {0, 1}})->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
