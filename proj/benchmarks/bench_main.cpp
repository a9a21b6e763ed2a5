#include <benchmark/benchmark.h>

#include <cmath>
#include <numbers>

#include "oamlink/measurement.hpp"
#include "oamlink/modes.hpp"
#include "oamlink/source.hpp"
#include "oamlink/tomography.hpp"

using namespace oamlink;

namespace {

JointOamState default_state() { return build_joint_state(gaussian_spiral_spectrum(OamIndex{0}, 2.12)); }

NoiseModel lab_noise() {
  NoiseModel n = NoiseModel::ideal(3000.0);
  n.crosstalk_eps = 0.05;
  n.accidental_rate = 10.0;
  return n;
}

void BM_CoincidenceRateJoint(benchmark::State& st) {
  const JointOamState s = default_state();
  const NoiseModel n = lab_noise();
  const ModeVector a = sector_state(1, 0.0);
  const ModeVector b = sector_state(1, std::numbers::pi / 8);
  for (auto _ : st) benchmark::DoNotOptimize(coincidence_rate(s, a, b, n));
}
BENCHMARK(BM_CoincidenceRateJoint);

void BM_CoincidenceRateTwoQubit(benchmark::State& st) {
  const TwoQubitState s = apply_white_noise(TwoQubitState::entangled(1), 0.1);
  const NoiseModel n = lab_noise();
  const ModeVector a = sector_state(1, 0.0);
  const ModeVector b = sector_state(1, std::numbers::pi / 8);
  for (auto _ : st) benchmark::DoNotOptimize(coincidence_rate(s, a, b, n));
}
BENCHMARK(BM_CoincidenceRateTwoQubit);

void BM_CorrelationMatrix(benchmark::State& st) {
  const JointOamState s = default_state();
  const NoiseModel n = lab_noise();
  const int w = static_cast<int>(st.range(0));
  for (auto _ : st) benchmark::DoNotOptimize(correlation_matrix(s, -w, w, n, 10.0, 1));
}
BENCHMARK(BM_CorrelationMatrix)->Arg(5)->Arg(10);

void BM_RenderHologram(benchmark::State& st) {
  const int px = static_cast<int>(st.range(0));
  const ModeVector mode = sector_state(2, 0.3);
  for (auto _ : st) benchmark::DoNotOptimize(render_hologram(mode, px, px));
  st.SetItemsProcessed(st.iterations() * px * px);
}
BENCHMARK(BM_RenderHologram)->Arg(128)->Arg(512);

void BM_MleReconstruct(benchmark::State& st) {
  const TwoQubitState rho = apply_white_noise(TwoQubitState::entangled(1), 0.2);
  const auto records = simulate_tomo_counts(rho, NoiseModel::ideal(static_cast<double>(st.range(0))), 10.0, 3);
  for (auto _ : st) benchmark::DoNotOptimize(mle_reconstruct(records));
}
BENCHMARK(BM_MleReconstruct)->Arg(20)->Arg(2000);

}  // namespace

BENCHMARK_MAIN();
