// Copyright 2026 The specnoise Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <benchmark/benchmark.h>

#include <random>

#include "specnoise/darksynth.hpp"
#include "specnoise/photon.hpp"
#include "specnoise/sensorsim.hpp"
#include "specnoise/spectral.hpp"

namespace {

using namespace specnoise;

PlanarImage noise(std::size_t c, std::size_t h, std::size_t w, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> d(0.0, 3.0);
  PlanarImage img(c, h, w);
  for (double& v : img.values()) v = d(gen);
  return img;
}

PlanarImage sim_dark(std::size_t size) {
  sensorsim::SimConfig cfg;
  cfg.height = size;
  cfg.width = size;
  cfg.sigma_band = 3.0;
  cfg.fpn_amplitude = 4.0;
  return sensorsim::generate_dark(cfg, 1).image;
}

void BM_RealFftRoundTrip(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  spectral::RealFft2d fft(n, n);
  const PlanarImage img = noise(1, n, n, 1);
  std::copy(img.values().begin(), img.values().end(), fft.real().begin());
  for (auto _ : state) {
    fft.forward();
    fft.inverse();
    benchmark::DoNotOptimize(fft.real().data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * n));
}
BENCHMARK(BM_RealFftRoundTrip)->Arg(256)->Arg(512);

void BM_ComplexForwardDft(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const PlanarImage img = noise(4, n, n, 2);
  for (auto _ : state) benchmark::DoNotOptimize(spectral::forward_dft(img));
}
BENCHMARK(BM_ComplexForwardDft)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_HistogramMatch(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const PlanarImage src = noise(4, n, n, 3);
  const PlanarImage ref = noise(4, n, n, 4);
  for (auto _ : state) benchmark::DoNotOptimize(darksynth::histogram_match(src, ref));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(4 * n * n));
}
BENCHMARK(BM_HistogramMatch)->Arg(256)->Arg(512)->Unit(benchmark::kMillisecond);

void BM_GaussianBlur(benchmark::State& state) {
  const PlanarImage img = noise(4, 512, 512, 5);
  const double sigma = static_cast<double>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(darksynth::gaussian_blur(img, sigma));
}
BENCHMARK(BM_GaussianBlur)->Arg(3)->Arg(50)->Unit(benchmark::kMillisecond);

void BM_EngineDraw(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  darksynth::SynthesisConfig cfg;
  cfg.iterations = static_cast<std::size_t>(state.range(1));
  const darksynth::DarkFrameSynthesizer engine(sim_dark(n), cfg);
  auto ws = engine.make_workspace();
  std::uint64_t index = 0;
  for (auto _ : state) benchmark::DoNotOptimize(engine.draw(index++, ws));
}
BENCHMARK(BM_EngineDraw)->Args({256, 0})->Args({256, 10})->Args({512, 10})->Unit(benchmark::kMillisecond);

void BM_ReferencePathSynthesis(benchmark::State& state) {
  const PlanarImage dark = sim_dark(256);
  darksynth::SynthesisConfig cfg;
  std::uint64_t index = 0;
  for (auto _ : state) benchmark::DoNotOptimize(darksynth::synthesize_dark(dark, FrameMeta{}, cfg, index++));
}
BENCHMARK(BM_ReferencePathSynthesis)->Unit(benchmark::kMillisecond);

void BM_PoissonSignal(benchmark::State& state) {
  PlanarImage clean = noise(4, 256, 256, 6);
  for (double& v : clean.values()) v = std::abs(v) * static_cast<double>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(photon::sample_poisson_signal(clean, 1.8, 1.0, 7));
}
BENCHMARK(BM_PoissonSignal)->Arg(2)->Arg(500)->Unit(benchmark::kMillisecond);

void BM_CollectVarianceSingle(benchmark::State& state) {
  sensorsim::SimConfig cfg;
  const auto pair = sensorsim::generate_noisy_pair(cfg, 1);
  const FrameMeta meta = cfg.meta();
  for (auto _ : state) {
    benchmark::DoNotOptimize(photon::collect_variance_single(pair.noisy, meta, photon::kDefaultPseudoSigma,
                                                             photon::default_bin_width(meta)));
  }
}
BENCHMARK(BM_CollectVarianceSingle)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
