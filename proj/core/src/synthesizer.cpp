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

#include <algorithm>
#include <cmath>

#include "argsort.hpp"
#include "specnoise/darksynth.hpp"
#include "specnoise/error.hpp"

namespace specnoise::darksynth {

struct DarkFrameSynthesizer::Workspace::State {
  State(std::size_t channels, std::size_t height, std::size_t width)
      : fft(height, width), noise(channels, height, width) {}

  spectral::RealFft2d fft;
  PlanarImage noise;
  std::vector<std::uint32_t> order;
  detail::ArgsortScratch scratch;
  std::vector<std::complex<double>> offset_phasor;
};

DarkFrameSynthesizer::Workspace::Workspace(std::unique_ptr<State> state)
    : state_(std::move(state)) {}
DarkFrameSynthesizer::Workspace::Workspace(Workspace&&) noexcept = default;
DarkFrameSynthesizer::Workspace& DarkFrameSynthesizer::Workspace::operator=(Workspace&&) noexcept =
    default;
DarkFrameSynthesizer::Workspace::~Workspace() = default;

DarkFrameSynthesizer::DarkFrameSynthesizer(const PlanarImage& dark, SynthesisConfig config)
    : config_(config) {
  config_.validate();
  decomp_ = remove_fixed_pattern(dark, config_.sigma);

  const PlanarImage& r = decomp_.residual;
  const std::size_t n = r.plane_size();
  spectral::RealFft2d fft(r.height(), r.width());
  half_width_ = fft.half_width();
  const std::size_t half_n = r.height() * half_width_;
  ref_magnitude_.resize(r.channels() * half_n);
  ref_phasor_.resize(r.channels() * half_n);
  sorted_residual_.resize(r.channels() * n);

  for (std::size_t c = 0; c < r.channels(); ++c) {
    std::ranges::copy(r.plane(c), fft.real().begin());
    fft.forward();
    const auto half = fft.half_spectrum();
    for (std::size_t i = 0; i < half_n; ++i) {
      const double m = std::abs(half[i]);
      ref_magnitude_[c * half_n + i] = m;
      ref_phasor_[c * half_n + i] = m > 0.0 ? half[i] / m : std::complex<double>(1.0, 0.0);
    }
    auto sorted = std::span(sorted_residual_).subspan(c * n, n);
    std::ranges::copy(r.plane(c), sorted.begin());
    std::sort(sorted.begin(), sorted.end());
  }
}

DarkFrameSynthesizer::Workspace DarkFrameSynthesizer::make_workspace() const {
  const PlanarImage& r = decomp_.residual;
  auto state = std::make_unique<Workspace::State>(r.channels(), r.height(), r.width());
  state->noise.set_labels(r.labels());
  return Workspace(std::move(state));
}

PlanarImage DarkFrameSynthesizer::draw(std::uint64_t index) const {
  Workspace ws = make_workspace();
  return draw(index, ws);
}

PlanarImage DarkFrameSynthesizer::draw(std::uint64_t index, Workspace& ws) const {
  PlanarImage out = draw_noise(index, ws);
  const PlanarImage& s = decomp_.fixed_pattern;
  for (std::size_t c = 0; c < out.channels(); ++c) {
    auto dst = out.plane(c);
    const auto fp = s.plane(c);
    const double mu = decomp_.residual_means[c];
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = dst[i] + fp[i] + mu;
  }
  return out;
}

PlanarImage DarkFrameSynthesizer::draw_noise(std::uint64_t index, Workspace& ws) const {
  const PlanarImage& r = decomp_.residual;
  const auto offsets = draw_phase_offsets(r.channels(), r.height(), r.width(), config_, index);
  return draw_noise_with(offsets, ws);
}

PlanarImage DarkFrameSynthesizer::draw_noise_with(std::span<const spectral::PhaseField> offsets,
                                                  Workspace& ws) const {
  const PlanarImage& r = decomp_.residual;
  const std::size_t channels = r.channels();
  const std::size_t height = r.height();
  const std::size_t width = r.width();
  if (offsets.size() != 1 && offsets.size() != channels) {
    throw InputError("expected one shared phase field or one per channel");
  }
  for (const auto& f : offsets) {
    if (f.height != height || f.width != width || f.values.size() != height * width) {
      throw InputError("phase field shape does not match the residual");
    }
  }

  auto& st = *ws.state_;
  const std::size_t n = height * width;
  const std::size_t half_n = height * half_width_;
  const double inv_n = 1.0 / static_cast<double>(n);
  auto real = st.fft.real();
  auto half = st.fft.half_spectrum();
  st.offset_phasor.resize(half_n);

  for (std::size_t c = 0; c < channels; ++c) {
    if (c == 0 || offsets.size() > 1) {
      const auto& xi = offsets.size() == 1 ? offsets[0] : offsets[c];
      for (std::size_t u = 0; u < height; ++u) {
        for (std::size_t v = 0; v < half_width_; ++v) {
          st.offset_phasor[u * half_width_ + v] = std::polar(1.0, xi.at(u, v));
        }
      }
    }
    const double* mag = ref_magnitude_.data() + c * half_n;
    const std::complex<double>* phasor = ref_phasor_.data() + c * half_n;

    // Initial draw: reference magnitude, reference phase plus offset.
    for (std::size_t i = 0; i < half_n; ++i) half[i] = mag[i] * (phasor[i] * st.offset_phasor[i]);
    st.fft.inverse();
    auto noise = st.noise.plane(c);
    for (std::size_t i = 0; i < n; ++i) noise[i] = real[i] * inv_n;

    if (!config_.histogram_matching) continue;

    const double* sorted = sorted_residual_.data() + c * n;
    for (std::size_t k = 0; k < config_.iterations; ++k) {
      detail::stable_argsort(noise, st.order, st.scratch);
      for (std::size_t j = 0; j < n; ++j) real[st.order[j]] = sorted[j];
      const double mu = accurate_sum(real) * inv_n;
      for (std::size_t i = 0; i < n; ++i) real[i] -= mu;

      st.fft.forward();
      for (std::size_t i = 0; i < half_n; ++i) {
        const double re = half[i].real();
        const double im = half[i].imag();
        const double m = std::sqrt(re * re + im * im);
        half[i] = m > 0.0 ? std::complex<double>(mag[i] * re / m, mag[i] * im / m)
                          : std::complex<double>(mag[i], 0.0);
      }
      st.fft.inverse();
      for (std::size_t i = 0; i < n; ++i) noise[i] = real[i] * inv_n + mu;
    }
  }
  return st.noise;
}

}  // namespace specnoise::darksynth
