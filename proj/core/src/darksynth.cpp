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

#include "specnoise/darksynth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "argsort.hpp"
#include "specnoise/error.hpp"
#include "specnoise/rng.hpp"

namespace specnoise::darksynth {
namespace {

// Reflect-without-repeat ("reflect 101") border index, valid for any offset.
std::size_t reflect_index(std::ptrdiff_t i, std::size_t n) {
  if (n == 1) return 0;
  const auto period = static_cast<std::ptrdiff_t>(2 * (n - 1));
  std::ptrdiff_t m = i % period;
  if (m < 0) m += period;
  if (m >= static_cast<std::ptrdiff_t>(n)) m = period - m;
  return static_cast<std::size_t>(m);
}

void check_offsets(std::span<const spectral::PhaseField> offsets, std::size_t channels,
                   std::size_t height, std::size_t width) {
  if (offsets.size() != 1 && offsets.size() != channels) {
    throw InputError("expected 1 or " + std::to_string(channels) + " phase fields, got " +
                     std::to_string(offsets.size()));
  }
  for (const auto& f : offsets) {
    if (f.height != height || f.width != width || f.values.size() != height * width) {
      throw InputError("phase field shape does not match the residual");
    }
  }
}

void record(TransformTrace* trace, const spectral::InverseResult& r) {
  if (trace == nullptr) return;
  trace->max_imag_residue = std::max(trace->max_imag_residue, r.imag_residue);
  ++trace->inverse_transforms;
}

}  // namespace

void SynthesisConfig::validate() const {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw InputError("sigma must be positive");
  if (histogram_bins < 2) throw InputError("histogram_bins must be at least 2");
}

std::vector<double> gaussian_kernel(double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw InputError("blur sigma must be positive");
  const auto radius = static_cast<std::size_t>(std::ceil(4.0 * sigma));
  std::vector<double> k(2 * radius + 1);
  double sum = 0.0;
  for (std::size_t i = 0; i < k.size(); ++i) {
    const double x = static_cast<double>(i) - static_cast<double>(radius);
    k[i] = std::exp(-0.5 * x * x / (sigma * sigma));
    sum += k[i];
  }
  for (double& v : k) v /= sum;
  return k;
}

PlanarImage gaussian_blur(const PlanarImage& img, double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw InputError("blur sigma must be positive");
  if (sigma < kIdentityBlurSigma) return img;

  const std::vector<double> kernel = gaussian_kernel(sigma);
  const auto radius = static_cast<std::ptrdiff_t>(kernel.size() / 2);
  const std::size_t h = img.height();
  const std::size_t w = img.width();

  PlanarImage out = PlanarImage::like(img);
  std::vector<double> padded(w + 2 * static_cast<std::size_t>(radius));
  std::vector<double> rows(h * w);
  for (std::size_t c = 0; c < img.channels(); ++c) {
    const auto src = img.plane(c);
    // Horizontal pass into `rows`.
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t i = 0; i < padded.size(); ++i) {
        padded[i] = src[y * w + reflect_index(static_cast<std::ptrdiff_t>(i) - radius, w)];
      }
      double* dst = rows.data() + y * w;
      for (std::size_t x = 0; x < w; ++x) {
        double acc = 0.0;
        const double* p = padded.data() + x;
        for (std::size_t k = 0; k < kernel.size(); ++k) acc += kernel[k] * p[k];
        dst[x] = acc;
      }
    }
    // Vertical pass, accumulating whole rows.
    auto dst = out.plane(c);
    for (std::size_t y = 0; y < h; ++y) {
      double* out_row = dst.data() + y * w;
      std::fill_n(out_row, w, 0.0);
      for (std::size_t k = 0; k < kernel.size(); ++k) {
        const std::size_t sy =
            reflect_index(static_cast<std::ptrdiff_t>(y) + static_cast<std::ptrdiff_t>(k) - radius, h);
        const double* in_row = rows.data() + sy * w;
        const double kv = kernel[k];
        for (std::size_t x = 0; x < w; ++x) out_row[x] += kv * in_row[x];
      }
    }
  }
  return out;
}

Decomposition remove_fixed_pattern(const PlanarImage& dark, double sigma) {
  Decomposition d{gaussian_blur(dark, sigma), PlanarImage::like(dark), {}, false};
  d.vacuous = sigma < kIdentityBlurSigma;
  auto r = d.residual.values();
  const auto src = dark.values();
  const auto s = d.fixed_pattern.values();
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = src[i] - s[i];
  d.residual_means = channel_means(d.residual);
  for (std::size_t c = 0; c < dark.channels(); ++c) {
    const double mu = d.residual_means[c];
    for (double& v : d.residual.plane(c)) v -= mu;
  }
  return d;
}

std::vector<spectral::PhaseField> draw_phase_offsets(std::size_t channels, std::size_t height,
                                                     std::size_t width,
                                                     const SynthesisConfig& config,
                                                     std::uint64_t draw_index) {
  const std::size_t fields = config.shared_phase ? 1 : channels;
  const std::size_t n = height * width;
  std::vector<spectral::PhaseField> out;
  out.reserve(fields);
  std::vector<double> raw(n);
  for (std::size_t f = 0; f < fields; ++f) {
    const std::uint64_t channel_tag = config.shared_phase ? ~std::uint64_t{0} : f;
    const CounterRng rng(config.seed, substream_id(static_cast<std::uint64_t>(StreamTag::PhaseOffset),
                                                   draw_index, channel_tag));
    for (std::size_t i = 0; i < n; i += 2) {
      const auto u = rng.uniform_pair(i / 2);
      // u in [0,1) maps onto (-pi, pi].
      raw[i] = std::numbers::pi - 2.0 * std::numbers::pi * u[0];
      if (i + 1 < n) raw[i + 1] = std::numbers::pi - 2.0 * std::numbers::pi * u[1];
    }
    out.push_back(spectral::antisymmetrize_phase(height, width, raw));
  }
  return out;
}

PlanarImage phase_randomize(const Decomposition& decomp,
                            std::span<const spectral::PhaseField> offsets,
                            TransformTrace* trace) {
  const PlanarImage& residual = decomp.residual;
  check_offsets(offsets, residual.channels(), residual.height(), residual.width());
  const spectral::SpectrumStack ref = spectral::forward_dft(residual);
  const PlanarImage mag = spectral::magnitude(ref);
  const PlanarImage ph = spectral::phase(ref);

  spectral::SpectrumStack randomized(ref.channels(), ref.height(), ref.width());
  for (std::size_t c = 0; c < ref.channels(); ++c) {
    const auto& xi = offsets.size() == 1 ? offsets[0] : offsets[c];
    const auto m = mag.plane(c);
    const auto p = ph.plane(c);
    auto dst = randomized.plane(c);
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = std::polar(m[i], p[i] + xi.values[i]);
  }
  auto inv = spectral::inverse_dft(randomized);
  record(trace, inv);
  inv.image.set_labels(residual.labels());
  return std::move(inv.image);
}

PlanarImage phase_randomize(const Decomposition& decomp, const SynthesisConfig& config,
                            std::uint64_t draw_index, TransformTrace* trace) {
  const PlanarImage& r = decomp.residual;
  const auto offsets = draw_phase_offsets(r.channels(), r.height(), r.width(), config, draw_index);
  return phase_randomize(decomp, offsets, trace);
}

PlanarImage histogram_match(const PlanarImage& src, const PlanarImage& ref) {
  if (!src.same_shape(ref)) throw InputError("histogram_match: src and ref shapes differ");
  PlanarImage out = PlanarImage::like(src);
  std::vector<std::uint32_t> order;
  detail::ArgsortScratch scratch;
  std::vector<double> sorted_ref;
  for (std::size_t c = 0; c < src.channels(); ++c) {
    const auto r = ref.plane(c);
    sorted_ref.assign(r.begin(), r.end());
    std::sort(sorted_ref.begin(), sorted_ref.end());
    detail::stable_argsort(src.plane(c), order, scratch);
    auto dst = out.plane(c);
    for (std::size_t k = 0; k < order.size(); ++k) dst[order[k]] = sorted_ref[k];
  }
  return out;
}

PlanarImage refine(PlanarImage noise, const Decomposition& decomp, std::size_t iterations,
                   TransformTrace* trace) {
  const PlanarImage& residual = decomp.residual;
  if (!noise.same_shape(residual)) throw InputError("refine: noise and residual shapes differ");
  if (iterations == 0) return noise;
  const PlanarImage ref_mag = spectral::magnitude(spectral::forward_dft(residual));

  for (std::size_t k = 0; k < iterations; ++k) {
    PlanarImage matched = histogram_match(noise, residual);
    const std::vector<double> mu = channel_means(matched);
    for (std::size_t c = 0; c < matched.channels(); ++c) {
      for (double& v : matched.plane(c)) v -= mu[c];
    }
    spectral::SpectrumStack spec = spectral::forward_dft(matched);
    const PlanarImage ph = spectral::phase(spec);
    const auto m = ref_mag.values();
    const auto p = ph.values();
    auto bins = spec.values();
    for (std::size_t i = 0; i < bins.size(); ++i) bins[i] = std::polar(m[i], p[i]);
    auto inv = spectral::inverse_dft(spec);
    record(trace, inv);
    for (std::size_t c = 0; c < inv.image.channels(); ++c) {
      for (double& v : inv.image.plane(c)) v += mu[c];
    }
    inv.image.set_labels(noise.labels());
    noise = std::move(inv.image);
  }
  return noise;
}

PlanarImage synthesize_dark(const PlanarImage& dark, const FrameMeta& meta,
                            const SynthesisConfig& config, std::uint64_t draw_index) {
  meta.validate();
  const DarkFrameSynthesizer synth(dark, config);
  return synth.draw(draw_index);
}

PlanarImage export_dark_shading(const PlanarImage& dark, double sigma) {
  const Decomposition d = remove_fixed_pattern(dark, sigma);
  PlanarImage shading = d.fixed_pattern;
  for (std::size_t c = 0; c < shading.channels(); ++c) {
    for (double& v : shading.plane(c)) v += d.residual_means[c];
  }
  return shading;
}

PlanarImage sample_dark(DarkSampling strategy, const PlanarImage& dark,
                        const DarkFrameSynthesizer* synth, std::size_t patch_h,
                        std::size_t patch_w, std::uint64_t seed, std::uint64_t index) {
  if (patch_h == 0 || patch_w == 0 || patch_h > dark.height() || patch_w > dark.width()) {
    throw InputError("patch size must fit inside the dark frame");
  }
  std::size_t top = 0;
  std::size_t left = 0;
  if (strategy != DarkSampling::DirectAdd) {
    CounterRng rng(seed, substream_id(static_cast<std::uint64_t>(StreamTag::Crop), index));
    top = rng.next_below(dark.height() - patch_h + 1);
    left = rng.next_below(dark.width() - patch_w + 1);
  }
  PlanarImage source = dark;
  if (strategy == DarkSampling::Spectral) {
    if (synth == nullptr) throw InputError("spectral sampling needs a synthesizer");
    source = synth->draw(index);
    if (!source.same_shape(dark)) throw InputError("synthesizer was built for a different frame shape");
  }
  PlanarImage patch(dark.channels(), patch_h, patch_w);
  patch.set_labels(dark.labels());
  for (std::size_t c = 0; c < dark.channels(); ++c) {
    for (std::size_t y = 0; y < patch_h; ++y) {
      for (std::size_t x = 0; x < patch_w; ++x) patch.at(c, y, x) = source.at(c, top + y, left + x);
    }
  }
  return patch;
}

}  // namespace specnoise::darksynth
