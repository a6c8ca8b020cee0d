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

#include "specnoise/photon.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <string>

#include "specnoise/darksynth.hpp"
#include "specnoise/error.hpp"
#include "specnoise/rng.hpp"

namespace specnoise::photon {
namespace {

struct GroupAccumulator {
  double level_sum = 0.0;
  double level_count = 0.0;
  double sum = 0.0;
  double sum_sq = 0.0;
  double n = 0.0;

  void add(double d) {
    sum += d;
    sum_sq += d * d;
    n += 1.0;
  }
};

VarianceSamples finish_groups(const std::map<long long, GroupAccumulator>& groups) {
  VarianceSamples out;
  for (const auto& [bin, g] : groups) {
    if (g.n < kMinGroupSize) continue;
    const double var = std::max(0.0, (g.sum_sq - g.sum * g.sum / g.n) / (g.n - 1.0));
    out.push_back({g.level_sum / g.level_count, var, g.n});
  }
  if (out.size() < 2) {
    throw InsufficientData("only " + std::to_string(out.size()) +
                           " signal-level group(s) with at least " +
                           std::to_string(static_cast<int>(kMinGroupSize)) +
                           " observations; need 2");
  }
  return out;
}

void check_bin_width(double bin_width) {
  if (!(bin_width > 0.0) || !std::isfinite(bin_width)) {
    throw InputError("bin width must be positive");
  }
}

double median(std::vector<double> v) {
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double hi = v[mid];
  if (v.size() % 2 == 1) return hi;
  const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lo + hi);
}

}  // namespace

nlohmann::ordered_json to_json(const GainModel& model) {
  nlohmann::ordered_json j;
  j["iso"] = model.iso;
  j["gain"] = model.gain;
  j["var_intercept"] = model.var_intercept;
  j["fit_points"] = model.fit_points;
  j["fit_r2"] = model.fit_r2;
  return j;
}

GainModel gain_model_from_json(const nlohmann::json& j) {
  try {
    GainModel m;
    m.iso = j.at("iso").get<std::uint32_t>();
    m.gain = j.at("gain").get<double>();
    m.var_intercept = j.at("var_intercept").get<double>();
    m.fit_points = j.at("fit_points").get<std::size_t>();
    m.fit_r2 = j.at("fit_r2").get<double>();
    if (!(m.gain > 0.0) || m.iso == 0) {
      throw ParseError(ParseError::Kind::Format, "gain model: gain and iso must be positive");
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(ParseError::Kind::Format, std::string("gain model JSON: ") + e.what());
  }
}

double default_bin_width(const FrameMeta& meta) {
  return (meta.white_level - meta.black_level) / 256.0;
}

VarianceSamples collect_variance_single(const PlanarImage& noisy, const FrameMeta& meta,
                                        double pseudo_sigma, double bin_width) {
  meta.validate();
  check_bin_width(bin_width);
  if (!(pseudo_sigma > 0.0)) throw InputError("pseudo-clean sigma must be positive");
  if (noisy.height() < 3 || noisy.width() < 3) {
    throw InsufficientData("image too small for 3x3 patches");
  }
  const double clip = kClipFraction * (meta.white_level - meta.black_level);
  const PlanarImage pseudo = darksynth::gaussian_blur(noisy, pseudo_sigma);
  const std::size_t h = noisy.height();
  const std::size_t w = noisy.width();

  // Pseudo-clean values within the blur radius of the border are biased by
  // the reflection; patches there are skipped.
  const std::size_t margin = static_cast<std::size_t>(std::ceil(4.0 * pseudo_sigma)) + 1;
  if (h < 2 * margin + 1 || w < 2 * margin + 1) {
    throw InsufficientData("image too small for the pseudo-clean blur radius");
  }

  std::map<long long, GroupAccumulator> groups;
  std::vector<unsigned char> clipped(h * w);
  for (std::size_t c = 0; c < noisy.channels(); ++c) {
    const auto y = noisy.plane(c);
    const auto pc = pseudo.plane(c);
    for (std::size_t i = 0; i < y.size(); ++i) clipped[i] = y[i] >= clip ? 1 : 0;
    for (std::size_t r = margin; r + margin < h; ++r) {
      for (std::size_t q = margin; q + margin < w; ++q) {
        bool skip = false;
        double lo = pc[r * w + q], hi = lo;
        for (std::size_t dr = 0; dr < 3 && !skip; ++dr) {
          for (std::size_t dq = 0; dq < 3; ++dq) {
            const std::size_t i = (r + dr - 1) * w + q + dq - 1;
            if (clipped[i]) {
              skip = true;
              break;
            }
            lo = std::min(lo, pc[i]);
            hi = std::max(hi, pc[i]);
          }
        }
        // Patches on edges or steep gradients are not level-homogeneous.
        if (skip || hi - lo > bin_width) continue;
        const double centre = pc[r * w + q];
        auto& g = groups[static_cast<long long>(std::floor(centre / bin_width))];
        g.level_sum += centre;
        g.level_count += 1.0;
        for (std::size_t dr = 0; dr < 3; ++dr) {
          for (std::size_t dq = 0; dq < 3; ++dq) {
            const std::size_t i = (r + dr - 1) * w + q + dq - 1;
            g.add(y[i] - pc[i]);
          }
        }
      }
    }
  }
  VarianceSamples out = finish_groups(groups);
  // The blur includes the pixel itself, so for white noise
  // Var(y - blur(y)) = Var(y) (1 - 2 k0 + sum k^2) with k the 2D kernel.
  const std::vector<double> k = darksynth::gaussian_kernel(pseudo_sigma);
  double k0 = 0.0, ksq = 0.0;
  if (pseudo_sigma >= darksynth::kIdentityBlurSigma) {
    k0 = k[k.size() / 2] * k[k.size() / 2];
    for (double v : k) ksq += v * v;
    ksq *= ksq;
  }
  const double shrink = 1.0 - 2.0 * k0 + ksq;
  if (shrink > 0.0) {
    for (auto& s : out) s.variance /= shrink;
  }
  return out;
}

VarianceSamples collect_variance_pairs(
    std::span<const std::pair<PlanarImage, PlanarImage>> pairs, const FrameMeta& meta,
    double bin_width) {
  meta.validate();
  check_bin_width(bin_width);
  const double clip = kClipFraction * (meta.white_level - meta.black_level);
  std::map<long long, GroupAccumulator> groups;
  for (const auto& [clean, noisy] : pairs) {
    if (!clean.same_shape(noisy)) throw InputError("clean/noisy pair shapes differ");
    const auto x = clean.values();
    const auto y = noisy.values();
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (x[i] >= clip || y[i] >= clip) continue;
      auto& g = groups[static_cast<long long>(std::floor(x[i] / bin_width))];
      g.level_sum += x[i];
      g.level_count += 1.0;
      g.add(y[i] - x[i]);
    }
  }
  return finish_groups(groups);
}

GainModel fit_gain(const VarianceSamples& samples, std::uint32_t iso, FitMethod method) {
  if (samples.size() < 2) throw InsufficientData("need at least 2 variance samples");
  const bool distinct = std::any_of(samples.begin(), samples.end(), [&](const VarianceSample& s) {
    return s.level != samples.front().level;
  });
  if (!distinct) throw InsufficientData("variance samples share a single signal level");

  double sw = 0.0, sx = 0.0, sy = 0.0;
  for (const auto& s : samples) {
    if (!(s.weight > 0.0)) throw InputError("variance sample weights must be positive");
    sw += s.weight;
    sx += s.weight * s.level;
    sy += s.weight * s.variance;
  }
  const double mx = sx / sw;
  const double my = sy / sw;

  double slope = 0.0;
  double intercept = 0.0;
  if (method == FitMethod::WeightedLeastSquares) {
    double sxx = 0.0, sxy = 0.0;
    for (const auto& s : samples) {
      sxx += s.weight * (s.level - mx) * (s.level - mx);
      sxy += s.weight * (s.level - mx) * (s.variance - my);
    }
    slope = sxy / sxx;
    intercept = my - slope * mx;
  } else {
    std::vector<double> slopes;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      for (std::size_t j = i + 1; j < samples.size(); ++j) {
        const double dx = samples[j].level - samples[i].level;
        if (dx != 0.0) slopes.push_back((samples[j].variance - samples[i].variance) / dx);
      }
    }
    slope = median(slopes);
    std::vector<double> offsets;
    offsets.reserve(samples.size());
    for (const auto& s : samples) offsets.push_back(s.variance - slope * s.level);
    intercept = median(offsets);
  }
  if (!(slope > 0.0) || !std::isfinite(slope)) {
    throw DegenerateFit("non-positive variance slope " + std::to_string(slope) +
                        " (wrong black level or saturated input?)");
  }

  double ss_res = 0.0, ss_tot = 0.0;
  for (const auto& s : samples) {
    const double e = s.variance - (slope * s.level + intercept);
    ss_res += s.weight * e * e;
    ss_tot += s.weight * (s.variance - my) * (s.variance - my);
  }
  double r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
  r2 = std::clamp(r2, 0.0, 1.0);

  GainModel model;
  model.iso = iso;
  model.gain = slope;
  model.var_intercept = std::max(0.0, intercept);
  model.fit_points = samples.size();
  model.fit_r2 = r2;
  return model;
}

double poisson_variate(double mean, double u1, double u2) noexcept {
  if (!(mean > 0.0)) return 0.0;
  if (mean < kPoissonInversionLimit) {
    double p = std::exp(-mean);
    double cdf = p;
    double k = 0.0;
    while (u1 >= cdf && k < 1000.0) {
      k += 1.0;
      p *= mean / k;
      cdf += p;
    }
    return k;
  }
  const double z = std::sqrt(-2.0 * std::log1p(-u1)) * std::cos(2.0 * std::numbers::pi * u2);
  return std::max(0.0, std::floor(mean + std::sqrt(mean) * z + 0.5));
}

PlanarImage sample_poisson_signal(const PlanarImage& clean, double gain, double ratio,
                                  std::uint64_t seed) {
  if (!(gain > 0.0) || !std::isfinite(gain)) throw InputError("gain must be positive");
  if (!(ratio >= 1.0) || !std::isfinite(ratio)) throw InputError("exposure ratio must be >= 1");
  const auto x = clean.values();
  for (double v : x) {
    if (!(v >= 0.0)) throw InputError("clean signal must be non-negative (black-level-subtracted DN)");
  }
  PlanarImage out = PlanarImage::like(clean);
  auto dst = out.values();
  const CounterRng rng(seed, substream_id(static_cast<std::uint64_t>(StreamTag::Poisson)));
  const double scale = gain * ratio;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const auto u = rng.uniform_pair(i);
    dst[i] = gain * poisson_variate(x[i] / scale, u[0], u[1]);
  }
  return out;
}

PlanarImage synthesize_noisy(const PlanarImage& clean, const GainModel& gain,
                             const PlanarImage& synthetic_dark, const FrameMeta& meta,
                             double ratio, bool quantize, std::uint64_t seed) {
  meta.validate();
  if (!clean.same_shape(synthetic_dark)) {
    throw InputError("clean image and synthetic dark frame shapes differ");
  }
  PlanarImage out = sample_poisson_signal(clean, gain.gain, ratio, seed);
  auto dst = out.values();
  const auto dark = synthetic_dark.values();
  const double lo = -meta.black_level;
  const double hi = meta.white_level - meta.black_level;
  for (std::size_t i = 0; i < dst.size(); ++i) {
    double v = dst[i] + (dark[i] - meta.black_level);
    if (quantize) v = std::clamp(std::nearbyint(v), lo, hi);
    dst[i] = v;
  }
  return out;
}

}  // namespace specnoise::photon
