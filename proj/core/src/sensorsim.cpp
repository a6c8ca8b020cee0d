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

#include "specnoise/sensorsim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "specnoise/darksynth.hpp"
#include "specnoise/error.hpp"
#include "specnoise/photon.hpp"
#include "specnoise/rng.hpp"

namespace specnoise::sensorsim {

namespace {

constexpr std::uint64_t tag(StreamTag t) { return static_cast<std::uint64_t>(t); }

constexpr double kSceneFraction = 0.8;
constexpr std::size_t kPatchCore = 64;
constexpr std::size_t kPatchTransition = 8;
constexpr std::size_t kPatchGridCols = 3;
constexpr std::size_t kPatchGridRows = 2;

const char* to_string(ReadNoise r) { return r == ReadNoise::Gaussian ? "gaussian" : "tukey_lambda"; }
const char* to_string(BandAxis a) { return a == BandAxis::Columns ? "columns" : "rows"; }

double standard_normal(const std::array<double, 2>& u) {
  const double u1 = 1.0 - u[0];  // (0, 1]
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u[1]);
}

double open_uniform(double u) {
  // Map [0, 1) to (0, 1) by shifting half a resolution step.
  return u + 0x1.0p-54;
}

void normalize_field(std::span<double> v, double amplitude) {
  const double n = static_cast<double>(v.size());
  const double mean = accurate_sum(v) / n;
  double ss = 0.0;
  for (double& x : v) {
    x -= mean;
    ss += x * x;
  }
  const double sd = std::sqrt(ss / n);
  const double scale = sd > 0.0 ? amplitude / sd : 0.0;
  for (double& x : v) x *= scale;
}

double tukey_quantile(double u, double lambda) noexcept {
  return std::abs(lambda) < 1e-6 ? std::log(u / (1.0 - u))
                                 : (std::pow(u, lambda) - std::pow(1.0 - u, lambda)) / lambda;
}

double raised_cosine(double outside, double transition) {
  if (outside <= 0.0) return 1.0;
  if (outside >= transition) return 0.0;
  return 0.5 * (1.0 + std::cos(std::numbers::pi * outside / transition));
}

PlanarImage fixed_pattern(const SimConfig& cfg) {
  PlanarImage fpn(cfg.channels, cfg.height, cfg.width);
  if (cfg.fpn_amplitude == 0.0) return fpn;
  for (std::size_t c = 0; c < cfg.channels; ++c) {
    const CounterRng rng(cfg.seed, substream_id(tag(StreamTag::SensorFixed), 0, c));
    auto p = fpn.plane(c);
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = standard_normal(rng.uniform_pair(i));
  }
  if (cfg.fpn_scale >= darksynth::kIdentityBlurSigma) fpn = darksynth::gaussian_blur(fpn, cfg.fpn_scale);
  for (std::size_t c = 0; c < cfg.channels; ++c) normalize_field(fpn.plane(c), cfg.fpn_amplitude);
  return fpn;
}

PlanarImage hot_pixel_map(const SimConfig& cfg) {
  PlanarImage hot(cfg.channels, cfg.height, cfg.width);
  if (cfg.hot_pixel_rate == 0.0 || cfg.hot_pixel_amplitude == 0.0) return hot;
  for (std::size_t c = 0; c < cfg.channels; ++c) {
    const CounterRng rng(cfg.seed, substream_id(tag(StreamTag::SensorFixed), 1, c));
    auto p = hot.plane(c);
    for (std::size_t i = 0; i < p.size(); ++i) {
      const auto u = rng.uniform_pair(i);
      if (u[0] < cfg.hot_pixel_rate) p[i] = cfg.hot_pixel_amplitude * (0.5 + u[1]);
    }
  }
  return hot;
}

}  // namespace

void SimConfig::validate() const {
  if (channels == 0 || height == 0 || width == 0) throw InputError("sensor dimensions must be positive");
  const auto bad = [](double v) { return !(v >= 0.0) || !std::isfinite(v); };
  if (bad(sigma_read) || bad(sigma_band) || bad(fpn_amplitude) || bad(fpn_scale) ||
      bad(hot_pixel_amplitude) || bad(g_true)) {
    throw InputError("sensor sigmas, amplitudes and gain must be finite and non-negative");
  }
  if (!(hot_pixel_rate >= 0.0 && hot_pixel_rate <= 1.0)) throw InputError("hot_pixel_rate must lie in [0, 1]");
  if (read_noise == ReadNoise::TukeyLambda && !(tukey_shape > -0.5 && std::isfinite(tukey_shape))) {
    throw InputError("tukey_shape must exceed -0.5");
  }
  meta().validate();
}

FrameMeta SimConfig::meta() const {
  FrameMeta m;
  m.iso = iso;
  m.black_level = black_level;
  m.white_level = white_level;
  m.sensor_id = sensor_id;
  m.exposure_tag = "dark";
  return m;
}

nlohmann::ordered_json to_json(const SimConfig& cfg) {
  nlohmann::ordered_json j;
  j["channels"] = cfg.channels;
  j["height"] = cfg.height;
  j["width"] = cfg.width;
  j["black_level"] = cfg.black_level;
  j["white_level"] = cfg.white_level;
  j["g_true"] = cfg.g_true;
  j["read_noise"] = to_string(cfg.read_noise);
  j["tukey_shape"] = cfg.tukey_shape;
  j["sigma_read"] = cfg.sigma_read;
  j["sigma_band"] = cfg.sigma_band;
  j["band_axis"] = to_string(cfg.band_axis);
  j["fpn_amplitude"] = cfg.fpn_amplitude;
  j["fpn_scale"] = cfg.fpn_scale;
  j["hot_pixel_rate"] = cfg.hot_pixel_rate;
  j["hot_pixel_amplitude"] = cfg.hot_pixel_amplitude;
  j["quantize"] = cfg.quantize;
  j["iso"] = cfg.iso;
  j["sensor_id"] = cfg.sensor_id;
  j["seed"] = cfg.seed;
  return j;
}

SimConfig sim_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ParseError(ParseError::Kind::Format, "sensor config must be a JSON object");
  SimConfig cfg;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "channels") cfg.channels = value.get<std::size_t>();
      else if (key == "height") cfg.height = value.get<std::size_t>();
      else if (key == "width") cfg.width = value.get<std::size_t>();
      else if (key == "black_level") cfg.black_level = value.get<double>();
      else if (key == "white_level") cfg.white_level = value.get<double>();
      else if (key == "g_true") cfg.g_true = value.get<double>();
      else if (key == "tukey_shape") cfg.tukey_shape = value.get<double>();
      else if (key == "sigma_read") cfg.sigma_read = value.get<double>();
      else if (key == "sigma_band") cfg.sigma_band = value.get<double>();
      else if (key == "fpn_amplitude") cfg.fpn_amplitude = value.get<double>();
      else if (key == "fpn_scale") cfg.fpn_scale = value.get<double>();
      else if (key == "hot_pixel_rate") cfg.hot_pixel_rate = value.get<double>();
      else if (key == "hot_pixel_amplitude") cfg.hot_pixel_amplitude = value.get<double>();
      else if (key == "quantize") cfg.quantize = value.get<bool>();
      else if (key == "iso") cfg.iso = value.get<std::uint32_t>();
      else if (key == "sensor_id") cfg.sensor_id = value.get<std::string>();
      else if (key == "seed") cfg.seed = value.get<std::uint64_t>();
      else if (key == "read_noise") {
        const auto s = value.get<std::string>();
        if (s == "gaussian") cfg.read_noise = ReadNoise::Gaussian;
        else if (s == "tukey_lambda") cfg.read_noise = ReadNoise::TukeyLambda;
        else throw ParseError(ParseError::Kind::Format, "read_noise must be gaussian or tukey_lambda");
      } else if (key == "band_axis") {
        const auto s = value.get<std::string>();
        if (s == "columns") cfg.band_axis = BandAxis::Columns;
        else if (s == "rows") cfg.band_axis = BandAxis::Rows;
        else throw ParseError(ParseError::Kind::Format, "band_axis must be columns or rows");
      } else {
        throw ParseError(ParseError::Kind::Format, "unknown sensor config field: " + key);
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(ParseError::Kind::Format, std::string("sensor config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

nlohmann::ordered_json to_json(const GroundTruth& truth) {
  nlohmann::ordered_json j;
  j["mu"] = truth.mu;
  j["icc_r"] = truth.icc_r;
  j["gain"] = truth.gain;
  nlohmann::ordered_json fpn_sd = nlohmann::ordered_json::array();
  for (std::size_t c = 0; c < truth.fpn.channels(); ++c) {
    const auto p = truth.fpn.plane(c);
    double ss = 0.0;
    for (double v : p) ss += v * v;
    fpn_sd.push_back(std::sqrt(ss / static_cast<double>(p.size())));
  }
  j["fpn_std"] = std::move(fpn_sd);
  std::size_t hot = 0;
  for (double v : truth.hot_pixels.values()) hot += v != 0.0 ? 1 : 0;
  j["hot_pixel_count"] = hot;
  return j;
}

double tukey_lambda_variance(double lambda) {
  if (!(lambda > -0.5)) throw InputError("Tukey-lambda variance is infinite for lambda <= -0.5");
  if (std::abs(lambda) < 1e-6) return std::numbers::pi * std::numbers::pi / 3.0;
  const double g1 = std::tgamma(lambda + 1.0);
  return 2.0 / (lambda * lambda) * (1.0 / (1.0 + 2.0 * lambda) - g1 * g1 / std::tgamma(2.0 * lambda + 2.0));
}

double tukey_lambda_standard(double u, double lambda) noexcept {
  return tukey_quantile(u, lambda) / std::sqrt(tukey_lambda_variance(lambda));
}

std::vector<FlatPatch> flat_patches(const SimConfig& cfg) {
  std::vector<FlatPatch> out;
  const std::size_t cell_h = cfg.height / kPatchGridRows;
  const std::size_t cell_w = cfg.width / kPatchGridCols;
  if (cell_h <= 2 * kPatchTransition || cell_w <= 2 * kPatchTransition) return out;
  const std::size_t core_h = std::min(kPatchCore, cell_h - 2 * kPatchTransition);
  const std::size_t core_w = std::min(kPatchCore, cell_w - 2 * kPatchTransition);
  const double top = kSceneFraction * (cfg.white_level - cfg.black_level);
  const std::size_t count = kPatchGridRows * kPatchGridCols;
  for (std::size_t k = 0; k < count; ++k) {
    const std::size_t gr = k / kPatchGridCols;
    const std::size_t gc = k % kPatchGridCols;
    FlatPatch p;
    p.height = core_h;
    p.width = core_w;
    p.row = gr * cell_h + (cell_h - core_h) / 2;
    p.col = gc * cell_w + (cell_w - core_w) / 2;
    p.level = top * (0.05 + 0.9 * static_cast<double>(k) / static_cast<double>(count - 1));
    out.push_back(p);
  }
  return out;
}

PlanarImage generate_scene(const SimConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  const std::size_t h = cfg.height;
  const std::size_t w = cfg.width;
  const double top = kSceneFraction * (cfg.white_level - cfg.black_level);

  // Low-frequency background: a few random plane waves, min-max scaled.
  CounterRng rng(seed, substream_id(tag(StreamTag::Scene)));
  constexpr int kWaves = 4;
  double fy[kWaves], fx[kWaves], ph[kWaves], amp[kWaves];
  for (int k = 0; k < kWaves; ++k) {
    fy[k] = 0.1 + 0.4 * rng.next_uniform();
    fx[k] = 0.1 + 0.4 * rng.next_uniform();
    ph[k] = 2.0 * std::numbers::pi * rng.next_uniform();
    amp[k] = 0.5 + rng.next_uniform();
  }
  std::vector<double> bg(h * w);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      double v = 0.0;
      for (int k = 0; k < kWaves; ++k) {
        v += amp[k] * std::cos(2.0 * std::numbers::pi *
                                   (fy[k] * static_cast<double>(y) / static_cast<double>(h) +
                                    fx[k] * static_cast<double>(x) / static_cast<double>(w)) +
                               ph[k]);
      }
      bg[y * w + x] = v;
    }
  }
  const auto [lo_it, hi_it] = std::minmax_element(bg.begin(), bg.end());
  const double lo = *lo_it;
  const double span = *hi_it - lo;
  for (double& v : bg) v = span > 0.0 ? top * (v - lo) / span : 0.0;

  const double t = static_cast<double>(kPatchTransition);
  for (const FlatPatch& p : flat_patches(cfg)) {
    const std::size_t y0 = p.row - kPatchTransition, y1 = p.row + p.height + kPatchTransition;
    const std::size_t x0 = p.col - kPatchTransition, x1 = p.col + p.width + kPatchTransition;
    for (std::size_t y = y0; y < y1; ++y) {
      const double dy = y < p.row ? static_cast<double>(p.row - y)
                                  : static_cast<double>(y + 1) - static_cast<double>(p.row + p.height);
      const double wy = raised_cosine(dy, t);
      for (std::size_t x = x0; x < x1; ++x) {
        const double dx = x < p.col ? static_cast<double>(p.col - x)
                                    : static_cast<double>(x + 1) - static_cast<double>(p.col + p.width);
        const double wgt = wy * raised_cosine(dx, t);
        double& v = bg[y * w + x];
        v = wgt * p.level + (1.0 - wgt) * v;
      }
    }
  }

  PlanarImage scene(cfg.channels, h, w);
  for (std::size_t c = 0; c < cfg.channels; ++c) std::copy(bg.begin(), bg.end(), scene.plane(c).begin());
  return scene;
}

SyntheticSensor::SyntheticSensor(SimConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  truth_.fpn = fixed_pattern(cfg_);
  truth_.hot_pixels = hot_pixel_map(cfg_);
  truth_.mu = cfg_.black_level;
  const double vb = cfg_.sigma_band * cfg_.sigma_band;
  const double vr = cfg_.sigma_read * cfg_.sigma_read;
  truth_.icc_r = cfg_.band_axis == BandAxis::Columns && vb + vr > 0.0 ? vb / (vb + vr) : 0.0;
  truth_.gain = cfg_.g_true;
}

DarkSample SyntheticSensor::dark(std::uint64_t seed) const {
  const std::size_t h = cfg_.height;
  const std::size_t w = cfg_.width;
  PlanarImage img(cfg_.channels, h, w, cfg_.black_level);

  std::vector<double> band(cfg_.band_axis == BandAxis::Columns ? w : h, 0.0);
  if (cfg_.sigma_band > 0.0) {
    const CounterRng rng(seed, substream_id(tag(StreamTag::SensorTemporal), 1));
    for (std::size_t i = 0; i < band.size(); ++i) band[i] = cfg_.sigma_band * standard_normal(rng.uniform_pair(i));
  }
  const double tukey_scale =
      cfg_.read_noise == ReadNoise::TukeyLambda ? 1.0 / std::sqrt(tukey_lambda_variance(cfg_.tukey_shape)) : 0.0;

  for (std::size_t c = 0; c < cfg_.channels; ++c) {
    auto dst = img.plane(c);
    const auto fpn = truth_.fpn.plane(c);
    const auto hot = truth_.hot_pixels.plane(c);
    const CounterRng rng(seed, substream_id(tag(StreamTag::SensorTemporal), 0, c));
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < w; ++x) {
        const std::size_t i = y * w + x;
        double read = 0.0;
        if (cfg_.sigma_read > 0.0) {
          const auto u = rng.uniform_pair(i);
          if (cfg_.read_noise == ReadNoise::Gaussian) {
            read = standard_normal(u);
          } else {
            read = tukey_quantile(open_uniform(u[0]), cfg_.tukey_shape) * tukey_scale;
          }
        }
        const double b = cfg_.band_axis == BandAxis::Columns ? band[x] : band[y];
        double v = dst[i] + fpn[i] + hot[i] + b + cfg_.sigma_read * read;
        if (cfg_.quantize) v = std::clamp(std::nearbyint(v), 0.0, cfg_.white_level);
        dst[i] = v;
      }
    }
  }
  return {std::move(img), cfg_.meta(), truth_};
}

PlanarImage SyntheticSensor::scene() const { return generate_scene(cfg_, cfg_.seed); }

NoisyPair SyntheticSensor::noisy_pair(std::uint64_t seed) const {
  PlanarImage clean = scene();
  PlanarImage noisy = cfg_.g_true > 0.0 ? photon::sample_poisson_signal(clean, cfg_.g_true, 1.0, seed) : clean;
  const PlanarImage d = dark(seed).image;
  auto dst = noisy.values();
  const auto src = d.values();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i] - cfg_.black_level;
  return {std::move(clean), std::move(noisy)};
}

DarkSample generate_dark(const SimConfig& cfg, std::uint64_t seed) { return SyntheticSensor(cfg).dark(seed); }

NoisyPair generate_noisy_pair(const SimConfig& cfg, std::uint64_t seed) {
  return SyntheticSensor(cfg).noisy_pair(seed);
}

}  // namespace specnoise::sensorsim
