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

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "specnoise/tensor.hpp"

namespace specnoise::sensorsim {

enum class ReadNoise { Gaussian, TukeyLambda };

/// Axis along which the banding signal varies. Column banding is constant
/// down each column, so it survives row-wise mean removal and shows up in
/// the row-wise inter-channel correlation; row banding is constant along
/// each row and is invisible to it.
enum class BandAxis { Columns, Rows };

/// Synthetic sensor description. Levels are in DN.
struct SimConfig {
  std::size_t channels = 4;
  std::size_t height = 256;
  std::size_t width = 256;
  double black_level = 512.0;
  double white_level = 16383.0;
  double g_true = 1.8;
  ReadNoise read_noise = ReadNoise::Gaussian;
  double tukey_shape = -0.2;  ///< lambda; must exceed -0.5 for finite variance
  double sigma_read = 3.0;    ///< read-noise standard deviation
  double sigma_band = 0.0;    ///< banding standard deviation, shared across channels
  BandAxis band_axis = BandAxis::Columns;
  double fpn_amplitude = 0.0; ///< standard deviation of the smooth fixed pattern
  double fpn_scale = 200.0;   ///< smoothness (Gaussian sigma, px) of the fixed pattern
  double hot_pixel_rate = 0.0;
  double hot_pixel_amplitude = 0.0;
  bool quantize = false;      ///< round dark frames and clip to [0, white]
  std::uint32_t iso = 100;
  std::string sensor_id = "sim";
  std::uint64_t seed = 0;     ///< sensor identity: fixed pattern, hot pixels, scene

  /// Throws InputError on negative sigmas, rates outside [0, 1], invalid
  /// levels or an out-of-range Tukey shape.
  void validate() const;
  FrameMeta meta() const;
};

nlohmann::ordered_json to_json(const SimConfig& cfg);
/// Missing fields keep their defaults; unknown fields are rejected.
SimConfig sim_config_from_json(const nlohmann::json& j);

/// Quantities known exactly from the configuration.
struct GroundTruth {
  PlanarImage fpn;            ///< zero-mean smooth fixed pattern S*
  PlanarImage hot_pixels;     ///< additive hot-pixel offsets
  double mu = 0.0;            ///< black level
  double icc_r = 0.0;         ///< expected row-wise inter-channel correlation
  double gain = 0.0;
};

nlohmann::ordered_json to_json(const GroundTruth& truth);

struct DarkSample {
  PlanarImage image;
  FrameMeta meta;
  GroundTruth truth;
};

struct NoisyPair {
  PlanarImage clean;  ///< black-level subtracted
  PlanarImage noisy;  ///< black-level subtracted
};

/// Unit-variance Tukey-lambda variate from a uniform in (0, 1).
double tukey_lambda_standard(double u, double lambda) noexcept;
/// Variance of the unscaled Tukey-lambda distribution; lambda > -0.5.
double tukey_lambda_variance(double lambda);

/// A sensor instance. The fixed components are derived once from cfg.seed;
/// each call draws fresh temporal noise from its own seed.
class SyntheticSensor {
 public:
  explicit SyntheticSensor(SimConfig cfg);

  const SimConfig& config() const noexcept { return cfg_; }
  const GroundTruth& truth() const noexcept { return truth_; }

  DarkSample dark(std::uint64_t seed) const;
  /// Smooth radiance field in [0, 0.8 (white - black)] with flat patches.
  PlanarImage scene() const;
  NoisyPair noisy_pair(std::uint64_t seed) const;

 private:
  SimConfig cfg_;
  GroundTruth truth_;
};

DarkSample generate_dark(const SimConfig& cfg, std::uint64_t seed);
PlanarImage generate_scene(const SimConfig& cfg, std::uint64_t seed);
NoisyPair generate_noisy_pair(const SimConfig& cfg, std::uint64_t seed);

/// Flat patches placed by generate_scene, for tests and gain oracles.
struct FlatPatch {
  std::size_t row = 0, col = 0, height = 0, width = 0;
  double level = 0.0;
};
std::vector<FlatPatch> flat_patches(const SimConfig& cfg);

}  // namespace specnoise::sensorsim
