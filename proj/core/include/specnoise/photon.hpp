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
#include <span>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "specnoise/tensor.hpp"

namespace specnoise::photon {

/// System gain and signal-independent variance for one ISO.
struct GainModel {
  std::uint32_t iso = 100;
  double gain = 1.0;          ///< DN per electron
  double var_intercept = 0.0; ///< Var(n_other), DN^2, clamped at 0
  std::size_t fit_points = 0;
  double fit_r2 = 0.0;
};

nlohmann::ordered_json to_json(const GainModel& model);
/// Throws ParseError on missing or ill-typed fields.
GainModel gain_model_from_json(const nlohmann::json& j);

/// One level group of the variance-vs-signal relation.
struct VarianceSample {
  double level = 0.0;     ///< mean (pseudo-)clean DN
  double variance = 0.0;  ///< DN^2
  double weight = 0.0;    ///< number of observations
};

using VarianceSamples = std::vector<VarianceSample>;

/// Groups with fewer observations are dropped.
inline constexpr double kMinGroupSize = 100.0;
/// Pixels at or above this fraction of (white - black) are treated as clipped.
inline constexpr double kClipFraction = 0.98;
inline constexpr double kDefaultPseudoSigma = 3.0;

/// Default level bin width: (white - black) / 256.
double default_bin_width(const FrameMeta& meta);

/// Variance samples from a single black-level-subtracted noisy image.
///
/// A Gaussian blur (pseudo_sigma) gives the pseudo-clean image. Every full
/// 3x3 patch contributes its nine (pixel - pseudo-clean pixel) differences
/// as observations; patches are grouped by the pseudo-clean value at the
/// patch centre quantized to bin_width, pooled over channels. Group
/// variances are divided by the white-noise shrinkage of (y - blur(y)).
/// Patches touching clipped pixels, patches whose pseudo-clean values span
/// more than one bin and patches within the blur radius of the border are
/// skipped.
VarianceSamples collect_variance_single(const PlanarImage& noisy, const FrameMeta& meta,
                                        double pseudo_sigma, double bin_width);

/// Variance samples from clean/noisy pairs, bucketing pixels by clean DN.
VarianceSamples collect_variance_pairs(
    std::span<const std::pair<PlanarImage, PlanarImage>> pairs, const FrameMeta& meta,
    double bin_width);

enum class FitMethod { WeightedLeastSquares, TheilSen };

/// Fits variance = gain * level + intercept. Throws InsufficientData with
/// fewer than two distinct levels and DegenerateFit on a non-positive slope.
GainModel fit_gain(const VarianceSamples& samples, std::uint32_t iso,
                   FitMethod method = FitMethod::WeightedLeastSquares);

/// Scaled Poisson draw per pixel: electrons = clean / (gain * ratio),
/// output = gain * Poisson(electrons). Each pixel uses its own counter-based
/// substream, so results do not depend on evaluation order.
PlanarImage sample_poisson_signal(const PlanarImage& clean, double gain, double ratio,
                                  std::uint64_t seed);

/// Below this mean Poisson variates are drawn by CDF inversion; above it by
/// a continuity-corrected normal approximation.
inline constexpr double kPoissonInversionLimit = 30.0;

/// One Poisson(mean) variate from two uniforms in [0,1).
double poisson_variate(double mean, double u1, double u2) noexcept;

/// Noisy image = Poisson signal + (synthetic_dark - black_level). With
/// `quantize`, values are rounded and clipped to [-black, white - black].
PlanarImage synthesize_noisy(const PlanarImage& clean, const GainModel& gain,
                             const PlanarImage& synthetic_dark, const FrameMeta& meta,
                             double ratio, bool quantize, std::uint64_t seed);

}  // namespace specnoise::photon
