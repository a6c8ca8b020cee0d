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

#include <complex>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "specnoise/spectral.hpp"
#include "specnoise/tensor.hpp"

namespace specnoise::darksynth {

/// Parameters of dark-frame synthesis.
struct SynthesisConfig {
  double sigma = 50.0;           ///< Gaussian blur std-dev for fixed-pattern removal, px
  std::size_t iterations = 10;   ///< histogram/spectral refinement rounds K
  std::uint64_t seed = 0;
  bool shared_phase = true;        ///< one phase offset for all channels
  bool histogram_matching = true;  ///< false skips refinement entirely
  std::size_t histogram_bins = 256;

  void validate() const;
};

/// Dark frame split into smooth fixed pattern, zero-mean residual and the
/// residual's channel means: dark == fixed_pattern + residual + residual_means.
struct Decomposition {
  PlanarImage fixed_pattern;
  PlanarImage residual;
  std::vector<double> residual_means;
  /// Set when sigma was below the identity threshold and the residual is
  /// identically zero; synthesis from it reproduces the input.
  bool vacuous = false;
};

/// Below this sigma the blur degenerates to the identity.
inline constexpr double kIdentityBlurSigma = 0.3;

/// Separable Gaussian blur per channel. The 1D kernel is truncated at radius
/// ceil(4 sigma) and renormalized; borders reflect without repeating the
/// edge sample. sigma < kIdentityBlurSigma returns the input unchanged.
PlanarImage gaussian_blur(const PlanarImage& img, double sigma);

/// The normalized 1D kernel used by gaussian_blur (length 2 ceil(4 sigma) + 1).
std::vector<double> gaussian_kernel(double sigma);

Decomposition remove_fixed_pattern(const PlanarImage& dark, double sigma);

/// Phase offsets for one draw: a single antisymmetric field when
/// shared_phase is set, otherwise one per channel. Values are a pure
/// function of (seed, draw_index, channel).
std::vector<spectral::PhaseField> draw_phase_offsets(std::size_t channels, std::size_t height,
                                                     std::size_t width,
                                                     const SynthesisConfig& config,
                                                     std::uint64_t draw_index);

/// Maximum imaginary residue and count of inverse transforms observed along
/// the reference (full complex spectrum) path.
struct TransformTrace {
  double max_imag_residue = 0.0;
  std::size_t inverse_transforms = 0;
};

/// Keeps |R^| and adds the offsets to its phase, then inverts. `offsets`
/// holds one field (shared) or one per channel.
PlanarImage phase_randomize(const Decomposition& decomp,
                            std::span<const spectral::PhaseField> offsets,
                            TransformTrace* trace = nullptr);

PlanarImage phase_randomize(const Decomposition& decomp, const SynthesisConfig& config,
                            std::uint64_t draw_index, TransformTrace* trace = nullptr);

/// Exact rank matching per channel: the k-th smallest src value (ties broken
/// by flat index) is replaced by the k-th smallest ref value.
PlanarImage histogram_match(const PlanarImage& src, const PlanarImage& ref);

/// K rounds of histogram matching against the residual followed by
/// restoring the reference magnitude spectrum on the centered result.
PlanarImage refine(PlanarImage noise, const Decomposition& decomp, std::size_t iterations,
                   TransformTrace* trace = nullptr);

/// Full pipeline: decompose, randomize phase, refine, restore fixed pattern
/// and means. Deterministic in (dark, config, draw_index).
PlanarImage synthesize_dark(const PlanarImage& dark, const FrameMeta& meta,
                            const SynthesisConfig& config, std::uint64_t draw_index = 0);

/// Fixed pattern plus residual means: the smooth per-ISO offset map.
PlanarImage export_dark_shading(const PlanarImage& dark, double sigma);

/// Precomputes everything derived from the reference dark frame once and
/// then produces draws cheaply. Works on half spectra and uses trig-free
/// phase restoration; agrees with the reference path to rounding.
class DarkFrameSynthesizer {
 public:
  DarkFrameSynthesizer(const PlanarImage& dark, SynthesisConfig config);

  const SynthesisConfig& config() const noexcept { return config_; }
  const Decomposition& decomposition() const noexcept { return decomp_; }

  /// Per-thread scratch buffers and FFT plans.
  class Workspace {
   public:
    Workspace(Workspace&&) noexcept;
    Workspace& operator=(Workspace&&) noexcept;
    ~Workspace();

   private:
    friend class DarkFrameSynthesizer;
    struct State;
    explicit Workspace(std::unique_ptr<State> state);
    std::unique_ptr<State> state_;
  };

  Workspace make_workspace() const;

  /// Synthesized dark frame for draw `index`.
  PlanarImage draw(std::uint64_t index) const;
  PlanarImage draw(std::uint64_t index, Workspace& ws) const;

  /// The stochastic part only (N^(K), before S and residual means are added).
  PlanarImage draw_noise(std::uint64_t index, Workspace& ws) const;

  /// Draw with caller-provided phase offsets (one shared field or one per
  /// channel).
  PlanarImage draw_noise_with(std::span<const spectral::PhaseField> offsets,
                              Workspace& ws) const;

 private:
  SynthesisConfig config_;
  Decomposition decomp_;
  std::size_t half_width_ = 0;
  std::vector<double> ref_magnitude_;                 // C x H x (W/2+1)
  std::vector<std::complex<double>> ref_phasor_;      // unit phasors of R^
  std::vector<double> sorted_residual_;               // C x H*W, ascending
};

/// Ways of turning one real dark frame into many noise samples.
enum class DarkSampling {
  DirectAdd,   ///< the same real frame every time
  RandomCrop,  ///< random crops of the real frame
  Spectral,    ///< fresh synthesized frames
};

/// Noise sample `index` of size patch_h x patch_w under a sampling strategy.
/// `synth` is only consulted for DarkSampling::Spectral.
PlanarImage sample_dark(DarkSampling strategy, const PlanarImage& dark,
                        const DarkFrameSynthesizer* synth, std::size_t patch_h,
                        std::size_t patch_w, std::uint64_t seed, std::uint64_t index);

}  // namespace specnoise::darksynth
