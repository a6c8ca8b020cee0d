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
#include <memory>
#include <span>
#include <vector>

#include "specnoise/tensor.hpp"

namespace specnoise::spectral {

using Complex = std::complex<double>;

/// C x H x W complex tensor with the same layout as PlanarImage.
class SpectrumStack {
 public:
  SpectrumStack(std::size_t channels, std::size_t height, std::size_t width);

  std::size_t channels() const noexcept { return channels_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t plane_size() const noexcept { return height_ * width_; }

  Complex& at(std::size_t c, std::size_t u, std::size_t v) {
    return data_[(c * height_ + u) * width_ + v];
  }
  const Complex& at(std::size_t c, std::size_t u, std::size_t v) const {
    return data_[(c * height_ + u) * width_ + v];
  }
  std::span<Complex> plane(std::size_t c) {
    return {data_.data() + c * plane_size(), plane_size()};
  }
  std::span<const Complex> plane(std::size_t c) const {
    return {data_.data() + c * plane_size(), plane_size()};
  }
  std::span<Complex> values() noexcept { return data_; }
  std::span<const Complex> values() const noexcept { return data_; }

  /// Largest modulus over all bins.
  double max_abs() const noexcept;

 private:
  std::size_t channels_;
  std::size_t height_;
  std::size_t width_;
  std::vector<Complex> data_;
};

/// H x W phase offsets in (-pi, pi].
struct PhaseField {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> values;
  /// Set when values(-u, -v) == -values(u, v) and self-conjugate bins are 0.
  bool antisymmetric = false;

  double at(std::size_t u, std::size_t v) const { return values[u * width + v]; }
};

/// Unnormalized per-channel 2D DFT: X(u,v) = sum x(h,w) exp(-2 pi i (uh/H + vw/W)).
SpectrumStack forward_dft(const PlanarImage& img);

/// Real part of an inverse transform plus the largest discarded imaginary
/// magnitude, expressed in the units of `image`.
struct InverseResult {
  PlanarImage image;
  double imag_residue = 0.0;
};

/// Inverse DFT carrying the 1/(HW) factor, so inverse_dft(forward_dft(x)) == x.
/// Throws SymmetryViolation when the imaginary residue exceeds
/// 1e-6 * max|spec| / (HW), i.e. the spectrum is not Hermitian.
InverseResult inverse_dft(const SpectrumStack& spec);

/// inverse_dft scaled by an additional 1/sqrt(HW):
/// inverse_dft_normalized(forward_dft(x)) == x / sqrt(HW).
InverseResult inverse_dft_normalized(const SpectrumStack& spec);

/// Pointwise modulus.
PlanarImage magnitude(const SpectrumStack& spec);

/// Pointwise argument in (-pi, pi]; zero bins get phase 0.
PlanarImage phase(const SpectrumStack& spec);

/// Index of the conjugate partner (-u mod H, -v mod W) as a flat offset.
inline std::size_t conjugate_index(std::size_t u, std::size_t v, std::size_t height,
                                   std::size_t width) noexcept {
  return ((height - u) % height) * width + (width - v) % width;
}

/// Makes a raw H x W field conjugate-antisymmetric: of each pair {(u,v),
/// (-u,-v)} the lexicographically smaller index keeps its value and the
/// partner receives the negation; self-conjugate bins (DC and, for even
/// sizes, the Nyquist row/column crossings) become 0.
PhaseField antisymmetrize_phase(std::size_t height, std::size_t width,
                                std::span<const double> raw);

/// Brute-force O((HW)^2) evaluation of the DFT definition. Test oracle;
/// rejects planes with H*W > 4096.
SpectrumStack dft_oracle(const PlanarImage& img);

inline constexpr std::size_t kOracleMaxPlaneSize = 4096;

/// Reusable real-to-complex / complex-to-real transform pair on one H x W
/// plane. The half spectrum holds columns v = 0..W/2 of every row.
///
/// Plan creation is serialized internally; execution on distinct objects is
/// safe from multiple threads.
class RealFft2d {
 public:
  RealFft2d(std::size_t height, std::size_t width);
  ~RealFft2d();
  RealFft2d(RealFft2d&&) noexcept;
  RealFft2d& operator=(RealFft2d&&) noexcept;
  RealFft2d(const RealFft2d&) = delete;
  RealFft2d& operator=(const RealFft2d&) = delete;

  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t half_width() const noexcept { return width_ / 2 + 1; }

  std::span<double> real() noexcept;
  std::span<Complex> half_spectrum() noexcept;

  /// real() -> half_spectrum(), unnormalized.
  void forward();
  /// half_spectrum() -> real(), unnormalized (scales by H*W); clobbers the
  /// half spectrum.
  void inverse();

 private:
  struct Impl;
  std::size_t height_;
  std::size_t width_;
  std::unique_ptr<Impl> impl_;
};

}  // namespace specnoise::spectral
