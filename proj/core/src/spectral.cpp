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

#include "specnoise/spectral.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <limits>
#include <numbers>
#include <string>
#include <utility>

#include "specnoise/error.hpp"

namespace specnoise::spectral {
namespace {

// The FFTW planner is not re-entrant; execution is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

template <typename T>
struct FftwDeleter {
  void operator()(T* p) const noexcept { fftw_free(p); }
};

template <typename T>
using FftwBuffer = std::unique_ptr<T[], FftwDeleter<T>>;

template <typename T>
FftwBuffer<T> fftw_alloc(std::size_t n) {
  auto* p = static_cast<T*>(fftw_malloc(sizeof(T) * std::max<std::size_t>(n, 1)));
  if (p == nullptr) throw std::bad_alloc();
  return FftwBuffer<T>(p);
}

class Plan {
 public:
  Plan() = default;
  explicit Plan(fftw_plan p) : plan_(p) {
    if (plan_ == nullptr) throw NumericalError("FFTW failed to create a plan");
  }
  ~Plan() { reset(); }
  Plan(Plan&& o) noexcept : plan_(std::exchange(o.plan_, nullptr)) {}
  Plan& operator=(Plan&& o) noexcept {
    if (this != &o) {
      reset();
      plan_ = std::exchange(o.plan_, nullptr);
    }
    return *this;
  }
  void execute() const { fftw_execute(plan_); }

 private:
  void reset() noexcept {
    if (plan_ != nullptr) {
      std::lock_guard lock(planner_mutex());
      fftw_destroy_plan(plan_);
      plan_ = nullptr;
    }
  }
  fftw_plan plan_ = nullptr;
};

int as_int(std::size_t n) {
  if (n > static_cast<std::size_t>(std::numeric_limits<int>::max())) {
    throw InputError("transform dimension too large");
  }
  return static_cast<int>(n);
}

InverseResult inverse_impl(const SpectrumStack& spec, double extra_scale) {
  const std::size_t h = spec.height();
  const std::size_t w = spec.width();
  const std::size_t n = h * w;
  auto in = fftw_alloc<fftw_complex>(n);
  auto out = fftw_alloc<fftw_complex>(n);
  Plan plan;
  {
    std::lock_guard lock(planner_mutex());
    plan = Plan(fftw_plan_dft_2d(as_int(h), as_int(w), in.get(), out.get(), FFTW_BACKWARD,
                                 FFTW_ESTIMATE));
  }

  const double inv_n = 1.0 / static_cast<double>(n);
  const double tolerance = 1e-6 * spec.max_abs() * inv_n;
  PlanarImage image(spec.channels(), h, w);
  double residue = 0.0;
  for (std::size_t c = 0; c < spec.channels(); ++c) {
    const auto src = spec.plane(c);
    for (std::size_t i = 0; i < n; ++i) {
      in[i][0] = src[i].real();
      in[i][1] = src[i].imag();
    }
    plan.execute();
    auto dst = image.plane(c);
    for (std::size_t i = 0; i < n; ++i) {
      dst[i] = out[i][0] * inv_n;
      residue = std::max(residue, std::abs(out[i][1] * inv_n));
    }
  }
  if (residue > tolerance) {
    throw SymmetryViolation("inverse transform has imaginary residue " + std::to_string(residue) +
                            " above tolerance " + std::to_string(tolerance) +
                            "; spectrum is not Hermitian");
  }
  if (extra_scale != 1.0) {
    for (double& v : image.values()) v *= extra_scale;
  }
  return InverseResult{std::move(image), residue * extra_scale};
}

}  // namespace

SpectrumStack::SpectrumStack(std::size_t channels, std::size_t height, std::size_t width)
    : channels_(channels),
      height_(height),
      width_(width),
      data_(channels * height * width) {
  if (channels == 0 || height == 0 || width == 0) {
    throw InputError("spectrum dimensions must be at least 1x1x1");
  }
}

double SpectrumStack::max_abs() const noexcept {
  double m = 0.0;
  for (const Complex& z : data_) m = std::max(m, std::abs(z));
  return m;
}

SpectrumStack forward_dft(const PlanarImage& img) {
  const std::size_t h = img.height();
  const std::size_t w = img.width();
  RealFft2d fft(h, w);
  SpectrumStack spec(img.channels(), h, w);
  const std::size_t hw = fft.half_width();
  for (std::size_t c = 0; c < img.channels(); ++c) {
    std::ranges::copy(img.plane(c), fft.real().begin());
    fft.forward();
    const auto half = fft.half_spectrum();
    for (std::size_t u = 0; u < h; ++u) {
      for (std::size_t v = 0; v < hw; ++v) spec.at(c, u, v) = half[u * hw + v];
    }
    // Remaining columns follow from Hermitian symmetry of a real input.
    for (std::size_t u = 0; u < h; ++u) {
      for (std::size_t v = hw; v < w; ++v) {
        spec.at(c, u, v) = std::conj(half[((h - u) % h) * hw + (w - v)]);
      }
    }
  }
  return spec;
}

InverseResult inverse_dft(const SpectrumStack& spec) { return inverse_impl(spec, 1.0); }

InverseResult inverse_dft_normalized(const SpectrumStack& spec) {
  return inverse_impl(spec, 1.0 / std::sqrt(static_cast<double>(spec.plane_size())));
}

PlanarImage magnitude(const SpectrumStack& spec) {
  PlanarImage out(spec.channels(), spec.height(), spec.width());
  auto dst = out.values();
  const auto src = spec.values();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = std::abs(src[i]);
  return out;
}

PlanarImage phase(const SpectrumStack& spec) {
  PlanarImage out(spec.channels(), spec.height(), spec.width());
  auto dst = out.values();
  const auto src = spec.values();
  for (std::size_t i = 0; i < src.size(); ++i) {
    const Complex z = src[i];
    if (z == Complex{}) {
      dst[i] = 0.0;
      continue;
    }
    double a = std::atan2(z.imag(), z.real());
    if (a == -std::numbers::pi) a = std::numbers::pi;
    dst[i] = a;
  }
  return out;
}

PhaseField antisymmetrize_phase(std::size_t height, std::size_t width,
                                std::span<const double> raw) {
  if (height == 0 || width == 0) throw InputError("phase field must be at least 1x1");
  if (raw.size() != height * width) {
    throw InputError("raw phase length does not match H*W");
  }
  PhaseField field{height, width, std::vector<double>(raw.begin(), raw.end()), true};
  const bool even_h = height % 2 == 0;
  const bool even_w = width % 2 == 0;
  for (std::size_t u = 0; u < height; ++u) {
    for (std::size_t v = 0; v < width; ++v) {
      const std::size_t self = u * width + v;
      const std::size_t partner = conjugate_index(u, v, height, width);
      const bool nyquist = (even_h && u == height / 2) || (even_w && v == width / 2);
      if (partner == self || nyquist) {
        field.values[self] = 0.0;
      } else if (self < partner) {
        field.values[partner] = -field.values[self];
      }
    }
  }
  return field;
}

SpectrumStack dft_oracle(const PlanarImage& img) {
  const std::size_t h = img.height();
  const std::size_t w = img.width();
  if (h * w > kOracleMaxPlaneSize) {
    throw InputError("dft_oracle is limited to H*W <= " + std::to_string(kOracleMaxPlaneSize));
  }
  SpectrumStack spec(img.channels(), h, w);
  const double two_pi = 2.0 * std::numbers::pi;
  for (std::size_t c = 0; c < img.channels(); ++c) {
    for (std::size_t u = 0; u < h; ++u) {
      for (std::size_t v = 0; v < w; ++v) {
        Complex acc{};
        for (std::size_t y = 0; y < h; ++y) {
          for (std::size_t x = 0; x < w; ++x) {
            // Reduce the phase index exactly before converting to an angle.
            const std::size_t ku = (u * y) % h;
            const std::size_t kv = (v * x) % w;
            const double angle = -two_pi * (static_cast<double>(ku) / static_cast<double>(h) +
                                            static_cast<double>(kv) / static_cast<double>(w));
            acc += img.at(c, y, x) * Complex(std::cos(angle), std::sin(angle));
          }
        }
        spec.at(c, u, v) = acc;
      }
    }
  }
  return spec;
}

struct RealFft2d::Impl {
  FftwBuffer<double> real;
  FftwBuffer<fftw_complex> half;
  Plan forward;
  Plan inverse;
};

RealFft2d::RealFft2d(std::size_t height, std::size_t width)
    : height_(height), width_(width), impl_(std::make_unique<Impl>()) {
  if (height == 0 || width == 0) throw InputError("transform dimensions must be positive");
  impl_->real = fftw_alloc<double>(height * width);
  impl_->half = fftw_alloc<fftw_complex>(height * half_width());
  std::fill_n(impl_->real.get(), height * width, 0.0);
  std::lock_guard lock(planner_mutex());
  impl_->forward = Plan(fftw_plan_dft_r2c_2d(as_int(height), as_int(width), impl_->real.get(),
                                             impl_->half.get(), FFTW_ESTIMATE));
  impl_->inverse = Plan(fftw_plan_dft_c2r_2d(as_int(height), as_int(width), impl_->half.get(),
                                             impl_->real.get(), FFTW_ESTIMATE));
}

RealFft2d::~RealFft2d() = default;
RealFft2d::RealFft2d(RealFft2d&&) noexcept = default;
RealFft2d& RealFft2d::operator=(RealFft2d&&) noexcept = default;

std::span<double> RealFft2d::real() noexcept { return {impl_->real.get(), height_ * width_}; }

std::span<Complex> RealFft2d::half_spectrum() noexcept {
  return {reinterpret_cast<Complex*>(impl_->half.get()), height_ * half_width()};
}

void RealFft2d::forward() { impl_->forward.execute(); }

void RealFft2d::inverse() { impl_->inverse.execute(); }

}  // namespace specnoise::spectral
