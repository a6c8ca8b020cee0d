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
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "specnoise/tensor.hpp"

namespace specnoise::metrics {

/// Uniformly binned histogram with epsilon-smoothed probabilities.
struct Histogram {
  std::vector<double> edges;          ///< B + 1 uniform edges
  std::vector<std::size_t> counts;    ///< B bins
  std::vector<double> probabilities;  ///< counts/N + eps, renormalized

  std::size_t bins() const noexcept { return counts.size(); }
};

inline constexpr double kHistogramEpsilon = 1e-10;

/// Bins finite samples over [lo, hi]; samples outside the range land in the
/// edge bins, non-finite samples are ignored. Requires bins >= 2, lo < hi.
Histogram histogram(std::span<const double> samples, std::size_t bins, double lo, double hi);

/// Histogram of one channel of an image.
Histogram histogram(const PlanarImage& img, std::size_t channel, std::size_t bins, double lo,
                    double hi);

/// sum p ln(p / q) over smoothed probabilities. Throws InputError when the
/// two histograms use different binning.
double kld(const Histogram& p, const Histogram& q);

/// C x C matrix, row-major.
struct CorrelationMatrix {
  std::size_t channels = 0;
  std::vector<double> values;
  std::size_t rows_used = 0;

  double at(std::size_t i, std::size_t j) const { return values[i * channels + j]; }
  /// Mean of the off-diagonal entries.
  double off_diagonal_mean() const;
};

/// Row-wise averaged inter-channel Pearson correlation: for each image row
/// the C length-W vectors are correlated pairwise; rows where any channel
/// is constant are skipped. Throws DegenerateInput when no row remains and
/// InputError for C < 2.
CorrelationMatrix icc_matrix(const PlanarImage& img);

struct Moments {
  double mean = 0.0;
  double variance = 0.0;  ///< unbiased
  double skewness = 0.0;  ///< standardized third central moment
  double kurtosis = 0.0;  ///< standardized fourth central moment (non-excess)
};

/// Per-channel moments; constant channels report skewness = kurtosis = 0.
std::vector<Moments> moments(const PlanarImage& img);
Moments moments(std::span<const double> samples);

struct SpectralComparison {
  double distance = 0.0;                  ///< L2 over all channels
  std::vector<double> channel_distance;   ///< per channel
  std::vector<std::vector<double>> ref_psd;   ///< per channel, index = radius
  std::vector<std::vector<double>> cand_psd;
};

/// Power spectrum |X|^2 / (HW) averaged over integer-radius annuli around
/// DC (frequencies taken in the centered range).
std::vector<std::vector<double>> radial_psd(const PlanarImage& img);

/// L2 distance between magnitude spectra normalized to unit energy per
/// channel, plus radial PSD curves of both inputs.
SpectralComparison spectral_distance(const PlanarImage& ref, const PlanarImage& cand);

/// Realism statistics of a synthetic dark frame against a reference.
/// Deltas are candidate minus reference.
struct ValidationReport {
  double sigma = 0.0;
  std::size_t bins = 0;
  std::vector<double> kld;
  std::vector<Moments> ref_moments;
  std::vector<Moments> syn_moments;
  std::optional<CorrelationMatrix> ref_icc;
  std::optional<CorrelationMatrix> syn_icc;
  std::optional<double> icc_offdiag_delta;
  SpectralComparison spectral;
  std::vector<std::string> not_computed;

  double max_kld() const;
};

/// Decomposes both frames with the given blur sigma and compares the
/// residuals. Histograms use `bins` uniform bins over each reference
/// channel's [min, max].
ValidationReport validate_report(const PlanarImage& ref_dark, const PlanarImage& syn_dark,
                                 double sigma, std::size_t bins = 256);

/// Pretty-printable JSON with a fixed key order.
nlohmann::ordered_json to_json(const ValidationReport& report);

}  // namespace specnoise::metrics
