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

#include "specnoise/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "specnoise/darksynth.hpp"
#include "specnoise/error.hpp"
#include "specnoise/spectral.hpp"

namespace specnoise::metrics {

Histogram histogram(std::span<const double> samples, std::size_t bins, double lo, double hi) {
  if (bins < 2) throw InputError("histogram needs at least 2 bins");
  if (!(lo < hi) || !std::isfinite(lo) || !std::isfinite(hi)) {
    throw InputError("histogram range must satisfy min < max");
  }
  Histogram hist;
  hist.edges.resize(bins + 1);
  const double width = (hi - lo) / static_cast<double>(bins);
  for (std::size_t i = 0; i <= bins; ++i) hist.edges[i] = lo + width * static_cast<double>(i);
  hist.edges.back() = hi;
  hist.counts.assign(bins, 0);

  std::size_t total = 0;
  const double scale = static_cast<double>(bins) / (hi - lo);
  for (double v : samples) {
    if (!std::isfinite(v)) continue;
    const double pos = std::floor((v - lo) * scale);
    const auto idx = static_cast<std::size_t>(std::clamp(pos, 0.0, static_cast<double>(bins - 1)));
    ++hist.counts[idx];
    ++total;
  }

  hist.probabilities.resize(bins);
  double norm = 0.0;
  for (std::size_t i = 0; i < bins; ++i) {
    const double p = total > 0 ? static_cast<double>(hist.counts[i]) / static_cast<double>(total) : 0.0;
    hist.probabilities[i] = p + kHistogramEpsilon;
    norm += hist.probabilities[i];
  }
  for (double& p : hist.probabilities) p /= norm;
  return hist;
}

Histogram histogram(const PlanarImage& img, std::size_t channel, std::size_t bins, double lo,
                    double hi) {
  if (channel >= img.channels()) throw InputError("channel index out of range");
  return histogram(img.plane(channel), bins, lo, hi);
}

double kld(const Histogram& p, const Histogram& q) {
  if (p.bins() != q.bins() || p.edges != q.edges) {
    throw InputError("kld requires histograms with identical binning");
  }
  double d = 0.0;
  for (std::size_t i = 0; i < p.bins(); ++i) {
    d += p.probabilities[i] * std::log(p.probabilities[i] / q.probabilities[i]);
  }
  return std::max(0.0, d);
}

double CorrelationMatrix::off_diagonal_mean() const {
  if (channels < 2) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < channels; ++i) {
    for (std::size_t j = 0; j < channels; ++j) {
      if (i != j) sum += at(i, j);
    }
  }
  return sum / static_cast<double>(channels * (channels - 1));
}

CorrelationMatrix icc_matrix(const PlanarImage& img) {
  const std::size_t c_count = img.channels();
  if (c_count < 2) throw InputError("inter-channel correlation needs at least 2 channels");
  const std::size_t w = img.width();

  CorrelationMatrix m{c_count, std::vector<double>(c_count * c_count, 0.0), 0};
  std::vector<double> centered(c_count * w);
  std::vector<double> norms(c_count);
  for (std::size_t y = 0; y < img.height(); ++y) {
    bool degenerate = false;
    for (std::size_t c = 0; c < c_count; ++c) {
      const double* row = img.plane(c).data() + y * w;
      double mean = 0.0;
      for (std::size_t x = 0; x < w; ++x) mean += row[x];
      mean /= static_cast<double>(w);
      double ss = 0.0;
      for (std::size_t x = 0; x < w; ++x) {
        const double d = row[x] - mean;
        centered[c * w + x] = d;
        ss += d * d;
      }
      if (!(ss > 0.0)) degenerate = true;
      norms[c] = std::sqrt(ss);
    }
    if (degenerate) continue;
    for (std::size_t i = 0; i < c_count; ++i) {
      for (std::size_t j = i + 1; j < c_count; ++j) {
        double dot = 0.0;
        for (std::size_t x = 0; x < w; ++x) dot += centered[i * w + x] * centered[j * w + x];
        const double r = std::clamp(dot / (norms[i] * norms[j]), -1.0, 1.0);
        m.values[i * c_count + j] += r;
      }
    }
    ++m.rows_used;
  }
  if (m.rows_used == 0) {
    throw DegenerateInput("every row has a constant channel; correlation undefined");
  }
  const double inv = 1.0 / static_cast<double>(m.rows_used);
  for (std::size_t i = 0; i < c_count; ++i) {
    m.values[i * c_count + i] = 1.0;
    for (std::size_t j = i + 1; j < c_count; ++j) {
      m.values[i * c_count + j] *= inv;
      m.values[j * c_count + i] = m.values[i * c_count + j];
    }
  }
  return m;
}

Moments moments(std::span<const double> samples) {
  Moments out;
  const auto n = static_cast<double>(samples.size());
  if (samples.empty()) return out;
  out.mean = accurate_sum(samples) / n;
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (double v : samples) {
    const double d = v - out.mean;
    const double d2 = d * d;
    m2 += d2;
    m3 += d2 * d;
    m4 += d2 * d2;
  }
  m2 /= n;
  m3 /= n;
  m4 /= n;
  out.variance = samples.size() > 1 ? m2 * n / (n - 1.0) : 0.0;
  if (m2 > 0.0) {
    out.skewness = m3 / std::pow(m2, 1.5);
    out.kurtosis = m4 / (m2 * m2);
  }
  return out;
}

std::vector<Moments> moments(const PlanarImage& img) {
  std::vector<Moments> out;
  out.reserve(img.channels());
  for (std::size_t c = 0; c < img.channels(); ++c) out.push_back(moments(img.plane(c)));
  return out;
}

std::vector<std::vector<double>> radial_psd(const PlanarImage& img) {
  const spectral::SpectrumStack spec = spectral::forward_dft(img);
  const std::size_t h = img.height();
  const std::size_t w = img.width();
  const auto signed_freq = [](std::size_t k, std::size_t n) {
    return k <= n / 2 ? static_cast<double>(k) : static_cast<double>(k) - static_cast<double>(n);
  };
  const double max_r = std::sqrt(std::pow(static_cast<double>(h / 2), 2) +
                                 std::pow(static_cast<double>(w / 2), 2));
  const auto bins = static_cast<std::size_t>(std::lround(max_r)) + 1;
  const double inv_n = 1.0 / static_cast<double>(h * w);

  std::vector<std::vector<double>> curves(img.channels(), std::vector<double>(bins, 0.0));
  std::vector<double> counts(bins, 0.0);
  for (std::size_t u = 0; u < h; ++u) {
    for (std::size_t v = 0; v < w; ++v) {
      const double r = std::hypot(signed_freq(u, h), signed_freq(v, w));
      counts[static_cast<std::size_t>(std::lround(r))] += 1.0;
    }
  }
  for (std::size_t c = 0; c < img.channels(); ++c) {
    for (std::size_t u = 0; u < h; ++u) {
      for (std::size_t v = 0; v < w; ++v) {
        const auto r = static_cast<std::size_t>(std::lround(std::hypot(signed_freq(u, h), signed_freq(v, w))));
        curves[c][r] += std::norm(spec.at(c, u, v)) * inv_n;
      }
    }
    for (std::size_t r = 0; r < bins; ++r) {
      if (counts[r] > 0.0) curves[c][r] /= counts[r];
    }
  }
  return curves;
}

SpectralComparison spectral_distance(const PlanarImage& ref, const PlanarImage& cand) {
  if (!ref.same_shape(cand)) throw InputError("spectral_distance: shapes differ");
  const PlanarImage a = spectral::magnitude(spectral::forward_dft(ref));
  const PlanarImage b = spectral::magnitude(spectral::forward_dft(cand));
  SpectralComparison out;
  double total = 0.0;
  for (std::size_t c = 0; c < ref.channels(); ++c) {
    const auto pa = a.plane(c);
    const auto pb = b.plane(c);
    double ea = 0.0, eb = 0.0;
    for (std::size_t i = 0; i < pa.size(); ++i) {
      ea += pa[i] * pa[i];
      eb += pb[i] * pb[i];
    }
    const double na = ea > 0.0 ? 1.0 / std::sqrt(ea) : 0.0;
    const double nb = eb > 0.0 ? 1.0 / std::sqrt(eb) : 0.0;
    double d2 = 0.0;
    for (std::size_t i = 0; i < pa.size(); ++i) {
      const double d = pa[i] * na - pb[i] * nb;
      d2 += d * d;
    }
    out.channel_distance.push_back(std::sqrt(d2));
    total += d2;
  }
  out.distance = std::sqrt(total);
  out.ref_psd = radial_psd(ref);
  out.cand_psd = radial_psd(cand);
  return out;
}

double ValidationReport::max_kld() const {
  return kld.empty() ? 0.0 : *std::max_element(kld.begin(), kld.end());
}

ValidationReport validate_report(const PlanarImage& ref_dark, const PlanarImage& syn_dark,
                                 double sigma, std::size_t bins) {
  if (!ref_dark.same_shape(syn_dark)) throw InputError("validate: reference and synthetic shapes differ");
  const auto ref = darksynth::remove_fixed_pattern(ref_dark, sigma);
  const auto syn = darksynth::remove_fixed_pattern(syn_dark, sigma);

  ValidationReport report;
  report.sigma = sigma;
  report.bins = bins;
  for (std::size_t c = 0; c < ref_dark.channels(); ++c) {
    const auto plane = ref.residual.plane(c);
    auto [lo, hi] = std::minmax_element(plane.begin(), plane.end());
    double a = *lo, b = *hi;
    if (!(a < b)) {
      a -= 0.5;
      b += 0.5;
    }
    const Histogram href = histogram(ref.residual, c, bins, a, b);
    const Histogram hsyn = histogram(syn.residual, c, bins, a, b);
    report.kld.push_back(kld(hsyn, href));
  }
  report.ref_moments = moments(ref.residual);
  report.syn_moments = moments(syn.residual);

  if (ref_dark.channels() < 2) {
    report.not_computed.push_back("icc: fewer than 2 channels");
  } else {
    try {
      report.ref_icc = icc_matrix(ref.residual);
      report.syn_icc = icc_matrix(syn.residual);
      report.icc_offdiag_delta = report.syn_icc->off_diagonal_mean() - report.ref_icc->off_diagonal_mean();
    } catch (const DegenerateInput& e) {
      report.ref_icc.reset();
      report.syn_icc.reset();
      report.not_computed.push_back(std::string("icc: ") + e.what());
    }
  }
  report.spectral = spectral_distance(ref.residual, syn.residual);
  return report;
}

namespace {

nlohmann::ordered_json moments_json(const Moments& m) {
  nlohmann::ordered_json j;
  j["mean"] = m.mean;
  j["variance"] = m.variance;
  j["skewness"] = m.skewness;
  j["kurtosis"] = m.kurtosis;
  return j;
}

nlohmann::ordered_json matrix_json(const std::optional<CorrelationMatrix>& m) {
  if (!m) return nullptr;
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < m->channels; ++i) {
    nlohmann::ordered_json row = nlohmann::ordered_json::array();
    for (std::size_t j = 0; j < m->channels; ++j) row.push_back(m->at(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

nlohmann::ordered_json to_json(const ValidationReport& r) {
  nlohmann::ordered_json j;
  j["sigma"] = r.sigma;
  j["bins"] = r.bins;
  j["kld"] = r.kld;

  nlohmann::ordered_json deltas = nlohmann::ordered_json::array();
  for (std::size_t c = 0; c < r.ref_moments.size(); ++c) {
    const Moments& a = r.ref_moments[c];
    const Moments& b = r.syn_moments[c];
    deltas.push_back(moments_json({b.mean - a.mean, b.variance - a.variance,
                                   b.skewness - a.skewness, b.kurtosis - a.kurtosis}));
  }
  j["moment_deltas"] = std::move(deltas);

  nlohmann::ordered_json icc;
  icc["offdiag_mean_delta"] =
      r.icc_offdiag_delta ? nlohmann::ordered_json(*r.icc_offdiag_delta) : nlohmann::ordered_json(nullptr);
  icc["reference"] = matrix_json(r.ref_icc);
  icc["synthetic"] = matrix_json(r.syn_icc);
  j["icc"] = std::move(icc);

  nlohmann::ordered_json spec;
  spec["l2_distance"] = r.spectral.distance;
  spec["channel_l2_distance"] = r.spectral.channel_distance;
  spec["reference_radial_psd"] = r.spectral.ref_psd;
  spec["synthetic_radial_psd"] = r.spectral.cand_psd;
  j["spectral"] = std::move(spec);

  nlohmann::ordered_json ref_m = nlohmann::ordered_json::array();
  nlohmann::ordered_json syn_m = nlohmann::ordered_json::array();
  for (const auto& m : r.ref_moments) ref_m.push_back(moments_json(m));
  for (const auto& m : r.syn_moments) syn_m.push_back(moments_json(m));
  j["reference_moments"] = std::move(ref_m);
  j["synthetic_moments"] = std::move(syn_m);
  j["not_computed"] = r.not_computed;
  return j;
}

}  // namespace specnoise::metrics
