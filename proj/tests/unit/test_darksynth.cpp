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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "specnoise/darksynth.hpp"
#include "specnoise/error.hpp"
#include "specnoise/metrics.hpp"
#include "specnoise/sensorsim.hpp"
#include "specnoise/spectral.hpp"
#include "test_util.hpp"

namespace specnoise::darksynth {
namespace {

using specnoise::testing::gaussian_image;
using specnoise::testing::pearson;
using specnoise::testing::random_image;

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

// Largest deviation of |F(x)| from |F(ref)|, relative to the peak of |F(ref)|.
double magnitude_error(const PlanarImage& x, const PlanarImage& ref) {
  const PlanarImage a = spectral::magnitude(spectral::forward_dft(x));
  const PlanarImage b = spectral::magnitude(spectral::forward_dft(ref));
  double peak = 0;
  for (double v : b.values()) peak = std::max(peak, v);
  return max_abs_diff(a.values(), b.values()) / peak;
}

PlanarImage centered(PlanarImage x) {
  const auto means = channel_means(x);
  for (std::size_t c = 0; c < x.channels(); ++c) {
    for (double& v : x.plane(c)) v -= means[c];
  }
  return x;
}

sensorsim::SimConfig sim_config(std::uint64_t seed) {
  sensorsim::SimConfig cfg;
  cfg.sigma_read = 3.0;
  cfg.sigma_band = 3.0;
  cfg.fpn_amplitude = 4.0;
  cfg.fpn_scale = 200.0;
  cfg.seed = seed;
  return cfg;
}

TEST(GaussianBlur, ConstantInvariance) {
  const PlanarImage img(2, 17, 23, 3.25);
  const PlanarImage out = gaussian_blur(img, 4.0);
  for (double v : out.values()) EXPECT_NEAR(v, 3.25, 1e-12);
}

TEST(GaussianBlur, LargeSigmaApproachesMean) {
  const PlanarImage img = random_image(1, 32, 32, 1);
  const double mean = channel_means(img)[0];
  double previous = INFINITY;
  for (double sigma : {1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0}) {
    const PlanarImage out = gaussian_blur(img, sigma);
    double dev = 0;
    for (double v : out.values()) dev = std::max(dev, std::abs(v - mean));
    EXPECT_LT(dev, previous) << "sigma " << sigma;
    previous = dev;
  }
  EXPECT_LT(previous, 0.05);
}

TEST(GaussianBlur, ImpulseMatchesDirectKernel) {
  PlanarImage img(1, 33, 33);
  img.at(0, 16, 16) = 1.0;
  const PlanarImage out = gaussian_blur(img, 2.0);
  double norm = 0;
  for (int j = -8; j <= 8; ++j) norm += std::exp(-j * j / 8.0);
  const double centre = 1.0 / norm;
  for (int x = 0; x < 33; ++x) {
    const int d = x - 16;
    const double expect = std::abs(d) <= 8 ? centre * std::exp(-d * d / 8.0) / norm : 0.0;
    EXPECT_NEAR(out.at(0, 16, static_cast<std::size_t>(x)), expect, 1e-8);
  }
}

TEST(GaussianBlur, MirrorBoundary) {
  // An impulse at the edge reflects without repeating the edge sample.
  PlanarImage img(1, 1, 9);
  img.at(0, 0, 1) = 1.0;
  const PlanarImage out = gaussian_blur(img, 1.0);
  const auto k = gaussian_kernel(1.0);  // radius 4
  // out(0) sees x=1 at offset +1 and its mirror x=-1 -> 1 at offset -1.
  EXPECT_NEAR(out.at(0, 0, 0), k[3] + k[5], 1e-15);
  // out(2) sees x=1 at offset -1 and, through the mirror at 0, x=-1 -> 1 at offset -3.
  EXPECT_NEAR(out.at(0, 0, 2), k[3] + k[1], 1e-15);
  double total = 0;
  for (double v : k) total += v;
  EXPECT_NEAR(total, 1.0, 1e-15);
}

TEST(GaussianBlur, RejectsNonPositiveSigmaAndTinySigmaIsIdentity) {
  const PlanarImage img = random_image(1, 8, 8, 2);
  EXPECT_THROW(gaussian_blur(img, 0.0), InputError);
  EXPECT_THROW(gaussian_blur(img, -1.0), InputError);
  EXPECT_EQ(gaussian_blur(img, 0.2), img);
}

TEST(RemoveFixedPattern, ConstantFrame) {
  const Decomposition d = remove_fixed_pattern(PlanarImage(2, 20, 20, 7.0), 5.0);
  for (double v : d.fixed_pattern.values()) EXPECT_NEAR(v, 7.0, 1e-12);
  for (double v : d.residual.values()) EXPECT_NEAR(v, 0.0, 1e-12);
  for (double m : d.residual_means) EXPECT_NEAR(m, 0.0, 1e-12);
}

TEST(RemoveFixedPattern, RampPlusChecker) {
  PlanarImage dark(1, 64, 64);
  PlanarImage checker(1, 64, 64);
  for (std::size_t y = 0; y < 64; ++y) {
    for (std::size_t x = 0; x < 64; ++x) {
      checker.at(0, y, x) = ((x + y) % 2 == 0) ? 1.0 : -1.0;
      dark.at(0, y, x) = 100.0 + 0.004 * x + 0.002 * y + checker.at(0, y, x);
    }
  }
  const Decomposition d = remove_fixed_pattern(dark, 8.0);
  EXPECT_LT(max_abs_diff(d.residual.values(), checker.values()), 0.05);
}

TEST(RemoveFixedPattern, ReconstructionAndZeroMeanProperty) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const PlanarImage dark = random_image(3, 40 + seed, 30, seed, 500.0, 700.0);
    const Decomposition d = remove_fixed_pattern(dark, 2.0 + static_cast<double>(seed));
    double peak = 0;
    for (double v : dark.values()) peak = std::max(peak, std::abs(v));
    for (std::size_t c = 0; c < 3; ++c) {
      for (std::size_t i = 0; i < dark.plane_size(); ++i) {
        const double rec = d.fixed_pattern.plane(c)[i] + d.residual.plane(c)[i] + d.residual_means[c];
        ASSERT_NEAR(rec, dark.plane(c)[i], 1e-10);
      }
      EXPECT_LE(std::abs(channel_means(d.residual)[c]), 1e-10 * peak);
    }
    EXPECT_FALSE(d.vacuous);
  }
}

TEST(RemoveFixedPattern, TinySigmaIsVacuous) {
  const PlanarImage dark = random_image(1, 8, 8, 3);
  const Decomposition d = remove_fixed_pattern(dark, 0.1);
  EXPECT_TRUE(d.vacuous);
  EXPECT_EQ(d.fixed_pattern, dark);
  for (double v : d.residual.values()) EXPECT_EQ(v, 0.0);
}

TEST(RemoveFixedPattern, RecoversSimulatedFpn) {
  const auto cfg = sim_config(3);
  const auto sample = sensorsim::generate_dark(cfg, 11);
  const Decomposition d = remove_fixed_pattern(sample.image, 50.0);
  for (std::size_t c = 0; c < cfg.channels; ++c) {
    EXPECT_GT(pearson(d.fixed_pattern.plane(c), sample.truth.fpn.plane(c)), 0.99) << "channel " << c;
  }
}

TEST(PhaseRandomize, ZeroOffsetIsIdentity) {
  const Decomposition d = remove_fixed_pattern(gaussian_image(2, 16, 12, 4), 3.0);
  spectral::PhaseField zero{16, 12, std::vector<double>(16 * 12, 0.0), true};
  const PlanarImage n0 = phase_randomize(d, std::span(&zero, 1));
  EXPECT_LT(max_abs_diff(n0.values(), d.residual.values()), 1e-10);
}

TEST(PhaseRandomize, PreservesMagnitudeSpectrum) {
  const Decomposition d = remove_fixed_pattern(gaussian_image(4, 32, 48, 5), 6.0);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    SynthesisConfig cfg;
    cfg.seed = seed;
    TransformTrace trace;
    const PlanarImage n0 = phase_randomize(d, cfg, 0, &trace);
    EXPECT_LT(magnitude_error(n0, d.residual), 1e-9);
    EXPECT_EQ(trace.inverse_transforms, 1u);
  }
}

TEST(PhaseRandomize, SeedsDecorrelate) {
  const Decomposition d = remove_fixed_pattern(gaussian_image(4, 256, 256, 6), 50.0);
  SynthesisConfig a, b;
  a.seed = 1;
  b.seed = 2;
  const PlanarImage n1 = phase_randomize(d, a, 0);
  const PlanarImage n2 = phase_randomize(d, b, 0);
  EXPECT_LT(std::abs(pearson(n1.values(), n2.values())), 0.1);
}

TEST(PhaseRandomize, RejectsWrongOffsetShape) {
  const Decomposition d = remove_fixed_pattern(gaussian_image(2, 8, 8, 7), 3.0);
  spectral::PhaseField f{8, 6, std::vector<double>(48, 0.0), true};
  EXPECT_THROW(phase_randomize(d, std::span(&f, 1)), InputError);
}

TEST(DrawPhaseOffsets, SharedVersusIndependent) {
  SynthesisConfig cfg;
  cfg.seed = 9;
  auto shared = draw_phase_offsets(4, 10, 12, cfg, 3);
  ASSERT_EQ(shared.size(), 1u);
  cfg.shared_phase = false;
  auto indep = draw_phase_offsets(4, 10, 12, cfg, 3);
  ASSERT_EQ(indep.size(), 4u);
  EXPECT_NE(indep[0].values, indep[1].values);
  for (const auto& f : indep) EXPECT_TRUE(f.antisymmetric);
  // Pure function of (seed, index, channel).
  EXPECT_EQ(draw_phase_offsets(4, 10, 12, cfg, 3)[2].values, indep[2].values);
  EXPECT_NE(draw_phase_offsets(4, 10, 12, cfg, 4)[2].values, indep[2].values);
  for (double v : shared[0].values) {
    EXPECT_GT(v, -M_PI - 1e-15);
    EXPECT_LE(v, M_PI);
  }
}

TEST(HistogramMatch, SelfMatchIsBitExact) {
  const PlanarImage r = gaussian_image(3, 20, 20, 8);
  EXPECT_EQ(histogram_match(r, r), r);
}

TEST(HistogramMatch, HandRanked) {
  const PlanarImage src(1, 1, 3, std::vector<double>{3, 1, 2});
  const PlanarImage ref(1, 1, 3, std::vector<double>{10, 20, 30});
  EXPECT_EQ(histogram_match(src, ref), PlanarImage(1, 1, 3, std::vector<double>{30, 10, 20}));
}

TEST(HistogramMatch, TiesBreakByIndex) {
  const PlanarImage src(1, 1, 4, std::vector<double>{1, 1, 0, 1});
  const PlanarImage ref(1, 1, 4, std::vector<double>{4, 3, 2, 1});
  EXPECT_EQ(histogram_match(src, ref), PlanarImage(1, 1, 4, std::vector<double>{2, 3, 1, 4}));
}

TEST(HistogramMatch, MultisetEquality) {
  const PlanarImage src = gaussian_image(4, 64, 64, 9);
  const PlanarImage ref = random_image(4, 64, 64, 10, -3, 8);
  const PlanarImage out = histogram_match(src, ref);
  for (std::size_t c = 0; c < 4; ++c) {
    std::vector<double> a(out.plane(c).begin(), out.plane(c).end());
    std::vector<double> b(ref.plane(c).begin(), ref.plane(c).end());
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    EXPECT_EQ(a, b);
  }
}

TEST(HistogramMatch, PreservesSourceOrder) {
  const PlanarImage src = gaussian_image(1, 16, 16, 11);
  const PlanarImage out = histogram_match(src, random_image(1, 16, 16, 12));
  const auto s = src.values();
  const auto o = out.values();
  for (std::size_t i = 0; i < s.size(); ++i) {
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (s[i] < s[j]) {
        ASSERT_LE(o[i], o[j]);
      }
    }
  }
}

TEST(HistogramMatch, NegativeZeroAndDuplicates) {
  const PlanarImage src(1, 1, 5, std::vector<double>{0.0, -0.0, -1.0, 0.0, 2.0});
  const PlanarImage ref(1, 1, 5, std::vector<double>{5, 4, 3, 2, 1});
  EXPECT_EQ(histogram_match(src, ref), PlanarImage(1, 1, 5, std::vector<double>{2, 3, 1, 4, 5}));
}

TEST(HistogramMatch, ShapeMismatchRejected) {
  EXPECT_THROW(histogram_match(PlanarImage(1, 2, 2), PlanarImage(1, 2, 3)), InputError);
}

TEST(Refine, ZeroIterationsIsIdentity) {
  const Decomposition d = remove_fixed_pattern(gaussian_image(2, 16, 16, 13), 4.0);
  const PlanarImage n = gaussian_image(2, 16, 16, 14);
  EXPECT_EQ(refine(n, d, 0), n);
}

TEST(Refine, RestoresMagnitudeEveryIteration) {
  const Decomposition d = remove_fixed_pattern(gaussian_image(3, 24, 20, 15), 4.0);
  SynthesisConfig cfg;
  PlanarImage n = phase_randomize(d, cfg, 0);
  for (int k = 0; k < 4; ++k) {
    TransformTrace trace;
    n = refine(n, d, 1, &trace);
    EXPECT_EQ(trace.inverse_transforms, 1u);
    EXPECT_LT(magnitude_error(centered(n), d.residual), 1e-9) << "iteration " << k;
  }
}

std::vector<double> channel_klds(const PlanarImage& n, const PlanarImage& r) {
  std::vector<double> out;
  for (std::size_t c = 0; c < r.channels(); ++c) {
    const auto p = r.plane(c);
    const auto [lo, hi] = std::minmax_element(p.begin(), p.end());
    out.push_back(metrics::kld(metrics::histogram(n, c, 256, *lo, *hi), metrics::histogram(r, c, 256, *lo, *hi)));
  }
  return out;
}

TEST(Refine, KldNonIncreasingInIterations) {
  const auto cfg = sim_config(21);
  const auto dark = sensorsim::generate_dark(cfg, 5).image;
  const Decomposition d = remove_fixed_pattern(dark, 50.0);
  SynthesisConfig sc;
  sc.seed = 3;
  const PlanarImage n0 = phase_randomize(d, sc, 0);
  std::vector<std::vector<double>> klds;
  for (std::size_t k : {1u, 2u, 5u, 10u}) klds.push_back(channel_klds(refine(n0, d, k), d.residual));
  for (std::size_t i = 1; i < klds.size(); ++i) {
    for (std::size_t c = 0; c < klds[i].size(); ++c) {
      EXPECT_LE(klds[i][c], klds[i - 1][c] * (1.0 + 1e-6)) << "K index " << i << " channel " << c;
    }
  }
}

TEST(SynthesizeDark, Deterministic) {
  const PlanarImage dark = sensorsim::generate_dark(sim_config(1), 2).image;
  SynthesisConfig cfg;
  cfg.seed = 17;
  cfg.iterations = 3;
  const FrameMeta meta = sim_config(1).meta();
  EXPECT_EQ(synthesize_dark(dark, meta, cfg, 4), synthesize_dark(dark, meta, cfg, 4));
  EXPECT_NE(synthesize_dark(dark, meta, cfg, 4), synthesize_dark(dark, meta, cfg, 5));
}

TEST(SynthesizeDark, ChannelMeansRestored) {
  const PlanarImage dark = sensorsim::generate_dark(sim_config(2), 3).image;
  SynthesisConfig cfg;
  const PlanarImage out = synthesize_dark(dark, sim_config(2).meta(), cfg);
  const auto a = channel_means(out);
  const auto b = channel_means(dark);
  for (std::size_t c = 0; c < a.size(); ++c) EXPECT_NEAR(a[c], b[c], 1e-6 * std::abs(b[c]));
}

TEST(SynthesizeDark, InterChannelCorrelation) {
  auto cfg = sim_config(4);
  cfg.width = 512;
  const auto dark = sensorsim::generate_dark(cfg, 7).image;
  const Decomposition d = remove_fixed_pattern(dark, 50.0);
  const double truth = metrics::icc_matrix(d.residual).off_diagonal_mean();

  SynthesisConfig sc;
  sc.seed = 5;
  PlanarImage out = synthesize_dark(dark, cfg.meta(), sc);
  for (std::size_t i = 0; i < out.size(); ++i) out.values()[i] -= d.fixed_pattern.values()[i];
  EXPECT_NEAR(metrics::icc_matrix(out).off_diagonal_mean(), truth, 0.05);

  sc.shared_phase = false;
  PlanarImage ind = synthesize_dark(dark, cfg.meta(), sc);
  for (std::size_t i = 0; i < ind.size(); ++i) ind.values()[i] -= d.fixed_pattern.values()[i];
  EXPECT_LT(std::abs(metrics::icc_matrix(ind).off_diagonal_mean()), 0.1);
}

TEST(SynthesizeDark, IdenticalChannelsStayIdenticalWithSharedPhase) {
  const PlanarImage one = gaussian_image(1, 32, 32, 18);
  PlanarImage dark(3, 32, 32);
  for (std::size_t c = 0; c < 3; ++c) std::copy(one.values().begin(), one.values().end(), dark.plane(c).begin());
  SynthesisConfig cfg;
  cfg.sigma = 5.0;
  const PlanarImage out = synthesize_dark(dark, FrameMeta{}, cfg);
  for (std::size_t c = 1; c < 3; ++c) {
    EXPECT_TRUE(std::equal(out.plane(0).begin(), out.plane(0).end(), out.plane(c).begin()));
  }
}

TEST(SynthesizeDark, ExactHistogramAfterMatchingStep) {
  const Decomposition d = remove_fixed_pattern(gaussian_image(2, 32, 16, 19), 4.0);
  SynthesisConfig cfg;
  const PlanarImage matched = histogram_match(phase_randomize(d, cfg, 0), d.residual);
  for (std::size_t c = 0; c < 2; ++c) {
    std::vector<double> a(matched.plane(c).begin(), matched.plane(c).end());
    std::vector<double> b(d.residual.plane(c).begin(), d.residual.plane(c).end());
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    EXPECT_EQ(a, b);
  }
}

TEST(SynthesizeDark, RejectsInvalidConfig) {
  SynthesisConfig cfg;
  cfg.sigma = 0.0;
  EXPECT_THROW(synthesize_dark(PlanarImage(1, 4, 4), FrameMeta{}, cfg), InputError);
}

TEST(DarkFrameSynthesizer, AgreesWithReferencePath) {
  const PlanarImage dark = sensorsim::generate_dark(sim_config(5), 1).image;
  for (bool shared : {true, false}) {
    SynthesisConfig cfg;
    cfg.seed = 23;
    cfg.iterations = 4;
    cfg.shared_phase = shared;
    const DarkFrameSynthesizer engine(dark, cfg);
    auto ws = engine.make_workspace();
    const PlanarImage fast = engine.draw_noise(6, ws);
    const PlanarImage slow = refine(phase_randomize(engine.decomposition(), cfg, 6), engine.decomposition(), 4);
    EXPECT_LT(max_abs_diff(fast.values(), slow.values()), 1e-8);
  }
}

TEST(DarkFrameSynthesizer, WorkspaceIndependence) {
  const PlanarImage dark = gaussian_image(2, 24, 40, 24);
  SynthesisConfig cfg;
  cfg.sigma = 6.0;
  const DarkFrameSynthesizer engine(dark, cfg);
  auto ws1 = engine.make_workspace();
  auto ws2 = engine.make_workspace();
  const PlanarImage a = engine.draw(3, ws1);
  engine.draw(8, ws1);
  EXPECT_EQ(engine.draw(3, ws1), a);
  EXPECT_EQ(engine.draw(3, ws2), a);
  EXPECT_EQ(engine.draw(3), a);
}

TEST(DarkFrameSynthesizer, NoIhmIsPurePhaseRandomization) {
  const PlanarImage dark = gaussian_image(2, 20, 20, 25);
  SynthesisConfig cfg;
  cfg.sigma = 4.0;
  cfg.histogram_matching = false;
  const DarkFrameSynthesizer engine(dark, cfg);
  auto ws = engine.make_workspace();
  const PlanarImage n = engine.draw_noise(0, ws);
  EXPECT_LT(max_abs_diff(n.values(), phase_randomize(engine.decomposition(), cfg, 0).values()), 1e-10);
  EXPECT_LT(magnitude_error(n, engine.decomposition().residual), 1e-9);
}

TEST(ExportDarkShading, ConstantFrame) {
  const PlanarImage map = export_dark_shading(PlanarImage(2, 10, 10, 42.0), 50.0);
  for (double v : map.values()) EXPECT_NEAR(v, 42.0, 1e-12);
}

TEST(ExportDarkShading, EqualsFixedPatternPlusMeans) {
  const PlanarImage dark = random_image(2, 30, 30, 26, 100, 200);
  const Decomposition d = remove_fixed_pattern(dark, 7.0);
  const PlanarImage map = export_dark_shading(dark, 7.0);
  for (std::size_t c = 0; c < 2; ++c) {
    for (std::size_t i = 0; i < dark.plane_size(); ++i) {
      EXPECT_EQ(map.plane(c)[i], d.fixed_pattern.plane(c)[i] + d.residual_means[c]);
    }
  }
}

TEST(ExportDarkShading, RecoversSimulatedShading) {
  const auto cfg = sim_config(6);
  const auto sample = sensorsim::generate_dark(cfg, 2);
  const PlanarImage map = export_dark_shading(sample.image, 50.0);
  long double num = 0, den = 0;
  for (std::size_t i = 0; i < map.size(); ++i) {
    const double truth = sample.truth.fpn.values()[i] + sample.truth.mu;
    num += (map.values()[i] - truth) * (map.values()[i] - truth);
    den += truth * truth;
  }
  EXPECT_LT(std::sqrt(num / den), 0.05);
}

TEST(SampleDark, Strategies) {
  const PlanarImage dark = random_image(2, 40, 50, 27);
  SynthesisConfig cfg;
  cfg.sigma = 5.0;
  const DarkFrameSynthesizer engine(dark, cfg);

  const PlanarImage direct = sample_dark(DarkSampling::DirectAdd, dark, nullptr, 10, 20, 1, 0);
  EXPECT_EQ(direct.at(1, 3, 4), dark.at(1, 3, 4));
  EXPECT_EQ(sample_dark(DarkSampling::DirectAdd, dark, nullptr, 10, 20, 1, 5), direct);

  const PlanarImage crop = sample_dark(DarkSampling::RandomCrop, dark, nullptr, 10, 20, 1, 0);
  EXPECT_EQ(crop.height(), 10u);
  EXPECT_EQ(crop.width(), 20u);
  bool found = false;
  for (std::size_t y = 0; y + 10 <= 40 && !found; ++y) {
    for (std::size_t x = 0; x + 20 <= 50 && !found; ++x) found = crop.at(0, 0, 0) == dark.at(0, y, x) &&
                                                                 crop.at(1, 9, 19) == dark.at(1, y + 9, x + 19);
  }
  EXPECT_TRUE(found);

  const PlanarImage spec = sample_dark(DarkSampling::Spectral, dark, &engine, 10, 20, 1, 0);
  EXPECT_EQ(spec.channels(), 2u);
  EXPECT_EQ(spec.height(), 10u);
  EXPECT_THROW(sample_dark(DarkSampling::Spectral, dark, nullptr, 10, 20, 1, 0), InputError);
  EXPECT_THROW(sample_dark(DarkSampling::RandomCrop, dark, nullptr, 41, 20, 1, 0), InputError);
}

}  // namespace
}  // namespace specnoise::darksynth
