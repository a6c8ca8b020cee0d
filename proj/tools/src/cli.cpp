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

#include "cli.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "specnoise/darksynth.hpp"
#include "specnoise/error.hpp"
#include "specnoise/metrics.hpp"
#include "specnoise/photon.hpp"
#include "specnoise/ptb_io.hpp"
#include "specnoise/rng.hpp"
#include "specnoise/sensorsim.hpp"

namespace specnoise::cli {
namespace {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

struct Globals {
  bool json = false;
  unsigned threads = 0;  // 0: hardware concurrency
};

unsigned worker_count(unsigned requested, std::size_t jobs) {
  unsigned n = requested == 0 ? std::max(1u, std::thread::hardware_concurrency()) : requested;
  return static_cast<unsigned>(std::min<std::size_t>(n, std::max<std::size_t>(jobs, 1)));
}

void write_json_file(const fs::path& path, const ordered_json& j) {
  write_file_atomic(path, j.dump(2) + "\n");
}

PlanarImage subtract_black(PlanarImage img, double black) {
  for (double& v : img.values()) v -= black;
  return img;
}

PlanarImage add_black(PlanarImage img, double black) {
  for (double& v : img.values()) v += black;
  return img;
}

// ---------------------------------------------------------------- synth-dark

struct SynthDarkArgs {
  std::string dark;
  std::string out_dir;
  std::size_t count = 1;
  double sigma = 50.0;
  std::size_t iters = 10;
  std::uint64_t seed = 0;
  bool no_shared_phase = false;
  bool no_ihm = false;
};

std::string synth_name(std::uint32_t iso, std::size_t index, const char* ext) {
  return "syn_" + std::to_string(iso) + "_" + std::to_string(index) + ext;
}

int synth_dark(const SynthDarkArgs& a, const Globals& g, std::ostream& out, std::ostream& err) {
  const Frame ref = load_tensor(a.dark);
  darksynth::SynthesisConfig cfg;
  cfg.sigma = a.sigma;
  cfg.iterations = a.iters;
  cfg.seed = a.seed;
  cfg.shared_phase = !a.no_shared_phase;
  cfg.histogram_matching = !a.no_ihm;
  cfg.validate();

  const darksynth::DarkFrameSynthesizer synth(ref.image, cfg);
  if (synth.decomposition().vacuous) {
    err << "warning: sigma below " << darksynth::kIdentityBlurSigma
        << " px leaves a zero residual; every draw reproduces the input\n";
  }
  fs::create_directories(a.out_dir);
  const fs::path dir(a.out_dir);
  FrameMeta meta = ref.meta;
  meta.exposure_tag = "synthetic";

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  const auto worker = [&] {
    try {
      auto ws = synth.make_workspace();
      for (std::size_t i = next++; i < a.count; i = next++) {
        {
          std::lock_guard lock(failure_mutex);
          if (failure) return;
        }
        save_tensor(synth.draw(i, ws), meta, dir / synth_name(meta.iso, i, ".ptb"));
        ordered_json side;
        side["file"] = synth_name(meta.iso, i, ".ptb");
        side["source"] = fs::path(a.dark).filename().string();
        side["iso"] = meta.iso;
        side["seed"] = cfg.seed;
        side["index"] = i;
        side["sigma"] = cfg.sigma;
        side["iterations"] = cfg.iterations;
        side["shared_phase"] = cfg.shared_phase;
        side["histogram_matching"] = cfg.histogram_matching;
        write_json_file(dir / synth_name(meta.iso, i, ".json"), side);
      }
    } catch (...) {
      std::lock_guard lock(failure_mutex);
      if (!failure) failure = std::current_exception();
    }
  };
  const unsigned n = worker_count(g.threads, a.count);
  if (n <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < n; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  err << "synth-dark: wrote " << a.count << " frame(s) to " << dir.string() << "\n";
  if (g.json) {
    ordered_json j;
    j["command"] = "synth-dark";
    j["count"] = a.count;
    j["out_dir"] = dir.string();
    ordered_json files = ordered_json::array();
    for (std::size_t i = 0; i < a.count; ++i) files.push_back(synth_name(meta.iso, i, ".ptb"));
    j["files"] = std::move(files);
    out << j.dump(2) << "\n";
  }
  return kSuccess;
}

// ------------------------------------------------------------- estimate-gain

struct EstimateGainArgs {
  std::vector<std::string> noisy;
  std::vector<std::string> clean;
  std::optional<std::uint32_t> iso;
  double pseudo_sigma = photon::kDefaultPseudoSigma;
  std::optional<double> bin_width;
  std::string method = "wls";
  std::string out_path;
};

int estimate_gain(const EstimateGainArgs& a, const Globals& g, std::ostream& out, std::ostream& err) {
  if (!a.clean.empty() && a.clean.size() != a.noisy.size()) {
    err << "error: --clean must be given once per --noisy\n";
    return kUsage;
  }
  std::vector<Frame> noisy;
  for (const auto& p : a.noisy) noisy.push_back(load_tensor(p));
  const FrameMeta meta = noisy.front().meta;
  const double bw = a.bin_width.value_or(photon::default_bin_width(meta));

  photon::VarianceSamples samples;
  std::string path_kind;
  if (a.clean.empty()) {
    path_kind = "single";
    for (const Frame& f : noisy) {
      const auto s = photon::collect_variance_single(subtract_black(f.image, f.meta.black_level), f.meta,
                                                     a.pseudo_sigma, bw);
      samples.insert(samples.end(), s.begin(), s.end());
    }
  } else {
    path_kind = "pairs";
    std::vector<std::pair<PlanarImage, PlanarImage>> pairs;
    for (std::size_t i = 0; i < noisy.size(); ++i) {
      const Frame c = load_tensor(a.clean[i]);
      pairs.emplace_back(subtract_black(c.image, c.meta.black_level),
                         subtract_black(noisy[i].image, noisy[i].meta.black_level));
    }
    samples = photon::collect_variance_pairs(pairs, meta, bw);
  }
  const auto method = a.method == "theil-sen" ? photon::FitMethod::TheilSen
                                              : photon::FitMethod::WeightedLeastSquares;
  const photon::GainModel model = photon::fit_gain(samples, a.iso.value_or(meta.iso), method);
  const ordered_json j = photon::to_json(model);
  if (!a.out_path.empty()) write_json_file(a.out_path, j);
  err << "estimate-gain (" << path_kind << "): g = " << model.gain
      << " DN/e-, Var(n_other) = " << model.var_intercept << " DN^2, r2 = " << model.fit_r2
      << " over " << model.fit_points << " level groups\n";
  if (g.json) out << j.dump(2) << "\n";
  return kSuccess;
}

// --------------------------------------------------------------- synth-noisy

struct SynthNoisyArgs {
  std::string clean;
  std::string gain;
  std::string dark_dir;
  double ratio = 1.0;
  bool quantize = false;
  std::uint64_t seed = 0;
  std::string out_path;
};

int synth_noisy(const SynthNoisyArgs& a, const Globals& g, std::ostream& out, std::ostream& err) {
  nlohmann::json gj;
  try {
    gj = nlohmann::json::parse(read_file(a.gain));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(ParseError::Kind::Format, a.gain + ": " + e.what());
  }
  const photon::GainModel model = photon::gain_model_from_json(gj);

  if (!fs::is_directory(a.dark_dir)) throw IoError("dark directory '" + a.dark_dir + "' does not exist");
  std::vector<fs::path> candidates;
  for (const auto& entry : fs::directory_iterator(a.dark_dir)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".ptb") continue;
    if (read_ptb_header(entry.path()).meta.iso == model.iso) candidates.push_back(entry.path());
  }
  if (candidates.empty()) {
    throw InputError("no dark frame with ISO " + std::to_string(model.iso) + " in '" + a.dark_dir + "'");
  }
  std::sort(candidates.begin(), candidates.end());
  CounterRng pick(a.seed, substream_id(static_cast<std::uint64_t>(StreamTag::DarkChoice)));
  const fs::path chosen = candidates[pick.next_below(candidates.size())];

  const Frame clean = load_tensor(a.clean);
  const Frame dark = load_tensor(chosen);
  if (!clean.image.same_shape(dark.image)) throw InputError("clean frame and dark frame shapes differ");
  FrameMeta meta = clean.meta;
  meta.iso = model.iso;
  meta.black_level = dark.meta.black_level;
  meta.white_level = dark.meta.white_level;
  meta.exposure_tag = "synthetic_noisy";

  const PlanarImage y = photon::synthesize_noisy(subtract_black(clean.image, clean.meta.black_level), model,
                                                 dark.image, meta, a.ratio, a.quantize, a.seed);
  save_tensor(add_black(y, meta.black_level), meta, a.out_path);
  err << "synth-noisy: dark frame " << chosen.filename().string() << " -> " << a.out_path << "\n";
  if (g.json) {
    ordered_json j;
    j["command"] = "synth-noisy";
    j["out"] = a.out_path;
    j["dark_frame"] = chosen.filename().string();
    j["iso"] = model.iso;
    j["gain"] = model.gain;
    j["ratio"] = a.ratio;
    j["quantize"] = a.quantize;
    j["seed"] = a.seed;
    out << j.dump(2) << "\n";
  }
  return kSuccess;
}

// ------------------------------------------------------------------ validate

struct ValidateArgs {
  std::string ref;
  std::string syn;
  double sigma = 50.0;
  std::size_t bins = 256;
  std::string out_path;
};

int validate(const ValidateArgs& a, const Globals& g, std::ostream& out, std::ostream& err) {
  const Frame ref = load_tensor(a.ref);
  const Frame syn = load_tensor(a.syn);
  const metrics::ValidationReport report = metrics::validate_report(ref.image, syn.image, a.sigma, a.bins);
  const ordered_json j = metrics::to_json(report);
  if (!a.out_path.empty()) write_json_file(a.out_path, j);
  for (const auto& note : report.not_computed) err << "validate: not computed: " << note << "\n";
  if (g.json) {
    out << j.dump(2) << "\n";
  } else {
    out << "max KLD          " << report.max_kld() << "\n";
    if (report.icc_offdiag_delta) out << "ICC delta        " << *report.icc_offdiag_delta << "\n";
    out << "spectral L2      " << report.spectral.distance << "\n";
    for (std::size_t c = 0; c < report.kld.size(); ++c) {
      out << "channel " << c << ": KLD " << report.kld[c] << ", variance delta "
          << report.syn_moments[c].variance - report.ref_moments[c].variance << "\n";
    }
  }
  return kSuccess;
}

// ----------------------------------------------------------- simulate-sensor

struct SimulateArgs {
  std::string config;
  std::string prefix;
  std::size_t pairs = 0;
  std::uint64_t seed = 0;
};

int simulate(const SimulateArgs& a, const Globals& g, std::ostream& out, std::ostream& err) {
  sensorsim::SimConfig cfg;
  if (!a.config.empty()) {
    nlohmann::json cj;
    try {
      cj = nlohmann::json::parse(read_file(a.config));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(ParseError::Kind::Format, a.config + ": " + e.what());
    }
    cfg = sensorsim::sim_config_from_json(cj);
  }
  const sensorsim::SyntheticSensor sensor(cfg);
  const fs::path prefix(a.prefix);
  if (prefix.has_parent_path()) fs::create_directories(prefix.parent_path());
  const auto file = [&](const std::string& name) { return fs::path(a.prefix + name); };

  std::vector<std::string> written;
  const FrameMeta dark_meta = cfg.meta();
  save_tensor(sensor.dark(a.seed).image, dark_meta, file("dark.ptb"));
  written.push_back(file("dark.ptb").string());

  FrameMeta fpn_meta = dark_meta;
  fpn_meta.black_level = 0.0;
  fpn_meta.exposure_tag = "fpn";
  save_tensor(sensor.truth().fpn, fpn_meta, file("fpn.ptb"));
  written.push_back(file("fpn.ptb").string());

  FrameMeta clean_meta = dark_meta;
  clean_meta.exposure_tag = "clean";
  FrameMeta noisy_meta = dark_meta;
  noisy_meta.exposure_tag = "noisy";
  for (std::size_t i = 0; i < a.pairs; ++i) {
    const auto pair = sensor.noisy_pair(substream_id(a.seed, i + 1));
    const std::string idx = std::to_string(i);
    save_tensor(add_black(pair.clean, cfg.black_level), clean_meta, file("clean_" + idx + ".ptb"));
    save_tensor(add_black(pair.noisy, cfg.black_level), noisy_meta, file("noisy_" + idx + ".ptb"));
    written.push_back(file("clean_" + idx + ".ptb").string());
    written.push_back(file("noisy_" + idx + ".ptb").string());
  }

  ordered_json truth;
  truth["config"] = sensorsim::to_json(cfg);
  truth["truth"] = sensorsim::to_json(sensor.truth());
  truth["seed"] = a.seed;
  truth["pairs"] = a.pairs;
  write_json_file(file("truth.json"), truth);
  written.push_back(file("truth.json").string());

  err << "simulate-sensor: wrote " << written.size() << " file(s)\n";
  if (g.json) {
    ordered_json j;
    j["command"] = "simulate-sensor";
    j["files"] = written;
    out << j.dump(2) << "\n";
  }
  return kSuccess;
}

// ------------------------------------------------------------ export-shading

struct ShadingArgs {
  std::string dark;
  double sigma = 50.0;
  std::string out_path;
};

int export_shading(const ShadingArgs& a, const Globals& g, std::ostream& out, std::ostream& err) {
  const Frame dark = load_tensor(a.dark);
  FrameMeta meta = dark.meta;
  meta.exposure_tag = "shading";
  save_tensor(darksynth::export_dark_shading(dark.image, a.sigma), meta, a.out_path);
  err << "export-shading: wrote " << a.out_path << "\n";
  if (g.json) {
    ordered_json j;
    j["command"] = "export-shading";
    j["out"] = a.out_path;
    j["sigma"] = a.sigma;
    out << j.dump(2) << "\n";
  }
  return kSuccess;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Sensor noise synthesis from dark frames"};
  app.name("specnoise");
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_flag("--json", g.json, "Print machine-readable JSON on stdout");
  app.add_option("--threads", g.threads, "Worker threads (0 = all cores)")->check(CLI::NonNegativeNumber);

  SynthDarkArgs sd;
  auto* c_sd = app.add_subcommand("synth-dark", "Synthesize dark frames from one reference dark frame");
  c_sd->add_option("--dark", sd.dark, "Reference dark frame (PTB)")->required();
  c_sd->add_option("--out-dir", sd.out_dir, "Output directory")->required();
  c_sd->add_option("--count", sd.count, "Number of frames")->check(CLI::PositiveNumber);
  c_sd->add_option("--sigma", sd.sigma, "Fixed-pattern blur sigma, px")->check(CLI::PositiveNumber);
  c_sd->add_option("--iters", sd.iters, "Refinement iterations K")->check(CLI::NonNegativeNumber);
  c_sd->add_option("--seed", sd.seed, "RNG seed");
  c_sd->add_flag("--no-shared-phase", sd.no_shared_phase, "Independent phase offsets per channel");
  c_sd->add_flag("--no-ihm", sd.no_ihm, "Skip iterative histogram matching");

  EstimateGainArgs eg;
  auto* c_eg = app.add_subcommand("estimate-gain", "Estimate system gain from noisy (and clean) frames");
  c_eg->add_option("--noisy", eg.noisy, "Noisy frame (PTB), repeatable")->required();
  c_eg->add_option("--clean", eg.clean, "Clean frame paired with each --noisy, repeatable");
  c_eg->add_option("--iso", eg.iso, "ISO recorded in the model (default: from the noisy frame)");
  c_eg->add_option("--pseudo-sigma", eg.pseudo_sigma, "Pseudo-clean blur sigma, px")->check(CLI::PositiveNumber);
  c_eg->add_option("--bin-width", eg.bin_width, "Level bin width, DN")->check(CLI::PositiveNumber);
  c_eg->add_option("--method", eg.method, "Fit method")->check(CLI::IsMember({"wls", "theil-sen"}));
  c_eg->add_option("--out", eg.out_path, "Write the gain model JSON here");

  SynthNoisyArgs sn;
  auto* c_sn = app.add_subcommand("synth-noisy", "Synthesize a noisy frame from a clean frame");
  c_sn->add_option("--clean", sn.clean, "Clean frame (PTB)")->required();
  c_sn->add_option("--gain", sn.gain, "Gain model JSON")->required();
  c_sn->add_option("--dark-dir", sn.dark_dir, "Directory of synthetic dark frames")->required();
  c_sn->add_option("--ratio", sn.ratio, "Exposure ratio")->check(CLI::Range(1.0, 1e9));
  c_sn->add_flag("--quantize", sn.quantize, "Round and clip to the sensor range");
  c_sn->add_option("--seed", sn.seed, "RNG seed");
  c_sn->add_option("--out", sn.out_path, "Output frame (PTB)")->required();

  ValidateArgs va;
  auto* c_va = app.add_subcommand("validate", "Compare a synthetic dark frame with a reference");
  c_va->add_option("--ref", va.ref, "Reference dark frame (PTB)")->required();
  c_va->add_option("--syn", va.syn, "Synthetic dark frame (PTB)")->required();
  c_va->add_option("--sigma", va.sigma, "Fixed-pattern blur sigma, px")->check(CLI::PositiveNumber);
  c_va->add_option("--bins", va.bins, "Histogram bins")->check(CLI::Range(2, 1 << 20));
  c_va->add_option("--out", va.out_path, "Write the report JSON here");

  SimulateArgs si;
  auto* c_si = app.add_subcommand("simulate-sensor", "Generate frames from the synthetic sensor");
  c_si->add_option("--config", si.config, "Sensor config JSON (default settings when omitted)");
  c_si->add_option("--out-prefix", si.prefix, "Output path prefix")->required();
  c_si->add_option("--pairs", si.pairs, "Number of clean/noisy pairs");
  c_si->add_option("--seed", si.seed, "Seed for temporal noise");

  ShadingArgs sh;
  auto* c_sh = app.add_subcommand("export-shading", "Export the dark shading map of a dark frame");
  c_sh->add_option("--dark", sh.dark, "Dark frame (PTB)")->required();
  c_sh->add_option("--sigma", sh.sigma, "Blur sigma, px")->check(CLI::PositiveNumber);
  c_sh->add_option("--out", sh.out_path, "Output map (PTB)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kSuccess : kUsage;
  }

  try {
    if (c_sd->parsed()) return synth_dark(sd, g, out, err);
    if (c_eg->parsed()) return estimate_gain(eg, g, out, err);
    if (c_sn->parsed()) return synth_noisy(sn, g, out, err);
    if (c_va->parsed()) return validate(va, g, out, err);
    if (c_si->parsed()) return simulate(si, g, out, err);
    if (c_sh->parsed()) return export_shading(sh, g, out, err);
  } catch (const NumericalError& e) {
    err << "error: " << e.what() << "\n";
    return kNumericalError;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kDataError;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kDataError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kDataError;
  }
  return kUsage;
}

}  // namespace specnoise::cli
