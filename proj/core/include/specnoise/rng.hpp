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

#include <array>
#include <cstdint>

namespace specnoise {

/// Philox4x32-10 counter-based generator (Salmon et al., Random123).
///
/// A block is a pure function of (counter, key): there is no hidden state,
/// so any draw can be reproduced from its coordinates alone.
struct Philox4x32 {
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter block(Counter counter, Key key) noexcept;
};

/// 64-bit finalizer from SplitMix64; used to derive substream ids.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Hash-combines tags into one substream id.
constexpr std::uint64_t substream_id(std::uint64_t a, std::uint64_t b = 0,
                                     std::uint64_t c = 0) noexcept {
  return mix64(mix64(mix64(a) ^ b) ^ c);
}

/// Tags separating independent uses of one seed.
enum class StreamTag : std::uint64_t {
  PhaseOffset = 0x5048415345ULL,
  Poisson = 0x504f4953ULL,
  DarkChoice = 0x4441524bULL,
  SensorFixed = 0x46495845ULL,
  SensorTemporal = 0x54454d50ULL,
  Scene = 0x5343454eULL,
  Crop = 0x43524f50ULL,
};

/// A random-access stream of 128-bit blocks keyed by a 64-bit seed and a
/// 64-bit substream id. Block i is Philox(counter = {i, stream}, key = seed).
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream) noexcept
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        stream_(stream) {}

  /// Two 64-bit words of block `index`.
  std::array<std::uint64_t, 2> words(std::uint64_t index) const noexcept;

  /// Two uniforms in [0, 1) from block `index` (53-bit resolution).
  std::array<double, 2> uniform_pair(std::uint64_t index) const noexcept;

  /// Sequential interface: next 64-bit word / uniform in [0,1) / uniform in
  /// (0,1) / standard normal (Box-Muller).
  std::uint64_t next_u64() noexcept;
  double next_uniform() noexcept;
  double next_open_uniform() noexcept;
  double next_normal() noexcept;

  /// Uniform integer in [0, n) by rejection (unbiased); n > 0.
  std::uint64_t next_below(std::uint64_t n) noexcept;

 private:
  Philox4x32::Key key_;
  std::uint64_t stream_;
  std::uint64_t position_ = 0;  // next 64-bit word
  bool has_spare_normal_ = false;
  double spare_normal_ = 0.0;
};

constexpr double to_unit_interval(std::uint64_t bits) noexcept {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

/// Uniform in the open interval (0, 1).
constexpr double to_open_unit_interval(std::uint64_t bits) noexcept {
  return (static_cast<double>(bits >> 12) + 0.5) * 0x1.0p-52;
}

}  // namespace specnoise
