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
#include <bit>
#include <cstdint>
#include <span>
#include <vector>

namespace specnoise::detail {

/// Maps a finite double to an unsigned key with the same total order
/// (-0.0 and +0.0 compare equal).
inline std::uint64_t sortable_key(double x) noexcept {
  if (x == 0.0) x = 0.0;
  const auto bits = std::bit_cast<std::uint64_t>(x);
  constexpr std::uint64_t kSign = std::uint64_t{1} << 63;
  return (bits & kSign) ? ~bits : (bits | kSign);
}

/// Scratch buffers reused across calls to stable_argsort.
struct ArgsortScratch {
  std::vector<std::uint64_t> keys;
  std::vector<std::uint64_t> keys_tmp;
  std::vector<std::uint32_t> order_tmp;
  std::vector<std::uint32_t> counts;
};

/// Fills `order` with the permutation sorting `values` ascending; equal
/// values keep flat-index order. LSD radix sort on 16-bit digits.
inline void stable_argsort(std::span<const double> values, std::vector<std::uint32_t>& order,
                           ArgsortScratch& s) {
  const std::size_t n = values.size();
  order.resize(n);
  s.keys.resize(n);
  s.keys_tmp.resize(n);
  s.order_tmp.resize(n);
  s.counts.assign(std::size_t{1} << 16, 0);
  for (std::size_t i = 0; i < n; ++i) {
    s.keys[i] = sortable_key(values[i]);
    order[i] = static_cast<std::uint32_t>(i);
  }
  for (int pass = 0; pass < 4; ++pass) {
    const int shift = 16 * pass;
    std::fill(s.counts.begin(), s.counts.end(), 0U);
    for (std::size_t i = 0; i < n; ++i) ++s.counts[(s.keys[i] >> shift) & 0xffffU];
    if (n > 0 && s.counts[(s.keys[0] >> shift) & 0xffffU] == n) continue;
    std::uint32_t running = 0;
    for (auto& c : s.counts) {
      const std::uint32_t here = c;
      c = running;
      running += here;
    }
    for (std::size_t i = 0; i < n; ++i) {
      const std::uint32_t dst = s.counts[(s.keys[i] >> shift) & 0xffffU]++;
      s.keys_tmp[dst] = s.keys[i];
      s.order_tmp[dst] = order[i];
    }
    s.keys.swap(s.keys_tmp);
    order.swap(s.order_tmp);
  }
}

}  // namespace specnoise::detail
