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

#include <filesystem>
#include <span>
#include <string>
#include <string_view>

#include "specnoise/tensor.hpp"

namespace specnoise {

/// A tensor together with its acquisition metadata.
struct Frame {
  PlanarImage image;
  FrameMeta meta;
};

/// Eight-byte file signature of the PTB tensor format.
inline constexpr std::string_view kPtbMagic{"PTNSRB1\n", 8};

/// Serializes to PTB bytes: magic, one ASCII header line, then C*H*W
/// little-endian float32 values. Sensor id and exposure tag must be
/// non-empty tokens without whitespace or '='.
std::string encode_ptb(const PlanarImage& image, const FrameMeta& meta);

/// Parses PTB bytes. Throws ParseError with a kind that distinguishes bad
/// magic, malformed header, truncated payload and size mismatch.
Frame decode_ptb(std::string_view bytes);

/// Shape and metadata from a PTB header line.
struct PtbHeader {
  std::size_t channels = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  FrameMeta meta;
  std::size_t payload_offset = 0;  ///< byte offset of the first value
};

/// Parses magic and header only; `bytes` may stop anywhere after the
/// header line.
PtbHeader decode_ptb_header(std::string_view bytes);

/// Reads just enough of a file to decode its header.
PtbHeader read_ptb_header(const std::filesystem::path& path);
inline constexpr std::size_t kPtbMaxHeaderBytes = 4096;

Frame load_tensor(const std::filesystem::path& path);

/// Writes via a temporary file in the target directory and an atomic rename.
void save_tensor(const PlanarImage& image, const FrameMeta& meta,
                 const std::filesystem::path& path);

/// Writes `bytes` to `path` through a same-directory temp file + rename, so a
/// failure never leaves a partial file behind.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);

std::string read_file(const std::filesystem::path& path);

/// Imports one binary PGM (P5) file per plane. 16-bit files are big-endian
/// per the PGM convention; 8-bit files are accepted as well. All planes must
/// share the same dimensions.
PlanarImage import_pgm_planes(std::span<const std::filesystem::path> paths);

}  // namespace specnoise
