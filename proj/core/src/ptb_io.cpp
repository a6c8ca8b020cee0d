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

#include "specnoise/ptb_io.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <system_error>

#include "specnoise/error.hpp"

namespace specnoise {
namespace {

bool is_token(std::string_view s) {
  if (s.empty()) return false;
  for (char ch : s) {
    if (ch == ' ' || ch == '\n' || ch == '\t' || ch == '\r' || ch == '=') return false;
  }
  return true;
}

std::string format_f32(float v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

template <typename T>
T parse_number(std::string_view key, std::string_view text) {
  T value{};
  auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
    throw ParseError(ParseError::Kind::Header,
                     "PTB header: bad value for '" + std::string(key) + "': '" +
                         std::string(text) + "'");
  }
  return value;
}

void put_u32_le(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>(v & 0xffU));
  out.push_back(static_cast<char>((v >> 8) & 0xffU));
  out.push_back(static_cast<char>((v >> 16) & 0xffU));
  out.push_back(static_cast<char>((v >> 24) & 0xffU));
}

std::uint32_t get_u32_le(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

}  // namespace

std::string encode_ptb(const PlanarImage& image, const FrameMeta& meta) {
  meta.validate();
  if (!is_token(meta.sensor_id) || !is_token(meta.exposure_tag)) {
    throw InputError("sensor id and exposure tag must be non-empty tokens without whitespace or '='");
  }
  const float black = static_cast<float>(meta.black_level);
  const float white = static_cast<float>(meta.white_level);

  std::string out;
  out.reserve(kPtbMagic.size() + 160 + image.size() * 4);
  out.append(kPtbMagic);
  out += "dtype=f32 c=" + std::to_string(image.channels()) +
         " h=" + std::to_string(image.height()) +
         " w=" + std::to_string(image.width()) +
         " iso=" + std::to_string(meta.iso) + " black=" + format_f32(black) +
         " white=" + format_f32(white) + " sensor=" + meta.sensor_id +
         " tag=" + meta.exposure_tag + "\n";
  for (double v : image.values()) {
    const float f = static_cast<float>(v);
    if (!std::isfinite(f)) throw InputError("cannot encode non-finite value in PTB payload");
    put_u32_le(out, std::bit_cast<std::uint32_t>(f));
  }
  return out;
}

PtbHeader decode_ptb_header(std::string_view bytes) {
  if (bytes.size() < kPtbMagic.size()) {
    throw ParseError(ParseError::Kind::Truncated, "PTB truncated: file shorter than magic");
  }
  if (bytes.substr(0, kPtbMagic.size()) != kPtbMagic) {
    throw ParseError(ParseError::Kind::Magic, "PTB bad magic: expected \"PTNSRB1\\n\"");
  }
  const std::size_t eol = bytes.find('\n', kPtbMagic.size());
  if (eol == std::string_view::npos) {
    throw ParseError(ParseError::Kind::Truncated, "PTB truncated: header line not terminated");
  }
  const std::string_view line = bytes.substr(kPtbMagic.size(), eol - kPtbMagic.size());

  std::map<std::string, std::string, std::less<>> fields;
  std::size_t pos = 0;
  while (pos < line.size()) {
    std::size_t end = line.find(' ', pos);
    if (end == std::string_view::npos) end = line.size();
    const std::string_view item = line.substr(pos, end - pos);
    const std::size_t eq = item.find('=');
    if (eq == std::string_view::npos || eq == 0) {
      throw ParseError(ParseError::Kind::Header,
                       "PTB header: malformed field '" + std::string(item) + "'");
    }
    fields.emplace(std::string(item.substr(0, eq)), std::string(item.substr(eq + 1)));
    pos = end + 1;
  }
  static constexpr const char* kRequired[] = {"dtype", "c", "h", "w", "iso",
                                              "black", "white", "sensor", "tag"};
  for (const char* key : kRequired) {
    if (!fields.contains(key)) {
      throw ParseError(ParseError::Kind::Header,
                       std::string("PTB header: missing field '") + key + "'");
    }
  }
  if (fields.size() != std::size(kRequired)) {
    throw ParseError(ParseError::Kind::Header, "PTB header: unexpected extra fields");
  }
  if (fields["dtype"] != "f32") {
    throw ParseError(ParseError::Kind::Header, "PTB header: unsupported dtype '" + fields["dtype"] + "'");
  }

  const auto c = parse_number<std::size_t>("c", fields["c"]);
  const auto h = parse_number<std::size_t>("h", fields["h"]);
  const auto w = parse_number<std::size_t>("w", fields["w"]);
  if (c == 0 || h == 0 || w == 0) {
    throw ParseError(ParseError::Kind::Header, "PTB header: dimensions must be positive");
  }

  FrameMeta meta;
  meta.iso = parse_number<std::uint32_t>("iso", fields["iso"]);
  meta.black_level = parse_number<float>("black", fields["black"]);
  meta.white_level = parse_number<float>("white", fields["white"]);
  meta.sensor_id = fields["sensor"];
  meta.exposure_tag = fields["tag"];
  if (!is_token(meta.sensor_id) || !is_token(meta.exposure_tag)) {
    throw ParseError(ParseError::Kind::Header, "PTB header: empty sensor or tag token");
  }
  try {
    meta.validate();
  } catch (const InputError& e) {
    throw ParseError(ParseError::Kind::Header, std::string("PTB header: ") + e.what());
  }
  return PtbHeader{c, h, w, std::move(meta), eol + 1};
}

Frame decode_ptb(std::string_view bytes) {
  PtbHeader header = decode_ptb_header(bytes);
  const std::size_t c = header.channels, h = header.height, w = header.width;
  const std::size_t eol = header.payload_offset - 1;
  FrameMeta meta = std::move(header.meta);

  const std::string_view payload = bytes.substr(eol + 1);
  if (payload.size() % 4 != 0) {
    throw ParseError(ParseError::Kind::Truncated,
                     "PTB truncated payload: " + std::to_string(payload.size()) +
                         " bytes is not a whole number of float32 values");
  }
  const std::size_t expected = c * h * w;
  const std::size_t found = payload.size() / 4;
  if (found != expected) {
    throw ParseError(ParseError::Kind::SizeMismatch,
                     "PTB size mismatch: header declares " + std::to_string(expected) +
                         " values, payload has " + std::to_string(found));
  }
  std::vector<double> data(expected);
  const auto* raw = reinterpret_cast<const unsigned char*>(payload.data());
  for (std::size_t i = 0; i < expected; ++i) {
    const float f = std::bit_cast<float>(get_u32_le(raw + 4 * i));
    if (!std::isfinite(f)) {
      throw ParseError(ParseError::Kind::NonFinite,
                       "PTB payload contains a non-finite value at index " + std::to_string(i));
    }
    data[i] = f;
  }
  return Frame{PlanarImage(c, h, w, std::move(data)), std::move(meta)};
}

PtbHeader read_ptb_header(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::string head;
  head.resize(kPtbMaxHeaderBytes);
  in.read(head.data(), static_cast<std::streamsize>(head.size()));
  head.resize(static_cast<std::size_t>(in.gcount()));
  if (in.bad()) throw IoError("read error on '" + path.string() + "'");
  try {
    return decode_ptb_header(head);
  } catch (const ParseError& e) {
    throw ParseError(e.kind(), path.string() + ": " + e.what());
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("read error on '" + path.string() + "'");
  return std::move(ss).str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view bytes) {
  namespace fs = std::filesystem;
  const fs::path dir = path.has_parent_path() ? path.parent_path() : fs::path(".");
  std::random_device rd;
  const fs::path tmp = dir / (path.filename().string() + ".tmp" + std::to_string(rd()));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + tmp.string() + "' for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) {
      std::error_code ec;
      fs::remove(tmp, ec);
      throw IoError("write error on '" + tmp.string() + "'");
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    std::error_code ignored;
    fs::remove(tmp, ignored);
    throw IoError("cannot move '" + tmp.string() + "' to '" + path.string() + "': " + ec.message());
  }
}

Frame load_tensor(const std::filesystem::path& path) {
  try {
    return decode_ptb(read_file(path));
  } catch (const ParseError& e) {
    throw ParseError(e.kind(), path.string() + ": " + e.what());
  }
}

void save_tensor(const PlanarImage& image, const FrameMeta& meta,
                 const std::filesystem::path& path) {
  write_file_atomic(path, encode_ptb(image, meta));
}

namespace {

struct PgmPlane {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<double> values;
};

PgmPlane parse_pgm(const std::string& bytes, const std::string& name) {
  std::size_t pos = 0;
  auto skip_ws_and_comments = [&] {
    while (pos < bytes.size()) {
      const char ch = bytes[pos];
      if (ch == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (ch == ' ' || ch == '\t' || ch == '\n' || ch == '\r') {
        ++pos;
      } else {
        break;
      }
    }
  };
  auto next_uint = [&](const char* what) -> std::size_t {
    skip_ws_and_comments();
    std::size_t value = 0;
    auto res = std::from_chars(bytes.data() + pos, bytes.data() + bytes.size(), value);
    if (res.ec != std::errc{}) {
      throw ParseError(ParseError::Kind::Header, name + ": PGM header missing " + what);
    }
    pos = static_cast<std::size_t>(res.ptr - bytes.data());
    return value;
  };

  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5') {
    throw ParseError(ParseError::Kind::Magic, name + ": bad magic, expected binary PGM 'P5'");
  }
  pos = 2;
  PgmPlane plane;
  plane.width = next_uint("width");
  plane.height = next_uint("height");
  const std::size_t maxval = next_uint("maxval");
  if (plane.width == 0 || plane.height == 0 || maxval == 0 || maxval > 65535) {
    throw ParseError(ParseError::Kind::Header, name + ": invalid PGM dimensions or maxval");
  }
  if (pos >= bytes.size()) {
    throw ParseError(ParseError::Kind::Truncated, name + ": PGM truncated after header");
  }
  ++pos;  // single whitespace byte before the raster
  const std::size_t bpp = maxval > 255 ? 2 : 1;
  const std::size_t count = plane.width * plane.height;
  if (bytes.size() - pos < count * bpp) {
    throw ParseError(ParseError::Kind::Truncated, name + ": PGM raster truncated");
  }
  if (bytes.size() - pos != count * bpp) {
    throw ParseError(ParseError::Kind::SizeMismatch, name + ": PGM raster size mismatch");
  }
  plane.values.resize(count);
  const auto* raw = reinterpret_cast<const unsigned char*>(bytes.data() + pos);
  for (std::size_t i = 0; i < count; ++i) {
    plane.values[i] = bpp == 2 ? static_cast<double>((raw[2 * i] << 8) | raw[2 * i + 1])
                               : static_cast<double>(raw[i]);
  }
  return plane;
}

}  // namespace

PlanarImage import_pgm_planes(std::span<const std::filesystem::path> paths) {
  if (paths.empty()) throw InputError("import_pgm_planes needs at least one file");
  std::vector<PgmPlane> planes;
  planes.reserve(paths.size());
  for (const auto& p : paths) planes.push_back(parse_pgm(read_file(p), p.string()));
  const std::size_t h = planes.front().height;
  const std::size_t w = planes.front().width;
  std::vector<double> data;
  data.reserve(paths.size() * h * w);
  for (std::size_t i = 0; i < planes.size(); ++i) {
    if (planes[i].height != h || planes[i].width != w) {
      throw InputError("PGM plane " + paths[i].string() + " has a different size");
    }
    data.insert(data.end(), planes[i].values.begin(), planes[i].values.end());
  }
  return PlanarImage(paths.size(), h, w, std::move(data));
}

}  // namespace specnoise
