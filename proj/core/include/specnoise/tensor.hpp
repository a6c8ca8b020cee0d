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
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace specnoise {

/// Repetition period of a colour filter array, in mosaic pixels.
struct CfaPeriod {
  std::size_t rows = 2;
  std::size_t cols = 2;

  std::size_t plane_count() const noexcept { return rows * cols; }
};

/// Acquisition metadata carried alongside every tensor.
struct FrameMeta {
  std::uint32_t iso = 100;
  double black_level = 0.0;
  double white_level = 65535.0;
  std::string sensor_id = "unknown";
  std::string exposure_tag = "normal";

  /// Throws InputError unless 0 <= black_level < white_level and iso > 0.
  void validate() const;

  bool operator==(const FrameMeta&) const = default;
};

/// C x H x W real tensor of packed CFA planes, channel-major then row-major.
///
/// Values are stored in double precision. Every public operation in the
/// library produces finite values only.
class PlanarImage {
 public:
  PlanarImage() : PlanarImage(1, 1, 1) {}
  PlanarImage(std::size_t channels, std::size_t height, std::size_t width,
              double fill = 0.0);
  PlanarImage(std::size_t channels, std::size_t height, std::size_t width,
              std::vector<double> data);

  /// Zero-filled (or `fill`-filled) image with the same shape and labels.
  static PlanarImage like(const PlanarImage& other, double fill = 0.0);

  std::size_t channels() const noexcept { return channels_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t plane_size() const noexcept { return height_ * width_; }
  std::size_t size() const noexcept { return data_.size(); }

  double& at(std::size_t c, std::size_t h, std::size_t w) {
    return data_[(c * height_ + h) * width_ + w];
  }
  double at(std::size_t c, std::size_t h, std::size_t w) const {
    return data_[(c * height_ + h) * width_ + w];
  }

  std::span<double> plane(std::size_t c) {
    return {data_.data() + c * plane_size(), plane_size()};
  }
  std::span<const double> plane(std::size_t c) const {
    return {data_.data() + c * plane_size(), plane_size()};
  }

  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }

  const std::vector<std::string>& labels() const noexcept { return labels_; }
  void set_labels(std::vector<std::string> labels);

  bool same_shape(const PlanarImage& other) const noexcept {
    return channels_ == other.channels_ && height_ == other.height_ &&
           width_ == other.width_;
  }
  bool all_finite() const noexcept;

  /// Bitwise comparison of shape and payload (labels ignored).
  bool operator==(const PlanarImage& other) const noexcept {
    return same_shape(other) && data_ == other.data_;
  }

 private:
  std::size_t channels_;
  std::size_t height_;
  std::size_t width_;
  std::vector<double> data_;
  std::vector<std::string> labels_;
};

/// Generic labels "c0".."c{C-1}".
std::vector<std::string> generic_channel_labels(std::size_t channels);

/// Labels for the sites of a CFA period in row-major order. A 2x2 period
/// gets the RGGB names R, Gr, Gb, B; other periods get "s<row>_<col>".
std::vector<std::string> cfa_site_labels(CfaPeriod period);

/// Splits a 1 x (H*py) x (W*px) mosaic into py*px planes. Plane k holds the
/// mosaic sites at row offset k / px and column offset k % px.
PlanarImage pack_cfa(const PlanarImage& mosaic, CfaPeriod period);

/// Exact inverse of pack_cfa.
PlanarImage unpack_cfa(const PlanarImage& planes, CfaPeriod period);

/// Per-channel arithmetic mean over the H*W entries of each plane.
std::vector<double> channel_means(const PlanarImage& img);

/// Compensated (Neumaier) sum.
double accurate_sum(std::span<const double> values) noexcept;

}  // namespace specnoise
