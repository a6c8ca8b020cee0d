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

#include "specnoise/tensor.hpp"

#include <cmath>
#include <string>
#include <utility>

#include "specnoise/error.hpp"

namespace specnoise {

void FrameMeta::validate() const {
  if (iso == 0) throw InputError("iso must be positive");
  if (!std::isfinite(black_level) || !std::isfinite(white_level) ||
      black_level < 0.0 || black_level >= white_level) {
    throw InputError("black level must satisfy 0 <= black < white (black=" +
                     std::to_string(black_level) +
                     ", white=" + std::to_string(white_level) + ")");
  }
}

PlanarImage::PlanarImage(std::size_t channels, std::size_t height,
                         std::size_t width, double fill)
    : PlanarImage(channels, height, width,
                  std::vector<double>(channels * height * width, fill)) {}

PlanarImage::PlanarImage(std::size_t channels, std::size_t height,
                         std::size_t width, std::vector<double> data)
    : channels_(channels),
      height_(height),
      width_(width),
      data_(std::move(data)),
      labels_(generic_channel_labels(channels)) {
  if (channels == 0 || height == 0 || width == 0) {
    throw InputError("image dimensions must be at least 1x1x1");
  }
  if (data_.size() != channels * height * width) {
    throw InputError("data length " + std::to_string(data_.size()) +
                     " does not match C*H*W = " +
                     std::to_string(channels * height * width));
  }
  if (!all_finite()) throw InputError("image data must be finite");
}

PlanarImage PlanarImage::like(const PlanarImage& other, double fill) {
  PlanarImage out(other.channels_, other.height_, other.width_, fill);
  out.labels_ = other.labels_;
  return out;
}

void PlanarImage::set_labels(std::vector<std::string> labels) {
  if (labels.size() != channels_) {
    throw InputError("expected " + std::to_string(channels_) +
                     " channel labels, got " + std::to_string(labels.size()));
  }
  labels_ = std::move(labels);
}

bool PlanarImage::all_finite() const noexcept {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

std::vector<std::string> generic_channel_labels(std::size_t channels) {
  std::vector<std::string> labels;
  labels.reserve(channels);
  for (std::size_t c = 0; c < channels; ++c) labels.push_back("c" + std::to_string(c));
  return labels;
}

std::vector<std::string> cfa_site_labels(CfaPeriod period) {
  if (period.rows == 2 && period.cols == 2) return {"R", "Gr", "Gb", "B"};
  std::vector<std::string> labels;
  labels.reserve(period.plane_count());
  for (std::size_t r = 0; r < period.rows; ++r) {
    for (std::size_t c = 0; c < period.cols; ++c) {
      labels.push_back("s" + std::to_string(r) + "_" + std::to_string(c));
    }
  }
  return labels;
}

PlanarImage pack_cfa(const PlanarImage& mosaic, CfaPeriod period) {
  if (period.rows == 0 || period.cols == 0) throw InputError("CFA period must be at least 1x1");
  if (mosaic.channels() != 1) throw InputError("pack_cfa expects a single-plane mosaic");
  if (mosaic.height() % period.rows != 0 || mosaic.width() % period.cols != 0) {
    throw InputError("mosaic " + std::to_string(mosaic.height()) + "x" +
                     std::to_string(mosaic.width()) +
                     " is not divisible by the CFA period " +
                     std::to_string(period.rows) + "x" + std::to_string(period.cols));
  }
  const std::size_t h_out = mosaic.height() / period.rows;
  const std::size_t w_out = mosaic.width() / period.cols;
  PlanarImage planes(period.plane_count(), h_out, w_out);
  for (std::size_t k = 0; k < period.plane_count(); ++k) {
    const std::size_t dr = k / period.cols;
    const std::size_t dc = k % period.cols;
    for (std::size_t h = 0; h < h_out; ++h) {
      for (std::size_t w = 0; w < w_out; ++w) {
        planes.at(k, h, w) = mosaic.at(0, h * period.rows + dr, w * period.cols + dc);
      }
    }
  }
  planes.set_labels(cfa_site_labels(period));
  return planes;
}

PlanarImage unpack_cfa(const PlanarImage& planes, CfaPeriod period) {
  if (period.rows == 0 || period.cols == 0) throw InputError("CFA period must be at least 1x1");
  if (planes.channels() != period.plane_count()) {
    throw InputError("channel count " + std::to_string(planes.channels()) +
                     " does not match CFA period with " +
                     std::to_string(period.plane_count()) + " sites");
  }
  PlanarImage mosaic(1, planes.height() * period.rows, planes.width() * period.cols);
  for (std::size_t k = 0; k < period.plane_count(); ++k) {
    const std::size_t dr = k / period.cols;
    const std::size_t dc = k % period.cols;
    for (std::size_t h = 0; h < planes.height(); ++h) {
      for (std::size_t w = 0; w < planes.width(); ++w) {
        mosaic.at(0, h * period.rows + dr, w * period.cols + dc) = planes.at(k, h, w);
      }
    }
  }
  return mosaic;
}

double accurate_sum(std::span<const double> values) noexcept {
  double sum = 0.0;
  double comp = 0.0;
  for (double v : values) {
    const double t = sum + v;
    if (std::abs(sum) >= std::abs(v)) {
      comp += (sum - t) + v;
    } else {
      comp += (v - t) + sum;
    }
    sum = t;
  }
  return sum + comp;
}

std::vector<double> channel_means(const PlanarImage& img) {
  std::vector<double> means(img.channels());
  const double n = static_cast<double>(img.plane_size());
  for (std::size_t c = 0; c < img.channels(); ++c) {
    means[c] = accurate_sum(img.plane(c)) / n;
  }
  return means;
}

}  // namespace specnoise
