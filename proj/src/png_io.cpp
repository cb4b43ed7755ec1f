/* Copyright 2026 The PIHOT Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
#include "pihot/png_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

namespace pihot::io {
namespace {

std::vector<std::uint8_t> read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

cv::Mat decode(const fs::path& path, int flags) {
  const auto bytes = read_bytes(path);
  cv::Mat mat;
  if (!bytes.empty()) {
    try {
      mat = cv::imdecode(bytes, flags);
    } catch (const cv::Exception&) {
      mat = cv::Mat();
    }
  }
  if (mat.empty()) throw IoError("failed to parse PNG " + path.string());
  return mat;
}

void encode_to(const fs::path& path, const cv::Mat& mat) {
  std::vector<std::uint8_t> buf;
  // Compression level pinned so reruns are byte-identical.
  if (!cv::imencode(".png", mat, buf, {cv::IMWRITE_PNG_COMPRESSION, 6})) {
    throw IoError("failed to encode PNG " + path.string());
  }
  write_file_atomic(path, buf);
}

cv::Mat decode_gray(const fs::path& path, int depth) {
  cv::Mat m = decode(path, cv::IMREAD_UNCHANGED);
  if (m.channels() != 1 || m.depth() != depth) {
    throw IoError("unexpected PNG format (channels/bit depth) in " + path.string());
  }
  return m;
}

}  // namespace

void write_file_atomic(const fs::path& path, const std::vector<std::uint8_t>& bytes) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("short write to " + tmp.string());
  }
  fs::rename(tmp, path);
}

void write_file_atomic(const fs::path& path, const std::string& text) {
  write_file_atomic(path, std::vector<std::uint8_t>(text.begin(), text.end()));
}

ImageTensor read_rgb(const fs::path& path) {
  cv::Mat m = decode(path, cv::IMREAD_COLOR);
  if (m.depth() != CV_8U) throw IoError("expected 8-bit RGB PNG: " + path.string());
  ImageTensor img(m.rows, m.cols);
  for (int y = 0; y < m.rows; ++y) {
    const auto* row = m.ptr<cv::Vec3b>(y);
    for (int x = 0; x < m.cols; ++x) {
      // OpenCV stores BGR.
      img.at(y, x, 0) = row[x][2] / 255.0;
      img.at(y, x, 1) = row[x][1] / 255.0;
      img.at(y, x, 2) = row[x][0] / 255.0;
    }
  }
  return img;
}

void write_rgb(const fs::path& path, const ImageTensor& image) {
  cv::Mat m(image.height, image.width, CV_8UC3);
  auto q = [](double v) {
    return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
  };
  for (int y = 0; y < image.height; ++y) {
    auto* row = m.ptr<cv::Vec3b>(y);
    for (int x = 0; x < image.width; ++x) {
      row[x] = cv::Vec3b(q(image.at(y, x, 2)), q(image.at(y, x, 1)), q(image.at(y, x, 0)));
    }
  }
  encode_to(path, m);
}

BinaryMask read_mask(const fs::path& path) {
  cv::Mat m = decode_gray(path, CV_8U);
  BinaryMask mask(m.rows, m.cols);
  for (int y = 0; y < m.rows; ++y) {
    const auto* row = m.ptr<std::uint8_t>(y);
    for (int x = 0; x < m.cols; ++x) {
      if (row[x] == 255) {
        mask.at(y, x) = 1;
      } else if (row[x] != 0) {
        throw IoError("mask PNG must contain only 0 and 255: " + path.string());
      }
    }
  }
  return mask;
}

void write_mask(const fs::path& path, const BinaryMask& mask) {
  cv::Mat m(mask.height, mask.width, CV_8UC1);
  for (int y = 0; y < mask.height; ++y) {
    for (int x = 0; x < mask.width; ++x) m.at<std::uint8_t>(y, x) = mask.at(y, x) ? 255 : 0;
  }
  encode_to(path, m);
}

DepthMap read_depth16(const fs::path& path, double scale) {
  if (!(scale > 0)) throw InvalidArgument("depth scale must be positive");
  cv::Mat m = decode_gray(path, CV_16U);
  DepthMap d(m.rows, m.cols);
  for (int y = 0; y < m.rows; ++y) {
    const auto* row = m.ptr<std::uint16_t>(y);
    for (int x = 0; x < m.cols; ++x) d.at(y, x) = row[x] / scale;
  }
  return d;
}

void write_depth16(const fs::path& path, const DepthMap& depth, double scale) {
  if (!(scale > 0)) throw InvalidArgument("depth scale must be positive");
  cv::Mat m(depth.height, depth.width, CV_16UC1);
  for (int y = 0; y < depth.height; ++y) {
    for (int x = 0; x < depth.width; ++x) {
      const double v = std::round(depth.at(y, x) * scale);
      if (!(v >= 0.0) || v > 65535.0) {
        throw InvalidArgument("depth value out of 16-bit range at scale " + std::to_string(scale));
      }
      m.at<std::uint16_t>(y, x) = static_cast<std::uint16_t>(v);
    }
  }
  encode_to(path, m);
}

ContactLabelMap read_labels(const fs::path& path) {
  cv::Mat m = decode_gray(path, CV_8U);
  ContactLabelMap l(m.rows, m.cols);
  for (int y = 0; y < m.rows; ++y) {
    const auto* row = m.ptr<std::uint8_t>(y);
    for (int x = 0; x < m.cols; ++x) l.at(y, x) = row[x];
  }
  return l;
}

void write_labels(const fs::path& path, const ContactLabelMap& labels) {
  cv::Mat m(labels.height, labels.width, CV_8UC1);
  for (int y = 0; y < labels.height; ++y) {
    for (int x = 0; x < labels.width; ++x) {
      const int v = labels.at(y, x);
      if (v < 0 || v > 255) throw InvalidArgument("label does not fit in 8 bits");
      m.at<std::uint8_t>(y, x) = static_cast<std::uint8_t>(v);
    }
  }
  encode_to(path, m);
}

void write_gray(const fs::path& path, const Grid<double>& map) {
  cv::Mat m(map.height, map.width, CV_8UC1);
  for (int y = 0; y < map.height; ++y) {
    for (int x = 0; x < map.width; ++x) {
      m.at<std::uint8_t>(y, x) =
          static_cast<std::uint8_t>(std::lround(std::clamp(map.at(y, x), 0.0, 1.0) * 255.0));
    }
  }
  encode_to(path, m);
}

void write_rgb8(const fs::path& path, int height, int width, const std::vector<Rgb8>& pixels) {
  if (pixels.size() != static_cast<size_t>(height) * width) {
    throw ShapeError("pixel buffer does not match " + dims_str(height, width));
  }
  cv::Mat m(height, width, CV_8UC3);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const auto& p = pixels[static_cast<size_t>(y) * width + x];
      m.at<cv::Vec3b>(y, x) = cv::Vec3b(p[2], p[1], p[0]);
    }
  }
  encode_to(path, m);
}

}  // namespace pihot::io
