// Copyright 2026 The Promptsmith Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "promptsmith/image.hpp"

#include <openssl/evp.h>
#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "promptsmith/errors.hpp"

namespace promptsmith {

Image::Image(int w, int h, std::uint8_t fill)
    : width(w), height(h), rgb(static_cast<std::size_t>(w) * h * 3, fill) {
  if (w <= 0 || h <= 0) throw PreconditionError("image dimensions must be positive");
}

Image decode_png(std::span<const std::uint8_t> bytes) {
  png_image png;
  std::memset(&png, 0, sizeof(png));
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&png, bytes.data(), bytes.size()))
    throw PreconditionError(std::string("cannot decode PNG: ") + png.message);
  png.format = PNG_FORMAT_RGB;
  Image img(static_cast<int>(png.width), static_cast<int>(png.height));
  if (!png_image_finish_read(&png, nullptr, img.rgb.data(), 0, nullptr)) {
    png_image_free(&png);
    throw PreconditionError(std::string("cannot decode PNG: ") + png.message);
  }
  return img;
}

std::vector<std::uint8_t> encode_png(const Image& img) {
  if (img.empty()) throw PreconditionError("cannot encode an empty image");
  png_image png;
  std::memset(&png, 0, sizeof(png));
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(img.width);
  png.height = static_cast<png_uint_32>(img.height);
  png.format = PNG_FORMAT_RGB;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&png, nullptr, &size, 0, img.rgb.data(), 0, nullptr))
    throw Error(std::string("cannot size PNG: ") + png.message);
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&png, out.data(), &size, 0, img.rgb.data(), 0, nullptr))
    throw Error(std::string("cannot encode PNG: ") + png.message);
  out.resize(size);
  return out;
}

Image read_png(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw PreconditionError("cannot open image '" + path.string() + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return decode_png(bytes);
}

void write_png(const Image& img, const std::filesystem::path& path) {
  const auto bytes = encode_png(img);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write image '" + path.string() + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

std::vector<double> box_downsample(const Image& img, int out_w, int out_h) {
  if (img.empty()) throw PreconditionError("cannot downsample an empty image");
  std::vector<double> sum(static_cast<std::size_t>(out_w) * out_h * 3, 0.0);
  std::vector<double> count(static_cast<std::size_t>(out_w) * out_h, 0.0);
  for (int y = 0; y < img.height; ++y) {
    const int oy = static_cast<int>(static_cast<long>(y) * out_h / img.height);
    for (int x = 0; x < img.width; ++x) {
      const int ox = static_cast<int>(static_cast<long>(x) * out_w / img.width);
      const std::size_t cell = static_cast<std::size_t>(oy) * out_w + ox;
      const auto* px = img.at(x, y);
      for (int c = 0; c < 3; ++c) sum[cell * 3 + c] += px[c];
      count[cell] += 1.0;
    }
  }
  for (std::size_t cell = 0; cell < count.size(); ++cell) {
    // Upsampling leaves some cells empty; they inherit nothing and stay 0.
    if (count[cell] == 0.0) continue;
    for (int c = 0; c < 3; ++c) sum[cell * 3 + c] /= count[cell] * 255.0;
  }
  return sum;
}

Image resize_bilinear(const Image& img, int out_w, int out_h) {
  if (img.empty()) throw PreconditionError("cannot resize an empty image");
  if (img.width == out_w && img.height == out_h) return img;
  Image out(out_w, out_h);
  const double sx = static_cast<double>(img.width) / out_w;
  const double sy = static_cast<double>(img.height) / out_h;
  for (int y = 0; y < out_h; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, img.height - 1.0);
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, img.height - 1);
    const double wy = fy - y0;
    for (int x = 0; x < out_w; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, img.width - 1.0);
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, img.width - 1);
      const double wx = fx - x0;
      for (int c = 0; c < 3; ++c) {
        const double top = img.at(x0, y0)[c] * (1 - wx) + img.at(x1, y0)[c] * wx;
        const double bot = img.at(x0, y1)[c] * (1 - wx) + img.at(x1, y1)[c] * wx;
        out.at(x, y)[c] = static_cast<std::uint8_t>(std::lround(top * (1 - wy) + bot * wy));
      }
    }
  }
  return out;
}

std::string base64_encode(std::span<const std::uint8_t> bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3), '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), bytes.data(),
                                static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

std::vector<std::uint8_t> base64_decode(const std::string& s) {
  std::string clean;
  clean.reserve(s.size());
  for (char c : s)
    if (!std::isspace(static_cast<unsigned char>(c))) clean.push_back(c);
  if (clean.size() % 4 != 0) throw PreconditionError("malformed base64 payload");
  std::vector<std::uint8_t> out(3 * clean.size() / 4);
  const int n = EVP_DecodeBlock(out.data(), reinterpret_cast<const unsigned char*>(clean.data()),
                                static_cast<int>(clean.size()));
  if (n < 0) throw PreconditionError("malformed base64 payload");
  std::size_t pad = 0;
  if (!clean.empty() && clean.back() == '=') ++pad;
  if (clean.size() > 1 && clean[clean.size() - 2] == '=') ++pad;
  out.resize(static_cast<std::size_t>(n) - pad);
  return out;
}

}  // namespace promptsmith
