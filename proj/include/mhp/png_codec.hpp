// Copyright 2026 The mhpbench Authors.
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

// Single-channel 8-bit PNG masks via libpng. Grayscale and palette files
// are read as raw sample values; palette colors are never applied.
// Consumers link PNG::PNG.

#pragma once

#include <png.h>

#include <csetjmp>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include "mhp/error.hpp"
#include "mhp/scene.hpp"

namespace mhp {
namespace detail {

struct PngErrorBuffer {
  char message[256] = {0};
};

inline void png_error_fn(png_structp png, png_const_charp msg) {
  auto* buf = static_cast<PngErrorBuffer*>(png_get_error_ptr(png));
  std::snprintf(buf->message, sizeof(buf->message), "%s", msg);
  png_longjmp(png, 1);
}

inline void png_warning_fn(png_structp, png_const_charp) {}

class CFile {
 public:
  CFile(const std::filesystem::path& path, const char* mode)
      : f_(std::fopen(path.c_str(), mode)) {}
  ~CFile() {
    if (f_) std::fclose(f_);
  }
  CFile(const CFile&) = delete;
  CFile& operator=(const CFile&) = delete;
  std::FILE* get() const { return f_; }
  // Returns false if buffered data could not be flushed.
  bool close() {
    const bool ok = f_ && std::fclose(f_) == 0;
    f_ = nullptr;
    return ok;
  }

 private:
  std::FILE* f_;
};

// Returns an empty string on success. Only POD locals live in this frame
// because libpng reports errors through longjmp.
inline std::string png_read_gray8(std::FILE* f, std::vector<std::uint8_t>& pixels,
                                  int& width, int& height) {
  PngErrorBuffer err;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &err,
                                           png_error_fn, png_warning_fn);
  if (!png) return "out of memory";
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    return "out of memory";
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    return err.message;
  }
  png_init_io(png, f);
  png_read_info(png, info);
  const png_uint_32 w = png_get_image_width(png, info);
  const png_uint_32 h = png_get_image_height(png, info);
  const int color = png_get_color_type(png, info);
  const int depth = png_get_bit_depth(png, info);
  if ((color != PNG_COLOR_TYPE_GRAY && color != PNG_COLOR_TYPE_PALETTE) || depth > 8) {
    png_destroy_read_struct(&png, &info, nullptr);
    return "mask must be a single-channel image with at most 8 bits per sample";
  }
  if (depth < 8) png_set_packing(png);
  const int passes = png_set_interlace_handling(png);
  png_read_update_info(png, info);
  if (png_get_rowbytes(png, info) != w) {
    png_destroy_read_struct(&png, &info, nullptr);
    return "unexpected row layout";
  }
  width = static_cast<int>(w);
  height = static_cast<int>(h);
  pixels.assign(static_cast<std::size_t>(w) * h, 0);
  for (int pass = 0; pass < passes; ++pass) {
    for (png_uint_32 y = 0; y < h; ++y) {
      png_read_row(png, pixels.data() + static_cast<std::size_t>(y) * w, nullptr);
    }
  }
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return {};
}

inline std::string png_write_gray8(std::FILE* f, const std::uint8_t* pixels,
                                   int width, int height) {
  PngErrorBuffer err;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &err,
                                            png_error_fn, png_warning_fn);
  if (!png) return "out of memory";
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    return "out of memory";
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    return err.message;
  }
  png_init_io(png, f);
  png_set_IHDR(png, info, static_cast<png_uint_32>(width),
               static_cast<png_uint_32>(height), 8, PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < height; ++y) {
    png_write_row(png, pixels + static_cast<std::size_t>(y) * width);
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return {};
}

}  // namespace detail

inline InstanceMask read_mask_png(const std::filesystem::path& path) {
  detail::CFile file(path, "rb");
  if (!file.get()) throw IoError("cannot open " + path.string());
  unsigned char sig[8];
  if (std::fread(sig, 1, 8, file.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
    throw IoError(path.string() + ": not a PNG file");
  }
  std::rewind(file.get());
  std::vector<std::uint8_t> pixels;
  int w = 0, h = 0;
  if (auto err = detail::png_read_gray8(file.get(), pixels, w, h); !err.empty()) {
    throw IoError(path.string() + ": " + err);
  }
  return InstanceMask(ImageSize{w, h}, std::move(pixels));
}

template <typename Tag>
void write_mask_png(const Raster<Category, Tag>& mask,
                    const std::filesystem::path& path) {
  detail::CFile file(path, "wb");
  if (!file.get()) throw IoError("cannot write " + path.string());
  if (auto err = detail::png_write_gray8(file.get(), mask.pixels().data(),
                                         mask.width(), mask.height());
      !err.empty()) {
    throw IoError(path.string() + ": " + err);
  }
  if (!file.close()) throw IoError("cannot write " + path.string());
}

}  // namespace mhp
