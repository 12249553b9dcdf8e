// Copyright 2026 The HistoSynth Authors. All Rights Reserved.
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
#include "histosynth/core/png_io.h"

#include <png.h>

#include <algorithm>
#include <csetjmp>
#include <cstdio>
#include <memory>
#include <stdexcept>
#include <string>

namespace histosynth::core {
namespace {

constexpr const char* kResolutionKey = "histosynth:resolution";

constexpr std::array<std::array<std::uint8_t, 3>, kNumLabels> kPalette = {{
    {230, 220, 225},  // OTHER
    {160, 90, 40},    // PDL1_POS
    {70, 90, 170},    // PDL1_NEG
    {40, 160, 70},    // INFLAMMATION
    {255, 255, 0},    // NOISE
    {255, 255, 255},  // AIR
    {20, 20, 20},     // CELL
}};

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f != nullptr) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr OpenOrThrow(const std::filesystem::path& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) throw std::runtime_error("cannot open " + path.string());
  return f;
}

/// Owns the libpng read structs; rows are decoded as 8-bit samples.
struct DecodedPng {
  int width = 0;
  int height = 0;
  int color_type = 0;
  int channels = 0;
  std::vector<std::uint8_t> pixels;  // width * height * channels
  std::optional<std::string> resolution_text;
};

DecodedPng Decode(const std::filesystem::path& path, bool keep_palette_indices) {
  FilePtr file = OpenOrThrow(path, "rb");
  png_byte header[8];
  if (std::fread(header, 1, 8, file.get()) != 8 || png_sig_cmp(header, 0, 8) != 0) {
    throw std::runtime_error(path.string() + " is not a PNG file");
  }
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (png == nullptr) throw std::runtime_error("png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  if (info == nullptr) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw std::runtime_error("png_create_info_struct failed");
  }
  DecodedPng out;
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error("failed to decode " + path.string());
  }
  png_init_io(png, file.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);

  out.width = static_cast<int>(png_get_image_width(png, info));
  out.height = static_cast<int>(png_get_image_height(png, info));
  out.color_type = png_get_color_type(png, info);
  const int bit_depth = png_get_bit_depth(png, info);

  if (bit_depth == 16) png_set_strip_16(png);
  if (out.color_type == PNG_COLOR_TYPE_PALETTE) {
    if (bit_depth < 8) png_set_packing(png);
    if (!keep_palette_indices) png_set_palette_to_rgb(png);
  } else if (out.color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) {
    png_set_expand_gray_1_2_4_to_8(png);
  }
  if (!keep_palette_indices && png_get_valid(png, info, PNG_INFO_tRNS)) {
    png_set_tRNS_to_alpha(png);
  }
  png_read_update_info(png, info);
  out.channels = png_get_channels(png, info);

  out.pixels.resize(static_cast<std::size_t>(out.width) * out.height * out.channels);
  rows.resize(static_cast<std::size_t>(out.height));
  for (int y = 0; y < out.height; ++y) {
    rows[static_cast<std::size_t>(y)] =
        out.pixels.data() + static_cast<std::size_t>(y) * out.width * out.channels;
  }
  png_read_image(png, rows.data());
  png_read_end(png, info);

  png_textp text = nullptr;
  int num_text = 0;
  if (png_get_text(png, info, &text, &num_text) > 0) {
    for (int i = 0; i < num_text; ++i) {
      if (std::string(text[i].key) == kResolutionKey) {
        out.resolution_text = std::string(text[i].text, text[i].text_length);
      }
    }
  }
  png_destroy_read_struct(&png, &info, nullptr);
  return out;
}

void Encode(const std::filesystem::path& path, int width, int height, int color_type,
            const std::uint8_t* pixels, int channels, bool with_palette,
            const char* resolution_text) {
  FilePtr file = OpenOrThrow(path, "wb");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (png == nullptr) throw std::runtime_error("png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (info == nullptr) {
    png_destroy_write_struct(&png, nullptr);
    throw std::runtime_error("png_create_info_struct failed");
  }
  std::vector<png_bytep> rows(static_cast<std::size_t>(height));
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("failed to encode " + path.string());
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), 8,
               color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  std::array<png_color, kNumLabels> palette{};
  if (with_palette) {
    for (std::size_t i = 0; i < kPalette.size(); ++i) {
      palette[i] = png_color{kPalette[i][0], kPalette[i][1], kPalette[i][2]};
    }
    png_set_PLTE(png, info, palette.data(), kNumLabels);
  }
  png_text text{};
  std::string key = kResolutionKey;
  std::string value = resolution_text != nullptr ? resolution_text : "";
  if (resolution_text != nullptr) {
    text.compression = PNG_TEXT_COMPRESSION_NONE;
    text.key = key.data();
    text.text = value.data();
    text.text_length = value.size();
    png_set_text(png, info, &text, 1);
  }
  // Pinned so that identical inputs always produce identical bytes.
  png_set_compression_level(png, 6);
  png_write_info(png, info);
  for (int y = 0; y < height; ++y) {
    rows[static_cast<std::size_t>(y)] = const_cast<png_bytep>(
        pixels + static_cast<std::size_t>(y) * static_cast<std::size_t>(width) * channels);
  }
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace

std::array<std::uint8_t, 3> PaletteColor(ClassId id) {
  return kPalette[static_cast<std::size_t>(id)];
}

RgbImage ReadRgbPng(const std::filesystem::path& path) {
  DecodedPng png = Decode(path, /*keep_palette_indices=*/false);
  RgbImage image(png.width, png.height);
  const int ch = png.channels;
  for (int y = 0; y < png.height; ++y) {
    for (int x = 0; x < png.width; ++x) {
      const std::uint8_t* p =
          png.pixels.data() + (static_cast<std::size_t>(y) * png.width + x) * ch;
      if (ch >= 3) {
        image.set(x, y, {p[0], p[1], p[2]});
      } else {
        image.set(x, y, {p[0], p[0], p[0]});
      }
    }
  }
  return image;
}

void WriteRgbPng(const std::filesystem::path& path, const RgbImage& image) {
  if (image.empty()) throw std::invalid_argument("cannot write an empty image");
  Encode(path, image.width(), image.height(), PNG_COLOR_TYPE_RGB, image.data().data(), 3,
         /*with_palette=*/false, nullptr);
}

LabelGrid ReadMaskPng(const std::filesystem::path& path) {
  DecodedPng png = Decode(path, /*keep_palette_indices=*/true);
  if (png.channels != 1) {
    throw std::runtime_error(path.string() +
                             ": masks must be single-channel indexed or grayscale PNGs");
  }
  LabelGrid mask(png.width, png.height);
  for (std::size_t i = 0; i < png.pixels.size(); ++i) {
    const auto id = ClassFromIndex(png.pixels[i]);
    if (!id) {
      throw std::runtime_error(path.string() + ": label index " +
                               std::to_string(png.pixels[i]) + " is outside the palette");
    }
    mask.labels()[i] = *id;
  }
  Resolution tag = Resolution::kPolygons;
  if (png.resolution_text == ResolutionName(Resolution::kPolygonsNoise)) {
    tag = Resolution::kPolygonsNoise;
  } else if (png.resolution_text == ResolutionName(Resolution::kPolygonsAirCells)) {
    tag = Resolution::kPolygonsAirCells;
  } else if (!png.resolution_text) {
    const auto has = [&](ClassId id) {
      return std::find(mask.labels().begin(), mask.labels().end(), id) != mask.labels().end();
    };
    if (has(ClassId::kAir) || has(ClassId::kCell)) {
      tag = Resolution::kPolygonsAirCells;
    } else if (has(ClassId::kNoise)) {
      tag = Resolution::kPolygonsNoise;
    }
  }
  mask.set_resolution(tag);
  mask.Validate();
  return mask;
}

void WriteMaskPng(const std::filesystem::path& path, const LabelGrid& mask) {
  mask.Validate();
  std::vector<std::uint8_t> indices(mask.size());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    indices[i] = static_cast<std::uint8_t>(mask.labels()[i]);
  }
  const std::string tag(ResolutionName(mask.resolution()));
  Encode(path, mask.width(), mask.height(), PNG_COLOR_TYPE_PALETTE, indices.data(), 1,
         /*with_palette=*/true, tag.c_str());
}

}  // namespace histosynth::core
