// Copyright (c) 2026 the hdrvox authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace hdrvox {

// Interleaved RGB float image. LDR buffers hold values in [0,1]; HDR buffers
// any nonnegative finite values.
struct ImageBuffer {
    int width = 0, height = 0;
    std::vector<float> values;  // width * height * 3, row-major, y down

    ImageBuffer() = default;
    ImageBuffer(int w, int h) : width(w), height(h), values(std::size_t(w) * h * 3, 0.0f) {
        if (w <= 0 || h <= 0) throw std::invalid_argument("ImageBuffer: bad size");
    }

    float& at(int x, int y, int c) { return values[(std::size_t(y) * width + x) * 3 + c]; }
    float at(int x, int y, int c) const { return values[(std::size_t(y) * width + x) * 3 + c]; }
    std::size_t pixel_count() const { return std::size_t(width) * height; }
};

// 8-bit RGB PNG codec. Reading maps byte b to b/255; writing clamps to [0,1]
// and quantizes with round(v * 255). Anything that is not an 8-bit RGB file
// is rejected.
ImageBuffer read_png(const std::string& path);
void write_png(const std::string& path, const ImageBuffer& img);

// Color PFM ("PF"), 32-bit floats, negative scale = little-endian, bottom-up
// row order. Lossless for f32 values.
ImageBuffer read_pfm(const std::string& path);
void write_pfm(const std::string& path, const ImageBuffer& img);

// Pixel-selection masks used by metrics and training.
std::vector<std::uint8_t> full_mask(int width, int height);
// Left/right halves of the image; on odd widths the center column belongs to
// neither half.
std::vector<std::uint8_t> left_half_mask(int width, int height);
std::vector<std::uint8_t> right_half_mask(int width, int height);

}  // namespace hdrvox
