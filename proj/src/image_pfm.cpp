// Copyright (c) 2026 the hdrvox authors.
// SPDX-License-Identifier: Apache-2.0

#include <cstring>
#include <fstream>
#include <sstream>

#include "hdrvox/image.hpp"

namespace hdrvox {

// PFM stores rows bottom-up; a negative scale marks little-endian floats.
// Only the color variant ("PF") is supported.

ImageBuffer read_pfm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("read_pfm: cannot open " + path);

    std::string magic;
    int w = 0, h = 0;
    double scale = 0.0;
    in >> magic >> w >> h >> scale;
    if (!in || magic != "PF" || w <= 0 || h <= 0 || scale == 0.0)
        throw std::runtime_error("read_pfm: malformed header in " + path);
    in.get();  // single whitespace after the scale

    if (scale > 0.0)
        throw std::runtime_error("read_pfm: big-endian PFM not supported: " + path);

    ImageBuffer img(w, h);
    std::vector<float> row(std::size_t(w) * 3);
    for (int y = h - 1; y >= 0; --y) {
        in.read(reinterpret_cast<char*>(row.data()), std::streamsize(row.size() * sizeof(float)));
        if (!in) throw std::runtime_error("read_pfm: truncated data in " + path);
        std::memcpy(&img.values[std::size_t(y) * w * 3], row.data(), row.size() * sizeof(float));
    }
    const double s = -scale;
    if (s != 1.0)
        for (float& v : img.values) v = float(v * s);
    return img;
}

void write_pfm(const std::string& path, const ImageBuffer& img) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("write_pfm: cannot open " + path);
    out << "PF\n" << img.width << " " << img.height << "\n-1.0\n";
    for (int y = img.height - 1; y >= 0; --y)
        out.write(reinterpret_cast<const char*>(&img.values[std::size_t(y) * img.width * 3]),
                  std::streamsize(std::size_t(img.width) * 3 * sizeof(float)));
    if (!out) throw std::runtime_error("write_pfm: write failed for " + path);
}

}  // namespace hdrvox
