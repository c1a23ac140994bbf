// Copyright (c) 2026 the hdrvox authors.
// SPDX-License-Identifier: Apache-2.0

#include <cstring>
#include <fstream>

#include "hdrvox/grid.hpp"

namespace hdrvox {

namespace {

constexpr std::uint32_t kGridMagic = 0x46585648;  // "HVXF" little-endian
constexpr std::uint32_t kGridVersion = 1;

template <class T>
void write_pod(std::ostream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T read_pod(std::istream& is) {
    T v;
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    return v;
}

template <class T>
void save_grid_impl(const std::string& path, const VoxelGrid<T>& grid) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("save_grid: cannot open " + path);
    write_pod(out, kGridMagic);
    write_pod(out, kGridVersion);
    const GridRes r = grid.res();
    write_pod(out, std::uint32_t(r.nx));
    write_pod(out, std::uint32_t(r.ny));
    write_pod(out, std::uint32_t(r.nz));
    for (int a = 0; a < 3; ++a) write_pod(out, double(grid.bounds().min[a]));
    for (int a = 0; a < 3; ++a) write_pod(out, double(grid.bounds().max[a]));
    const auto& payloads = grid.raw_payloads();
    std::vector<float> buf(payloads.size());
    for (std::size_t i = 0; i < payloads.size(); ++i) buf[i] = float(payloads[i]);
    out.write(reinterpret_cast<const char*>(buf.data()),
              std::streamsize(buf.size() * sizeof(float)));
    out.write(reinterpret_cast<const char*>(grid.raw_occupancy().data()),
              std::streamsize(grid.raw_occupancy().size()));
    if (!out) throw std::runtime_error("save_grid: write failed for " + path);
}

template <class T>
VoxelGrid<T> load_grid_impl(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("load_grid: cannot open " + path);
    if (read_pod<std::uint32_t>(in) != kGridMagic)
        throw std::runtime_error("load_grid: bad magic in " + path);
    if (read_pod<std::uint32_t>(in) != kGridVersion)
        throw std::runtime_error("load_grid: unsupported version in " + path);
    GridRes r;
    r.nx = int(read_pod<std::uint32_t>(in));
    r.ny = int(read_pod<std::uint32_t>(in));
    r.nz = int(read_pod<std::uint32_t>(in));
    Aabb<T> bounds;
    for (int a = 0; a < 3; ++a) bounds.min[a] = T(read_pod<double>(in));
    for (int a = 0; a < 3; ++a) bounds.max[a] = T(read_pod<double>(in));
    VoxelGrid<T> grid(r, bounds);
    std::vector<float> buf(grid.raw_payloads().size());
    in.read(reinterpret_cast<char*>(buf.data()), std::streamsize(buf.size() * sizeof(float)));
    in.read(reinterpret_cast<char*>(grid.raw_occupancy().data()),
            std::streamsize(grid.raw_occupancy().size()));
    if (!in) throw std::runtime_error("load_grid: truncated file " + path);
    for (std::size_t i = 0; i < buf.size(); ++i) grid.raw_payloads()[i] = T(buf[i]);
    return grid;
}

}  // namespace

void save_grid(const std::string& path, const VoxelGrid<float>& grid) {
    save_grid_impl(path, grid);
}
void save_grid(const std::string& path, const VoxelGrid<double>& grid) {
    save_grid_impl(path, grid);
}
VoxelGrid<float> load_grid_f32(const std::string& path) { return load_grid_impl<float>(path); }
VoxelGrid<double> load_grid_f64(const std::string& path) { return load_grid_impl<double>(path); }

}  // namespace hdrvox
