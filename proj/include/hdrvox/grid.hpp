// Copyright (c) 2026 the hdrvox authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "hdrvox/geom.hpp"
#include "hdrvox/sh.hpp"

namespace hdrvox {

inline constexpr int kPayloadDim = 28;  // 27 SH coefficients (9 per color channel) + sigma
inline constexpr int kSigmaOffset = 27;

// One vertex worth of field parameters. sh[ch * 9 + k] are the SH
// coefficients of color channel ch; sigma is the opacity density.
template <class T>
struct VertexPayload {
    std::array<T, 27> sh{};
    T sigma{};

    T scalar(int i) const { return i < 27 ? sh[i] : sigma; }
    void set_scalar(int i, T v) {
        if (i < 27) sh[i] = v; else sigma = v;
    }
};

struct GridRes {
    int nx = 0, ny = 0, nz = 0;  // cell counts per axis; vertices are (n+1) per axis

    bool operator==(const GridRes&) const = default;
    std::int64_t vertex_count() const {
        return std::int64_t(nx + 1) * (ny + 1) * (nz + 1);
    }
};

// Result of locating a position inside the grid: the enclosing cell and the
// fractional coordinates within it, each in [0, 1].
struct CellRef {
    int ix = 0, iy = 0, iz = 0;
};

// Dense-indexed sparse voxel grid. Payloads are stored interleaved,
// kPayloadDim scalars per vertex, vertices in x-fastest order. Vertices
// carry an occupancy flag; interpolation reads unoccupied vertices as zero.
template <class T>
class VoxelGrid {
public:
    VoxelGrid() = default;

    VoxelGrid(GridRes res, Aabb<T> bounds) : res_(res), bounds_(bounds) {
        if (res.nx <= 0 || res.ny <= 0 || res.nz <= 0)
            throw std::invalid_argument("VoxelGrid: resolution must be positive");
        if (!bounds.valid())
            throw std::invalid_argument("VoxelGrid: bounds min must be < max on each axis");
        data_.assign(std::size_t(res.vertex_count()) * kPayloadDim, T(0));
        occupancy_.assign(std::size_t(res.vertex_count()), 1);
    }

    const GridRes& res() const { return res_; }
    const Aabb<T>& bounds() const { return bounds_; }
    std::int64_t vertex_count() const { return res_.vertex_count(); }

    // Additive color offset applied at radiance evaluation; not part of the
    // serialized payload format (carried by the training checkpoint instead).
    T color_offset = T(0.5);

    std::int64_t vertex_index(int ix, int iy, int iz) const {
        return std::int64_t(ix) +
               std::int64_t(res_.nx + 1) * (std::int64_t(iy) + std::int64_t(res_.ny + 1) * iz);
    }

    Vec3<T> vertex_pos(int ix, int iy, int iz) const {
        const Vec3<T> e = bounds_.extent();
        return {bounds_.min.x + e.x * T(ix) / T(res_.nx),
                bounds_.min.y + e.y * T(iy) / T(res_.ny),
                bounds_.min.z + e.z * T(iz) / T(res_.nz)};
    }

    T min_voxel_edge() const {
        const Vec3<T> e = bounds_.extent();
        return std::min({e.x / T(res_.nx), e.y / T(res_.ny), e.z / T(res_.nz)});
    }

    T* payload_ptr(std::int64_t v) { return data_.data() + std::size_t(v) * kPayloadDim; }
    const T* payload_ptr(std::int64_t v) const { return data_.data() + std::size_t(v) * kPayloadDim; }

    bool occupied(std::int64_t v) const { return occupancy_[std::size_t(v)] != 0; }
    void set_occupied(std::int64_t v, bool o) { occupancy_[std::size_t(v)] = o ? 1 : 0; }

    std::vector<T>& raw_payloads() { return data_; }
    const std::vector<T>& raw_payloads() const { return data_; }
    const std::vector<std::uint8_t>& raw_occupancy() const { return occupancy_; }
    std::vector<std::uint8_t>& raw_occupancy() { return occupancy_; }

    VertexPayload<T> vertex_payload(std::int64_t v) const {
        VertexPayload<T> p;
        const T* d = payload_ptr(v);
        for (int i = 0; i < 27; ++i) p.sh[i] = d[i];
        p.sigma = d[kSigmaOffset];
        return p;
    }

    void set_vertex_payload(std::int64_t v, const VertexPayload<T>& p) {
        T* d = payload_ptr(v);
        for (int i = 0; i < 27; ++i) d[i] = p.sh[i];
        d[kSigmaOffset] = p.sigma;
    }

    // Locates `pos`, clamping fractional coordinates into [0,1] against
    // boundary rounding. Throws when pos lies outside the bounds.
    CellRef locate(const Vec3<T>& pos, Vec3<T>& frac) const {
        if (!bounds_.contains(pos))
            throw std::out_of_range("VoxelGrid: position outside grid bounds");
        return locate_clamped(pos, frac);
    }

    // Same as locate() but clamps positions onto the boundary instead of
    // throwing; used by the ray marcher where sample points can land a few
    // ulps outside the box.
    CellRef locate_clamped(const Vec3<T>& pos, Vec3<T>& frac) const {
        CellRef c;
        const Vec3<T> e = bounds_.extent();
        const int n[3] = {res_.nx, res_.ny, res_.nz};
        int idx[3];
        for (int a = 0; a < 3; ++a) {
            T u = (pos[a] - bounds_.min[a]) / e[a] * T(n[a]);
            u = std::clamp(u, T(0), T(n[a]));
            int i = std::min(int(u), n[a] - 1);
            idx[a] = i;
            frac[a] = u - T(i);
        }
        c.ix = idx[0]; c.iy = idx[1]; c.iz = idx[2];
        return c;
    }

    // Trilinear corner weights for fractional coordinates, in the fixed
    // corner order (dz, dy, dx) = (0,0,0),(0,0,1),(0,1,0)...(1,1,1).
    static std::array<T, 8> corner_weights(const Vec3<T>& f) {
        const T fx = f.x, fy = f.y, fz = f.z;
        const T gx = T(1) - fx, gy = T(1) - fy, gz = T(1) - fz;
        return {gz * gy * gx, gz * gy * fx, gz * fy * gx, gz * fy * fx,
                fz * gy * gx, fz * gy * fx, fz * fy * gx, fz * fy * fx};
    }

    std::array<std::int64_t, 8> corner_indices(const CellRef& c) const {
        const std::int64_t base = vertex_index(c.ix, c.iy, c.iz);
        const std::int64_t sx = 1;
        const std::int64_t sy = res_.nx + 1;
        const std::int64_t sz = std::int64_t(res_.nx + 1) * (res_.ny + 1);
        return {base, base + sx, base + sy, base + sy + sx,
                base + sz, base + sz + sx, base + sz + sy, base + sz + sy + sx};
    }

    // The eight enclosing-cell corner indices and their trilinear weights.
    // Weights are nonnegative and sum to 1.
    void trilinear_weights(const Vec3<T>& pos, std::array<std::int64_t, 8>& indices,
                           std::array<T, 8>& weights) const {
        Vec3<T> f;
        const CellRef c = locate(pos, f);
        indices = corner_indices(c);
        weights = corner_weights(f);
    }

    // Trilinear blend of the 28 payload scalars; unoccupied corners read as zero.
    VertexPayload<T> interp_payload(const Vec3<T>& pos) const {
        std::array<std::int64_t, 8> idx;
        std::array<T, 8> w;
        trilinear_weights(pos, idx, w);
        VertexPayload<T> out;
        for (int c = 0; c < 8; ++c) {
            if (!occupied(idx[c])) continue;
            const T* d = payload_ptr(idx[c]);
            const T wc = w[c];
            for (int i = 0; i < 27; ++i) out.sh[i] += wc * d[i];
            out.sigma += wc * d[kSigmaOffset];
        }
        return out;
    }

    // View-dependent radiance of an interpolated payload:
    // per channel max(0, color_offset + sum_k sh[ch][k] * basis[k]).
    // Nonnegative and unbounded above.
    static Vec3<T> eval_radiance(const VertexPayload<T>& p, const ShValues<T>& basis, T offset) {
        Vec3<T> c;
        for (int ch = 0; ch < 3; ++ch) {
            T v = offset;
            for (int k = 0; k < kShCount; ++k) v += p.sh[ch * kShCount + k] * basis[k];
            c[ch] = std::max(T(0), v);
        }
        return c;
    }

    Vec3<T> radiance(const Vec3<T>& pos, const Vec3<T>& dir) const {
        return eval_radiance(interp_payload(pos), eval_sh_basis(dir), color_offset);
    }

    // Fresh grid: all SH zero, sigma 0.1, everything occupied.
    static VoxelGrid init(GridRes res, Aabb<T> bounds) {
        VoxelGrid g(res, bounds);
        const std::int64_t n = g.vertex_count();
        for (std::int64_t v = 0; v < n; ++v) g.payload_ptr(v)[kSigmaOffset] = T(0.1);
        return g;
    }

    // Resamples the field onto a finer grid. New vertex payloads are the
    // trilinear samples of the old (occupancy-masked) field at the new vertex
    // positions, so the represented field is unchanged for integer upsampling
    // factors. New-vertex occupancy is the OR of the corner occupancy of
    // every old cell touching the vertex position.
    VoxelGrid upsample(GridRes new_res) const {
        if (new_res.nx < res_.nx || new_res.ny < res_.ny || new_res.nz < res_.nz)
            throw std::invalid_argument("upsample: new resolution must not shrink");
        VoxelGrid g(new_res, bounds_);
        g.color_offset = color_offset;
        for (int iz = 0; iz <= new_res.nz; ++iz)
            for (int iy = 0; iy <= new_res.ny; ++iy)
                for (int ix = 0; ix <= new_res.nx; ++ix) {
                    const std::int64_t v = g.vertex_index(ix, iy, iz);
                    const Vec3<T> p = g.vertex_pos(ix, iy, iz);
                    g.set_vertex_payload(v, interp_payload_clamped(p));
                    g.set_occupied(v, any_occupied_around(p));
                }
        return g;
    }

    // Marks vertices unoccupied where the effective opacity is below
    // tau_sigma and every incident cell is entirely below it; payloads stay
    // in place but are ignored by interpolation. Already-unoccupied vertices
    // remain unoccupied.
    VoxelGrid prune(T tau_sigma) const {
        if (tau_sigma < T(0)) throw std::invalid_argument("prune: tau_sigma must be >= 0");
        VoxelGrid g = *this;
        const int vx = res_.nx + 1, vy = res_.ny + 1, vz = res_.nz + 1;

        // effective sigma: stored value clamped at zero, zero when unoccupied
        auto eff = [&](int ix, int iy, int iz) {
            const std::int64_t v = vertex_index(ix, iy, iz);
            return occupied(v) ? std::max(T(0), payload_ptr(v)[kSigmaOffset]) : T(0);
        };

        // cell_below[c] = every corner of cell c has effective sigma < tau
        std::vector<std::uint8_t> cell_below(std::size_t(res_.nx) * res_.ny * res_.nz);
        for (int cz = 0; cz < res_.nz; ++cz)
            for (int cy = 0; cy < res_.ny; ++cy)
                for (int cx = 0; cx < res_.nx; ++cx) {
                    bool below = true;
                    for (int d = 0; d < 8 && below; ++d)
                        below = eff(cx + (d & 1), cy + ((d >> 1) & 1), cz + (d >> 2)) < tau_sigma;
                    cell_below[std::size_t(cx) + std::size_t(res_.nx) * (cy + std::size_t(res_.ny) * cz)] =
                        below ? 1 : 0;
                }

        auto cell_is_below = [&](int cx, int cy, int cz) {
            if (cx < 0 || cy < 0 || cz < 0 || cx >= res_.nx || cy >= res_.ny || cz >= res_.nz)
                return true;  // no cell there; nothing to protect
            return cell_below[std::size_t(cx) + std::size_t(res_.nx) * (cy + std::size_t(res_.ny) * cz)] != 0;
        };

        for (int iz = 0; iz < vz; ++iz)
            for (int iy = 0; iy < vy; ++iy)
                for (int ix = 0; ix < vx; ++ix) {
                    if (!(eff(ix, iy, iz) < tau_sigma)) continue;
                    bool all_below = true;
                    for (int d = 0; d < 8 && all_below; ++d)
                        all_below = cell_is_below(ix - 1 + (d & 1), iy - 1 + ((d >> 1) & 1),
                                                  iz - 1 + (d >> 2));
                    if (all_below) g.set_occupied(vertex_index(ix, iy, iz), false);
                }
        return g;
    }

    bool all_finite() const {
        for (const T v : data_)
            if (!std::isfinite(double(v))) return false;
        return true;
    }

    template <class U>
    VoxelGrid<U> cast() const {
        VoxelGrid<U> g(res_, bounds_.template cast<U>());
        g.color_offset = U(color_offset);
        for (std::size_t i = 0; i < data_.size(); ++i) g.raw_payloads()[i] = U(data_[i]);
        g.raw_occupancy() = occupancy_;
        return g;
    }

private:
    VertexPayload<T> interp_payload_clamped(const Vec3<T>& pos) const {
        Vec3<T> f;
        const CellRef c = locate_clamped(pos, f);
        const auto idx = corner_indices(c);
        const auto w = corner_weights(f);
        VertexPayload<T> out;
        for (int k = 0; k < 8; ++k) {
            if (!occupied(idx[k])) continue;
            const T* d = payload_ptr(idx[k]);
            for (int i = 0; i < 27; ++i) out.sh[i] += w[k] * d[i];
            out.sigma += w[k] * d[kSigmaOffset];
        }
        return out;
    }

    bool any_occupied_around(const Vec3<T>& pos) const {
        const Vec3<T> e = bounds_.extent();
        const int n[3] = {res_.nx, res_.ny, res_.nz};
        int lo[3], hi[3];
        for (int a = 0; a < 3; ++a) {
            T u = (pos[a] - bounds_.min[a]) / e[a] * T(n[a]);
            u = std::clamp(u, T(0), T(n[a]));
            int i = std::min(int(u), n[a] - 1);
            lo[a] = hi[a] = i;
            // on (or within rounding of) a cell boundary: include the cell below
            if (i > 0 && u - T(i) < T(1e-9)) lo[a] = i - 1;
        }
        for (int cz = lo[2]; cz <= hi[2]; ++cz)
            for (int cy = lo[1]; cy <= hi[1]; ++cy)
                for (int cx = lo[0]; cx <= hi[0]; ++cx)
                    for (int d = 0; d < 8; ++d)
                        if (occupied(vertex_index(cx + (d & 1), cy + ((d >> 1) & 1), cz + (d >> 2))))
                            return true;
        return false;
    }

    GridRes res_;
    Aabb<T> bounds_;
    std::vector<T> data_;
    std::vector<std::uint8_t> occupancy_;
};

// Binary grid checkpoint ("HVXF"): little-endian header
// [magic u32 'HVXF'][version u32][nx ny nz u32][bounds 6 x f64], then
// kPayloadDim f32 per vertex in x-fastest order, then one occupancy byte per
// vertex.
void save_grid(const std::string& path, const VoxelGrid<float>& grid);
void save_grid(const std::string& path, const VoxelGrid<double>& grid);
VoxelGrid<float> load_grid_f32(const std::string& path);
VoxelGrid<double> load_grid_f64(const std::string& path);

}  // namespace hdrvox
