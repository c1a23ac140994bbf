// Copyright (c) 2026 the hdrvox authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "hdrvox/camera.hpp"
#include "hdrvox/grid.hpp"
#include "hdrvox/sh.hpp"

namespace hdrvox {

// Point samples along a ray. sigmas/colors are filled by field evaluation;
// sample_points() produces positions and deltas only.
template <class T>
struct RaySamples {
    std::vector<Vec3<T>> positions;
    std::vector<T> deltas;
    std::vector<T> sigmas;
    std::vector<Vec3<T>> colors;

    std::size_t size() const { return positions.size(); }
};

// Uniform sampling at interval midpoints: t_i = t_near + (i + 1/2) * step,
// N = floor((t_far - t_near) / step), every delta equal to step. The trailing
// sub-step remainder of the segment is not sampled.
template <class T>
inline RaySamples<T> sample_points(const Ray<T>& ray, T step) {
    if (!(step > T(0))) throw std::invalid_argument("sample_points: step must be positive");
    RaySamples<T> s;
    if (ray.empty()) return s;
    const T span = ray.t_far - ray.t_near;
    const std::int64_t n = std::int64_t(std::floor(double(span / step)));
    s.positions.reserve(n);
    s.deltas.assign(std::size_t(std::max<std::int64_t>(n, 0)), step);
    for (std::int64_t i = 0; i < n; ++i) {
        const T t = ray.t_near + (T(i) + T(0.5)) * step;
        s.positions.push_back(ray.origin + t * ray.dir);
    }
    s.sigmas.assign(s.positions.size(), T(0));
    s.colors.assign(s.positions.size(), Vec3<T>{});
    return s;
}

template <class T>
struct CompositeResult {
    Vec3<T> color{};             // accumulated radiance
    std::vector<T> weights;      // w_i = T_i * (1 - exp(-sigma_i * delta_i))
    std::vector<T> transmittance;  // T_i before sample i; T_1 = 1
};

// Front-to-back over-compositing. Requires sigmas >= 0 (clamped upstream)
// and deltas > 0. When t_cutoff > 0, marching stops once the running
// transmittance drops below it; remaining weights are zero.
template <class T>
inline CompositeResult<T> composite(const RaySamples<T>& s, T t_cutoff = T(0)) {
    CompositeResult<T> r;
    const std::size_t n = s.size();
    r.weights.assign(n, T(0));
    r.transmittance.assign(n, T(0));
    T trans = T(1);
    for (std::size_t i = 0; i < n; ++i) {
        r.transmittance[i] = trans;
        const T att = std::exp(-s.sigmas[i] * s.deltas[i]);
        const T w = trans * (T(1) - att);
        r.weights[i] = w;
        r.color += w * s.colors[i];
        trans *= att;
        if (t_cutoff > T(0) && trans < t_cutoff) {
            for (std::size_t j = i + 1; j < n; ++j) r.transmittance[j] = trans;
            break;
        }
    }
    return r;
}

template <class T>
struct CompositeGrads {
    std::vector<T> d_sigma;
    std::vector<Vec3<T>> d_color;
};

// Adjoint of composite() against an upstream gradient dL/dC:
//   dC/dc_i     = w_i                                   (per channel)
//   dC/dsigma_i = delta_i (T_i e^{-sigma_i delta_i} c_i - sum_{j>i} w_j c_j)
// Assumes the forward pass ran without cutoff truncation (or that truncated
// samples carry zero weight, which the formulas already honor).
template <class T>
inline CompositeGrads<T> composite_backward(const RaySamples<T>& s, const CompositeResult<T>& fwd,
                                            const Vec3<T>& upstream) {
    const std::size_t n = s.size();
    CompositeGrads<T> g;
    g.d_sigma.assign(n, T(0));
    g.d_color.assign(n, Vec3<T>{});
    Vec3<T> suffix{};  // sum_{j>i} w_j c_j
    for (std::size_t ii = n; ii-- > 0;) {
        g.d_color[ii] = fwd.weights[ii] * upstream;
        const T att = std::exp(-s.sigmas[ii] * s.deltas[ii]);
        const Vec3<T> self = (fwd.transmittance[ii] * att) * s.colors[ii];
        g.d_sigma[ii] = s.deltas[ii] * upstream.dot(self - suffix);
        suffix += fwd.weights[ii] * s.colors[ii];
    }
    return g;
}

// ---------------------------------------------------------------------------
// Fused grid ray marcher. Walks uniform samples, interpolates opacity and
// SH radiance per sample with per-cell corner caching, and optionally records
// everything the backward pass needs. Opacity is clamped at zero after
// interpolation; radiance per channel at zero after the SH dot product.
// ---------------------------------------------------------------------------

template <class T>
struct MarchRecord {
    std::uint16_t ix, iy, iz;   // cell
    std::uint8_t clamp_mask;    // bit ch set => radiance channel was clamped to 0
    Vec3<T> frac;               // fractional position within the cell
    T sigma;                    // interpolated (pre-clamp, recorded only when > 0)
    T att;                      // exp(-sigma * delta)
    T trans;                    // transmittance before this sample
    Vec3<T> color;              // post-clamp radiance
};

template <class T>
struct RayWorkspace {
    std::vector<MarchRecord<T>> records;
    T delta = T(0);
};

namespace detail {

template <class T>
struct CellCtx {
    int ix = -1, iy = -1, iz = -1;
    std::array<std::int64_t, 8> corners{};
    std::array<T, 8> sigma{};        // effective corner sigma (0 when unoccupied)
    std::array<Vec3<T>, 8> dots{};   // per-corner SH radiance dot with the ray basis
    std::uint8_t occ_mask = 0;

    void load(const VoxelGrid<T>& grid, const CellRef& c, const ShValues<T>& basis) {
        ix = c.ix; iy = c.iy; iz = c.iz;
        corners = grid.corner_indices(c);
        occ_mask = 0;
        for (int k = 0; k < 8; ++k) {
            if (!grid.occupied(corners[k])) {
                sigma[k] = T(0);
                dots[k] = Vec3<T>{};
                continue;
            }
            occ_mask |= std::uint8_t(1u << k);
            const T* d = grid.payload_ptr(corners[k]);
            sigma[k] = d[kSigmaOffset];
            for (int ch = 0; ch < 3; ++ch) {
                T acc = 0;
                const T* shc = d + ch * kShCount;
                for (int q = 0; q < kShCount; ++q) acc += shc[q] * basis[q];
                dots[k][ch] = acc;
            }
        }
    }
};

}  // namespace detail

// Forward march of one ray. Returns the composited HDR radiance; when `ws`
// is non-null, fills it with the per-sample records for march_ray_backward.
template <class T>
inline Vec3<T> march_ray(const VoxelGrid<T>& grid, const Ray<T>& ray, const ShValues<T>& basis,
                         T step, T t_cutoff, RayWorkspace<T>* ws) {
    Vec3<T> out{};
    if (ws) {
        ws->records.clear();
        ws->delta = step;
    }
    if (ray.empty()) return out;

    const T span = ray.t_far - ray.t_near;
    const std::int64_t n = std::int64_t(std::floor(double(span / step)));
    if (n <= 0) return out;

    detail::CellCtx<T> cell;
    const T offset = grid.color_offset;
    T trans = T(1);
    for (std::int64_t i = 0; i < n; ++i) {
        const T t = ray.t_near + (T(i) + T(0.5)) * step;
        const Vec3<T> p = ray.origin + t * ray.dir;
        Vec3<T> frac;
        const CellRef c = grid.locate_clamped(p, frac);
        if (c.ix != cell.ix || c.iy != cell.iy || c.iz != cell.iz) {
            cell.load(grid, c, basis);
            if (cell.occ_mask == 0) {
                // fast-forward through the empty cell
                continue;
            }
        } else if (cell.occ_mask == 0) {
            continue;
        }

        const auto w = VoxelGrid<T>::corner_weights(frac);
        T sigma = 0;
        for (int k = 0; k < 8; ++k) sigma += w[k] * cell.sigma[k];
        if (!(sigma > T(0))) continue;  // zero contribution; clamp blocks the gradient

        Vec3<T> color;
        std::uint8_t clamp_mask = 0;
        for (int ch = 0; ch < 3; ++ch) {
            T v = offset;
            for (int k = 0; k < 8; ++k) v += w[k] * cell.dots[k][ch];
            if (v > T(0)) {
                color[ch] = v;
            } else {
                color[ch] = T(0);
                clamp_mask |= std::uint8_t(1u << ch);
            }
        }

        const T att = std::exp(-sigma * step);
        const T wgt = trans * (T(1) - att);
        out += wgt * color;

        if (ws) {
            MarchRecord<T> rec;
            rec.ix = std::uint16_t(c.ix);
            rec.iy = std::uint16_t(c.iy);
            rec.iz = std::uint16_t(c.iz);
            rec.clamp_mask = clamp_mask;
            rec.frac = frac;
            rec.sigma = sigma;
            rec.att = att;
            rec.trans = trans;
            rec.color = color;
            ws->records.push_back(rec);
        }

        trans *= att;
        if (t_cutoff > T(0) && trans < t_cutoff) break;
    }
    return out;
}

// Destination for per-vertex payload gradients scattered by the backward
// march. `grad` is a dense (vertex_count * kPayloadDim) buffer; `touch` is
// called once per newly dirtied vertex.
template <class T, class TouchFn>
struct PayloadGradSink {
    T* grad;
    std::uint8_t* dirty;
    TouchFn touch;

    void add(std::int64_t vertex, int slot, T value) {
        if (!dirty[vertex]) {
            dirty[vertex] = 1;
            touch(vertex);
        }
        grad[vertex * kPayloadDim + slot] += value;
    }
};

// Backward pass over the records produced by march_ray. Scatters
// dL/d(payload) into `sink`, coalescing per cell: SH gradients factor as
// (per-corner accumulated color adjoint) x (ray basis).
template <class T, class Sink>
inline void march_ray_backward(const VoxelGrid<T>& grid, const RayWorkspace<T>& ws,
                               const ShValues<T>& basis, const Vec3<T>& upstream, Sink& sink) {
    const auto& recs = ws.records;
    if (recs.empty()) return;
    const T delta = ws.delta;

    int cur_ix = -1, cur_iy = -1, cur_iz = -1;
    std::array<std::int64_t, 8> corners{};
    std::uint8_t occ = 0;
    std::array<Vec3<T>, 8> s_color{};  // per-corner accumulated color adjoint
    std::array<T, 8> s_sigma{};

    auto flush = [&]() {
        if (cur_ix < 0) return;
        for (int k = 0; k < 8; ++k) {
            if (!(occ & (1u << k))) continue;
            const std::int64_t v = corners[k];
            if (s_sigma[k] != T(0)) sink.add(v, kSigmaOffset, s_sigma[k]);
            for (int ch = 0; ch < 3; ++ch) {
                const T s = s_color[k][ch];
                if (s == T(0)) continue;
                for (int q = 0; q < kShCount; ++q)
                    sink.add(v, ch * kShCount + q, s * basis[q]);
            }
            s_color[k] = Vec3<T>{};
            s_sigma[k] = T(0);
        }
    };

    Vec3<T> suffix{};  // sum over later samples of w_j * c_j
    for (std::size_t ii = recs.size(); ii-- > 0;) {
        const MarchRecord<T>& r = recs[ii];
        if (int(r.ix) != cur_ix || int(r.iy) != cur_iy || int(r.iz) != cur_iz) {
            flush();
            cur_ix = r.ix; cur_iy = r.iy; cur_iz = r.iz;
            CellRef c{cur_ix, cur_iy, cur_iz};
            corners = grid.corner_indices(c);
            occ = 0;
            for (int k = 0; k < 8; ++k)
                if (grid.occupied(corners[k])) occ |= std::uint8_t(1u << k);
        }

        const T w_i = r.trans * (T(1) - r.att);
        const Vec3<T> self = (r.trans * r.att) * r.color;
        const T d_sigma = delta * upstream.dot(self - suffix);
        suffix += w_i * r.color;

        Vec3<T> d_color;
        for (int ch = 0; ch < 3; ++ch)
            d_color[ch] = (r.clamp_mask & (1u << ch)) ? T(0) : w_i * upstream[ch];

        const auto w = VoxelGrid<T>::corner_weights(r.frac);
        for (int k = 0; k < 8; ++k) {
            s_sigma[k] += w[k] * d_sigma;
            s_color[k] += w[k] * d_color;
        }
    }
    flush();
}

// Renders the listed pixels (or the full raster when `pixels` is empty) to
// linear HDR radiance. Deterministic given its inputs; rays that miss the
// grid return black.
template <class T>
inline std::vector<Vec3<T>> render_hdr(const VoxelGrid<T>& grid, const Camera<T>& cam,
                                       const std::vector<std::pair<int, int>>& pixels, T step,
                                       T t_cutoff = T(1e-5)) {
    cam.validate();
    std::vector<Vec3<T>> out;
    auto render_one = [&](int px, int py) {
        const Ray<T> ray = generate_ray(cam, T(px), T(py), grid.bounds());
        if (ray.empty()) return Vec3<T>{};
        const ShValues<T> basis = eval_sh_basis(ray.dir);
        return march_ray<T>(grid, ray, basis, step, t_cutoff, nullptr);
    };
    if (!pixels.empty()) {
        out.reserve(pixels.size());
        for (const auto& [px, py] : pixels) out.push_back(render_one(px, py));
    } else {
        out.reserve(std::size_t(cam.width) * cam.height);
        for (int py = 0; py < cam.height; ++py)
            for (int px = 0; px < cam.width; ++px) out.push_back(render_one(px, py));
    }
    return out;
}

// Default marching step for a grid: half the smallest voxel edge.
template <class T>
inline T default_step(const VoxelGrid<T>& grid) {
    return T(0.5) * grid.min_voxel_edge();
}

}  // namespace hdrvox
