// Copyright (c) 2026 the hdrvox authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "hdrvox/grid.hpp"
#include "hdrvox/tonemap.hpp"

namespace hdrvox {

struct LossWeights {
    double lambda_tv_sigma = 5e-4;
    double lambda_tv_sh = 1e-2;
    double lambda_smooth = 1e-3;
    double tv_epsilon = 1e-6;
    double mask_low = 0.15;
    double mask_high = 0.9;

    void validate() const {
        if (lambda_tv_sigma < 0 || lambda_tv_sh < 0 || lambda_smooth < 0 || tv_epsilon < 0)
            throw std::invalid_argument("LossWeights: weights must be nonnegative");
        if (!(0 < mask_low && mask_low < mask_high && mask_high < 1))
            throw std::invalid_argument("LossWeights: need 0 < low < high < 1");
    }
};

// Leaky saturation mask: 1 inside [low, high], quadratic falloff to 0.25 at
// the range ends. The upper branch mirrors the lower one so the mask is
// continuous at x = high and symmetric under x -> 1-x (with low/high roles
// swapped). Input is clamped into [0,1].
template <class T>
inline T saturation_mask(T x, T low, T high) {
    x = std::clamp(x, T(0), T(1));
    if (x < low) {
        const T r = (x + low) / (T(2) * low);
        return r * r;
    }
    if (x > high) {
        const T r = ((T(1) - x) + (T(1) - high)) / (T(2) * (T(1) - high));
        return r * r;
    }
    return T(1);
}

// Mask of an RGB pixel: product of the per-channel masks, so saturation in
// any channel attenuates the sample.
template <class T>
inline T saturation_mask_rgb(const Vec3<T>& pixel, T low, T high) {
    return saturation_mask(pixel.x, low, high) * saturation_mask(pixel.y, low, high) *
           saturation_mask(pixel.z, low, high);
}

enum class TvChannels { Sigma, Sh };

// Total variation over the grid's stored payloads:
//   (1/|V|) sum_{v,d} sqrt(dx^2 + dy^2 + dz^2 + eps)
// with forward differences along +x/+y/+z (zero at the far boundaries) and d
// over the selected channel set (1 channel for sigma, 27 for SH).
template <class T>
inline double tv_loss(const VoxelGrid<T>& grid, TvChannels channels, double eps) {
    const GridRes r = grid.res();
    if (r.nx < 1 || r.ny < 1 || r.nz < 1)
        throw std::invalid_argument("tv_loss: grid too small");
    const int d_lo = channels == TvChannels::Sigma ? kSigmaOffset : 0;
    const int d_hi = channels == TvChannels::Sigma ? kPayloadDim : 27;

    double total = 0.0;
    for (int iz = 0; iz <= r.nz; ++iz)
        for (int iy = 0; iy <= r.ny; ++iy)
            for (int ix = 0; ix <= r.nx; ++ix) {
                const std::int64_t v = grid.vertex_index(ix, iy, iz);
                const T* p = grid.payload_ptr(v);
                const T* px = ix < r.nx ? grid.payload_ptr(grid.vertex_index(ix + 1, iy, iz)) : nullptr;
                const T* py = iy < r.ny ? grid.payload_ptr(grid.vertex_index(ix, iy + 1, iz)) : nullptr;
                const T* pz = iz < r.nz ? grid.payload_ptr(grid.vertex_index(ix, iy, iz + 1)) : nullptr;
                for (int d = d_lo; d < d_hi; ++d) {
                    const double dx = px ? double(px[d]) - double(p[d]) : 0.0;
                    const double dy = py ? double(py[d]) - double(p[d]) : 0.0;
                    const double dz = pz ? double(pz[d]) - double(p[d]) : 0.0;
                    total += std::sqrt(dx * dx + dy * dy + dz * dz + eps);
                }
            }
    return total / double(grid.vertex_count());
}

// Accumulates coeff * d(tv_loss)/d(payload) into the sink
// (sink.add(vertex, slot, value)).
template <class T, class Sink>
inline void tv_backward(const VoxelGrid<T>& grid, TvChannels channels, double eps, T coeff,
                        Sink& sink) {
    const GridRes r = grid.res();
    const int d_lo = channels == TvChannels::Sigma ? kSigmaOffset : 0;
    const int d_hi = channels == TvChannels::Sigma ? kPayloadDim : 27;
    const double inv_count = 1.0 / double(grid.vertex_count());

    for (int iz = 0; iz <= r.nz; ++iz)
        for (int iy = 0; iy <= r.ny; ++iy)
            for (int ix = 0; ix <= r.nx; ++ix) {
                const std::int64_t v = grid.vertex_index(ix, iy, iz);
                const std::int64_t vx = ix < r.nx ? grid.vertex_index(ix + 1, iy, iz) : -1;
                const std::int64_t vy = iy < r.ny ? grid.vertex_index(ix, iy + 1, iz) : -1;
                const std::int64_t vz = iz < r.nz ? grid.vertex_index(ix, iy, iz + 1) : -1;
                const T* p = grid.payload_ptr(v);
                for (int d = d_lo; d < d_hi; ++d) {
                    const double dx = vx >= 0 ? double(grid.payload_ptr(vx)[d]) - double(p[d]) : 0.0;
                    const double dy = vy >= 0 ? double(grid.payload_ptr(vy)[d]) - double(p[d]) : 0.0;
                    const double dz = vz >= 0 ? double(grid.payload_ptr(vz)[d]) - double(p[d]) : 0.0;
                    const double inv = 1.0 / std::sqrt(dx * dx + dy * dy + dz * dz + eps);
                    const double s = double(coeff) * inv_count * inv;
                    if (vx >= 0) sink.add(vx, d, T(s * dx));
                    if (vy >= 0) sink.add(vy, d, T(s * dy));
                    if (vz >= 0) sink.add(vz, d, T(s * dz));
                    const double self = -s * (dx + dy + dz);
                    if (self != 0.0) sink.add(v, d, T(self));
                }
            }
}

// Sum of squared second differences of the control points over interior
// knots, all channels of all supplied tables. Zero for any affine curve.
template <class T>
inline double smooth_loss(const std::vector<ToneMapParams<T>>& views) {
    double total = 0.0;
    for (const auto& view : views)
        for (const auto& table : view.crf)
            for (int k = 1; k + 1 < kCrfSize; ++k) {
                const double d2 =
                    double(table[k + 1]) - 2.0 * double(table[k]) + double(table[k - 1]);
                total += d2 * d2;
            }
    return total;
}

// Accumulates coeff * d(smooth_loss)/d(knot) into grads[view][ch * 256 + k].
template <class T>
inline void smooth_backward(const std::vector<ToneMapParams<T>>& views, T coeff,
                            std::vector<std::array<T, 3 * kCrfSize>>& grads) {
    for (std::size_t i = 0; i < views.size(); ++i)
        for (int ch = 0; ch < 3; ++ch) {
            const auto& table = views[i].crf[ch];
            auto* g = grads[i].data() + ch * kCrfSize;
            for (int k = 1; k + 1 < kCrfSize; ++k) {
                const T d2 = table[k + 1] - T(2) * table[k] + table[k - 1];
                const T s = T(2) * coeff * d2;
                g[k + 1] += s;
                g[k] -= T(2) * s;
                g[k - 1] += s;
            }
        }
}

// L = recon + l_tv_sigma * tv_sigma + l_tv_sh * tv_sh + l_smooth * smooth.
// Throws on non-finite components so training aborts with a diagnostic.
inline double total_loss(double recon, double tv_sigma, double tv_sh, double smooth,
                         const LossWeights& w) {
    auto check = [](double v, const char* name) {
        if (!std::isfinite(v))
            throw std::runtime_error(std::string("total_loss: non-finite component ") + name);
    };
    check(recon, "recon");
    check(tv_sigma, "tv_sigma");
    check(tv_sh, "tv_sh");
    check(smooth, "smooth");
    return recon + w.lambda_tv_sigma * tv_sigma + w.lambda_tv_sh * tv_sh +
           w.lambda_smooth * smooth;
}

}  // namespace hdrvox
