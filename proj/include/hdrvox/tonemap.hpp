// Copyright (c) 2026 the hdrvox authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <stdexcept>

#include "hdrvox/geom.hpp"

namespace hdrvox {

inline constexpr int kCrfSize = 256;  // control points over [0,1], knots at k/255

template <class T>
using CrfTable = std::array<T, kCrfSize>;

// crf[k] = k / 255; endpoints 0 and 1 as required of any response curve.
template <class T>
inline CrfTable<T> init_crf_identity() {
    CrfTable<T> t;
    for (int k = 0; k < kCrfSize; ++k) t[k] = T(k) / T(kCrfSize - 1);
    return t;
}

// Per-view radiometric state: white-balance gains (which also absorb
// exposure as a global scale), one response curve per color channel, and the
// leak coefficient used outside [0,1]. `wb_frozen` marks the reference view,
// whose gains are pinned for the whole optimization.
template <class T>
struct ToneMapParams {
    Vec3<T> wb{T(1), T(1), T(1)};
    std::array<CrfTable<T>, 3> crf{init_crf_identity<T>(), init_crf_identity<T>(),
                                   init_crf_identity<T>()};
    T alpha = T(0.01);
    bool wb_frozen = false;

    void validate() const {
        if (!(wb.x > T(0) && wb.y > T(0) && wb.z > T(0)))
            throw std::invalid_argument("ToneMapParams: white balance must be positive");
        if (!(alpha > T(0)))
            throw std::invalid_argument("ToneMapParams: alpha must be positive");
        for (const auto& t : crf)
            if (t.front() != T(0) || t.back() != T(1))
                throw std::invalid_argument("ToneMapParams: CRF endpoints must be 0 and 1");
    }

    template <class U>
    ToneMapParams<U> cast() const {
        ToneMapParams<U> p;
        p.wb = wb.template cast<U>();
        for (int ch = 0; ch < 3; ++ch)
            for (int k = 0; k < kCrfSize; ++k) p.crf[ch][k] = U(crf[ch][k]);
        p.alpha = U(alpha);
        p.wb_frozen = wb_frozen;
        return p;
    }
};

template <class T>
inline Vec3<T> apply_white_balance(const Vec3<T>& c, const Vec3<T>& wb) {
    if (!(wb.x > T(0) && wb.y > T(0) && wb.z > T(0)))
        throw std::invalid_argument("apply_white_balance: gains must be positive");
    return c.cwise(wb);
}

// Piecewise-linear response with leaky extension:
//   x < 0:       alpha * x
//   0 <= x <= 1: linear interpolation of the control points
//   x > 1:       -alpha / sqrt(x) + alpha + 1
// Continuous on all of R for any table with pinned endpoints.
template <class T>
inline T eval_crf(T x, const CrfTable<T>& table, T alpha) {
    if (x < T(0)) return alpha * x;
    if (x > T(1)) return -alpha / std::sqrt(x) + alpha + T(1);
    const T u = x * T(kCrfSize - 1);
    int k = int(u);
    if (k > kCrfSize - 2) k = kCrfSize - 2;
    const T f = u - T(k);
    return (T(1) - f) * table[k] + f * table[k + 1];
}

// Gradient bookkeeping for one eval_crf call. In the leak branches the
// control points receive no gradient (knot = -1).
template <class T>
struct CrfEval {
    T value;
    T dx;       // d value / d x
    int knot;   // lower bracketing knot, or -1 in a leak branch
    T frac;     // weight of knot+1
};

template <class T>
inline CrfEval<T> eval_crf_grad(T x, const CrfTable<T>& table, T alpha) {
    CrfEval<T> e;
    if (x < T(0)) {
        e.value = alpha * x;
        e.dx = alpha;
        e.knot = -1;
        e.frac = T(0);
        return e;
    }
    if (x > T(1)) {
        const T inv_sqrt = T(1) / std::sqrt(x);
        e.value = -alpha * inv_sqrt + alpha + T(1);
        e.dx = T(0.5) * alpha * inv_sqrt / x;   // alpha / (2 x^{3/2})
        e.knot = -1;
        e.frac = T(0);
        return e;
    }
    const T u = x * T(kCrfSize - 1);
    int k = int(u);
    if (k > kCrfSize - 2) k = kCrfSize - 2;
    const T f = u - T(k);
    e.value = (T(1) - f) * table[k] + f * table[k + 1];
    e.dx = (table[k + 1] - table[k]) * T(kCrfSize - 1);
    e.knot = k;
    e.frac = f;
    return e;
}

// I_l = g(w(I_h)): white balance then per-channel response.
template <class T>
inline Vec3<T> tonemap(const Vec3<T>& hdr, const ToneMapParams<T>& params) {
    const Vec3<T> w = apply_white_balance(hdr, params.wb);
    return {eval_crf(w.x, params.crf[0], params.alpha),
            eval_crf(w.y, params.crf[1], params.alpha),
            eval_crf(w.z, params.crf[2], params.alpha)};
}

template <class T>
struct ToneMapGrads {
    Vec3<T> d_hdr{};
    Vec3<T> d_wb{};
    // per channel: gradients routed to the two bracketing control points.
    std::array<int, 3> knot{-1, -1, -1};
    std::array<T, 3> d_knot_lo{};
    std::array<T, 3> d_knot_hi{};
};

template <class T>
inline ToneMapGrads<T> tonemap_backward(const Vec3<T>& hdr, const ToneMapParams<T>& params,
                                        const Vec3<T>& upstream) {
    ToneMapGrads<T> g;
    for (int ch = 0; ch < 3; ++ch) {
        const T x = hdr[ch] * params.wb[ch];
        const CrfEval<T> e = eval_crf_grad(x, params.crf[ch], params.alpha);
        const T up = upstream[ch];
        g.d_hdr[ch] = up * e.dx * params.wb[ch];
        g.d_wb[ch] = up * e.dx * hdr[ch];
        g.knot[ch] = e.knot;
        if (e.knot >= 0) {
            g.d_knot_lo[ch] = up * (T(1) - e.frac);
            g.d_knot_hi[ch] = up * e.frac;
        }
    }
    return g;
}

// Returns a copy with white balance scaled (and/or replaced) and the response
// curves optionally swapped in; the editing surface for controllable
// re-rendering of exposure, white balance, and rendering style.
template <class T>
inline ToneMapParams<T> edit_render(const ToneMapParams<T>& params,
                                    const std::optional<Vec3<T>>& wb_override,
                                    std::optional<T> exposure_scale,
                                    const std::optional<std::array<CrfTable<T>, 3>>& crf_override) {
    ToneMapParams<T> out = params;
    if (wb_override) {
        if (!(wb_override->x > T(0) && wb_override->y > T(0) && wb_override->z > T(0)))
            throw std::invalid_argument("edit_render: wb override must be positive");
        out.wb = *wb_override;
    }
    if (exposure_scale) {
        if (!(*exposure_scale > T(0)))
            throw std::invalid_argument("edit_render: exposure scale must be positive");
        out.wb *= *exposure_scale;
    }
    if (crf_override) out.crf = *crf_override;
    return out;
}

}  // namespace hdrvox
