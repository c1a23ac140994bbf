// Copyright (c) 2026 the hdrvox authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cmath>
#include <stdexcept>

#include "hdrvox/geom.hpp"

namespace hdrvox {

inline constexpr int kShCount = 9;  // real spherical harmonics, bands l = 0..2

template <class T>
using ShValues = std::array<T, kShCount>;

// Band (l) of each of the 9 basis indices: [0], [1..3], [4..8].
inline constexpr int sh_band(int k) { return k == 0 ? 0 : (k < 4 ? 1 : 2); }

// Real spherical harmonics for l <= 2, hard-coded constants, with the
// Condon-Shortley phase folded into the signs (the convention used across
// real-SH lighting code). Index order: (0,0), (1,-1), (1,0), (1,1),
// (2,-2), (2,-1), (2,0), (2,1), (2,2).
//
// `dir` must be unit length within 1e-6.
template <class T>
inline ShValues<T> eval_sh_basis(const Vec3<T>& dir) {
    const T n2 = dir.dot(dir);
    if (std::abs(n2 - T(1)) > T(2.000001e-6))  // |v|^2-1 ~ 2*(|v|-1) near 1
        throw std::invalid_argument("eval_sh_basis: direction must be unit length");

    constexpr T c0 = T(0.28209479177387814);  // 1 / (2 sqrt(pi))
    constexpr T c1 = T(0.4886025119029199);   // sqrt(3) / (2 sqrt(pi))
    constexpr T c2 = T(1.0925484305920792);   // sqrt(15) / (2 sqrt(pi))
    constexpr T c3 = T(0.31539156525252005);  // sqrt(5) / (4 sqrt(pi))
    constexpr T c4 = T(0.5462742152960396);   // sqrt(15) / (4 sqrt(pi))

    const T x = dir.x, y = dir.y, z = dir.z;
    return {c0,
            -c1 * y,
            c1 * z,
            -c1 * x,
            c2 * x * y,
            -c2 * y * z,
            c3 * (T(3) * z * z - T(1)),
            -c2 * x * z,
            c4 * (x * x - y * y)};
}

}  // namespace hdrvox
