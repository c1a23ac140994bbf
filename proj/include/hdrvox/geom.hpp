// Copyright (c) 2026 the hdrvox authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>

namespace hdrvox {

template <class T>
struct Vec3 {
    T x{}, y{}, z{};

    constexpr Vec3() = default;
    constexpr Vec3(T x_, T y_, T z_) : x(x_), y(y_), z(z_) {}
    constexpr explicit Vec3(T v) : x(v), y(v), z(v) {}

    constexpr T operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }
    T& operator[](int i) { return i == 0 ? x : (i == 1 ? y : z); }

    constexpr Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    constexpr Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    constexpr Vec3 operator*(T s) const { return {x * s, y * s, z * s}; }
    constexpr Vec3 operator/(T s) const { return {x / s, y / s, z / s}; }
    constexpr Vec3 operator-() const { return {-x, -y, -z}; }
    Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }
    Vec3& operator-=(const Vec3& o) { x -= o.x; y -= o.y; z -= o.z; return *this; }
    Vec3& operator*=(T s) { x *= s; y *= s; z *= s; return *this; }
    constexpr bool operator==(const Vec3& o) const { return x == o.x && y == o.y && z == o.z; }

    // componentwise product
    constexpr Vec3 cwise(const Vec3& o) const { return {x * o.x, y * o.y, z * o.z}; }

    constexpr T dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
    constexpr Vec3 cross(const Vec3& o) const {
        return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
    }
    T norm() const { return std::sqrt(dot(*this)); }
    Vec3 normalized() const { return *this / norm(); }

    template <class U>
    constexpr Vec3<U> cast() const { return {static_cast<U>(x), static_cast<U>(y), static_cast<U>(z)}; }
};

template <class T>
constexpr Vec3<T> operator*(T s, const Vec3<T>& v) { return v * s; }

using Vec3f = Vec3<float>;
using Vec3d = Vec3<double>;

// Column-major-free 3x3 matrix stored row-major; used for camera rotations.
template <class T>
struct Mat3 {
    std::array<T, 9> m{1, 0, 0, 0, 1, 0, 0, 0, 1};

    static constexpr Mat3 identity() { return Mat3{}; }

    constexpr T operator()(int r, int c) const { return m[3 * r + c]; }
    T& operator()(int r, int c) { return m[3 * r + c]; }

    constexpr Vec3<T> operator*(const Vec3<T>& v) const {
        return {m[0] * v.x + m[1] * v.y + m[2] * v.z,
                m[3] * v.x + m[4] * v.y + m[5] * v.z,
                m[6] * v.x + m[7] * v.y + m[8] * v.z};
    }

    constexpr Mat3 operator*(const Mat3& o) const {
        Mat3 r;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                T s = 0;
                for (int k = 0; k < 3; ++k) s += (*this)(i, k) * o(k, j);
                r(i, j) = s;
            }
        return r;
    }

    constexpr Mat3 transposed() const {
        Mat3 r;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) r(i, j) = (*this)(j, i);
        return r;
    }

    // Multiply by transpose: R^T * v (world-to-camera for a rotation).
    constexpr Vec3<T> t_mul(const Vec3<T>& v) const {
        return {m[0] * v.x + m[3] * v.y + m[6] * v.z,
                m[1] * v.x + m[4] * v.y + m[7] * v.z,
                m[2] * v.x + m[5] * v.y + m[8] * v.z};
    }

    T det() const {
        return m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6]) +
               m[2] * (m[3] * m[7] - m[4] * m[6]);
    }

    // max |(R^T R - I)_ij|
    T orthonormality_error() const {
        Mat3 g = transposed() * (*this);
        T e = 0;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                e = std::max(e, std::abs(g(i, j) - (i == j ? T(1) : T(0))));
        return e;
    }

    template <class U>
    Mat3<U> cast() const {
        Mat3<U> r;
        for (int i = 0; i < 9; ++i) r.m[i] = static_cast<U>(m[i]);
        return r;
    }
};

using Mat3f = Mat3<float>;
using Mat3d = Mat3<double>;

template <class T>
struct Aabb {
    Vec3<T> min{}, max{};

    constexpr Vec3<T> extent() const { return max - min; }
    constexpr bool contains(const Vec3<T>& p) const {
        return p.x >= min.x && p.x <= max.x && p.y >= min.y && p.y <= max.y && p.z >= min.z &&
               p.z <= max.z;
    }
    constexpr bool valid() const { return min.x < max.x && min.y < max.y && min.z < max.z; }

    template <class U>
    constexpr Aabb<U> cast() const { return {min.template cast<U>(), max.template cast<U>()}; }
};

using Aabbf = Aabb<float>;
using Aabbd = Aabb<double>;

// Slab intersection of a ray with an axis-aligned box, restricted to t >= 0.
// Returns false when the intersection is empty; t_near/t_far are then left at 0.
template <class T>
inline bool intersect_aabb(const Vec3<T>& origin, const Vec3<T>& dir, const Aabb<T>& box,
                           T& t_near, T& t_far) {
    T t0 = 0;
    T t1 = std::numeric_limits<T>::infinity();
    for (int a = 0; a < 3; ++a) {
        const T o = origin[a], d = dir[a];
        if (d == T(0)) {
            if (o < box.min[a] || o > box.max[a]) { t_near = t_far = 0; return false; }
            continue;
        }
        const T inv = T(1) / d;
        T ta = (box.min[a] - o) * inv;
        T tb = (box.max[a] - o) * inv;
        if (ta > tb) std::swap(ta, tb);
        t0 = std::max(t0, ta);
        t1 = std::min(t1, tb);
    }
    if (t0 >= t1) { t_near = t_far = 0; return false; }
    t_near = t0;
    t_far = t1;
    return true;
}

}  // namespace hdrvox
