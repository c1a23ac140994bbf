// Copyright (c) 2026 the hdrvox authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>

#include "hdrvox/geom.hpp"

namespace hdrvox {

// Pinhole camera. The camera frame looks down +z, +x right, +y down
// (image rows grow downward); `rotation`/`translation` map camera to world.
// Pixel (px, py) is sampled at its center (px + 0.5, py + 0.5).
template <class T>
struct Camera {
    T fx = 0, fy = 0, cx = 0, cy = 0;
    int width = 0, height = 0;
    Mat3<T> rotation;      // camera-to-world
    Vec3<T> translation;   // camera center in world space

    void validate() const {
        if (fx <= T(0) || fy <= T(0))
            throw std::invalid_argument("Camera: focal lengths must be positive");
        if (width <= 0 || height <= 0)
            throw std::invalid_argument("Camera: image size must be positive");
        if (cx < T(0) || cx >= T(width) || cy < T(0) || cy >= T(height))
            throw std::invalid_argument("Camera: principal point outside image");
        if (rotation.orthonormality_error() > T(1e-9) || std::abs(rotation.det() - T(1)) > T(1e-9))
            throw std::invalid_argument("Camera: rotation is not a proper rotation");
    }

    // World direction through the pixel center (unnormalized z=1 camera ray).
    Vec3<T> pixel_dir(T px, T py) const {
        const Vec3<T> d_cam{(px + T(0.5) - cx) / fx, (py + T(0.5) - cy) / fy, T(1)};
        return (rotation * d_cam).normalized();
    }

    // Projects a world point to continuous pixel coordinates (the pixel-center
    // convention: the ray of pixel (px,py) projects to (px+0.5, py+0.5)).
    // Returns false when the point is behind the camera.
    bool project(const Vec3<T>& p_world, T& u, T& v) const {
        const Vec3<T> p = rotation.t_mul(p_world - translation);
        if (p.z <= T(0)) return false;
        u = fx * p.x / p.z + cx;
        v = fy * p.y / p.z + cy;
        return true;
    }

    template <class U>
    Camera<U> cast() const {
        Camera<U> c;
        c.fx = U(fx); c.fy = U(fy); c.cx = U(cx); c.cy = U(cy);
        c.width = width; c.height = height;
        c.rotation = rotation.template cast<U>();
        c.translation = translation.template cast<U>();
        return c;
    }
};

using Camerad = Camera<double>;

// Camera ray clipped against a bounding box; t_near == t_far encodes an
// empty intersection.
template <class T>
struct Ray {
    Vec3<T> origin;
    Vec3<T> dir;  // unit
    T t_near = 0, t_far = 0;

    bool empty() const { return !(t_near < t_far); }
};

template <class T>
inline Ray<T> generate_ray(const Camera<T>& cam, T px, T py, const Aabb<T>& bounds) {
    Ray<T> r;
    r.origin = cam.translation;
    r.dir = cam.pixel_dir(px, py);
    intersect_aabb(r.origin, r.dir, bounds, r.t_near, r.t_far);
    return r;
}

// Builds a camera at `eye` looking at `target` (world up hint `up`), with the
// image +y axis pointing against `up` so scenes appear upright.
template <class T>
inline Camera<T> look_at_camera(const Vec3<T>& eye, const Vec3<T>& target, const Vec3<T>& up,
                                T fx, T fy, int width, int height) {
    Camera<T> c;
    c.fx = fx; c.fy = fy;
    c.width = width; c.height = height;
    c.cx = T(width) / T(2);
    c.cy = T(height) / T(2);
    const Vec3<T> fwd = (target - eye).normalized();            // camera +z
    const Vec3<T> right = fwd.cross(up).normalized();           // camera +x
    const Vec3<T> down = fwd.cross(right);                      // camera +y (image down)
    for (int i = 0; i < 3; ++i) {
        c.rotation(i, 0) = right[i];
        c.rotation(i, 1) = down[i];
        c.rotation(i, 2) = fwd[i];
    }
    c.translation = eye;
    return c;
}

}  // namespace hdrvox
