// Copyright (c) 2026 the hdrvox authors.
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>

#include "hdrvox/oracle.hpp"
#include "hdrvox/render.hpp"
#include "hdrvox/util.hpp"

using namespace hdrvox;

namespace {

Camerad test_camera(int w = 16, int h = 12) {
    return look_at_camera<double>({0, 0, -3}, {0, 0, 0}, {0, 1, 0}, 20.0, 20.0, w, h);
}

// direct evaluation of the compositing sum, written independently of the
// production loop: C = sum_i exp(-sum_{j<i} s_j d_j) (1 - exp(-s_i d_i)) c_i
Vec3d composite_by_direct_sum(const RaySamples<double>& s) {
    Vec3d total{};
    for (std::size_t i = 0; i < s.size(); ++i) {
        double depth = 0.0;
        for (std::size_t j = 0; j < i; ++j) depth += s.sigmas[j] * s.deltas[j];
        const double ti = std::exp(-depth);
        const double a = 1.0 - std::exp(-s.sigmas[i] * s.deltas[i]);
        total += (ti * a) * s.colors[i];
    }
    return total;
}

RaySamples<double> random_samples(Rng& rng, int n) {
    RaySamples<double> s;
    for (int i = 0; i < n; ++i) {
        s.positions.push_back({0, 0, double(i)});
        s.deltas.push_back(rng.uniform(0.05, 0.5));
        s.sigmas.push_back(rng.uniform(0.0, 2.0));
        s.colors.push_back({rng.uniform(0, 2), rng.uniform(0, 2), rng.uniform(0, 2)});
    }
    return s;
}

}  // namespace

TEST_CASE("generate_ray: optical axis, projection round trip, slab oracle") {
    Camerad cam = test_camera();
    cam.cx = 8.0;
    cam.cy = 6.0;
    cam.rotation = Mat3d::identity();
    cam.translation = {0, 0, -3};
    const Aabbd box{{-1, -1, -1}, {1, 1, 1}};

    // principal point: straight down +z (pixel center convention: cx-0.5)
    const Ray<double> axis = generate_ray(cam, 7.5, 5.5, box);
    CHECK(axis.dir.x == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(axis.dir.y == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(axis.dir.z == doctest::Approx(1.0).epsilon(1e-12));

    // any pixel projects back to its own center at any point along the ray
    Rng rng(7);
    for (int i = 0; i < 50; ++i) {
        const double px = rng.uniform(0, 15), py = rng.uniform(0, 11);
        const Ray<double> r = generate_ray(cam, px, py, box);
        const double t = rng.uniform(0.5, 5.0);
        double u, v;
        REQUIRE(cam.project(r.origin + t * r.dir, u, v));
        CHECK(u == doctest::Approx(px + 0.5).epsilon(1e-9));
        CHECK(v == doctest::Approx(py + 0.5).epsilon(1e-9));
    }

    // slab-method hand computation for a +z ray from outside the unit box
    const Ray<double> r = generate_ray(cam, 7.5, 5.5, box);
    CHECK(r.t_near == doctest::Approx(2.0).epsilon(1e-12));  // z=-3 to z=-1
    CHECK(r.t_far == doctest::Approx(4.0).epsilon(1e-12));

    // a ray that misses yields an empty interval
    Camerad side = cam;
    side.translation = {10, 0, -3};
    const Ray<double> miss = generate_ray(side, 7.5, 5.5, box);
    CHECK(miss.empty());
    CHECK(miss.t_near == miss.t_far);
}

TEST_CASE("camera: validation catches bad rotations and intrinsics") {
    Camerad cam = test_camera();
    CHECK_NOTHROW(cam.validate());
    Camerad bad = cam;
    bad.fx = -1;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = cam;
    bad.rotation(0, 0) = 1.5;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = cam;
    bad.cx = double(cam.width) + 1;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("sample_points: midpoint spacing and empty segments") {
    Ray<double> ray;
    ray.origin = {0, 0, 0};
    ray.dir = {0, 0, 1};
    ray.t_near = 0.0;
    ray.t_far = 1.0;
    const auto s = sample_points(ray, 0.25);
    REQUIRE(s.size() == 4);
    for (int i = 0; i < 4; ++i) {
        CHECK(s.positions[i].z == doctest::Approx(0.125 + 0.25 * i).epsilon(1e-12));
        CHECK(s.deltas[i] == 0.25);
    }

    Ray<double> empty;
    empty.origin = {0, 0, 0};
    empty.dir = {0, 0, 1};
    empty.t_near = empty.t_far = 0.0;
    CHECK(sample_points(empty, 0.25).size() == 0);
    const auto none = composite(sample_points(empty, 0.25));
    CHECK(none.color.x == 0.0);

    CHECK_THROWS_AS(sample_points(ray, 0.0), std::invalid_argument);
}

TEST_CASE("composite: hand values") {
    // single transparent sample
    RaySamples<double> s;
    s.positions = {{0, 0, 0}};
    s.deltas = {1.0};
    s.sigmas = {0.0};
    s.colors = {{1, 1, 1}};
    auto r = composite(s);
    CHECK(r.color.x == 0.0);
    CHECK(r.weights[0] == 0.0);
    CHECK(r.transmittance[0] == 1.0);

    // sigma*delta = ln 2 absorbs half
    s.sigmas = {std::log(2.0)};
    r = composite(s);
    CHECK(r.color.x == doctest::Approx(0.5).epsilon(1e-12));

    // two samples, w = (0.5, 0.25)
    s.positions.push_back({0, 0, 1});
    s.deltas = {1.0, 1.0};
    s.sigmas = {std::log(2.0), std::log(2.0)};
    s.colors = {{1, 0, 0}, {0, 1, 0}};
    r = composite(s);
    CHECK(r.weights[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(r.weights[1] == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(r.color.x == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(r.color.y == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(r.color.z == 0.0);
}

TEST_CASE("composite: 1000 random rays match direct summation within 1e-12") {
    Rng rng(101);
    for (int trial = 0; trial < 1000; ++trial) {
        const int n = 1 + int(rng.below(8));
        const auto s = random_samples(rng, n);
        const auto r = composite(s);
        const Vec3d direct = composite_by_direct_sum(s);
        for (int c = 0; c < 3; ++c) CHECK(std::abs(r.color[c] - direct[c]) < 1e-12);

        // transmittance nonincreasing from 1; weights sum below 1
        double wsum = 0.0;
        CHECK(r.transmittance[0] == 1.0);
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (i > 0) CHECK(r.transmittance[i] <= r.transmittance[i - 1]);
            CHECK(r.transmittance[i] > 0.0);
            CHECK(r.transmittance[i] <= 1.0);
            wsum += r.weights[i];
        }
        CHECK(wsum <= 1.0 + 1e-12);
    }
}

TEST_CASE("composite: sample splitting of a piecewise-constant field is exact") {
    Rng rng(113);
    for (int trial = 0; trial < 50; ++trial) {
        const int n = 1 + int(rng.below(5));
        const auto s = random_samples(rng, n);
        RaySamples<double> split;
        for (int i = 0; i < n; ++i) {
            for (int half = 0; half < 2; ++half) {
                split.positions.push_back(s.positions[i]);
                split.deltas.push_back(s.deltas[i] / 2.0);
                split.sigmas.push_back(s.sigmas[i]);
                split.colors.push_back(s.colors[i]);
            }
        }
        const auto a = composite(s);
        const auto b = composite(split);
        for (int c = 0; c < 3; ++c) CHECK(std::abs(a.color[c] - b.color[c]) < 1e-12);
    }
}

TEST_CASE("composite_backward: trivial cases and finite differences") {
    // N=1: dC/dc = 1 - exp(-sigma delta)
    {
        RaySamples<double> s;
        s.positions = {{0, 0, 0}};
        s.deltas = {0.7};
        s.sigmas = {1.3};
        s.colors = {{0.2, 0.4, 0.6}};
        const auto fwd = composite(s);
        const auto g = composite_backward(s, fwd, {1, 1, 1});
        const double expect = 1.0 - std::exp(-1.3 * 0.7);
        CHECK(g.d_color[0].x == doctest::Approx(expect).epsilon(1e-12));
    }
    // all sigma = 0: dC/dsigma_i = delta_i * (upstream . c_i)
    {
        Rng rng5(5);
        RaySamples<double> s = random_samples(rng5, 4);
        for (auto& x : s.sigmas) x = 0.0;
        const auto fwd = composite(s);
        const auto g = composite_backward(s, fwd, {1, 1, 1});
        for (std::size_t i = 0; i < s.size(); ++i) {
            const double expect = s.deltas[i] * (s.colors[i].x + s.colors[i].y + s.colors[i].z);
            CHECK(g.d_sigma[i] == doctest::Approx(expect).epsilon(1e-12));
        }
    }
    // random N=5 sets against central differences
    Rng rng(131);
    for (int trial = 0; trial < 20; ++trial) {
        auto s = random_samples(rng, 5);
        const Vec3d up{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
        const auto fwd = composite(s);
        const auto g = composite_backward(s, fwd, up);
        const double h = 1e-5;
        auto loss = [&](const RaySamples<double>& q) { return up.dot(composite(q).color); };
        for (int i = 0; i < 5; ++i) {
            auto sp = s;
            sp.sigmas[i] += h;
            auto sm = s;
            sm.sigmas[i] -= h;
            const double fd = (loss(sp) - loss(sm)) / (2 * h);
            const double denom = std::max({std::abs(fd), std::abs(g.d_sigma[i]), 1e-9});
            CHECK(std::abs(fd - g.d_sigma[i]) / denom < 1e-4);
            for (int c = 0; c < 3; ++c) {
                auto cp = s;
                cp.colors[i][c] += h;
                auto cm = s;
                cm.colors[i][c] -= h;
                const double fdc = (loss(cp) - loss(cm)) / (2 * h);
                const double ref = g.d_color[i][c];
                const double den = std::max({std::abs(fdc), std::abs(ref), 1e-9});
                CHECK(std::abs(fdc - ref) / den < 1e-4);
            }
        }
    }
}

TEST_CASE("march_ray: agrees with the sample/interp/composite reference path") {
    const OracleSceneSpec spec = tiny_scene_spec(8);
    const VoxelGrid<double> grid = build_scene(spec, 3);
    const Camerad cam = test_camera();
    const double step = default_step(grid);

    for (int px = 0; px < cam.width; px += 3)
        for (int py = 0; py < cam.height; py += 3) {
            const Ray<double> ray = generate_ray(cam, double(px), double(py), grid.bounds());
            if (ray.empty()) continue;
            const auto basis = eval_sh_basis(ray.dir);
            const Vec3d fused = march_ray<double>(grid, ray, basis, step, 0.0, nullptr);

            auto s = sample_points(ray, step);
            for (std::size_t i = 0; i < s.size(); ++i) {
                const auto p = grid.interp_payload(s.positions[i]);
                s.sigmas[i] = std::max(0.0, p.sigma);
                s.colors[i] = VoxelGrid<double>::eval_radiance(p, eval_sh_basis(ray.dir),
                                                               grid.color_offset);
            }
            const auto ref = composite(s);
            for (int c = 0; c < 3; ++c)
                CHECK(fused[c] == doctest::Approx(ref.color[c]).epsilon(1e-12));
        }
}

TEST_CASE("render_hdr: empty grid renders black; off-grid pixels are black") {
    auto grid = VoxelGrid<double>::init({4, 4, 4}, {{-1, -1, -1}, {1, 1, 1}});
    const auto pruned = grid.prune(0.2);  // everything below threshold
    const auto img = render_hdr(pruned, test_camera(), {}, 0.1);
    for (const auto& px : img) {
        CHECK(px.x == 0.0);
        CHECK(px.y == 0.0);
        CHECK(px.z == 0.0);
    }
}

TEST_CASE("render_hdr: halving the step converges at first order") {
    const OracleSceneSpec spec = tiny_scene_spec(16);
    const VoxelGrid<double> grid = build_scene(spec, 3);
    const Camerad cam = test_camera(24, 24);

    auto rms_diff = [&](double s1, double s2) {
        const auto a = render_hdr(grid, cam, {}, s1, 0.0);
        const auto b = render_hdr(grid, cam, {}, s2, 0.0);
        double se = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) {
            const Vec3d d = a[i] - b[i];
            se += d.dot(d);
        }
        return std::sqrt(se / double(a.size() * 3));
    };

    const double base = default_step(grid);
    const double d1 = rms_diff(base, base / 2);
    const double d2 = rms_diff(base / 2, base / 4);
    const double d3 = rms_diff(base / 4, base / 8);
    // halving the step roughly halves the difference (slope ~1 in log-log)
    CHECK(d2 < 0.75 * d1);
    CHECK(d3 < 0.75 * d2);
    // and the render error is O(step)
    CHECK(d1 < 3.0 * base);
}

TEST_CASE("render_hdr: symmetric scene gives identical center pixels across rotated cameras") {
    // scene symmetric under 90-degree rotations about y: one centered sphere
    OracleSceneSpec spec;
    spec.name = "sym";
    spec.res = {32, 32, 32};
    spec.background_sigma = 0.0;
    spec.background_emission = {0.0, 0.0, 0.0};
    spec.primitives = {{Primitive::Shape::Sphere, {0, 0, 0}, 0.5, {1.0, 0.8, 0.6}, 25.0, {}}};
    const VoxelGrid<double> grid = build_scene(spec, 3);

    auto cam_at = [&](double angle) {
        const Vec3d eye{3.0 * std::sin(angle), 0.0, -3.0 * std::cos(angle)};
        return look_at_camera<double>(eye, {0, 0, 0}, {0, 1, 0}, 32.0, 32.0, 17, 17);
    };
    const auto a = render_hdr(grid, cam_at(0.0), {{8, 8}}, default_step(grid), 0.0);
    const auto b = render_hdr(grid, cam_at(M_PI / 2), {{8, 8}}, default_step(grid), 0.0);
    for (int c = 0; c < 3; ++c) CHECK(a[0][c] == doctest::Approx(b[0][c]).epsilon(1e-6));
}

TEST_CASE("march_ray records support an exact backward replay") {
    const OracleSceneSpec spec = tiny_scene_spec(8);
    const VoxelGrid<double> grid = build_scene(spec, 3);
    const Camerad cam = test_camera();
    const Ray<double> ray = generate_ray(cam, 8.0, 6.0, grid.bounds());
    REQUIRE(!ray.empty());
    const auto basis = eval_sh_basis(ray.dir);
    RayWorkspace<double> ws;
    march_ray<double>(grid, ray, basis, default_step(grid), 0.0, &ws);
    REQUIRE(!ws.records.empty());

    // recorded transmittances chain: T_{i+1} = T_i * att_i for consecutive
    // records (skipped zero-density samples contribute att = 1)
    for (std::size_t i = 1; i < ws.records.size(); ++i) {
        const auto& a = ws.records[i - 1];
        const auto& b = ws.records[i];
        CHECK(b.trans == doctest::Approx(a.trans * a.att).epsilon(1e-12));
    }
}
