// Copyright (c) 2026 the hdrvox authors.
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "hdrvox/grid.hpp"
#include "hdrvox/render.hpp"
#include "hdrvox/util.hpp"

using namespace hdrvox;

namespace {

VoxelGrid<double> random_grid(GridRes res, Rng& rng, double sigma_lo = 0.0,
                              double sigma_hi = 2.0) {
    VoxelGrid<double> g(res, {{-1, -1, -1}, {1, 1, 1}});
    for (std::int64_t v = 0; v < g.vertex_count(); ++v) {
        double* p = g.payload_ptr(v);
        for (int i = 0; i < 27; ++i) p[i] = rng.uniform(-0.5, 0.5);
        p[kSigmaOffset] = rng.uniform(sigma_lo, sigma_hi);
    }
    return g;
}

}  // namespace

TEST_CASE("trilinear weights: corners, center, and the product formula") {
    VoxelGrid<double> g({2, 2, 2}, {{0, 0, 0}, {2, 2, 2}});
    CHECK(g.vertex_count() == 27);

    std::array<std::int64_t, 8> idx;
    std::array<double, 8> w;

    // exactly at a vertex
    g.trilinear_weights({1.0, 1.0, 1.0}, idx, w);
    double sum = 0;
    for (int c = 0; c < 8; ++c) sum += w[c];
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    int ones = 0;
    for (int c = 0; c < 8; ++c) {
        if (w[c] == doctest::Approx(1.0)) {
            ++ones;
            CHECK(idx[c] == g.vertex_index(1, 1, 1));
        }
    }
    CHECK(ones == 1);

    // cell center
    g.trilinear_weights({0.5, 0.5, 0.5}, idx, w);
    for (int c = 0; c < 8; ++c) CHECK(w[c] == doctest::Approx(0.125).epsilon(1e-12));

    // normalized cell coords (0.25, 0.5, 0.75) against the expanded product
    g.trilinear_weights({0.25, 0.5, 0.75}, idx, w);
    const double fx = 0.25, fy = 0.5, fz = 0.75;
    const double expect[8] = {
        (1 - fz) * (1 - fy) * (1 - fx), (1 - fz) * (1 - fy) * fx,
        (1 - fz) * fy * (1 - fx),       (1 - fz) * fy * fx,
        fz * (1 - fy) * (1 - fx),       fz * (1 - fy) * fx,
        fz * fy * (1 - fx),             fz * fy * fx,
    };
    for (int c = 0; c < 8; ++c) CHECK(w[c] == doctest::Approx(expect[c]).epsilon(1e-12));

    CHECK_THROWS_AS(g.trilinear_weights({2.5, 0.5, 0.5}, idx, w), std::out_of_range);
}

TEST_CASE("trilinear weights: partition of unity on random positions") {
    Rng rng(17);
    VoxelGrid<double> g({5, 3, 4}, {{-1, -2, 0}, {3, 1, 2}});
    for (int i = 0; i < 200; ++i) {
        const Vec3d p{rng.uniform(-1, 3), rng.uniform(-2, 1), rng.uniform(0, 2)};
        std::array<std::int64_t, 8> idx;
        std::array<double, 8> w;
        g.trilinear_weights(p, idx, w);
        double sum = 0;
        for (int c = 0; c < 8; ++c) {
            CHECK(w[c] >= 0.0);
            CHECK(w[c] <= 1.0);
            sum += w[c];
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("interp_payload: constants, vertices, and the weighted-sum oracle") {
    Rng rng(23);

    // constant grid reproduces the constant everywhere
    VoxelGrid<double> g({3, 3, 3}, {{0, 0, 0}, {1, 1, 1}});
    VertexPayload<double> c;
    for (int i = 0; i < 27; ++i) c.sh[i] = 0.25 * (i + 1);
    c.sigma = 1.5;
    for (std::int64_t v = 0; v < g.vertex_count(); ++v) g.set_vertex_payload(v, c);
    for (int i = 0; i < 20; ++i) {
        const Vec3d p{rng.uniform(0, 1), rng.uniform(0, 1), rng.uniform(0, 1)};
        const auto out = g.interp_payload(p);
        for (int k = 0; k < 27; ++k) CHECK(out.sh[k] == doctest::Approx(c.sh[k]).epsilon(1e-12));
        CHECK(out.sigma == doctest::Approx(c.sigma).epsilon(1e-12));
    }

    // vertex positions return the stored payload exactly
    VoxelGrid<double> r = random_grid({4, 3, 2}, rng);
    for (int iz = 0; iz <= 2; ++iz)
        for (int iy = 0; iy <= 3; ++iy)
            for (int ix = 0; ix <= 4; ++ix) {
                const auto out = r.interp_payload(r.vertex_pos(ix, iy, iz));
                const auto ref = r.vertex_payload(r.vertex_index(ix, iy, iz));
                CHECK(out.sigma == doctest::Approx(ref.sigma).epsilon(1e-9));
                CHECK(out.sh[13] == doctest::Approx(ref.sh[13]).epsilon(1e-9));
            }

    // random position matches sum(w_i * payload_i) built from trilinear_weights
    for (int i = 0; i < 50; ++i) {
        const Vec3d p{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
        std::array<std::int64_t, 8> idx;
        std::array<double, 8> w;
        r.trilinear_weights(p, idx, w);
        VertexPayload<double> manual;
        for (int k = 0; k < 8; ++k) {
            const auto vp = r.vertex_payload(idx[k]);
            for (int q = 0; q < 27; ++q) manual.sh[q] += w[k] * vp.sh[q];
            manual.sigma += w[k] * vp.sigma;
        }
        const auto out = r.interp_payload(p);
        for (int q = 0; q < 27; ++q) CHECK(out.sh[q] == doctest::Approx(manual.sh[q]).epsilon(1e-12));
        CHECK(out.sigma == doctest::Approx(manual.sigma).epsilon(1e-12));
    }
}

TEST_CASE("interp_payload: unoccupied corners read as zero") {
    VoxelGrid<double> g({1, 1, 1}, {{0, 0, 0}, {1, 1, 1}});
    VertexPayload<double> c;
    c.sigma = 2.0;
    for (std::int64_t v = 0; v < 8; ++v) g.set_vertex_payload(v, c);
    for (std::int64_t v = 0; v < 8; ++v) g.set_occupied(v, false);
    g.set_occupied(0, true);  // only (0,0,0) contributes
    const auto out = g.interp_payload({0.25, 0.25, 0.25});
    CHECK(out.sigma == doctest::Approx(2.0 * 0.75 * 0.75 * 0.75).epsilon(1e-12));
}

TEST_CASE("eval_radiance: grey init, clamp floor, and the DC response") {
    const auto basis = eval_sh_basis<double>(Vec3d{0.3, -0.5, 0.8}.normalized());

    VertexPayload<double> p;
    const Vec3d grey = VoxelGrid<double>::eval_radiance(p, basis, 0.5);
    CHECK(grey.x == 0.5);
    CHECK(grey.y == 0.5);
    CHECK(grey.z == 0.5);

    // a channel pushed below zero clamps to zero
    p.sh[0] = -0.7 / basis[0];  // dc contribution of -0.7 on red
    const Vec3d clamped = VoxelGrid<double>::eval_radiance(p, basis, 0.5);
    CHECK(clamped.x == 0.0);
    CHECK(clamped.y == 0.5);

    // dc coefficient 1 on red: 0.5 + 1/(2 sqrt(pi))
    p.sh[0] = 1.0;
    const Vec3d red = VoxelGrid<double>::eval_radiance(p, basis, 0.5);
    CHECK(red.x == doctest::Approx(0.7820948).epsilon(1e-7));
}

TEST_CASE("eval_radiance: piecewise linear along an axis segment within a cell") {
    Rng rng(31);
    VoxelGrid<double> g = random_grid({2, 2, 2}, rng);
    const Vec3d dir = Vec3d{0.2, 0.3, 0.9}.normalized();
    // three collinear points inside one cell along x
    const Vec3d a{-0.9, -0.4, -0.3}, b{-0.7, -0.4, -0.3}, m{-0.8, -0.4, -0.3};
    const Vec3d ra = g.radiance(a, dir), rb = g.radiance(b, dir), rm = g.radiance(m, dir);
    for (int c = 0; c < 3; ++c)
        if (ra[c] > 0 && rb[c] > 0 && rm[c] > 0)  // linearity holds off the clamp
            CHECK(rm[c] == doctest::Approx(0.5 * (ra[c] + rb[c])).epsilon(1e-10));
}

TEST_CASE("init_grid: values and rejection") {
    const auto g = VoxelGrid<double>::init({2, 2, 2}, {{-1, -1, -1}, {1, 1, 1}});
    CHECK(g.vertex_count() == 27);
    for (std::int64_t v = 0; v < g.vertex_count(); ++v) {
        CHECK(g.payload_ptr(v)[kSigmaOffset] == 0.1);
        CHECK(g.occupied(v));
    }
    const Vec3d rad = g.radiance({0.3, -0.2, 0.4}, Vec3d{0, 0, 1});
    CHECK(rad.x == 0.5);

    CHECK_THROWS_AS(VoxelGrid<double>::init({0, 2, 2}, {{-1, -1, -1}, {1, 1, 1}}),
                    std::invalid_argument);
    CHECK_THROWS_AS(VoxelGrid<double>::init({2, 2, 2}, {{1, -1, -1}, {1, 1, 1}}),
                    std::invalid_argument);
}

TEST_CASE("init_grid: fresh grid renders a uniform grey image for parallel rays") {
    const auto g = VoxelGrid<double>::init({4, 4, 4}, {{-1, -1, -1}, {1, 1, 1}});
    const double step = 0.125;
    // orthographic-style bundle straight down +z
    const auto basis = eval_sh_basis<double>({0, 0, 1});
    double first = -1.0;
    int n_samples = 0;
    for (double x = -0.75; x <= 0.75; x += 0.25)
        for (double y = -0.75; y <= 0.75; y += 0.25) {
            Ray<double> ray;
            ray.origin = {x, y, -2.0};
            ray.dir = {0, 0, 1};
            intersect_aabb(ray.origin, ray.dir, g.bounds(), ray.t_near, ray.t_far);
            REQUIRE(!ray.empty());
            const auto samples = sample_points(ray, step);
            n_samples = int(samples.size());
            RaySamples<double> s = samples;
            for (std::size_t i = 0; i < s.size(); ++i) {
                const auto p = g.interp_payload(s.positions[i]);
                s.sigmas[i] = std::max(0.0, p.sigma);
                s.colors[i] = VoxelGrid<double>::eval_radiance(p, basis, 0.5);
            }
            const auto out = composite(s);
            // constant field composites to emission * (1 - T_end) exactly
            const double expect = 0.5 * (1.0 - std::exp(-0.1 * n_samples * step));
            for (int c = 0; c < 3; ++c) CHECK(out.color[c] == doctest::Approx(expect).epsilon(1e-12));
            if (first < 0) first = out.color.x;
            CHECK(out.color.x == doctest::Approx(first).epsilon(1e-12));
        }
}

TEST_CASE("upsample: exact on 2x subdivision and render-invariant") {
    Rng rng(41);
    VoxelGrid<double> g = random_grid({3, 4, 2}, rng);
    // knock out some occupancy to exercise inheritance
    for (std::int64_t v = 0; v < g.vertex_count(); v += 7) g.set_occupied(v, false);

    const VoxelGrid<double> up = g.upsample({6, 8, 4});
    for (int i = 0; i < 100; ++i) {
        const Vec3d p{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
        const auto a = g.interp_payload(p);
        const auto b = up.interp_payload(p);
        CHECK(b.sigma == doctest::Approx(a.sigma).epsilon(1e-12));
        for (int q = 0; q < 27; ++q) CHECK(b.sh[q] == doctest::Approx(a.sh[q]).epsilon(1e-12));
    }

    // old vertices map to new vertices with identical payloads
    for (int iz = 0; iz <= 2; ++iz)
        for (int iy = 0; iy <= 4; ++iy)
            for (int ix = 0; ix <= 3; ++ix) {
                const auto a = g.interp_payload(g.vertex_pos(ix, iy, iz));
                const auto b = up.vertex_payload(up.vertex_index(2 * ix, 2 * iy, 2 * iz));
                CHECK(b.sigma == doctest::Approx(a.sigma).epsilon(1e-12));
            }

    CHECK_THROWS_AS(g.upsample({2, 4, 2}), std::invalid_argument);
}

TEST_CASE("prune: tau zero is a no-op; uniform prune composites to black") {
    Rng rng(43);
    VoxelGrid<double> g = random_grid({3, 3, 3}, rng, 0.05, 1.0);
    const auto p0 = g.prune(0.0);
    for (std::int64_t v = 0; v < g.vertex_count(); ++v) CHECK(p0.occupied(v));

    auto u = VoxelGrid<double>::init({3, 3, 3}, {{-1, -1, -1}, {1, 1, 1}});  // sigma 0.1
    const auto pruned = u.prune(0.2);
    for (std::int64_t v = 0; v < u.vertex_count(); ++v) CHECK(!pruned.occupied(v));

    // an empty field composites to zero radiance
    Ray<double> ray;
    ray.origin = {0, 0, -2};
    ray.dir = {0, 0, 1};
    intersect_aabb(ray.origin, ray.dir, pruned.bounds(), ray.t_near, ray.t_far);
    auto s = sample_points(ray, 0.05);
    const auto basis = eval_sh_basis<double>({0, 0, 1});
    for (std::size_t i = 0; i < s.size(); ++i) {
        const auto pay = pruned.interp_payload(s.positions[i]);
        s.sigmas[i] = std::max(0.0, pay.sigma);
        s.colors[i] = VoxelGrid<double>::eval_radiance(pay, basis, 0.5);
    }
    const auto out = composite(s);
    CHECK(out.color.x == 0.0);
    CHECK(out.color.y == 0.0);
    CHECK(out.color.z == 0.0);
}

TEST_CASE("prune: boundary vertices of occupied cells are protected") {
    // one dense cell in a sea of zeros: its corners stay occupied
    VoxelGrid<double> g({5, 5, 5}, {{0, 0, 0}, {5, 5, 5}});
    for (int dz = 0; dz < 2; ++dz)
        for (int dy = 0; dy < 2; ++dy)
            for (int dx = 0; dx < 2; ++dx) {
                VertexPayload<double> p;
                p.sigma = 5.0;
                g.set_vertex_payload(g.vertex_index(2 + dx, 2 + dy, 2 + dz), p);
            }
    const auto pruned = g.prune(1e-3);
    // corners of the dense cell survive (they are not below tau anyway)
    CHECK(pruned.occupied(g.vertex_index(2, 2, 2)));
    // a vertex one cell away shares a cell with a dense corner, so it survives
    CHECK(pruned.occupied(g.vertex_index(1, 2, 2)));
    // two cells away every incident cell is fully below tau: pruned
    CHECK(!pruned.occupied(g.vertex_index(0, 2, 2)));
    CHECK(!pruned.occupied(g.vertex_index(5, 5, 5)));
}

TEST_CASE("grid checkpoint: HVXF round trip and format header") {
    Rng rng(47);
    const auto path = (std::filesystem::temp_directory_path() / "hdrvox_grid_test.hvxf").string();
    VoxelGrid<float> g(GridRes{3, 2, 4}, Aabb<float>{{-1, -0.5f, 0}, {1, 0.5f, 2}});
    for (std::int64_t v = 0; v < g.vertex_count(); ++v) {
        for (int i = 0; i < kPayloadDim; ++i) g.payload_ptr(v)[i] = float(rng.uniform(-2, 2));
        g.set_occupied(v, rng.below(4) != 0);
    }
    save_grid(path, g);
    const auto r = load_grid_f32(path);
    CHECK(r.res() == g.res());
    CHECK(r.raw_payloads() == g.raw_payloads());
    CHECK(r.raw_occupancy() == g.raw_occupancy());

    std::ifstream in(path, std::ios::binary);
    char magic[4];
    in.read(magic, 4);
    CHECK(std::string(magic, 4) == "HVXF");
    std::filesystem::remove(path);
}

TEST_CASE("grid payloads: 28 scalars per vertex") {
    CHECK(kPayloadDim == 28);
    VertexPayload<double> p;
    p.set_scalar(27, 1.25);
    CHECK(p.sigma == 1.25);
    p.set_scalar(3, -0.5);
    CHECK(p.sh[3] == -0.5);
    CHECK(p.scalar(3) == -0.5);
}
