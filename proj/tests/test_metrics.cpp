// Copyright (c) 2026 the hdrvox authors.
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>

#include "hdrvox/metrics.hpp"
#include "hdrvox/util.hpp"

using namespace hdrvox;

TEST_CASE("masked_psnr: cap, hand value, and mask isolation") {
    ImageBuffer a(8, 4), b(8, 4);
    Rng rng(3);
    for (auto& v : a.values) v = float(rng.uniform());
    b = a;
    const auto all = full_mask(8, 4);
    CHECK(masked_psnr(a, b, all) == kPsnrCap);

    // uniform residual 0.1 -> -10 log10(0.01) = 20 dB
    for (auto& v : b.values) v += 0.1f;
    CHECK(masked_psnr(a, b, all) == doctest::Approx(20.0).epsilon(1e-4));

    // differences confined to the left half are invisible under the right mask
    b = a;
    for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 4; ++x)
            for (int c = 0; c < 3; ++c) b.at(x, y, c) = 0.0f;
    CHECK(masked_psnr(a, b, right_half_mask(8, 4)) == kPsnrCap);
    CHECK(masked_psnr(a, b, left_half_mask(8, 4)) < 30.0);

    const std::vector<std::uint8_t> empty(32, 0);
    CHECK_THROWS_AS(masked_psnr(a, b, empty), std::invalid_argument);
    ImageBuffer wrong(4, 4);
    CHECK_THROWS_AS(masked_psnr(a, wrong, all), std::invalid_argument);
}

TEST_CASE("scale_aligned_psnr: removes global scales exactly") {
    Rng rng(5);
    ImageBuffer gt(16, 8);
    for (auto& v : gt.values) v = float(rng.uniform(0.1, 4.0));
    const auto mask = full_mask(16, 8);

    ImageBuffer pred = gt;
    std::array<double, 3> s{};
    CHECK(scale_aligned_psnr(pred, gt, mask, &s) == kPsnrCap);
    for (int c = 0; c < 3; ++c) CHECK(s[c] == doctest::Approx(1.0).epsilon(1e-9));

    for (auto& v : pred.values) v *= 2.0f;
    CHECK(scale_aligned_psnr(pred, gt, mask, &s) == kPsnrCap);
    for (int c = 0; c < 3; ++c) CHECK(s[c] == doctest::Approx(0.5).epsilon(1e-6));

    // invariance under any positive rescale of the prediction
    ImageBuffer noisy = gt;
    for (auto& v : noisy.values) v += float(rng.uniform(-0.05, 0.05));
    const double base = scale_aligned_psnr(noisy, gt, mask, nullptr);
    ImageBuffer scaled = noisy;
    for (auto& v : scaled.values) v *= 8.0f;  // power of two: exact in f32
    CHECK(scale_aligned_psnr(scaled, gt, mask, nullptr) == doctest::Approx(base).epsilon(1e-9));

    ImageBuffer zero(16, 8);
    CHECK_THROWS_AS(scale_aligned_psnr(zero, gt, mask, nullptr), std::invalid_argument);
}

TEST_CASE("scale_aligned_psnr: known-noise value within half a dB") {
    Rng rng(7);
    const int w = 64, h = 64;
    ImageBuffer gt(w, h), pred(w, h);
    const double sigma_n = 0.01;
    for (std::size_t i = 0; i < gt.values.size(); ++i) {
        const double g = rng.uniform(0.5, 1.5);
        gt.values[i] = float(g);
        pred.values[i] = float(g + sigma_n * rng.normal());
    }
    const auto psnr = scale_aligned_psnr(pred, gt, full_mask(w, h), nullptr);
    // normalized by gt's 99th percentile (about 0.5 + 0.99)
    const double p99 = 0.5 + 0.99;
    const double expect = -10.0 * std::log10(sigma_n * sigma_n / (p99 * p99));
    CHECK(std::abs(psnr - expect) < 0.5);
}

TEST_CASE("crf_rmse: zero, interior offset, and the gamma fixture") {
    std::array<double, 256> identity{};
    for (int k = 0; k < 256; ++k) identity[std::size_t(k)] = k / 255.0;
    CHECK(crf_rmse(identity, identity) == 0.0);

    std::array<double, 256> offset = identity;
    for (int k = 1; k < 255; ++k) offset[std::size_t(k)] += 0.01;
    CHECK(crf_rmse(identity, offset) == doctest::Approx(0.009960860907).epsilon(1e-9));

    // display gamma 2.2 against identity: value computed once by brute force
    std::array<double, 256> gamma{};
    for (int k = 0; k < 256; ++k) gamma[std::size_t(k)] = std::pow(k / 255.0, 1.0 / 2.2);
    CHECK(crf_rmse(identity, gamma) == doctest::Approx(0.205329610359).epsilon(1e-9));
}
