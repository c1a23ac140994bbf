// Copyright (c) 2026 the hdrvox authors.
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "hdrvox/metrics.hpp"

namespace hdrvox {

namespace {

void check_shapes(const ImageBuffer& a, const ImageBuffer& b,
                  const std::vector<std::uint8_t>& mask) {
    if (a.width != b.width || a.height != b.height)
        throw std::invalid_argument("metrics: image dimensions differ");
    if (mask.size() != a.pixel_count())
        throw std::invalid_argument("metrics: mask size mismatch");
}

}  // namespace

double masked_psnr(const ImageBuffer& pred, const ImageBuffer& gt,
                   const std::vector<std::uint8_t>& mask) {
    check_shapes(pred, gt, mask);
    double se = 0.0;
    std::size_t n = 0;
    for (std::size_t p = 0; p < mask.size(); ++p) {
        if (!mask[p]) continue;
        for (int c = 0; c < 3; ++c) {
            const double d = double(pred.values[p * 3 + c]) - double(gt.values[p * 3 + c]);
            se += d * d;
        }
        ++n;
    }
    if (n == 0) throw std::invalid_argument("masked_psnr: empty mask");
    const double mse = se / double(n * 3);
    if (mse < 1e-10) return kPsnrCap;
    return -10.0 * std::log10(mse);
}

double scale_aligned_psnr(const ImageBuffer& pred_hdr, const ImageBuffer& gt_hdr,
                          const std::vector<std::uint8_t>& mask,
                          std::array<double, 3>* scales_out) {
    check_shapes(pred_hdr, gt_hdr, mask);

    double num[3] = {0, 0, 0}, den[3] = {0, 0, 0};
    std::vector<float> gt_vals;
    bool any_gt_positive = false;
    for (std::size_t p = 0; p < mask.size(); ++p) {
        if (!mask[p]) continue;
        for (int c = 0; c < 3; ++c) {
            const double pr = pred_hdr.values[p * 3 + c];
            const double gv = gt_hdr.values[p * 3 + c];
            num[c] += pr * gv;
            den[c] += pr * pr;
            gt_vals.push_back(float(gv));
            any_gt_positive = any_gt_positive || gv > 0.0;
        }
    }
    if (gt_vals.empty()) throw std::invalid_argument("scale_aligned_psnr: empty mask");
    if (!any_gt_positive) throw std::invalid_argument("scale_aligned_psnr: ground truth is zero");
    std::array<double, 3> s{};
    for (int c = 0; c < 3; ++c) {
        if (den[c] <= 0.0)
            throw std::invalid_argument("scale_aligned_psnr: degenerate (all-zero) prediction");
        s[c] = num[c] / den[c];
    }
    if (scales_out) *scales_out = s;

    // normalize by gt's 99th percentile so the MSE scale is range-meaningful
    const std::size_t k = std::size_t(0.99 * double(gt_vals.size() - 1));
    std::nth_element(gt_vals.begin(), gt_vals.begin() + k, gt_vals.end());
    const double p99 = gt_vals[k];
    if (!(p99 > 0.0)) throw std::invalid_argument("scale_aligned_psnr: degenerate ground truth");

    double se = 0.0;
    std::size_t n = 0;
    for (std::size_t p = 0; p < mask.size(); ++p) {
        if (!mask[p]) continue;
        for (int c = 0; c < 3; ++c) {
            const double a = s[c] * double(pred_hdr.values[p * 3 + c]) / p99;
            const double b = double(gt_hdr.values[p * 3 + c]) / p99;
            const double d = a - b;
            se += d * d;
        }
        ++n;
    }
    const double mse = se / double(n * 3);
    if (mse < 1e-10) return kPsnrCap;
    return -10.0 * std::log10(mse);
}

double crf_rmse(const std::array<double, 256>& a, const std::array<double, 256>& b) {
    double se = 0.0;
    for (int k = 0; k < 256; ++k) {
        const double d = a[k] - b[k];
        se += d * d;
    }
    return std::sqrt(se / 256.0);
}

}  // namespace hdrvox
