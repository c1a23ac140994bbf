// Copyright (c) 2026 the hdrvox authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "hdrvox/image.hpp"

namespace hdrvox {

inline constexpr double kPsnrCap = 99.0;  // reported when MSE < 1e-10

// -10 log10(MSE) over the masked rgb values; capped at 99 dB.
double masked_psnr(const ImageBuffer& pred, const ImageBuffer& gt,
                   const std::vector<std::uint8_t>& mask);

// Fits a per-channel least-squares scale s_c = sum(pred*gt)/sum(pred^2) to
// remove the global scale ambiguity, normalizes by gt's 99th percentile over
// the masked pixels, and reports masked PSNR of the aligned linear values.
double scale_aligned_psnr(const ImageBuffer& pred_hdr, const ImageBuffer& gt_hdr,
                          const std::vector<std::uint8_t>& mask, std::array<double, 3>* scales_out);

// RMS difference of two response curves sampled on the common 256-knot grid.
double crf_rmse(const std::array<double, 256>& a, const std::array<double, 256>& b);

}  // namespace hdrvox
