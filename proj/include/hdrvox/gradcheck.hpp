// Copyright (c) 2026 the hdrvox authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace hdrvox {

// Central finite-difference validation of every analytic gradient path
// (opacity, SH coefficients, white balance, CRF control points) on a tiny
// scene at double precision.
struct GradCheckResult {
    struct Group {
        std::string name;
        int checked = 0;
        double max_rel_err = 0.0;
        std::string worst;  // human-readable id of the worst parameter
    };
    std::vector<Group> groups;
    double tolerance = 1e-4;
    bool passed = false;
    std::string worst_group;
    double max_rel_err = 0.0;
};

struct GradCheckOptions {
    std::uint64_t seed = 7;
    int samples_per_group = 64;   // parameters sampled per group
    double fd_step = 1e-5;
    double tolerance = 1e-4;
    bool flip_sigma_adjoint = false;  // negative-control hook
};

GradCheckResult run_gradcheck(const GradCheckOptions& opts = {});

std::string format_gradcheck(const GradCheckResult& r);

}  // namespace hdrvox
