// Copyright (c) 2026 the hdrvox authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "hdrvox/camera.hpp"
#include "hdrvox/grid.hpp"
#include "hdrvox/manifest.hpp"
#include "hdrvox/tonemap.hpp"

namespace hdrvox {

// Analytic emissive primitive rasterized into the ground-truth grid. Boxes
// are axis-aligned cubes of half-edge `size`; spheres have radius `size`.
struct Primitive {
    enum class Shape { Sphere, Box };
    Shape shape = Shape::Sphere;
    Vec3d center;
    double size = 0.0;
    Vec3d emission;   // HDR radiance, unbounded above
    double sigma = 0.0;
    Vec3d sh1;        // optional l=1 coefficient pattern (glossy preset), per channel scale
};

struct OracleSceneSpec {
    std::string name = "default";
    std::vector<Primitive> primitives;
    double background_sigma = 0.0;
    Vec3d background_emission;
    GridRes res{64, 64, 64};
    Aabbd bounds{{-1, -1, -1}, {1, 1, 1}};
};

// Desk-scale reference scene: one over-saturating emitter (channel > 1), one
// near-black box (channel < 0.05), mid-range structures, and a faint haze so
// background rays are informative.
OracleSceneSpec default_scene_spec();
// Same scene with nonzero l=1/l=2 coefficients on the bright sphere, which
// stresses the ambiguity between view-dependent color and white balance.
OracleSceneSpec glossy_scene_spec();
// Tiny variant used by gradient checks and fast tests.
OracleSceneSpec tiny_scene_spec(int res);

// Flat key-value scene file (one primitive per `sphere`/`box` line).
OracleSceneSpec load_scene_spec(const std::string& path);
void save_scene_spec(const std::string& path, const OracleSceneSpec& spec);

// Rasterizes by point-sampling vertex positions: a vertex inside a primitive
// takes that primitive's sigma and DC-encoded emission (later primitives
// win). Deterministic for a given (spec, seed).
VoxelGrid<double> build_scene(const OracleSceneSpec& spec, std::uint64_t seed);

// Per-view ground-truth tone profile: white balance encodes exposure
// 2^EV times a channel-ratio pattern; the CRF is the display gamma curve
// g(x) = x^(1/gamma).
struct GTToneProfile {
    std::vector<Vec3d> wb;
    std::vector<double> gamma;

    std::size_t view_count() const { return wb.size(); }
    ToneMapParams<double> view_params(std::size_t i) const;
};

// "varying": exposure cycles {-3, 0, +3} EV and a 1.25 gain cycles across
// color channels; "static": every view shares unit wb and the same gamma.
GTToneProfile varying_profile(int n_views, double ev_range = 3.0, double gain = 1.25,
                              double gamma = 3.0);
GTToneProfile static_profile(int n_views, double gamma = 3.0);

// 20-ish roughly forward-facing cameras on a partial sphere of radius
// 2.5 x scene extent with seeded +-30 degree jitter; every 5th view is a
// held-out test view.
std::vector<Camerad> build_rig(const Aabbd& bounds, int n_views, int width, int height,
                               std::uint64_t seed);

struct SynthOptions {
    int width = 64, height = 64;
    int n_views = 20;
    int test_every = 5;       // views with id % test_every == test_every-1 are tests
    double step_scale = 0.5;  // marching step = step_scale * min voxel edge
    std::uint64_t seed = 1;
};

// The dataset render pipeline without touching the filesystem: LDR images
// are clamped and quantized exactly as the PNG writer would store them, test
// views get left-half trainable masks. Used by the gradient checker and
// fast tests.
LoadedDataset synth_dataset_in_memory(const VoxelGrid<double>& gt_grid,
                                      const std::vector<Camerad>& rig,
                                      const GTToneProfile& profile, const SynthOptions& opts);

// Renders the ground-truth LDR/HDR dataset: per view an 8-bit PNG (clamped,
// quantized), the unclamped HDR PFM, and a trainable-pixel mask (left half
// for test views). Also writes the manifest, the GT grid, and the GT tone
// profile for closed-loop comparison. Byte-stable for fixed inputs.
DatasetManifest render_gt_dataset(const VoxelGrid<double>& gt_grid,
                                  const std::vector<Camerad>& rig, const GTToneProfile& profile,
                                  const SynthOptions& opts, const std::string& out_dir);

// One-call synthesis: scene + rig + profile + dataset files under out_dir.
void synthesize_dataset(const OracleSceneSpec& spec, const std::string& profile_name,
                        const SynthOptions& opts, const std::string& out_dir);

// GT tone profile (de)serialization, written next to the dataset.
void save_profile(const std::string& path, const GTToneProfile& p);
GTToneProfile load_profile(const std::string& path);

// Closed-loop recovery report against the ground truth.
struct RecoveryReport {
    std::vector<double> wb_rel_err;       // per view, max over channels, reference-normalized
    std::vector<std::array<double, 3>> crf_rmse_per_view;
    std::vector<double> hdr_psnr;         // per held-out view, scale-aligned
    double max_wb_rel_err = 0.0;
    double max_crf_rmse = 0.0;
    double min_hdr_psnr = 0.0;
};

RecoveryReport gt_compare(const VoxelGrid<double>& trained_grid,
                          const std::vector<ToneMapParams<double>>& trained_tone,
                          int reference_view, const LoadedDataset& dataset,
                          const GTToneProfile& profile, double step_scale = 0.5);

}  // namespace hdrvox
