// Copyright (c) 2026 the hdrvox authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstring>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include "hdrvox/losses.hpp"
#include "hdrvox/manifest.hpp"
#include "hdrvox/render.hpp"
#include "hdrvox/tonemap.hpp"
#include "hdrvox/util.hpp"

namespace hdrvox {

struct ResolutionStep {
    GridRes res;
    std::int64_t at_iteration = 0;
};

struct TrainConfig {
    int epochs = 10;
    int iters_per_epoch = 2000;
    int rays_per_batch = 1024;
    double lr_init = 0.01;
    double lr_final = 5e-5;
    std::int64_t sigma_lr_delay_steps = 1000;
    std::int64_t total_lr_steps = 20000;
    LossWeights loss;
    double alpha = 0.01;       // CRF leak coefficient
    double step_size = 0.0;    // world units; 0 = half the smallest voxel edge
    std::vector<ResolutionStep> ladder = {{{16, 16, 16}, 0},
                                          {{32, 32, 32}, 6000},
                                          {{64, 64, 64}, 12000}};
    double prune_tau = 1e-3;
    int tv_epochs = 3;
    int sh_mask_epochs = 5;
    std::uint64_t seed = 1;
    bool deterministic = true;
    int threads = 1;

    double rmsprop_beta = 0.95;
    double rmsprop_eps = 1e-8;
    double trans_cutoff = 1e-5;   // early ray termination; 0 disables
    bool enable_tonemap = true;   // false: wb/CRF pinned at identity (baseline)
    bool shared_crf = false;      // one CRF table shared by all views
    bool sh_mask_l2_only = false; // mask only the l=2 band instead of l>=1
    bool fold_dc_offset = false;  // encode the grey init in the DC coefficient
    int checkpoint_every_epochs = 0;  // 0: only the final checkpoint
    std::string precision = "fp32";   // fp32 | fp64

    std::int64_t total_iterations() const {
        return std::int64_t(epochs) * iters_per_epoch;
    }
    void validate() const;
};

// Named presets: "desk" (default), "smoke" (seconds-scale), "paper"
// (the full-scale schedule), "baseline" (desk with the tone-map pinned).
TrainConfig preset_config(const std::string& name);
// Flat key = value file; unknown keys are rejected. Keys mirror the
// TrainConfig fields; `preset` selects a base preset to override.
TrainConfig load_train_config(const std::string& path);
void save_train_config(const std::string& path, const TrainConfig& cfg);

// Learning-rate schedules.
inline double lr_exponential(std::int64_t step, double lr_init, double lr_final,
                             std::int64_t total_steps) {
    const double t = double(std::min(step, total_steps)) / double(total_steps);
    return lr_init * std::pow(lr_final / lr_init, t);
}

// Exponential schedule scaled by a smooth ramp from 1% to 100% over the
// delay window.
inline double lr_delayed(std::int64_t step, double lr_init, double lr_final,
                         std::int64_t delay_steps, std::int64_t total_steps) {
    double ramp = 1.0;
    if (delay_steps > 0) {
        const double u = std::clamp(double(step) / double(delay_steps), 0.0, 1.0);
        ramp = 0.01 + 0.99 * std::sin(0.5 * M_PI * u);
    }
    return lr_exponential(step, lr_init, lr_final, total_steps) * ramp;
}

// Fraction of the high-band SH gradient that is blocked at a given epoch:
// 1 at epoch 0, linearly down to 0 at sh_mask_epochs.
inline double sh_mask_rate(int epoch, int sh_mask_epochs) {
    if (sh_mask_epochs <= 0) return 0.0;
    return std::max(0.0, 1.0 - double(epoch) / double(sh_mask_epochs));
}

// Per-view white-balance gains from image statistics:
// wb[c][i] = mean of channel c over image i / mean of channel c over all
// pixels of all images. Throws when a dataset-wide channel mean is zero.
std::vector<Vec3d> init_white_balance(const LoadedDataset& d);

// The view whose mean color is closest (Euclidean) to the dataset-wide mean
// color; ties break toward the lowest index.
int select_reference_view(const LoadedDataset& d);

// RMSProp: v <- beta v + (1-beta) g^2; p <- p - lr g / (sqrt(v) + eps).
// Throws on non-finite gradients, naming `group` in the message.
template <class T>
inline void rmsprop_step(T* p, const T* g, T* v, std::size_t n, T lr, T beta, T eps,
                         const char* group = "params") {
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(double(g[i])))
            throw std::runtime_error(std::string("rmsprop_step: non-finite gradient in group ") +
                                     group);
        v[i] = beta * v[i] + (T(1) - beta) * g[i] * g[i];
        p[i] -= lr * g[i] / (std::sqrt(v[i]) + eps);
    }
}

class TrainingDiverged : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

template <class T>
class Trainer {
public:
    struct StepStats {
        std::int64_t step = 0;
        double recon = 0, tv_sigma = 0, tv_sh = 0, smooth = 0, total = 0;
        double lr_sh = 0, lr_sigma = 0;
    };

    Trainer(const LoadedDataset& data, const TrainConfig& cfg);

    StepStats step();
    // Full schedule. When out_dir is nonempty, writes train_log.csv, periodic
    // and final checkpoints, and a final HVXF grid export there. on_step, when
    // set, observes every logged row.
    void run(const std::string& out_dir,
             const std::function<void(const StepStats&)>& on_step = nullptr);

    const VoxelGrid<T>& grid() const { return grid_; }
    VoxelGrid<T>& mutable_grid() { return grid_; }
    const std::vector<ToneMapParams<T>>& tone() const { return tone_; }
    std::vector<ToneMapParams<T>>& mutable_tone() { return tone_; }
    int reference_view() const { return reference_view_; }
    std::int64_t current_step() const { return step_; }
    int current_epoch() const { return int(step_ / cfg_.iters_per_epoch); }
    const TrainConfig& config() const { return cfg_; }
    std::size_t ray_count() const { return rays_.size(); }

    void save_checkpoint(const std::string& path) const;
    void resume_from(const std::string& path);

    // --- gradient access for the finite-difference harness -----------------
    // Evaluates the full loss over an explicit batch; with_grads fills the
    // gradient buffers below (without touching the optimizer).
    StepStats forward_backward(const std::vector<std::uint32_t>& batch, bool with_grads);
    std::vector<std::uint32_t> all_ray_indices() const;
    const std::vector<T>& payload_grad() const { return buffers_[0].payload; }
    const std::vector<std::int64_t>& touched_vertices() const { return buffers_[0].touched; }
    const std::vector<Vec3<T>>& wb_grad() const { return buffers_[0].wb; }
    const std::vector<std::array<T, 3 * kCrfSize>>& crf_grad() const { return buffers_[0].crf; }

    bool debug_flip_sigma_adjoint = false;  // test hook for the checker's negative control

private:
    struct RayRef {
        std::uint32_t view = 0;
        std::uint16_t px = 0, py = 0;
        Vec3<T> obs;
        T mask_w = T(1);
        Ray<T> ray;
        ShValues<T> basis;
    };

    struct GradBuffers {
        std::vector<T> payload;
        std::vector<std::uint8_t> dirty;
        std::vector<std::int64_t> touched;
        std::vector<Vec3<T>> wb;
        std::vector<std::array<T, 3 * kCrfSize>> crf;
        double recon = 0;

        void resize(std::int64_t vertices, std::size_t views) {
            payload.assign(std::size_t(vertices) * kPayloadDim, T(0));
            dirty.assign(std::size_t(vertices), 0);
            touched.clear();
            wb.assign(views, Vec3<T>{});
            crf.assign(views, {});
            recon = 0;
        }
        void add(std::int64_t vertex, int slot, T value) {
            if (!dirty[std::size_t(vertex)]) {
                dirty[std::size_t(vertex)] = 1;
                touched.push_back(vertex);
            }
            payload[std::size_t(vertex) * kPayloadDim + slot] += value;
        }
    };

    void build_ray_pool(const LoadedDataset& data);
    void set_resolution(const GridRes& res, bool initial);
    void next_batch(std::vector<std::uint32_t>& batch);
    void apply_ladder();
    void apply_optimizer();
    void merge_buffers();
    T current_step_size() const {
        return cfg_.step_size > 0 ? T(cfg_.step_size) : default_step(grid_);
    }

    TrainConfig cfg_;
    VoxelGrid<T> grid_;
    std::vector<ToneMapParams<T>> tone_;
    int reference_view_ = 0;
    std::size_t n_views_ = 0;

    std::vector<RayRef> rays_;
    std::vector<std::uint32_t> order_;
    std::size_t cursor_ = 0;
    Rng rng_;

    std::int64_t step_ = 0;
    std::size_t ladder_pos_ = 1;  // next pending ladder entry
    double initial_total_ = -1.0;

    // optimizer state
    std::vector<T> opt_v_payload_;
    std::vector<std::int64_t> opt_stamp_;
    std::vector<Vec3<T>> opt_v_wb_;
    std::vector<std::array<T, 3 * kCrfSize>> opt_v_crf_;

    std::vector<GradBuffers> buffers_;
    std::vector<RayWorkspace<T>> workspaces_;
    std::vector<std::uint32_t> batch_;
};

extern template class Trainer<float>;
extern template class Trainer<double>;

// Model part of a training checkpoint, loaded at double precision for
// rendering and evaluation regardless of the precision it was trained at.
struct ModelCheckpoint {
    VoxelGrid<double> grid;
    std::vector<ToneMapParams<double>> tone;
    int reference_view = 0;
    int precision_bytes = 4;
    bool has_trainer_state = false;
};

ModelCheckpoint load_model_checkpoint(const std::string& path);

// CSV export of the response curves: view,channel,knot,value rows.
void export_crf_csv(const std::string& path, const std::vector<ToneMapParams<double>>& tone);

}  // namespace hdrvox
