// Copyright (c) 2026 the hdrvox authors.
// SPDX-License-Identifier: Apache-2.0

#include <filesystem>
#include <fstream>
#include <iomanip>

#include "hdrvox/trainer.hpp"

namespace hdrvox {

namespace fs = std::filesystem;

void TrainConfig::validate() const {
    if (epochs <= 0 || iters_per_epoch <= 0) throw std::invalid_argument("config: bad epoch counts");
    if (rays_per_batch < 1) throw std::invalid_argument("config: rays_per_batch must be >= 1");
    if (!(0 < lr_final && lr_final <= lr_init))
        throw std::invalid_argument("config: need 0 < lr_final <= lr_init");
    if (total_lr_steps <= 0) throw std::invalid_argument("config: total_lr_steps must be positive");
    if (sigma_lr_delay_steps > total_lr_steps)
        throw std::invalid_argument("config: sigma_lr_delay_steps exceeds total_lr_steps");
    loss.validate();
    if (!(alpha > 0)) throw std::invalid_argument("config: alpha must be positive");
    if (ladder.empty() || ladder[0].at_iteration != 0)
        throw std::invalid_argument("config: ladder must start at iteration 0");
    for (std::size_t i = 1; i < ladder.size(); ++i) {
        const auto& a = ladder[i - 1];
        const auto& b = ladder[i];
        if (b.at_iteration <= a.at_iteration)
            throw std::invalid_argument("config: ladder iterations must increase");
        if (b.res.nx < a.res.nx || b.res.ny < a.res.ny || b.res.nz < a.res.nz)
            throw std::invalid_argument("config: ladder resolutions must be nondecreasing");
    }
    if (prune_tau < 0) throw std::invalid_argument("config: prune_tau must be >= 0");
    if (threads < 1) throw std::invalid_argument("config: threads must be >= 1");
    if (!(rmsprop_beta > 0 && rmsprop_beta < 1))
        throw std::invalid_argument("config: rmsprop_beta must be in (0,1)");
    if (precision != "fp32" && precision != "fp64")
        throw std::invalid_argument("config: precision must be fp32 or fp64");
}

// ---------------------------------------------------------------------------
// dataset statistics
// ---------------------------------------------------------------------------

namespace {

// per-image channel means and the pixel-count-weighted dataset mean
void channel_means(const LoadedDataset& d, std::vector<Vec3d>& per_image, Vec3d& global) {
    per_image.clear();
    Vec3d total{};
    std::size_t total_px = 0;
    for (const auto& img : d.ldr) {
        Vec3d sum{};
        for (std::size_t p = 0; p < img.pixel_count(); ++p)
            for (int c = 0; c < 3; ++c) sum[c] += img.values[p * 3 + c];
        if (img.pixel_count() == 0) throw std::invalid_argument("dataset: empty image");
        per_image.push_back(sum / double(img.pixel_count()));
        total += sum;
        total_px += img.pixel_count();
    }
    global = total / double(total_px);
}

}  // namespace

std::vector<Vec3d> init_white_balance(const LoadedDataset& d) {
    std::vector<Vec3d> means;
    Vec3d global;
    channel_means(d, means, global);
    for (int c = 0; c < 3; ++c)
        if (!(global[c] > 0.0))
            throw std::invalid_argument("init_white_balance: zero dataset-wide channel mean");
    std::vector<Vec3d> wb;
    wb.reserve(means.size());
    for (const auto& m : means)
        wb.push_back({m.x / global.x, m.y / global.y, m.z / global.z});
    return wb;
}

int select_reference_view(const LoadedDataset& d) {
    std::vector<Vec3d> means;
    Vec3d global;
    channel_means(d, means, global);
    int best = 0;
    double best_d2 = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < means.size(); ++i) {
        const Vec3d diff = means[i] - global;
        const double d2 = diff.dot(diff);
        if (d2 < best_d2) {  // strict: ties keep the lowest index
            best_d2 = d2;
            best = int(i);
        }
    }
    return best;
}

// ---------------------------------------------------------------------------
// Trainer
// ---------------------------------------------------------------------------

template <class T>
Trainer<T>::Trainer(const LoadedDataset& data, const TrainConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    n_views_ = data.view_count();
    rng_ = Rng(cfg_.seed);

    set_resolution(cfg_.ladder[0].res, /*initial=*/true);
    grid_ = VoxelGrid<T>::init(cfg_.ladder[0].res, data.manifest.bounds.cast<T>());
    if (cfg_.fold_dc_offset) {
        grid_.color_offset = T(0);
        constexpr double y00 = 0.28209479177387814;
        const T dc = T(0.5 / y00);
        for (std::int64_t v = 0; v < grid_.vertex_count(); ++v)
            for (int ch = 0; ch < 3; ++ch) grid_.payload_ptr(v)[ch * kShCount] = dc;
    }

    tone_.assign(n_views_, ToneMapParams<T>{});
    for (auto& t : tone_) t.alpha = T(cfg_.alpha);
    reference_view_ = data.manifest.reference_view >= 0 ? data.manifest.reference_view
                                                        : select_reference_view(data);
    if (cfg_.enable_tonemap) {
        const auto wb = init_white_balance(data);
        for (std::size_t i = 0; i < n_views_; ++i) tone_[i].wb = wb[i].cast<T>();
        tone_[std::size_t(reference_view_)].wb_frozen = true;
    } else {
        for (auto& t : tone_) t.wb_frozen = true;  // identity tone map, never updated
    }

    build_ray_pool(data);
    order_.resize(rays_.size());
    for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = std::uint32_t(i);
    shuffle(order_, rng_);
    cursor_ = 0;

    opt_v_wb_.assign(n_views_, Vec3<T>{});
    opt_v_crf_.assign(n_views_, {});
    workspaces_.resize(std::size_t(cfg_.threads));
    batch_.reserve(std::size_t(cfg_.rays_per_batch));
}

template <class T>
void Trainer<T>::build_ray_pool(const LoadedDataset& data) {
    const Aabb<T> bounds = data.manifest.bounds.cast<T>();
    for (std::size_t i = 0; i < n_views_; ++i) {
        const Camera<T> cam = data.manifest.views[i].camera.cast<T>();
        const ImageBuffer& img = data.ldr[i];
        const auto& trainable = data.trainable[i];
        for (int y = 0; y < img.height; ++y)
            for (int x = 0; x < img.width; ++x) {
                const std::size_t p = std::size_t(y) * img.width + x;
                if (!trainable[p]) continue;
                RayRef r;
                r.view = std::uint32_t(i);
                r.px = std::uint16_t(x);
                r.py = std::uint16_t(y);
                for (int c = 0; c < 3; ++c) r.obs[c] = T(img.values[p * 3 + c]);
                r.mask_w = T(saturation_mask_rgb(
                    Vec3d{img.values[p * 3], img.values[p * 3 + 1], img.values[p * 3 + 2]},
                    cfg_.loss.mask_low, cfg_.loss.mask_high));
                r.ray = generate_ray(cam, T(x), T(y), bounds);
                r.basis = eval_sh_basis(r.ray.dir);
                rays_.push_back(r);
            }
    }
    if (rays_.empty()) throw std::invalid_argument("Trainer: dataset has no trainable rays");
}

template <class T>
void Trainer<T>::set_resolution(const GridRes& res, bool initial) {
    const std::int64_t vertices = res.vertex_count();
    opt_v_payload_.assign(std::size_t(vertices) * kPayloadDim, T(0));
    opt_stamp_.assign(std::size_t(vertices), -1);
    buffers_.resize(std::size_t(std::max(cfg_.threads, 1)));
    for (auto& b : buffers_) b.resize(vertices, n_views_);
    (void)initial;
}

template <class T>
void Trainer<T>::next_batch(std::vector<std::uint32_t>& batch) {
    batch.clear();
    while (batch.size() < std::size_t(cfg_.rays_per_batch)) {
        if (cursor_ >= order_.size()) {
            shuffle(order_, rng_);
            cursor_ = 0;
        }
        batch.push_back(order_[cursor_++]);
    }
}

template <class T>
void Trainer<T>::apply_ladder() {
    while (ladder_pos_ < cfg_.ladder.size() &&
           step_ == cfg_.ladder[ladder_pos_].at_iteration) {
        grid_ = grid_.upsample(cfg_.ladder[ladder_pos_].res);
        grid_ = grid_.prune(T(cfg_.prune_tau));
        set_resolution(cfg_.ladder[ladder_pos_].res, /*initial=*/false);
        ++ladder_pos_;
    }
}

template <class T>
std::vector<std::uint32_t> Trainer<T>::all_ray_indices() const {
    std::vector<std::uint32_t> v(rays_.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::uint32_t(i);
    return v;
}

template <class T>
typename Trainer<T>::StepStats Trainer<T>::forward_backward(
    const std::vector<std::uint32_t>& batch, bool with_grads) {
    const T step_size = current_step_size();
    const T cutoff = T(cfg_.trans_cutoff);
    const T inv_batch = T(1) / T(batch.size());
    const bool flip_sigma = debug_flip_sigma_adjoint;

    for (auto& b : buffers_) {
        // zero only what the previous pass dirtied
        for (const std::int64_t v : b.touched) {
            T* g = b.payload.data() + std::size_t(v) * kPayloadDim;
            for (int s = 0; s < kPayloadDim; ++s) g[s] = T(0);
            b.dirty[std::size_t(v)] = 0;
        }
        b.touched.clear();
        b.wb.assign(n_views_, Vec3<T>{});
        b.crf.assign(n_views_, {});
        b.recon = 0;
    }

    parallel_chunks(batch.size(), cfg_.threads, [&](std::size_t begin, std::size_t end, int w) {
        GradBuffers& buf = buffers_[std::size_t(w)];
        RayWorkspace<T>& ws = workspaces_[std::size_t(w)];
        struct Sink {
            GradBuffers* buf;
            bool flip;
            void add(std::int64_t vertex, int slot, T value) {
                buf->add(vertex, slot, (flip && slot == kSigmaOffset) ? -value : value);
            }
        } sink{&buf, flip_sigma};

        for (std::size_t i = begin; i < end; ++i) {
            const RayRef& rr = rays_[batch[i]];
            const ToneMapParams<T>& tp = tone_[rr.view];
            const Vec3<T> hdr =
                march_ray(grid_, rr.ray, rr.basis, step_size, cutoff, with_grads ? &ws : nullptr);
            const Vec3<T> pred = tonemap(hdr, tp);
            const Vec3<T> resid = pred - rr.obs;
            buf.recon += double(rr.mask_w) * double(resid.dot(resid));
            if (!with_grads) continue;

            const T scale = T(2) * rr.mask_w * inv_batch;
            const ToneMapGrads<T> tg = tonemap_backward(hdr, tp, scale * resid);
            if (cfg_.enable_tonemap) {
                buf.wb[rr.view] += tg.d_wb;
                auto& crf_g = buf.crf[rr.view];
                for (int ch = 0; ch < 3; ++ch) {
                    if (tg.knot[ch] < 0) continue;
                    crf_g[std::size_t(ch) * kCrfSize + tg.knot[ch]] += tg.d_knot_lo[ch];
                    crf_g[std::size_t(ch) * kCrfSize + tg.knot[ch] + 1] += tg.d_knot_hi[ch];
                }
            }
            march_ray_backward(grid_, ws, rr.basis, tg.d_hdr, sink);
        }
    });

    if (with_grads) merge_buffers();
    double recon = 0;
    for (const auto& b : buffers_) recon += b.recon;
    recon /= double(batch.size());

    StepStats s;
    s.step = step_;
    s.recon = recon;
    const bool tv_active = current_epoch() < cfg_.tv_epochs;
    if (tv_active) {
        s.tv_sigma = tv_loss(grid_, TvChannels::Sigma, cfg_.loss.tv_epsilon);
        s.tv_sh = tv_loss(grid_, TvChannels::Sh, cfg_.loss.tv_epsilon);
        if (with_grads) {
            tv_backward(grid_, TvChannels::Sigma, cfg_.loss.tv_epsilon,
                        T(cfg_.loss.lambda_tv_sigma), buffers_[0]);
            tv_backward(grid_, TvChannels::Sh, cfg_.loss.tv_epsilon, T(cfg_.loss.lambda_tv_sh),
                        buffers_[0]);
        }
    }
    s.smooth = smooth_loss(tone_);
    if (with_grads && cfg_.enable_tonemap)
        smooth_backward(tone_, T(cfg_.loss.lambda_smooth), buffers_[0].crf);
    s.total = total_loss(s.recon, s.tv_sigma, s.tv_sh, s.smooth, cfg_.loss);
    s.lr_sh = lr_exponential(step_, cfg_.lr_init, cfg_.lr_final, cfg_.total_lr_steps);
    s.lr_sigma = lr_delayed(step_, cfg_.lr_init, cfg_.lr_final, cfg_.sigma_lr_delay_steps,
                            cfg_.total_lr_steps);
    return s;
}

template <class T>
void Trainer<T>::merge_buffers() {
    GradBuffers& main = buffers_[0];
    for (std::size_t w = 1; w < buffers_.size(); ++w) {
        GradBuffers& b = buffers_[w];
        for (const std::int64_t v : b.touched) {
            T* src = b.payload.data() + std::size_t(v) * kPayloadDim;
            for (int s = 0; s < kPayloadDim; ++s) {
                if (src[s] != T(0)) main.add(v, s, src[s]);
            }
        }
        for (std::size_t i = 0; i < n_views_; ++i) {
            main.wb[i] += b.wb[i];
            for (std::size_t k = 0; k < b.crf[i].size(); ++k) main.crf[i][k] += b.crf[i][k];
        }
    }
}

template <class T>
void Trainer<T>::apply_optimizer() {
    GradBuffers& g = buffers_[0];
    const T beta = T(cfg_.rmsprop_beta);
    const T one_minus_beta = T(1) - beta;
    const T eps = T(cfg_.rmsprop_eps);
    const T lr_sh = T(lr_exponential(step_, cfg_.lr_init, cfg_.lr_final, cfg_.total_lr_steps));
    const T lr_sigma = T(lr_delayed(step_, cfg_.lr_init, cfg_.lr_final,
                                    cfg_.sigma_lr_delay_steps, cfg_.total_lr_steps));

    // high-band SH gradient masking
    const double rate = sh_mask_rate(current_epoch(), cfg_.sh_mask_epochs);
    if (rate > 0.0) {
        const T keep = T(1.0 - rate);
        const int k_lo = cfg_.sh_mask_l2_only ? 4 : 1;
        for (const std::int64_t v : g.touched) {
            T* gv = g.payload.data() + std::size_t(v) * kPayloadDim;
            for (int ch = 0; ch < 3; ++ch)
                for (int k = k_lo; k < kShCount; ++k) gv[ch * kShCount + k] *= keep;
        }
    }

    for (const std::int64_t v : g.touched) {
        T* gv = g.payload.data() + std::size_t(v) * kPayloadDim;
        T* vv = opt_v_payload_.data() + std::size_t(v) * kPayloadDim;
        T* pv = grid_.payload_ptr(v);
        const std::int64_t delta = step_ - opt_stamp_[std::size_t(v)];
        opt_stamp_[std::size_t(v)] = step_;
        const T decay = delta == 1 ? beta : T(std::pow(double(beta), double(delta)));
        for (int s = 0; s < kPayloadDim; ++s) {
            const T gg = gv[s];
            if (!std::isfinite(double(gg)))
                throw TrainingDiverged(s == kSigmaOffset
                                           ? "non-finite gradient in parameter group sigma"
                                           : "non-finite gradient in parameter group sh");
            if (vv[s] != T(0)) vv[s] *= decay;
            vv[s] += one_minus_beta * gg * gg;
            pv[s] -= (s == kSigmaOffset ? lr_sigma : lr_sh) * gg / (std::sqrt(vv[s]) + eps);
        }
    }

    if (cfg_.enable_tonemap) {
        // tone-map parameters share the SH schedule
        if (cfg_.shared_crf) {
            for (std::size_t i = 1; i < n_views_; ++i)
                for (std::size_t k = 0; k < g.crf[i].size(); ++k) g.crf[0][k] += g.crf[i][k];
        }
        for (std::size_t i = 0; i < n_views_; ++i) {
            ToneMapParams<T>& t = tone_[i];
            if (!t.wb_frozen) {
                rmsprop_step(&t.wb.x, &g.wb[i].x, &opt_v_wb_[i].x, 3, lr_sh, beta, eps, "wb");
                for (int c = 0; c < 3; ++c) t.wb[c] = std::max(t.wb[c], T(1e-6));
            }
            if (cfg_.shared_crf && i > 0) continue;
            auto& crf_g = g.crf[i];
            for (int ch = 0; ch < 3; ++ch) {  // endpoints are pinned, not optimized
                crf_g[std::size_t(ch) * kCrfSize] = T(0);
                crf_g[std::size_t(ch) * kCrfSize + kCrfSize - 1] = T(0);
            }
            rmsprop_step(&t.crf[0][0], crf_g.data(), &opt_v_crf_[i][0], 3 * kCrfSize, lr_sh, beta,
                         eps, "crf");
            for (int ch = 0; ch < 3; ++ch) {
                t.crf[ch].front() = T(0);
                t.crf[ch].back() = T(1);
            }
        }
        if (cfg_.shared_crf)
            for (std::size_t i = 1; i < n_views_; ++i) tone_[i].crf = tone_[0].crf;
    }
}

template <class T>
typename Trainer<T>::StepStats Trainer<T>::step() {
    apply_ladder();
    next_batch(batch_);
    const StepStats s = forward_backward(batch_, /*with_grads=*/true);
    if (initial_total_ < 0.0) {
        initial_total_ = s.total;
    } else if (s.total > 10.0 * initial_total_) {
        throw TrainingDiverged("total loss " + std::to_string(s.total) + " exceeds 10x initial " +
                               std::to_string(initial_total_) + " (recon term)");
    }
    apply_optimizer();
    ++step_;
    return s;
}

template <class T>
void Trainer<T>::run(const std::string& out_dir,
                     const std::function<void(const StepStats&)>& on_step) {
    std::ofstream log;
    if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        log.open((fs::path(out_dir) / "train_log.csv").string());
        log << "step,recon,tv_sigma,tv_sh,smooth,total,lr_sh,lr_sigma\n";
        log << std::setprecision(10);
    }
    const std::int64_t total = cfg_.total_iterations();
    while (step_ < total) {
        const StepStats s = step();
        if (log.is_open())
            log << s.step << "," << s.recon << "," << s.tv_sigma << "," << s.tv_sh << ","
                << s.smooth << "," << s.total << "," << s.lr_sh << "," << s.lr_sigma << "\n";
        if (on_step) on_step(s);
        if (!out_dir.empty() && cfg_.checkpoint_every_epochs > 0 &&
            step_ % (std::int64_t(cfg_.iters_per_epoch) * cfg_.checkpoint_every_epochs) == 0 &&
            step_ < total) {
            char name[48];
            std::snprintf(name, sizeof(name), "ckpt_epoch%03d.hvck", current_epoch());
            save_checkpoint((fs::path(out_dir) / name).string());
        }
    }
    if (!out_dir.empty()) {
        if (!grid_.all_finite())
            throw TrainingDiverged("non-finite grid payload at end of training");
        save_checkpoint((fs::path(out_dir) / "ckpt_final.hvck").string());
        save_grid((fs::path(out_dir) / "grid_final.hvxf").string(), grid_);
        std::vector<ToneMapParams<double>> tone_d;
        for (const auto& t : tone_) tone_d.push_back(t.template cast<double>());
        export_crf_csv((fs::path(out_dir) / "crf_final.csv").string(), tone_d);
    }
}

// ---------------------------------------------------------------------------
// checkpoint serialization
// ---------------------------------------------------------------------------

namespace {

constexpr std::uint32_t kCkptMagic = 0x4B435648;  // "HVCK"
constexpr std::uint32_t kCkptVersion = 1;

template <class V>
void wr(std::ostream& os, const V& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(V));
}
template <class V>
V rd(std::istream& is) {
    V v;
    is.read(reinterpret_cast<char*>(&v), sizeof(V));
    return v;
}
template <class V>
void wr_array(std::ostream& os, const V* data, std::size_t n) {
    os.write(reinterpret_cast<const char*>(data), std::streamsize(n * sizeof(V)));
}
template <class V>
void rd_array(std::istream& is, V* data, std::size_t n) {
    is.read(reinterpret_cast<char*>(data), std::streamsize(n * sizeof(V)));
}

template <class T>
void write_grid_native(std::ostream& os, const VoxelGrid<T>& g) {
    const GridRes r = g.res();
    wr(os, std::uint32_t(r.nx));
    wr(os, std::uint32_t(r.ny));
    wr(os, std::uint32_t(r.nz));
    for (int a = 0; a < 3; ++a) wr(os, double(g.bounds().min[a]));
    for (int a = 0; a < 3; ++a) wr(os, double(g.bounds().max[a]));
    wr(os, double(g.color_offset));
    wr_array(os, g.raw_payloads().data(), g.raw_payloads().size());
    wr_array(os, g.raw_occupancy().data(), g.raw_occupancy().size());
}

template <class T>
VoxelGrid<T> read_grid_native(std::istream& is) {
    GridRes r;
    r.nx = int(rd<std::uint32_t>(is));
    r.ny = int(rd<std::uint32_t>(is));
    r.nz = int(rd<std::uint32_t>(is));
    Aabb<T> b;
    for (int a = 0; a < 3; ++a) b.min[a] = T(rd<double>(is));
    for (int a = 0; a < 3; ++a) b.max[a] = T(rd<double>(is));
    VoxelGrid<T> g(r, b);
    g.color_offset = T(rd<double>(is));
    rd_array(is, g.raw_payloads().data(), g.raw_payloads().size());
    rd_array(is, g.raw_occupancy().data(), g.raw_occupancy().size());
    return g;
}

template <class T>
void write_tone_records(std::ostream& os, const std::vector<ToneMapParams<T>>& tone) {
    wr(os, std::uint32_t(tone.size()));
    for (std::size_t i = 0; i < tone.size(); ++i) {
        wr(os, std::uint32_t(i));
        for (int c = 0; c < 3; ++c) wr(os, double(tone[i].wb[c]));
        wr(os, std::uint8_t(tone[i].wb_frozen ? 1 : 0));
        wr(os, double(tone[i].alpha));
        for (int ch = 0; ch < 3; ++ch)
            for (int k = 0; k < kCrfSize; ++k) wr(os, float(tone[i].crf[ch][k]));
    }
}

template <class T>
std::vector<ToneMapParams<T>> read_tone_records(std::istream& is) {
    const std::uint32_t n = rd<std::uint32_t>(is);
    std::vector<ToneMapParams<T>> tone(n);
    for (std::uint32_t i = 0; i < n; ++i) {
        (void)rd<std::uint32_t>(is);  // view id == index
        for (int c = 0; c < 3; ++c) tone[i].wb[c] = T(rd<double>(is));
        tone[i].wb_frozen = rd<std::uint8_t>(is) != 0;
        tone[i].alpha = T(rd<double>(is));
        for (int ch = 0; ch < 3; ++ch)
            for (int k = 0; k < kCrfSize; ++k) tone[i].crf[ch][k] = T(rd<float>(is));
    }
    return tone;
}

}  // namespace

template <class T>
void Trainer<T>::save_checkpoint(const std::string& path) const {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("save_checkpoint: cannot open " + path);
    wr(os, kCkptMagic);
    wr(os, kCkptVersion);
    wr(os, std::uint8_t(sizeof(T)));
    write_grid_native(os, grid_);
    wr(os, std::int32_t(reference_view_));
    write_tone_records(os, tone_);

    wr(os, std::uint8_t(1));  // trainer state present
    wr(os, step_);
    wr(os, std::uint64_t(ladder_pos_));
    wr(os, initial_total_);
    wr_array(os, opt_v_payload_.data(), opt_v_payload_.size());
    wr_array(os, opt_stamp_.data(), opt_stamp_.size());
    for (const auto& v : opt_v_wb_)
        for (int c = 0; c < 3; ++c) wr(os, v[c]);
    for (const auto& v : opt_v_crf_) wr_array(os, v.data(), v.size());
    wr(os, std::uint64_t(cursor_));
    wr(os, std::uint32_t(order_.size()));
    wr_array(os, order_.data(), order_.size());
    const std::string rng = rng_.state();
    wr(os, std::uint32_t(rng.size()));
    os.write(rng.data(), std::streamsize(rng.size()));
    if (!os) throw std::runtime_error("save_checkpoint: write failed for " + path);
}

template <class T>
void Trainer<T>::resume_from(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("resume_from: cannot open " + path);
    if (rd<std::uint32_t>(is) != kCkptMagic) throw std::runtime_error("resume_from: bad magic");
    if (rd<std::uint32_t>(is) != kCkptVersion)
        throw std::runtime_error("resume_from: unsupported version");
    if (rd<std::uint8_t>(is) != sizeof(T))
        throw std::runtime_error("resume_from: checkpoint precision mismatch");
    grid_ = read_grid_native<T>(is);
    reference_view_ = int(rd<std::int32_t>(is));
    tone_ = read_tone_records<T>(is);
    if (tone_.size() != n_views_) throw std::runtime_error("resume_from: view count mismatch");
    if (rd<std::uint8_t>(is) != 1)
        throw std::runtime_error("resume_from: checkpoint lacks trainer state");
    step_ = rd<std::int64_t>(is);
    ladder_pos_ = std::size_t(rd<std::uint64_t>(is));
    initial_total_ = rd<double>(is);
    set_resolution(grid_.res(), false);
    rd_array(is, opt_v_payload_.data(), opt_v_payload_.size());
    rd_array(is, opt_stamp_.data(), opt_stamp_.size());
    for (auto& v : opt_v_wb_)
        for (int c = 0; c < 3; ++c) v[c] = rd<T>(is);
    for (auto& v : opt_v_crf_) rd_array(is, v.data(), v.size());
    cursor_ = std::size_t(rd<std::uint64_t>(is));
    const std::uint32_t order_n = rd<std::uint32_t>(is);
    if (order_n != rays_.size()) throw std::runtime_error("resume_from: ray pool mismatch");
    order_.resize(order_n);
    rd_array(is, order_.data(), order_.size());
    std::string rng(rd<std::uint32_t>(is), '\0');
    is.read(rng.data(), std::streamsize(rng.size()));
    if (!is) throw std::runtime_error("resume_from: truncated checkpoint");
    rng_.set_state(rng);
}

ModelCheckpoint load_model_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("load_model_checkpoint: cannot open " + path);
    if (rd<std::uint32_t>(is) != kCkptMagic)
        throw std::runtime_error("load_model_checkpoint: bad magic in " + path);
    if (rd<std::uint32_t>(is) != kCkptVersion)
        throw std::runtime_error("load_model_checkpoint: unsupported version");
    const int prec = rd<std::uint8_t>(is);
    ModelCheckpoint m;
    m.precision_bytes = prec;
    if (prec == 4) {
        const VoxelGrid<float> g = read_grid_native<float>(is);
        m.grid = g.cast<double>();
        m.reference_view = int(rd<std::int32_t>(is));
        m.tone = read_tone_records<double>(is);
    } else if (prec == 8) {
        m.grid = read_grid_native<double>(is);
        m.reference_view = int(rd<std::int32_t>(is));
        m.tone = read_tone_records<double>(is);
    } else {
        throw std::runtime_error("load_model_checkpoint: bad precision tag");
    }
    m.has_trainer_state = rd<std::uint8_t>(is) != 0;
    return m;
}

void export_crf_csv(const std::string& path, const std::vector<ToneMapParams<double>>& tone) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("export_crf_csv: cannot open " + path);
    out << "view,channel,knot,value\n" << std::setprecision(10);
    for (std::size_t i = 0; i < tone.size(); ++i)
        for (int ch = 0; ch < 3; ++ch)
            for (int k = 0; k < kCrfSize; ++k)
                out << i << "," << ch << "," << k << "," << tone[i].crf[ch][k] << "\n";
}

template class Trainer<float>;
template class Trainer<double>;

}  // namespace hdrvox
