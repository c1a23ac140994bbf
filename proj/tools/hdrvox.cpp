// Copyright (c) 2026 the hdrvox authors.
// SPDX-License-Identifier: Apache-2.0

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>

#include <CLI11.hpp>

#include "hdrvox/gradcheck.hpp"
#include "hdrvox/metrics.hpp"
#include "hdrvox/oracle.hpp"
#include "hdrvox/render.hpp"
#include "hdrvox/trainer.hpp"

namespace fs = std::filesystem;
using namespace hdrvox;

namespace {

// stable exit codes: 2 bad input, 3 I/O failure, 4 divergence, 5 gradcheck
constexpr int kExitBadInput = 2;
constexpr int kExitIo = 3;
constexpr int kExitDiverged = 4;
constexpr int kExitGradcheck = 5;

OracleSceneSpec resolve_scene_spec(const std::string& spec) {
    if (spec == "default") return default_scene_spec();
    if (spec == "glossy") return glossy_scene_spec();
    if (spec == "tiny") return tiny_scene_spec(16);
    return load_scene_spec(spec);
}

ImageBuffer hdr_to_image(const std::vector<Vec3d>& hdr, int w, int h) {
    ImageBuffer img(w, h);
    for (std::size_t p = 0; p < hdr.size(); ++p)
        for (int c = 0; c < 3; ++c) img.values[p * 3 + c] = float(hdr[p][c]);
    return img;
}

ImageBuffer render_ldr_quantized(const std::vector<Vec3d>& hdr, int w, int h,
                                 const ToneMapParams<double>& tone) {
    ImageBuffer img(w, h);
    for (std::size_t p = 0; p < hdr.size(); ++p) {
        const Vec3d ldr = tonemap(hdr[p], tone);
        for (int c = 0; c < 3; ++c) {
            const float v = float(std::clamp(ldr[c], 0.0, 1.0));
            img.values[p * 3 + c] = float(std::lround(v * 255.0f)) / 255.0f;
        }
    }
    return img;
}

int find_view(const DatasetManifest& m, int id) {
    for (std::size_t i = 0; i < m.views.size(); ++i)
        if (m.views[i].id == id) return int(i);
    throw std::invalid_argument("unknown view id " + std::to_string(id));
}

int cmd_synth(const std::string& spec_name, const std::string& out, std::uint64_t seed,
              const std::string& profile, int views, int width, int height) {
    OracleSceneSpec spec = resolve_scene_spec(spec_name);
    SynthOptions opts;
    opts.seed = seed;
    opts.n_views = views;
    opts.width = width;
    opts.height = height;
    synthesize_dataset(spec, profile, opts, out);
    std::cout << "synth: wrote " << views << "-view dataset to " << out << "\n";
    return 0;
}

int cmd_train(const std::string& data_path, const std::string& config_path,
              const std::string& preset, const std::string& out, std::int64_t seed, int threads,
              bool deterministic, const std::string& resume) {
    TrainConfig cfg = config_path.empty() ? preset_config(preset) : load_train_config(config_path);
    if (seed >= 0) cfg.seed = std::uint64_t(seed);
    if (threads > 0) cfg.threads = threads;
    if (deterministic) {
        cfg.deterministic = true;
        cfg.threads = threads > 0 ? threads : 1;
    }
    cfg.validate();

    const LoadedDataset data = load_dataset(data_path);
    auto run = [&](auto tag) {
        using T = decltype(tag);
        Trainer<T> trainer(data, cfg);
        if (!resume.empty()) trainer.resume_from(resume);
        trainer.run(out);
        std::cout << "train: finished " << trainer.current_step() << " iterations; checkpoint at "
                  << (fs::path(out) / "ckpt_final.hvck").string() << "\n";
    };
    if (cfg.precision == "fp64") run(double{});
    else run(float{});
    return 0;
}

int cmd_render(const std::string& ckpt, const std::string& data_path, int view_id,
               const std::string& pose_path, const std::string& out_prefix, bool ldr,
               double exposure_scale, const std::string& wb_str, int crf_from, double step_arg) {
    const ModelCheckpoint model = load_model_checkpoint(ckpt);

    Camerad cam;
    ToneMapParams<double> tone;
    if (!pose_path.empty()) {
        cam = load_camera_json(pose_path);
        tone = model.tone.at(std::size_t(model.reference_view));
    } else {
        const DatasetManifest m = load_manifest(data_path);
        const int idx = find_view(m, view_id);
        cam = m.views[std::size_t(idx)].camera;
        tone = model.tone.at(std::size_t(idx));
    }

    std::optional<Vec3d> wb_override;
    if (!wb_str.empty()) {
        Vec3d wb;
        if (std::sscanf(wb_str.c_str(), "%lf,%lf,%lf", &wb.x, &wb.y, &wb.z) != 3)
            throw std::invalid_argument("--wb expects r,g,b");
        wb_override = wb;
    }
    std::optional<std::array<CrfTable<double>, 3>> crf_override;
    if (crf_from >= 0) crf_override = model.tone.at(std::size_t(crf_from)).crf;
    tone = edit_render(tone, wb_override, std::optional<double>(exposure_scale), crf_override);

    const double step = step_arg > 0 ? step_arg : 0.5 * model.grid.min_voxel_edge();
    const auto hdr = render_hdr(model.grid, cam, {}, step);
    write_pfm(out_prefix + ".pfm", hdr_to_image(hdr, cam.width, cam.height));
    if (ldr) write_png(out_prefix + ".png", render_ldr_quantized(hdr, cam.width, cam.height, tone));
    std::cout << "render: wrote " << out_prefix << ".pfm" << (ldr ? " and .png" : "") << "\n";
    return 0;
}

int cmd_eval(const std::string& ckpt, const std::string& data_path, const std::string& report,
             bool use_gt) {
    const LoadedDataset data = load_dataset(data_path);
    const fs::path root = fs::path(data_path).parent_path();

    VoxelGrid<double> grid;
    std::vector<ToneMapParams<double>> tone;
    int reference = 0;
    if (use_gt) {
        const OracleSceneSpec spec = load_scene_spec((root / "scene_spec.txt").string());
        std::uint64_t seed = 1;
        {
            std::ifstream sin((root / "synth.json").string());
            if (sin) {
                std::string text((std::istreambuf_iterator<char>(sin)),
                                 std::istreambuf_iterator<char>());
                const auto pos = text.find("\"seed\":");
                if (pos != std::string::npos) seed = std::stoull(text.substr(pos + 7));
            }
        }
        grid = build_scene(spec, seed);
        const GTToneProfile profile = load_profile((root / "gt_profile.json").string());
        for (std::size_t i = 0; i < profile.view_count(); ++i)
            tone.push_back(profile.view_params(i));
        reference = 0;
    } else {
        ModelCheckpoint model = load_model_checkpoint(ckpt);
        grid = std::move(model.grid);
        tone = std::move(model.tone);
        reference = model.reference_view;
    }
    if (tone.size() != data.view_count())
        throw std::invalid_argument("eval: checkpoint view count does not match dataset");

    const double step = 0.5 * grid.min_voxel_edge();
    std::ostringstream csv;
    csv << "view,role,masked_psnr\n" << std::setprecision(8);
    double sum = 0.0;
    int count = 0;
    std::cout << "per-view masked PSNR on held-out right halves:\n";
    for (std::size_t i = 0; i < data.view_count(); ++i) {
        const ViewEntry& v = data.manifest.views[i];
        if (v.role != ViewRole::Test) continue;
        const auto hdr = render_hdr(grid, v.camera, {}, step);
        const ImageBuffer pred =
            render_ldr_quantized(hdr, v.camera.width, v.camera.height, tone[i]);
        const double psnr =
            masked_psnr(pred, data.ldr[i], right_half_mask(v.camera.width, v.camera.height));
        csv << v.id << ",test," << psnr << "\n";
        std::cout << "  view " << v.id << ": " << std::fixed << std::setprecision(2) << psnr
                  << " dB\n";
        sum += psnr;
        ++count;
    }
    if (count == 0) throw std::invalid_argument("eval: dataset has no test views");
    const double mean = sum / count;
    csv << "mean,test," << std::setprecision(8) << mean << "\n";
    std::cout << "  mean: " << std::fixed << std::setprecision(2) << mean << " dB\n";

    const fs::path profile_path = root / "gt_profile.json";
    if (fs::exists(profile_path) && !data.hdr.empty() && data.hdr[0].width > 0) {
        const GTToneProfile profile = load_profile(profile_path.string());
        const RecoveryReport rec = gt_compare(grid, tone, reference, data, profile);
        std::cout << "ground-truth recovery:\n"
                  << "  max wb rel err (ref-normalized): " << std::setprecision(4)
                  << rec.max_wb_rel_err << "\n"
                  << "  max CRF RMSE: " << rec.max_crf_rmse << "\n"
                  << "  min held-out HDR PSNR (scale-aligned): " << std::setprecision(2)
                  << rec.min_hdr_psnr << " dB\n";
        csv << "max_wb_rel_err,recovery," << std::setprecision(8) << rec.max_wb_rel_err << "\n";
        csv << "max_crf_rmse,recovery," << rec.max_crf_rmse << "\n";
        csv << "min_hdr_psnr,recovery," << rec.min_hdr_psnr << "\n";
    }

    if (!report.empty()) {
        std::ofstream out(report);
        if (!out) throw std::runtime_error("eval: cannot open report " + report);
        out << csv.str();
    }
    return 0;
}

int cmd_gradcheck(std::uint64_t seed, bool flip) {
    GradCheckOptions opts;
    opts.seed = seed;
    opts.flip_sigma_adjoint = flip;
    const auto t0 = std::chrono::steady_clock::now();
    const GradCheckResult r = run_gradcheck(opts);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cout << format_gradcheck(r);
    std::cout << "runtime: " << std::fixed << std::setprecision(2) << secs << " s\n";
    if (!r.passed) {
        std::cerr << "gradcheck failed: worst group " << r.worst_group << " rel err "
                  << r.max_rel_err << "\n";
        return kExitGradcheck;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"hdrvox: self-calibrating HDR voxel radiance fields"};
    app.require_subcommand(1);

    // synth
    auto* synth = app.add_subcommand("synth", "generate an oracle dataset");
    std::string sy_spec = "default", sy_out, sy_profile = "varying";
    std::uint64_t sy_seed = 1;
    int sy_views = 20, sy_w = 64, sy_h = 64;
    synth->add_option("--spec", sy_spec, "scene: default|glossy|tiny or a scene file");
    synth->add_option("--out", sy_out, "output directory")->required();
    synth->add_option("--seed", sy_seed, "rig/profile seed");
    synth->add_option("--profile", sy_profile, "varying|static");
    synth->add_option("--views", sy_views, "number of views");
    synth->add_option("--width", sy_w, "image width");
    synth->add_option("--height", sy_h, "image height");

    // train
    auto* train = app.add_subcommand("train", "optimize a radiance field on a dataset");
    std::string tr_data, tr_config, tr_preset = "desk", tr_out, tr_resume;
    std::int64_t tr_seed = -1;
    int tr_threads = 0;
    bool tr_det = false;
    train->add_option("--data", tr_data, "dataset manifest path")->required();
    train->add_option("--config", tr_config, "training config file");
    train->add_option("--preset", tr_preset, "config preset: desk|smoke|paper|baseline");
    train->add_option("--out", tr_out, "output directory")->required();
    train->add_option("--seed", tr_seed, "override the config seed");
    train->add_option("--threads", tr_threads, "worker threads");
    train->add_flag("--deterministic", tr_det, "bit-reproducible mode (single worker by default)");
    train->add_option("--resume", tr_resume, "resume from a checkpoint");

    // render
    auto* render = app.add_subcommand("render", "render a view from a checkpoint");
    std::string rd_ckpt, rd_data, rd_pose, rd_out, rd_wb;
    int rd_view = -1, rd_crf_from = -1;
    bool rd_ldr = false;
    double rd_exposure = 1.0, rd_step = 0.0;
    render->add_option("--ckpt", rd_ckpt, "checkpoint path")->required();
    render->add_option("--data", rd_data, "dataset manifest (for --view cameras)");
    render->add_option("--view", rd_view, "view id to render");
    render->add_option("--pose", rd_pose, "camera JSON for a free pose");
    render->add_option("--out", rd_out, "output prefix")->required();
    render->add_flag("--ldr", rd_ldr, "also write the tone-mapped PNG");
    render->add_option("--exposure-scale", rd_exposure, "white-balance scale (2^EV)");
    render->add_option("--wb", rd_wb, "white-balance override r,g,b");
    render->add_option("--crf-from", rd_crf_from, "borrow the CRF of another view");
    render->add_option("--step", rd_step, "marching step override");

    // eval
    auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on a dataset");
    std::string ev_ckpt, ev_data, ev_report;
    bool ev_gt = false;
    eval->add_option("--ckpt", ev_ckpt, "checkpoint path");
    eval->add_option("--data", ev_data, "dataset manifest")->required();
    eval->add_option("--report", ev_report, "CSV report path");
    eval->add_flag("--gt", ev_gt, "evaluate the dataset's own ground truth");

    // gradcheck
    auto* gc = app.add_subcommand("gradcheck", "finite-difference validation of all gradients");
    std::uint64_t gc_seed = 7;
    bool gc_flip = false;
    gc->add_option("--seed", gc_seed, "sampling seed");
    gc->add_flag("--flip-sigma-adjoint", gc_flip,
                 "negative control: corrupt the opacity adjoint");

    CLI11_PARSE(app, argc, argv);

    try {
        if (synth->parsed())
            return cmd_synth(sy_spec, sy_out, sy_seed, sy_profile, sy_views, sy_w, sy_h);
        if (train->parsed())
            return cmd_train(tr_data, tr_config, tr_preset, tr_out, tr_seed, tr_threads, tr_det,
                             tr_resume);
        if (render->parsed()) {
            if ((rd_view >= 0) == !rd_pose.empty())
                throw std::invalid_argument("render: exactly one of --view/--pose is required");
            if (rd_view >= 0 && rd_data.empty())
                throw std::invalid_argument("render: --view requires --data");
            return cmd_render(rd_ckpt, rd_data, rd_view, rd_pose, rd_out, rd_ldr, rd_exposure,
                              rd_wb, rd_crf_from, rd_step);
        }
        if (eval->parsed()) {
            if (!ev_gt && ev_ckpt.empty())
                throw std::invalid_argument("eval: --ckpt is required without --gt");
            return cmd_eval(ev_ckpt, ev_data, ev_report, ev_gt);
        }
        if (gc->parsed()) return cmd_gradcheck(gc_seed, gc_flip);
    } catch (const TrainingDiverged& e) {
        std::cerr << "training aborted: " << e.what() << "\n";
        return kExitDiverged;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitBadInput;
    } catch (const std::out_of_range& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitBadInput;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    }
    return 0;
}
