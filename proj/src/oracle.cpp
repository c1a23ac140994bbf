// Copyright (c) 2026 the hdrvox authors.
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "hdrvox/metrics.hpp"
#include "hdrvox/oracle.hpp"
#include "hdrvox/render.hpp"
#include "hdrvox/util.hpp"

namespace hdrvox {

namespace fs = std::filesystem;
using nlohmann::json;

OracleSceneSpec default_scene_spec() {
    // Emissions span roughly [1e-3, 7] so that every exposure in a +-3EV
    // cycle observes both ends of its response curve: the faint near-face box
    // anchors the dark knots of the +3EV views, the two hot spheres anchor
    // the top knots of the -3EV views, and the haze keeps background rays
    // informative without drowning the shadows in glow.
    OracleSceneSpec s;
    s.name = "default";
    s.background_sigma = 0.03;
    s.background_emission = {0.85, 0.80, 0.90};
    using Shape = Primitive::Shape;
    s.primitives = {
        {Shape::Sphere, {0.0, 0.2, 0.35}, 0.38, {3.2, 2.7, 2.2}, 45.0, {}},
        {Shape::Sphere, {0.62, 0.4, 0.2}, 0.22, {6.8, 5.6, 7.4}, 45.0, {}},
        {Shape::Sphere, {0.55, -0.33, -0.25}, 0.26, {1.5, 1.15, 0.9}, 35.0, {}},
        {Shape::Box, {-0.5, 0.45, 0.1}, 0.22, {0.42, 0.55, 0.3}, 30.0, {}},
        {Shape::Box, {0.05, -0.52, 0.4}, 0.24, {0.1, 0.123, 0.08}, 32.0, {}},
        {Shape::Box, {-0.35, -0.1, 0.6}, 0.20, {0.022, 0.018, 0.028}, 30.0, {}},
        // near-face deep shadow, kept in front of most of the haze
        {Shape::Box, {-0.55, -0.45, -0.72}, 0.26, {1.1e-3, 0.9e-3, 1.4e-3}, 45.0, {}},
    };
    return s;
}

OracleSceneSpec glossy_scene_spec() {
    OracleSceneSpec s = default_scene_spec();
    s.name = "glossy";
    // view-dependent lobe on the bright emitter
    s.primitives[0].sh1 = {1.1, 0.9, 0.7};
    return s;
}

OracleSceneSpec tiny_scene_spec(int res) {
    OracleSceneSpec s;
    s.name = "tiny";
    s.res = {res, res, res};
    s.background_sigma = 0.25;
    s.background_emission = {0.12, 0.10, 0.14};
    s.primitives = {
        {Primitive::Shape::Sphere, {0.05, 0.1, 0.0}, 0.45, {1.6, 1.1, 0.8}, 18.0, {}},
        {Primitive::Shape::Box, {-0.4, -0.35, 0.25}, 0.3, {0.04, 0.05, 0.06}, 14.0, {}},
    };
    return s;
}

void save_scene_spec(const std::string& path, const OracleSceneSpec& spec) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_scene_spec: cannot open " + path);
    out << "name = " << spec.name << "\n";
    out << "res = " << spec.res.nx << " " << spec.res.ny << " " << spec.res.nz << "\n";
    out << "bounds_min = " << spec.bounds.min.x << " " << spec.bounds.min.y << " "
        << spec.bounds.min.z << "\n";
    out << "bounds_max = " << spec.bounds.max.x << " " << spec.bounds.max.y << " "
        << spec.bounds.max.z << "\n";
    out.precision(17);
    out << "background_sigma = " << spec.background_sigma << "\n";
    out << "background_emission = " << spec.background_emission.x << " "
        << spec.background_emission.y << " " << spec.background_emission.z << "\n";
    for (const auto& p : spec.primitives) {
        out << (p.shape == Primitive::Shape::Sphere ? "sphere = " : "box = ");
        out << p.center.x << " " << p.center.y << " " << p.center.z << " " << p.size << " "
            << p.emission.x << " " << p.emission.y << " " << p.emission.z << " " << p.sigma << " "
            << p.sh1.x << " " << p.sh1.y << " " << p.sh1.z << "\n";
    }
}

OracleSceneSpec load_scene_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_scene_spec: cannot open " + path);
    OracleSceneSpec s;
    s.primitives.clear();
    std::string line;
    while (std::getline(in, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        std::string key = line.substr(0, eq);
        std::istringstream val(line.substr(eq + 1));
        key.erase(0, key.find_first_not_of(" \t"));
        key.erase(key.find_last_not_of(" \t") + 1);
        if (key == "name") {
            val >> s.name;
        } else if (key == "res") {
            val >> s.res.nx >> s.res.ny >> s.res.nz;
        } else if (key == "bounds_min") {
            val >> s.bounds.min.x >> s.bounds.min.y >> s.bounds.min.z;
        } else if (key == "bounds_max") {
            val >> s.bounds.max.x >> s.bounds.max.y >> s.bounds.max.z;
        } else if (key == "background_sigma") {
            val >> s.background_sigma;
        } else if (key == "background_emission") {
            val >> s.background_emission.x >> s.background_emission.y >> s.background_emission.z;
        } else if (key == "sphere" || key == "box") {
            Primitive p;
            p.shape = key == "sphere" ? Primitive::Shape::Sphere : Primitive::Shape::Box;
            val >> p.center.x >> p.center.y >> p.center.z >> p.size >> p.emission.x >>
                p.emission.y >> p.emission.z >> p.sigma;
            val >> p.sh1.x >> p.sh1.y >> p.sh1.z;  // optional; zero when absent
            if (val.fail() && !val.eof())
                throw std::runtime_error("load_scene_spec: malformed primitive line");
            s.primitives.push_back(p);
        } else {
            throw std::runtime_error("load_scene_spec: unknown key " + key);
        }
    }
    if (s.primitives.empty()) throw std::runtime_error("load_scene_spec: no primitives");
    return s;
}

namespace {

bool inside(const Primitive& p, const Vec3d& x) {
    if (p.shape == Primitive::Shape::Sphere) {
        const Vec3d d = x - p.center;
        return d.dot(d) <= p.size * p.size;
    }
    return std::abs(x.x - p.center.x) <= p.size && std::abs(x.y - p.center.y) <= p.size &&
           std::abs(x.z - p.center.z) <= p.size;
}

constexpr double kShDc = 0.28209479177387814;  // Y00
constexpr double kShLin = 0.4886025119029199;  // |Y1m| scale

// DC coefficient that evaluates to `emission` under the 0.5 color offset.
double dc_coeff(double emission) { return (emission - 0.5) / kShDc; }

}  // namespace

VoxelGrid<double> build_scene(const OracleSceneSpec& spec, std::uint64_t seed) {
    (void)seed;  // rasterization is deterministic; the seed drives the rig
    if (spec.primitives.empty()) throw std::invalid_argument("build_scene: empty scene");
    VoxelGrid<double> g(spec.res, spec.bounds);
    for (int iz = 0; iz <= spec.res.nz; ++iz)
        for (int iy = 0; iy <= spec.res.ny; ++iy)
            for (int ix = 0; ix <= spec.res.nx; ++ix) {
                const Vec3d pos = g.vertex_pos(ix, iy, iz);
                const Primitive* hit = nullptr;
                for (const auto& p : spec.primitives)
                    if (inside(p, pos)) hit = &p;  // last primitive wins
                VertexPayload<double> pay;
                if (hit) {
                    pay.sigma = hit->sigma;
                    for (int ch = 0; ch < 3; ++ch) {
                        pay.sh[ch * kShCount + 0] = dc_coeff(hit->emission[ch]);
                        // z-lobe for the glossy preset; Y10 = kShLin * z
                        pay.sh[ch * kShCount + 2] = hit->sh1[ch] / kShLin * 0.25;
                    }
                } else {
                    pay.sigma = spec.background_sigma;
                    for (int ch = 0; ch < 3; ++ch)
                        pay.sh[ch * kShCount + 0] = dc_coeff(spec.background_emission[ch]);
                }
                g.set_vertex_payload(g.vertex_index(ix, iy, iz), pay);
            }
    return g;
}

ToneMapParams<double> GTToneProfile::view_params(std::size_t i) const {
    ToneMapParams<double> p;
    p.wb = wb.at(i);
    for (int ch = 0; ch < 3; ++ch)
        for (int k = 0; k < kCrfSize; ++k)
            p.crf[ch][k] = std::pow(double(k) / double(kCrfSize - 1), 1.0 / gamma.at(i));
    return p;
}

GTToneProfile varying_profile(int n_views, double ev_range, double gain, double gamma) {
    GTToneProfile p;
    for (int i = 0; i < n_views; ++i) {
        const double ev = (i % 3 == 0) ? -ev_range : (i % 3 == 1 ? 0.0 : ev_range);
        Vec3d ratios{1.0, 1.0, 1.0};
        ratios[(i / 3) % 3] = gain;  // the per-channel gain cycles across views
        p.wb.push_back(std::pow(2.0, ev) * ratios);
        p.gamma.push_back(gamma);
    }
    return p;
}

GTToneProfile static_profile(int n_views, double gamma) {
    GTToneProfile p;
    for (int i = 0; i < n_views; ++i) {
        p.wb.push_back(Vec3d{1.0, 1.0, 1.0});
        p.gamma.push_back(gamma);
    }
    return p;
}

std::vector<Camerad> build_rig(const Aabbd& bounds, int n_views, int width, int height,
                               std::uint64_t seed) {
    Rng rng(seed);
    const Vec3d center = (bounds.min + bounds.max) * 0.5;
    const Vec3d half = bounds.extent() * 0.5;
    const double extent = std::max({half.x, half.y, half.z});
    const double radius = 2.5 * extent;
    const double fx = 1.09375 * width;  // frames the bounds with a small margin

    std::vector<Camerad> rig;
    rig.reserve(std::size_t(n_views));
    for (int i = 0; i < n_views; ++i) {
        const double az = rng.uniform(-M_PI / 6.0, M_PI / 6.0);
        const double el = rng.uniform(-M_PI / 6.0, M_PI / 6.0);
        const Vec3d eye = center + radius * Vec3d{std::sin(az) * std::cos(el), std::sin(el),
                                                  -std::cos(az) * std::cos(el)};
        rig.push_back(look_at_camera<double>(eye, center, {0, 1, 0}, fx, fx, width, height));
    }
    return rig;
}

namespace {

std::string view_stem(int i) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "view_%03d", i);
    return buf;
}

ImageBuffer to_ldr(const std::vector<Vec3d>& hdr, int w, int h,
                   const ToneMapParams<double>& tone) {
    ImageBuffer img(w, h);
    for (std::size_t p = 0; p < hdr.size(); ++p) {
        const Vec3d ldr = tonemap(hdr[p], tone);
        for (int c = 0; c < 3; ++c)
            img.values[p * 3 + c] = float(std::clamp(ldr[c], 0.0, 1.0));
    }
    return img;
}

}  // namespace

LoadedDataset synth_dataset_in_memory(const VoxelGrid<double>& gt_grid,
                                      const std::vector<Camerad>& rig,
                                      const GTToneProfile& profile, const SynthOptions& opts) {
    if (rig.size() < 2) throw std::invalid_argument("synth_dataset: need at least 2 views");
    if (profile.view_count() != rig.size())
        throw std::invalid_argument("synth_dataset: profile/rig view count mismatch");

    const double step = opts.step_scale * gt_grid.min_voxel_edge();
    LoadedDataset d;
    d.manifest.bounds = gt_grid.bounds();

    for (std::size_t i = 0; i < rig.size(); ++i) {
        const Camerad& cam = rig[i];
        const auto hdr = render_hdr(gt_grid, cam, {}, step);
        const ToneMapParams<double> tone = profile.view_params(i);

        ImageBuffer hdr_img(cam.width, cam.height);
        for (std::size_t p = 0; p < hdr.size(); ++p)
            for (int c = 0; c < 3; ++c) hdr_img.values[p * 3 + c] = float(hdr[p][c]);
        ImageBuffer ldr_img = to_ldr(hdr, cam.width, cam.height, tone);
        // store what an 8-bit file round trip would give back
        for (float& v : ldr_img.values) v = float(std::lround(v * 255.0f)) / 255.0f;

        ViewEntry v;
        v.id = int(i);
        v.role = (int(i) % opts.test_every == opts.test_every - 1) ? ViewRole::Test
                                                                   : ViewRole::Train;
        v.camera = cam;
        const std::string stem = view_stem(int(i));
        v.image = stem + ".png";
        v.hdr = stem + "_hdr.pfm";
        if (v.role == ViewRole::Test) {
            v.mask = stem + "_mask.png";
            d.trainable.push_back(left_half_mask(cam.width, cam.height));
        } else {
            d.trainable.push_back(full_mask(cam.width, cam.height));
        }
        d.manifest.views.push_back(std::move(v));
        d.ldr.push_back(std::move(ldr_img));
        d.hdr.push_back(std::move(hdr_img));
    }
    return d;
}

DatasetManifest render_gt_dataset(const VoxelGrid<double>& gt_grid,
                                  const std::vector<Camerad>& rig, const GTToneProfile& profile,
                                  const SynthOptions& opts, const std::string& out_dir) {
    const LoadedDataset d = synth_dataset_in_memory(gt_grid, rig, profile, opts);
    fs::create_directories(out_dir);

    for (std::size_t i = 0; i < d.view_count(); ++i) {
        const ViewEntry& v = d.manifest.views[i];
        write_png((fs::path(out_dir) / v.image).string(), d.ldr[i]);
        write_pfm((fs::path(out_dir) / v.hdr).string(), d.hdr[i]);
        if (!v.mask.empty()) {
            const auto& mask = d.trainable[i];
            ImageBuffer mask_img(v.camera.width, v.camera.height);
            for (std::size_t p = 0; p < mask.size(); ++p)
                for (int c = 0; c < 3; ++c) mask_img.values[p * 3 + c] = mask[p] ? 1.0f : 0.0f;
            write_png((fs::path(out_dir) / v.mask).string(), mask_img);
        }
    }
    save_manifest((fs::path(out_dir) / "manifest.json").string(), d.manifest);
    return d.manifest;
}

void save_profile(const std::string& path, const GTToneProfile& p) {
    json j;
    j["schema"] = "hdrvox-profile-v1";
    j["views"] = json::array();
    for (std::size_t i = 0; i < p.view_count(); ++i)
        j["views"].push_back({{"wb", {p.wb[i].x, p.wb[i].y, p.wb[i].z}}, {"gamma", p.gamma[i]}});
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_profile: cannot open " + path);
    out << j.dump(2) << "\n";
}

GTToneProfile load_profile(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_profile: cannot open " + path);
    json j;
    in >> j;
    if (j.value("schema", "") != "hdrvox-profile-v1")
        throw std::runtime_error("load_profile: unknown schema");
    GTToneProfile p;
    for (const auto& jv : j.at("views")) {
        const auto wb = jv.at("wb").get<std::array<double, 3>>();
        p.wb.push_back({wb[0], wb[1], wb[2]});
        p.gamma.push_back(jv.at("gamma").get<double>());
    }
    return p;
}

void synthesize_dataset(const OracleSceneSpec& spec, const std::string& profile_name,
                        const SynthOptions& opts, const std::string& out_dir) {
    const VoxelGrid<double> grid = build_scene(spec, opts.seed);
    const auto rig = build_rig(spec.bounds, opts.n_views, opts.width, opts.height, opts.seed);
    GTToneProfile profile;
    if (profile_name == "varying") profile = varying_profile(opts.n_views);
    else if (profile_name == "static") profile = static_profile(opts.n_views);
    else throw std::invalid_argument("synthesize_dataset: unknown profile " + profile_name);

    render_gt_dataset(grid, rig, profile, opts, out_dir);
    save_grid((fs::path(out_dir) / "gt_grid.hvxf").string(), grid);
    save_scene_spec((fs::path(out_dir) / "scene_spec.txt").string(), spec);
    save_profile((fs::path(out_dir) / "gt_profile.json").string(), profile);

    json meta;
    meta["seed"] = opts.seed;
    meta["step_scale"] = opts.step_scale;
    meta["profile"] = profile_name;
    meta["scene_spec"] = "scene_spec.txt";
    std::ofstream out((fs::path(out_dir) / "synth.json").string());
    out << meta.dump(2) << "\n";
}

RecoveryReport gt_compare(const VoxelGrid<double>& trained_grid,
                          const std::vector<ToneMapParams<double>>& trained_tone,
                          int reference_view, const LoadedDataset& dataset,
                          const GTToneProfile& profile, double step_scale) {
    const std::size_t n = dataset.view_count();
    if (trained_tone.size() != n || profile.view_count() != n)
        throw std::invalid_argument("gt_compare: view count mismatch");
    if (reference_view < 0 || std::size_t(reference_view) >= n)
        throw std::invalid_argument("gt_compare: bad reference view");

    RecoveryReport r;

    // (a) white balance, both sides normalized by their own reference view
    const Vec3d t_ref = trained_tone[std::size_t(reference_view)].wb;
    const Vec3d g_ref = profile.wb[std::size_t(reference_view)];
    for (std::size_t i = 0; i < n; ++i) {
        double err = 0.0;
        for (int c = 0; c < 3; ++c) {
            const double t = trained_tone[i].wb[c] / t_ref[c];
            const double g = profile.wb[i][c] / g_ref[c];
            err = std::max(err, std::abs(t - g) / std::abs(g));
        }
        r.wb_rel_err.push_back(err);
        r.max_wb_rel_err = std::max(r.max_wb_rel_err, err);
    }

    // (b) response curves against the ground-truth gamma curve on the common knots
    for (std::size_t i = 0; i < n; ++i) {
        const ToneMapParams<double> gt = profile.view_params(i);
        std::array<double, 3> rmse{};
        for (int ch = 0; ch < 3; ++ch) {
            std::array<double, 256> a{}, b{};
            for (int k = 0; k < kCrfSize; ++k) {
                a[k] = trained_tone[i].crf[ch][k];
                b[k] = gt.crf[ch][k];
            }
            rmse[ch] = crf_rmse(a, b);
            r.max_crf_rmse = std::max(r.max_crf_rmse, rmse[ch]);
        }
        r.crf_rmse_per_view.push_back(rmse);
    }

    // (c) scale-aligned HDR PSNR on the held-out views
    const double step = step_scale * trained_grid.min_voxel_edge();
    r.min_hdr_psnr = kPsnrCap;
    for (std::size_t i = 0; i < n; ++i) {
        if (dataset.manifest.views[i].role != ViewRole::Test) continue;
        if (dataset.hdr[i].width == 0)
            throw std::invalid_argument("gt_compare: dataset lacks ground-truth HDR");
        const Camerad& cam = dataset.manifest.views[i].camera;
        const auto hdr = render_hdr(trained_grid, cam, {}, step);
        ImageBuffer pred(cam.width, cam.height);
        for (std::size_t p = 0; p < hdr.size(); ++p)
            for (int c = 0; c < 3; ++c) pred.values[p * 3 + c] = float(hdr[p][c]);
        const double psnr =
            scale_aligned_psnr(pred, dataset.hdr[i], full_mask(cam.width, cam.height), nullptr);
        r.hdr_psnr.push_back(psnr);
        r.min_hdr_psnr = std::min(r.min_hdr_psnr, psnr);
    }
    return r;
}

}  // namespace hdrvox
