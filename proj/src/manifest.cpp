// Copyright (c) 2026 the hdrvox authors.
// SPDX-License-Identifier: Apache-2.0

#include <filesystem>
#include <fstream>
#include <set>

#include <json.hpp>

#include "hdrvox/manifest.hpp"

namespace hdrvox {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json camera_to_json(const Camerad& c) {
    json j;
    j["width"] = c.width;
    j["height"] = c.height;
    j["fx"] = c.fx;
    j["fy"] = c.fy;
    j["cx"] = c.cx;
    j["cy"] = c.cy;
    // 4x4 camera-to-world, row-major
    std::array<double, 16> m{};
    for (int r = 0; r < 3; ++r) {
        for (int k = 0; k < 3; ++k) m[std::size_t(r) * 4 + k] = c.rotation(r, k);
        m[std::size_t(r) * 4 + 3] = c.translation[r];
    }
    m[15] = 1.0;
    j["c2w"] = m;
    return j;
}

Camerad camera_from_json(const json& j) {
    Camerad c;
    c.width = j.at("width").get<int>();
    c.height = j.at("height").get<int>();
    c.fx = j.at("fx").get<double>();
    c.fy = j.at("fy").get<double>();
    c.cx = j.at("cx").get<double>();
    c.cy = j.at("cy").get<double>();
    const auto m = j.at("c2w").get<std::array<double, 16>>();
    for (int r = 0; r < 3; ++r) {
        for (int k = 0; k < 3; ++k) c.rotation(r, k) = m[std::size_t(r) * 4 + k];
        c.translation[r] = m[std::size_t(r) * 4 + 3];
    }
    c.validate();
    return c;
}

}  // namespace

void save_manifest(const std::string& path, const DatasetManifest& m) {
    json j;
    j["schema"] = kManifestSchema;
    j["bounds"]["min"] = {m.bounds.min.x, m.bounds.min.y, m.bounds.min.z};
    j["bounds"]["max"] = {m.bounds.max.x, m.bounds.max.y, m.bounds.max.z};
    if (m.reference_view >= 0) j["reference_view"] = m.reference_view;
    j["views"] = json::array();
    for (const auto& v : m.views) {
        json jv;
        jv["id"] = v.id;
        jv["image"] = v.image;
        if (!v.hdr.empty()) jv["hdr"] = v.hdr;
        if (!v.mask.empty()) jv["mask"] = v.mask;
        jv["camera"] = camera_to_json(v.camera);
        jv["role"] = v.role == ViewRole::Train ? "train" : "test";
        j["views"].push_back(std::move(jv));
    }
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_manifest: cannot open " + path);
    out << j.dump(2) << "\n";
}

DatasetManifest load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_manifest: cannot open " + path);
    json j;
    in >> j;

    if (j.value("schema", "") != kManifestSchema)
        throw std::runtime_error("load_manifest: unknown schema in " + path);

    DatasetManifest m;
    const auto bmin = j.at("bounds").at("min").get<std::array<double, 3>>();
    const auto bmax = j.at("bounds").at("max").get<std::array<double, 3>>();
    m.bounds.min = {bmin[0], bmin[1], bmin[2]};
    m.bounds.max = {bmax[0], bmax[1], bmax[2]};
    if (!m.bounds.valid()) throw std::runtime_error("load_manifest: invalid bounds");
    m.reference_view = j.value("reference_view", -1);

    const fs::path root = fs::path(path).parent_path();
    std::set<int> ids;
    for (const auto& jv : j.at("views")) {
        ViewEntry v;
        v.id = jv.at("id").get<int>();
        if (!ids.insert(v.id).second)
            throw std::runtime_error("load_manifest: duplicate view id");
        v.image = jv.at("image").get<std::string>();
        v.hdr = jv.value("hdr", "");
        v.mask = jv.value("mask", "");
        v.camera = camera_from_json(jv.at("camera"));
        const std::string role = jv.at("role").get<std::string>();
        if (role == "train") v.role = ViewRole::Train;
        else if (role == "test") v.role = ViewRole::Test;
        else throw std::runtime_error("load_manifest: unknown view role " + role);

        for (const std::string* p : {&v.image, &v.hdr, &v.mask})
            if (!p->empty() && !fs::exists(root / *p))
                throw std::runtime_error("load_manifest: missing file " + (root / *p).string());
        m.views.push_back(std::move(v));
    }
    if (m.views.empty()) throw std::runtime_error("load_manifest: no views");
    return m;
}

Camerad load_camera_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_camera_json: cannot open " + path);
    json j;
    in >> j;
    return camera_from_json(j.contains("camera") ? j.at("camera") : j);
}

LoadedDataset load_dataset(const std::string& manifest_path) {
    LoadedDataset d;
    d.manifest = load_manifest(manifest_path);
    d.root = fs::path(manifest_path).parent_path().string();
    const fs::path root = d.root;

    for (const auto& v : d.manifest.views) {
        ImageBuffer ldr = read_png((root / v.image).string());
        if (ldr.width != v.camera.width || ldr.height != v.camera.height)
            throw std::runtime_error("load_dataset: image size disagrees with camera");
        d.hdr.push_back(v.hdr.empty() ? ImageBuffer{} : read_pfm((root / v.hdr).string()));
        if (v.mask.empty()) {
            d.trainable.push_back(full_mask(ldr.width, ldr.height));
        } else {
            const ImageBuffer m = read_png((root / v.mask).string());
            if (m.width != ldr.width || m.height != ldr.height)
                throw std::runtime_error("load_dataset: mask size mismatch");
            std::vector<std::uint8_t> t(m.pixel_count());
            for (std::size_t p = 0; p < t.size(); ++p) t[p] = m.values[p * 3] > 0.5f ? 1 : 0;
            d.trainable.push_back(std::move(t));
        }
        d.ldr.push_back(std::move(ldr));
    }
    return d;
}

}  // namespace hdrvox
