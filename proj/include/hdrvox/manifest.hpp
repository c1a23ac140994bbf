// Copyright (c) 2026 the hdrvox authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hdrvox/camera.hpp"
#include "hdrvox/image.hpp"

namespace hdrvox {

inline constexpr const char* kManifestSchema = "hdrvox-manifest-v1";

enum class ViewRole { Train, Test };

struct ViewEntry {
    int id = 0;
    std::string image;               // LDR PNG, relative to the manifest
    std::string hdr;                 // optional ground-truth HDR PFM
    std::string mask;                // optional trainable-pixel mask PNG
    Camerad camera;
    ViewRole role = ViewRole::Train;
};

struct DatasetManifest {
    Aabbd bounds;
    std::vector<ViewEntry> views;
    int reference_view = -1;  // < 0: compute at training time
};

// JSON (de)serialization. load validates the schema string, unique view ids,
// camera validity, and that every referenced file exists next to the
// manifest.
void save_manifest(const std::string& path, const DatasetManifest& m);
DatasetManifest load_manifest(const std::string& path);

// A manifest with every referenced image loaded. trainable[v] has one byte
// per pixel; views without a mask file are fully trainable.
struct LoadedDataset {
    DatasetManifest manifest;
    std::string root;  // directory of the manifest
    std::vector<ImageBuffer> ldr;
    std::vector<ImageBuffer> hdr;                       // empty buffers when absent
    std::vector<std::vector<std::uint8_t>> trainable;

    std::size_t view_count() const { return manifest.views.size(); }
};

LoadedDataset load_dataset(const std::string& manifest_path);

// Standalone camera description (the manifest's camera object in its own
// JSON file); used for free-pose rendering.
Camerad load_camera_json(const std::string& path);

}  // namespace hdrvox
