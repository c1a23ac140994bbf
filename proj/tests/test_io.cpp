// Copyright (c) 2026 the hdrvox authors.
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <fstream>

#include <png.h>

#include "hdrvox/image.hpp"
#include "hdrvox/manifest.hpp"
#include "hdrvox/util.hpp"

using namespace hdrvox;
namespace fs = std::filesystem;

namespace {

fs::path tmp_dir() {
    const fs::path p = fs::temp_directory_path() / "hdrvox_io_tests";
    fs::create_directories(p);
    return p;
}

ImageBuffer random_image(Rng& rng, int w, int h, float lo, float hi) {
    ImageBuffer img(w, h);
    for (auto& v : img.values) v = float(rng.uniform(lo, hi));
    return img;
}

}  // namespace

TEST_CASE("png: quantization round trip bounds") {
    Rng rng(3);
    const auto path = (tmp_dir() / "rt.png").string();

    // exact endpoints
    ImageBuffer img(3, 2);
    img.at(0, 0, 0) = 1.0f;
    img.at(1, 0, 1) = 0.0f;
    img.at(2, 1, 2) = 0.5f;
    write_png(path, img);
    ImageBuffer back = read_png(path);
    CHECK(back.width == 3);
    CHECK(back.height == 2);
    CHECK(back.at(0, 0, 0) == 1.0f);
    CHECK(back.at(1, 0, 1) == 0.0f);

    // all-zero image is exact
    ImageBuffer zero(4, 4);
    write_png(path, zero);
    back = read_png(path);
    for (float v : back.values) CHECK(v == 0.0f);

    // 1000 random images: L-inf error within half a quantization step
    for (int trial = 0; trial < 1000; ++trial) {
        const int w = 1 + int(rng.below(8)), h = 1 + int(rng.below(6));
        const ImageBuffer a = random_image(rng, w, h, 0.0f, 1.0f);
        write_png(path, a);
        const ImageBuffer b = read_png(path);
        REQUIRE(a.values.size() == b.values.size());
        for (std::size_t i = 0; i < a.values.size(); ++i)
            CHECK(std::abs(a.values[i] - b.values[i]) <= 1.0f / 510.0f + 1e-7f);
    }
    fs::remove(path);
}

TEST_CASE("png: write clamps out-of-range values") {
    const auto path = (tmp_dir() / "clamp.png").string();
    ImageBuffer img(2, 1);
    img.at(0, 0, 0) = 8.0f;
    img.at(1, 0, 1) = -3.0f;
    write_png(path, img);
    const ImageBuffer back = read_png(path);
    CHECK(back.at(0, 0, 0) == 1.0f);
    CHECK(back.at(1, 0, 1) == 0.0f);
    fs::remove(path);
}

TEST_CASE("png: rejects missing and malformed files") {
    CHECK_THROWS_AS(read_png((tmp_dir() / "nope.png").string()), std::runtime_error);
    const auto bad = (tmp_dir() / "garbage.png").string();
    std::ofstream(bad) << "not a png at all";
    CHECK_THROWS_AS(read_png(bad), std::runtime_error);
    fs::remove(bad);
}

TEST_CASE("png: rejects non-RGB color types") {
    // hand-write a 1x1 8-bit grayscale PNG via libpng-free minimal bytes is
    // brittle; instead reuse the writer then corrupt the color type is not
    // valid PNG. Build a gray PNG through libpng directly.
    const auto path = (tmp_dir() / "gray.png").string();
    {
        std::FILE* fp = std::fopen(path.c_str(), "wb");
        REQUIRE(fp);
        png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
        png_infop info = png_create_info_struct(png);
        REQUIRE(setjmp(png_jmpbuf(png)) == 0);
        png_init_io(png, fp);
        png_set_IHDR(png, info, 1, 1, 8, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
                     PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
        png_write_info(png, info);
        png_byte row[1] = {128};
        png_write_row(png, row);
        png_write_end(png, nullptr);
        png_destroy_write_struct(&png, &info);
        std::fclose(fp);
    }
    CHECK_THROWS_AS(read_png(path), std::runtime_error);
    fs::remove(path);
}

TEST_CASE("pfm: bit-exact round trip including HDR values") {
    Rng rng(7);
    const auto path = (tmp_dir() / "rt.pfm").string();
    for (int trial = 0; trial < 200; ++trial) {
        const int w = 1 + int(rng.below(8)), h = 1 + int(rng.below(6));
        const ImageBuffer a = random_image(rng, w, h, 0.0f, 50.0f);
        write_pfm(path, a);
        const ImageBuffer b = read_pfm(path);
        CHECK(b.width == w);
        CHECK(b.height == h);
        CHECK(std::memcmp(a.values.data(), b.values.data(), a.values.size() * sizeof(float)) == 0);
    }

    ImageBuffer hdr(1, 1);
    hdr.at(0, 0, 0) = 8.0f;  // beyond the display range
    write_pfm(path, hdr);
    CHECK(read_pfm(path).at(0, 0, 0) == 8.0f);
    fs::remove(path);
}

TEST_CASE("pfm: fixture written by an independent implementation") {
    // 2x1 color PFM assembled byte-by-byte from the format definition
    // (verified against an external PFM reader once; committed here)
    const unsigned char header[] = "PF\n2 1\n-1.0\n";
    const float floats[6] = {1.0f, 2.5f, 8.0f, 0.0f, 0.5f, 0.25f};
    const auto path = (tmp_dir() / "fixture.pfm").string();
    {
        std::ofstream out(path, std::ios::binary);
        out.write(reinterpret_cast<const char*>(header), sizeof(header) - 1);
        out.write(reinterpret_cast<const char*>(floats), sizeof(floats));
    }
    const ImageBuffer img = read_pfm(path);
    CHECK(img.width == 2);
    CHECK(img.height == 1);
    CHECK(img.at(0, 0, 0) == 1.0f);
    CHECK(img.at(0, 0, 1) == 2.5f);
    CHECK(img.at(0, 0, 2) == 8.0f);
    CHECK(img.at(1, 0, 1) == 0.5f);
    CHECK(img.at(1, 0, 2) == 0.25f);

    // and our writer reproduces the reference bytes exactly
    const auto out_path = (tmp_dir() / "ours.pfm").string();
    write_pfm(out_path, img);
    std::ifstream a(path, std::ios::binary), b(out_path, std::ios::binary);
    std::string sa((std::istreambuf_iterator<char>(a)), std::istreambuf_iterator<char>());
    std::string sb((std::istreambuf_iterator<char>(b)), std::istreambuf_iterator<char>());
    CHECK(sa == sb);
    fs::remove(path);
    fs::remove(out_path);
}

TEST_CASE("pfm: malformed headers are rejected") {
    const auto path = (tmp_dir() / "bad.pfm").string();
    std::ofstream(path) << "Pf\n2 1\n-1.0\n";  // grayscale marker unsupported
    CHECK_THROWS_AS(read_pfm(path), std::runtime_error);
    std::ofstream(path) << "PF\n-2 1\n-1.0\n";
    CHECK_THROWS_AS(read_pfm(path), std::runtime_error);
    std::ofstream(path) << "PF\n2 1\n-1.0\nxx";  // truncated payload
    CHECK_THROWS_AS(read_pfm(path), std::runtime_error);
    fs::remove(path);
}

TEST_CASE("half masks: center column excluded on odd widths") {
    const auto left = left_half_mask(5, 2);
    const auto right = right_half_mask(5, 2);
    for (int y = 0; y < 2; ++y) {
        CHECK(left[y * 5 + 0] == 1);
        CHECK(left[y * 5 + 1] == 1);
        CHECK(left[y * 5 + 2] == 0);  // center column in neither half
        CHECK(right[y * 5 + 2] == 0);
        CHECK(right[y * 5 + 3] == 1);
        CHECK(right[y * 5 + 4] == 1);
    }
    const auto l4 = left_half_mask(4, 1), r4 = right_half_mask(4, 1);
    CHECK(int(l4[0]) + int(l4[1]) + int(l4[2]) + int(l4[3]) == 2);
    CHECK(int(r4[0]) + int(r4[1]) + int(r4[2]) + int(r4[3]) == 2);
    for (int x = 0; x < 4; ++x) CHECK(l4[x] + r4[x] <= 1);
}

TEST_CASE("manifest: save/load round trip with validation") {
    const fs::path dir = tmp_dir() / "manifest_case";
    fs::create_directories(dir);

    DatasetManifest m;
    m.bounds = {{-1, -1, -1}, {1, 1, 1}};
    for (int i = 0; i < 2; ++i) {
        ViewEntry v;
        v.id = i;
        v.image = "img" + std::to_string(i) + ".png";
        v.camera = look_at_camera<double>({0, 0, -3.0 - i}, {0, 0, 0}, {0, 1, 0}, 16, 16, 8, 8);
        v.role = i == 1 ? ViewRole::Test : ViewRole::Train;
        m.views.push_back(v);
        ImageBuffer img(8, 8);
        write_png((dir / v.image).string(), img);
    }
    const auto path = (dir / "manifest.json").string();
    save_manifest(path, m);
    const DatasetManifest r = load_manifest(path);
    CHECK(r.views.size() == 2);
    CHECK(r.views[1].role == ViewRole::Test);
    CHECK(r.bounds.min.x == -1.0);
    CHECK(r.views[0].camera.fx == 16.0);
    CHECK(r.views[0].camera.translation.z == -3.0);

    // duplicate ids rejected
    DatasetManifest dup = m;
    dup.views[1].id = 0;
    save_manifest(path, dup);
    CHECK_THROWS_AS(load_manifest(path), std::runtime_error);

    // missing referenced file rejected
    DatasetManifest missing = m;
    missing.views[0].image = "absent.png";
    save_manifest(path, missing);
    CHECK_THROWS_AS(load_manifest(path), std::runtime_error);

    fs::remove_all(dir);
}

TEST_CASE("load_dataset: images, masks, and camera-size agreement") {
    const fs::path dir = tmp_dir() / "dataset_case";
    fs::create_directories(dir);

    DatasetManifest m;
    m.bounds = {{-1, -1, -1}, {1, 1, 1}};
    ViewEntry v;
    v.id = 0;
    v.image = "v.png";
    v.mask = "m.png";
    v.camera = look_at_camera<double>({0, 0, -3}, {0, 0, 0}, {0, 1, 0}, 16, 16, 6, 4);
    m.views.push_back(v);
    ImageBuffer img(6, 4);
    img.at(2, 1, 0) = 0.5f;
    write_png((dir / "v.png").string(), img);
    ImageBuffer mask(6, 4);
    for (int y = 0; y < 4; ++y) mask.at(1, y, 0) = mask.at(1, y, 1) = mask.at(1, y, 2) = 1.0f;
    write_png((dir / "m.png").string(), mask);
    save_manifest((dir / "manifest.json").string(), m);

    const LoadedDataset d = load_dataset((dir / "manifest.json").string());
    CHECK(d.view_count() == 1);
    CHECK(d.ldr[0].at(2, 1, 0) == doctest::Approx(0.5).epsilon(1e-2));
    CHECK(d.trainable[0][1] == 1);
    CHECK(d.trainable[0][0] == 0);
    CHECK(d.hdr[0].width == 0);  // absent
    fs::remove_all(dir);
}
