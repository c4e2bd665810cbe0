// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <fstream>
#include <random>

#include "elmgs/error.hpp"
#include "elmgs/io.hpp"
#include "elmgs/synth.hpp"
#include "helpers.hpp"
#include "temp_dir.hpp"

using namespace elmgs;
using nlohmann::json;

namespace {

ErrorKind kind_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("expected an error");
    return ErrorKind::InvalidArgument;
}

std::string message_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.what();
    }
    return {};
}

}  // namespace

TEST_CASE("file round trip and missing files") {
    testutil::TempDir dir;
    const std::vector<std::uint8_t> bytes = {0, 1, 2, 255, 10, 13};
    io::write_file(dir / "a.bin", bytes);
    CHECK(io::read_file(dir / "a.bin") == bytes);
    CHECK(kind_of([&] { io::read_file(dir / "missing.bin"); }) == ErrorKind::Io);
    CHECK(kind_of([&] { io::write_file(dir / "no" / "such" / "dir.bin", bytes); }) == ErrorKind::Io);
}

TEST_CASE("PNG round trip is exact on 8-bit levels") {
    testutil::TempDir dir;
    std::mt19937_64 rng(1);
    Image img(7, 5);
    for (double& v : img.rgb) v = static_cast<double>(rng() % 256) / 255.0;
    io::write_png(dir / "a.png", img);
    const Image back = io::read_png(dir / "a.png");
    CHECK(back.width == 7);
    CHECK(back.height == 5);
    CHECK(back.rgb == img.rgb);

    // clamping and rounding
    Image odd(2, 1);
    odd.rgb = {-0.5, 1.5, 0.5, 0.2, 0.7, 1.0};
    io::write_png(dir / "b.png", odd);
    const Image b = io::read_png(dir / "b.png");
    CHECK(b.rgb[0] == 0.0);
    CHECK(b.rgb[1] == 1.0);
    CHECK(b.rgb[2] == 128.0 / 255.0);
    CHECK(b.rgb[3] == 51.0 / 255.0);

    CHECK(io::encode_png(img) == io::encode_png(img));
    CHECK(kind_of([&] { io::encode_png(Image{}); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("unreadable PNGs") {
    testutil::TempDir dir;
    io::write_file(dir / "junk.png", std::vector<std::uint8_t>{'n', 'o', 't', 'p', 'n', 'g'});
    CHECK(kind_of([&] { io::read_png(dir / "junk.png"); }) == ErrorKind::Parse);
    CHECK(message_of([&] { io::read_png(dir / "missing.png"); }).find("missing.png") != std::string::npos);
}

TEST_CASE("camera JSON round trip") {
    const Camera c = look_at({1.0, 2.0, -3.0}, {0.0, 0.0, 0.0}, {0.0, 1.0, 0.0}, 40, 30, 35.0);
    const json j = io::camera_to_json(c);
    CHECK(j["width"] == 40);
    CHECK(j["height"] == 30);
    CHECK(j["rotation"].size() == 9);
    CHECK(j["rotation"][1] == c.rotation(0, 1));
    const Camera back = io::camera_from_json(j);
    CHECK(back.width == c.width);
    CHECK(back.height == c.height);
    CHECK(back.fx == c.fx);
    CHECK(back.fy == c.fy);
    CHECK(back.cx == c.cx);
    CHECK(back.cy == c.cy);
    CHECK(back.rotation == c.rotation);
    CHECK(back.translation == c.translation);
    // text round trip keeps doubles exact
    CHECK(io::camera_from_json(json::parse(j.dump())).rotation == c.rotation);
}

TEST_CASE("invalid camera JSON is a schema error") {
    const json good = io::camera_to_json(testutil::front_camera(8, 8, 8.0));
    for (const char* key : {"width", "fx", "rotation", "translation"}) {
        json bad = good;
        bad.erase(key);
        CHECK(kind_of([&] { io::camera_from_json(bad); }) == ErrorKind::Schema);
    }
    json bad = good;
    bad["rotation"] = json::array({1, 0, 0});
    CHECK(kind_of([&] { io::camera_from_json(bad); }) == ErrorKind::Schema);
    bad = good;
    bad["rotation"] = json::array({2, 0, 0, 0, 1, 0, 0, 0, 1});
    CHECK(kind_of([&] { io::camera_from_json(bad); }) == ErrorKind::Schema);
    bad = good;
    bad["fx"] = -1.0;
    CHECK(kind_of([&] { io::camera_from_json(bad); }) == ErrorKind::Schema);
    bad = good;
    bad["width"] = "wide";
    CHECK(kind_of([&] { io::camera_from_json(bad); }) == ErrorKind::Schema);

    testutil::TempDir dir;
    std::ofstream(dir / "cam.json") << "{not json";
    CHECK(kind_of([&] { io::load_camera(dir / "cam.json"); }) == ErrorKind::Parse);
}

TEST_CASE("views directory round trip") {
    SynthSpec spec;
    spec.seed = 3;
    spec.n_gaussians = 16;
    spec.image_width = 12;
    spec.image_height = 10;
    spec.n_views = 3;
    const SynthScene s = make_scene(spec);
    testutil::TempDir dir;
    io::save_views(dir / "views", s.views);
    CHECK(std::filesystem::exists(dir / "views" / io::kViewsManifest));
    const auto back = io::load_views(dir / "views");
    REQUIRE(back.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(back[i].camera.rotation == s.views[i].camera.rotation);
        CHECK(back[i].camera.translation == s.views[i].camera.translation);
        for (std::size_t k = 0; k < back[i].image.rgb.size(); ++k)
            CHECK(std::abs(back[i].image.rgb[k] - s.views[i].image.rgb[k]) <= 0.5 / 255 + 1e-12);
    }
}

TEST_CASE("views directory errors") {
    testutil::TempDir dir;
    const auto missing = dir / "nowhere";
    CHECK(kind_of([&] { io::load_views(missing); }) == ErrorKind::Io);
    CHECK(message_of([&] { io::load_views(missing); }).find(missing.string()) != std::string::npos);

    std::filesystem::create_directories(dir / "v");
    std::ofstream(dir / "v" / io::kViewsManifest) << R"({"cameras": []})";
    CHECK(kind_of([&] { io::load_views(dir / "v"); }) == ErrorKind::Schema);

    // image size disagrees with its camera
    json view = io::camera_to_json(testutil::front_camera(8, 8, 8.0));
    view["image"] = "a.png";
    std::ofstream(dir / "v" / io::kViewsManifest) << json{{"views", json::array({view})}}.dump();
    io::write_png(dir / "v" / "a.png", Image(4, 4, 0.5));
    CHECK(kind_of([&] { io::load_views(dir / "v"); }) == ErrorKind::Schema);
}
