// SPDX-License-Identifier: Apache-2.0
#include "elmgs/io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <string>

#include "elmgs/error.hpp"

namespace elmgs::io {

namespace fs = std::filesystem;

std::vector<std::uint8_t> read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::Io, "cannot open '" + path.string() + "'");
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) fail(ErrorKind::Io, "read failed for '" + path.string() + "'");
    return bytes;
}

void write_file(const fs::path& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::Io, "cannot write '" + path.string() + "'");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) fail(ErrorKind::Io, "write failed for '" + path.string() + "'");
}

Image read_png(const fs::path& path) {
    const auto bytes = read_file(path);
    png_image img{};
    img.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_memory(&img, bytes.data(), bytes.size()))
        fail(ErrorKind::Parse, "'" + path.string() + "' is not a readable PNG: " + img.message);
    img.format = PNG_FORMAT_RGB;
    std::vector<std::uint8_t> pixels(PNG_IMAGE_SIZE(img));
    if (!png_image_finish_read(&img, nullptr, pixels.data(), 0, nullptr)) {
        png_image_free(&img);
        fail(ErrorKind::Parse, "cannot decode '" + path.string() + "': " + img.message);
    }
    Image out(static_cast<int>(img.width), static_cast<int>(img.height));
    for (std::size_t i = 0; i < pixels.size(); ++i) out.rgb[i] = pixels[i] / 255.0;
    return out;
}

std::vector<std::uint8_t> encode_png(const Image& image) {
    if (image.width < 1 || image.height < 1) fail(ErrorKind::InvalidArgument, "cannot encode an empty image");
    std::vector<std::uint8_t> pixels(image.rgb.size());
    for (std::size_t i = 0; i < pixels.size(); ++i)
        pixels[i] = static_cast<std::uint8_t>(std::lround(std::clamp(image.rgb[i], 0.0, 1.0) * 255.0));
    png_image img{};
    img.version = PNG_IMAGE_VERSION;
    img.width = static_cast<png_uint_32>(image.width);
    img.height = static_cast<png_uint_32>(image.height);
    img.format = PNG_FORMAT_RGB;
    png_alloc_size_t size = 0;
    if (!png_image_write_to_memory(&img, nullptr, &size, 0, pixels.data(), 0, nullptr))
        fail(ErrorKind::Io, std::string("PNG encoding failed: ") + img.message);
    std::vector<std::uint8_t> out(size);
    if (!png_image_write_to_memory(&img, out.data(), &size, 0, pixels.data(), 0, nullptr))
        fail(ErrorKind::Io, std::string("PNG encoding failed: ") + img.message);
    out.resize(size);
    return out;
}

void write_png(const fs::path& path, const Image& image) { write_file(path, encode_png(image)); }

json camera_to_json(const Camera& c) {
    json rot = json::array();
    for (int r = 0; r < 3; ++r)
        for (int k = 0; k < 3; ++k) rot.push_back(c.rotation(r, k));
    return {{"width", c.width},
            {"height", c.height},
            {"fx", c.fx},
            {"fy", c.fy},
            {"cx", c.cx},
            {"cy", c.cy},
            {"rotation", rot},
            {"translation", {c.translation.x(), c.translation.y(), c.translation.z()}}};
}

Camera camera_from_json(const json& j) {
    try {
        Camera c;
        c.width = j.at("width").get<int>();
        c.height = j.at("height").get<int>();
        c.fx = j.at("fx").get<double>();
        c.fy = j.at("fy").get<double>();
        c.cx = j.at("cx").get<double>();
        c.cy = j.at("cy").get<double>();
        const auto& rot = j.at("rotation");
        const auto& t = j.at("translation");
        if (!rot.is_array() || rot.size() != 9) fail(ErrorKind::Schema, "camera rotation must have 9 entries");
        if (!t.is_array() || t.size() != 3) fail(ErrorKind::Schema, "camera translation must have 3 entries");
        for (int r = 0; r < 3; ++r)
            for (int k = 0; k < 3; ++k) c.rotation(r, k) = rot[static_cast<std::size_t>(3 * r + k)].get<double>();
        for (int a = 0; a < 3; ++a) c.translation[a] = t[static_cast<std::size_t>(a)].get<double>();
        if (!(std::isfinite(c.fx) && std::isfinite(c.fy) && c.fx > 0 && c.fy > 0))
            fail(ErrorKind::Schema, "camera focal lengths must be positive");
        c.validate();
        return c;
    } catch (const json::exception& e) {
        fail(ErrorKind::Schema, std::string("invalid camera: ") + e.what());
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::InvalidArgument) fail(ErrorKind::Schema, std::string("invalid camera: ") + e.what());
        throw;
    }
}

namespace {

json parse_json_file(const fs::path& path) {
    const auto bytes = read_file(path);
    try {
        return json::parse(bytes.begin(), bytes.end());
    } catch (const json::parse_error& e) {
        fail(ErrorKind::Parse, "'" + path.string() + "': " + e.what());
    }
}

}  // namespace

Camera load_camera(const fs::path& path) { return camera_from_json(parse_json_file(path)); }

std::vector<View> load_views(const fs::path& dir) {
    if (!fs::is_directory(dir)) fail(ErrorKind::Io, "views directory '" + dir.string() + "' does not exist");
    const json manifest = parse_json_file(dir / kViewsManifest);
    if (!manifest.contains("views") || !manifest["views"].is_array())
        fail(ErrorKind::Schema, "'" + (dir / kViewsManifest).string() + "' has no \"views\" array");
    std::vector<View> views;
    for (const json& entry : manifest["views"]) {
        View v;
        v.camera = camera_from_json(entry);
        if (!entry.contains("image") || !entry["image"].is_string())
            fail(ErrorKind::Schema, "view entry without an \"image\" file name");
        v.image = read_png(dir / entry["image"].get<std::string>());
        if (v.image.width != v.camera.width || v.image.height != v.camera.height)
            fail(ErrorKind::Schema, "image '" + entry["image"].get<std::string>() +
                                        "' does not match its camera size");
        views.push_back(std::move(v));
    }
    return views;
}

void save_views(const fs::path& dir, std::span<const View> views) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) fail(ErrorKind::Io, "cannot create '" + dir.string() + "': " + ec.message());
    json list = json::array();
    for (std::size_t i = 0; i < views.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof name, "view_%03zu.png", i);
        write_png(dir / name, views[i].image);
        json entry = camera_to_json(views[i].camera);
        entry["image"] = name;
        list.push_back(std::move(entry));
    }
    const std::string text = json{{"views", list}}.dump(2) + "\n";
    write_file(dir / kViewsManifest, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

}  // namespace elmgs::io
