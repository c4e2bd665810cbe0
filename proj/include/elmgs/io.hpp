// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <json.hpp>

#include "elmgs/image.hpp"

namespace elmgs::io {

using nlohmann::json;

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

/// 8-bit RGB PNG; values are clamped to [0,1] and rounded to the nearest
/// level on write, divided by 255 on read. Grey and alpha inputs are
/// expanded/stripped.
Image read_png(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const Image& image);
std::vector<std::uint8_t> encode_png(const Image& image);

/// {width, height, fx, fy, cx, cy, rotation: 9 row-major, translation: 3}
json camera_to_json(const Camera& camera);
Camera camera_from_json(const json& j);
Camera load_camera(const std::filesystem::path& path);

inline constexpr const char* kViewsManifest = "cameras.json";

/// A views directory holds cameras.json ({"views": [camera + "image"]}) and
/// the PNGs it names.
std::vector<View> load_views(const std::filesystem::path& dir);
void save_views(const std::filesystem::path& dir, std::span<const View> views);

}  // namespace elmgs::io
