// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "elmgs/scene.hpp"

namespace elmgs::ply {

/// Property names of a 3DGS checkpoint vertex, in file order (62 entries).
const std::vector<std::string>& canonical_properties();

inline constexpr std::size_t kPropertyCount = 62;
inline constexpr std::size_t kVertexBytes = kPropertyCount * 4;

struct PlyHeader {
    std::size_t vertex_count = 0;
    std::vector<std::string> property_names;
    std::size_t body_offset = 0;  // first byte after "end_header\n"
};

struct ReadOptions {
    /// Accept (and skip) float properties after the 62 canonical ones.
    bool lenient_extra_properties = false;
};

/// Parses and validates the header only.
PlyHeader read_header(std::span<const std::uint8_t> bytes, const ReadOptions& options = {});

GaussianScene read_scene(std::span<const std::uint8_t> bytes, const ReadOptions& options = {});

std::vector<std::uint8_t> write_scene(const GaussianScene& scene);

GaussianScene load(const std::filesystem::path& path, const ReadOptions& options = {});
void save(const std::filesystem::path& path, const GaussianScene& scene);

}  // namespace elmgs::ply
