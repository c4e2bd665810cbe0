// SPDX-License-Identifier: Apache-2.0
#include "elmgs/ply.hpp"

#include <charconv>
#include <fstream>
#include <iterator>
#include <limits>
#include <string_view>

#include "bytes.hpp"
#include "elmgs/error.hpp"

namespace elmgs::ply {

namespace {

std::vector<std::string> make_canonical() {
    std::vector<std::string> names = {"x", "y", "z", "nx", "ny", "nz"};
    for (int i = 0; i < 3; ++i) names.push_back("f_dc_" + std::to_string(i));
    for (int i = 0; i < 45; ++i) names.push_back("f_rest_" + std::to_string(i));
    names.push_back("opacity");
    for (int i = 0; i < 3; ++i) names.push_back("scale_" + std::to_string(i));
    for (int i = 0; i < 4; ++i) names.push_back("rot_" + std::to_string(i));
    return names;
}

[[noreturn]] void parse_error(std::size_t offset, const std::string& what) {
    fail(ErrorKind::Parse, "PLY header error at byte " + std::to_string(offset) + ": " + what);
}

std::vector<std::string_view> split(std::string_view line) {
    std::vector<std::string_view> words;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && line[i] == ' ') ++i;
        std::size_t j = i;
        while (j < line.size() && line[j] != ' ') ++j;
        if (j > i) words.push_back(line.substr(i, j - i));
        i = j;
    }
    return words;
}

}  // namespace

const std::vector<std::string>& canonical_properties() {
    static const std::vector<std::string> names = make_canonical();
    return names;
}

PlyHeader read_header(std::span<const std::uint8_t> bytes, const ReadOptions& options) {
    const std::string_view text(reinterpret_cast<const char*>(bytes.data()), bytes.size());
    std::size_t pos = 0;
    auto next_line = [&](std::size_t& line_start) -> std::string_view {
        line_start = pos;
        const std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos)
            fail(ErrorKind::Truncation,
                 "PLY header truncated at byte " + std::to_string(pos) + " (no end_header)");
        pos = end + 1;
        return text.substr(line_start, end - line_start);
    };

    PlyHeader header;
    std::size_t at = 0;
    if (next_line(at) != "ply") parse_error(at, "missing 'ply' magic");

    bool have_format = false;
    bool have_vertex = false;
    while (true) {
        const std::string_view line = next_line(at);
        const auto words = split(line);
        if (words.empty()) parse_error(at, "empty header line");
        const std::string_view key = words[0];
        if (key == "comment" || key == "obj_info") continue;
        if (key == "end_header") break;
        if (key == "format") {
            if (words.size() != 3) parse_error(at, "malformed format line");
            if (words[1] != "binary_little_endian" || words[2] != "1.0")
                parse_error(at, "unsupported format '" + std::string(line.substr(7)) +
                                    "' (only binary_little_endian 1.0)");
            have_format = true;
        } else if (key == "element") {
            if (!have_format) parse_error(at, "element before format line");
            if (words.size() != 3) parse_error(at, "malformed element line");
            if (words[1] != "vertex" || have_vertex)
                fail(ErrorKind::Schema, "unexpected element '" + std::string(words[1]) + "'");
            std::uint64_t n = 0;
            const auto* first = words[2].data();
            const auto* last = first + words[2].size();
            const auto [ptr, ec] = std::from_chars(first, last, n);
            if (ec != std::errc() || ptr != last) parse_error(at, "invalid vertex count");
            header.vertex_count = static_cast<std::size_t>(n);
            have_vertex = true;
        } else if (key == "property") {
            if (!have_vertex) parse_error(at, "property before element vertex");
            if (words.size() != 3) parse_error(at, "malformed property line");
            if (words[1] != "float" && words[1] != "float32")
                fail(ErrorKind::Schema, "property '" + std::string(words[2]) +
                                            "' has unsupported type '" + std::string(words[1]) + "'");
            header.property_names.emplace_back(words[2]);
        } else {
            parse_error(at, "unknown header keyword '" + std::string(key) + "'");
        }
    }
    if (!have_format) parse_error(at, "missing format line");
    if (!have_vertex) parse_error(at, "missing element vertex");
    header.body_offset = pos;

    const auto& canon = canonical_properties();
    for (std::size_t i = 0; i < canon.size(); ++i) {
        if (i >= header.property_names.size() || header.property_names[i] != canon[i])
            fail(ErrorKind::Schema, "missing or out-of-order property '" + canon[i] + "'");
    }
    if (header.property_names.size() > canon.size() && !options.lenient_extra_properties)
        fail(ErrorKind::Schema,
             "unexpected extra property '" + header.property_names[canon.size()] + "'");
    return header;
}

GaussianScene read_scene(std::span<const std::uint8_t> bytes, const ReadOptions& options) {
    const PlyHeader header = read_header(bytes, options);
    const std::size_t stride = header.property_names.size() * 4;
    const std::size_t n = header.vertex_count;
    if (n > std::numeric_limits<std::size_t>::max() / stride)
        fail(ErrorKind::Parse, "vertex count overflows the addressable size");
    const std::size_t expected = n * stride;
    const std::size_t available = bytes.size() - header.body_offset;
    if (available < expected)
        fail(ErrorKind::Truncation, "PLY body truncated: expected " + std::to_string(expected) +
                                        " bytes, found " + std::to_string(available));
    if (available > expected)
        fail(ErrorKind::Parse, "PLY has " + std::to_string(available - expected) +
                                   " unexpected bytes after the vertex data");

    GaussianScene scene = GaussianScene::zeros(n);
    const std::uint8_t* body = bytes.data() + header.body_offset;
    for (std::size_t i = 0; i < n; ++i) {
        const std::uint8_t* v = body + i * stride;
        auto f = [v](std::size_t k) { return detail::get_le<float>(v + 4 * k); };
        for (std::size_t k = 0; k < 3; ++k) scene.positions[3 * i + k] = f(k);
        // 3..5 are normals, discarded.
        for (std::size_t k = 0; k < 3; ++k) scene.sh_dc[3 * i + k] = f(6 + k);
        for (std::size_t k = 0; k < 45; ++k) scene.sh_rest[45 * i + k] = f(9 + k);
        scene.opacity_logits[i] = f(54);
        for (std::size_t k = 0; k < 3; ++k) scene.log_scales[3 * i + k] = f(55 + k);
        for (std::size_t k = 0; k < 4; ++k) scene.rotations[4 * i + k] = f(58 + k);
    }
    return scene;
}

std::vector<std::uint8_t> write_scene(const GaussianScene& scene) {
    if (!scene.shapes_consistent())
        fail(ErrorKind::InvalidArgument, "scene attribute arrays disagree on the Gaussian count");
    const std::size_t n = scene.count();
    std::string header = "ply\nformat binary_little_endian 1.0\nelement vertex " +
                         std::to_string(n) + "\n";
    for (const auto& name : canonical_properties()) header += "property float " + name + "\n";
    header += "end_header\n";

    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.reserve(out.size() + n * kVertexBytes);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < 3; ++k) detail::put_le(out, scene.positions[3 * i + k]);
        for (std::size_t k = 0; k < 3; ++k) detail::put_le(out, 0.0f);
        for (std::size_t k = 0; k < 3; ++k) detail::put_le(out, scene.sh_dc[3 * i + k]);
        for (std::size_t k = 0; k < 45; ++k) detail::put_le(out, scene.sh_rest[45 * i + k]);
        detail::put_le(out, scene.opacity_logits[i]);
        for (std::size_t k = 0; k < 3; ++k) detail::put_le(out, scene.log_scales[3 * i + k]);
        for (std::size_t k = 0; k < 4; ++k) detail::put_le(out, scene.rotations[4 * i + k]);
    }
    return out;
}

GaussianScene load(const std::filesystem::path& path, const ReadOptions& options) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::Io, "cannot open '" + path.string() + "'");
    const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                          std::istreambuf_iterator<char>());
    return read_scene(bytes, options);
}

void save(const std::filesystem::path& path, const GaussianScene& scene) {
    const auto bytes = write_scene(scene);
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorKind::Io, "cannot write '" + path.string() + "'");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) fail(ErrorKind::Io, "write failed for '" + path.string() + "'");
}

}  // namespace elmgs::ply
