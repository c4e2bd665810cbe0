// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cstring>
#include <random>
#include <string>

#include "elmgs/error.hpp"
#include "elmgs/ply.hpp"
#include "helpers.hpp"

using namespace elmgs;

namespace {

std::string header_with(const std::vector<std::string>& props, std::size_t count,
                        const std::string& format = "binary_little_endian 1.0") {
    std::string h = "ply\nformat " + format + "\nelement vertex " + std::to_string(count) + "\n";
    for (const auto& p : props) h += "property float " + p + "\n";
    return h + "end_header\n";
}

std::vector<std::string> standard_names() {
    std::vector<std::string> n = {"x", "y", "z", "nx", "ny", "nz", "f_dc_0", "f_dc_1", "f_dc_2"};
    for (int i = 0; i < 45; ++i) n.push_back("f_rest_" + std::to_string(i));
    for (const char* s : {"opacity", "scale_0", "scale_1", "scale_2", "rot_0", "rot_1", "rot_2", "rot_3"})
        n.push_back(s);
    return n;
}

std::vector<std::uint8_t> bytes_of(const std::string& s) { return {s.begin(), s.end()}; }

void append_float(std::vector<std::uint8_t>& out, float v) {
    unsigned char b[4];
    std::memcpy(b, &v, 4);  // the test host is little-endian
    out.insert(out.end(), b, b + 4);
}

ErrorKind kind_of(const std::vector<std::uint8_t>& bytes, const ply::ReadOptions& opt = {}) {
    try {
        ply::read_scene(bytes, opt);
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("expected an error");
    return ErrorKind::InvalidArgument;
}

std::string message_of(const std::vector<std::uint8_t>& bytes) {
    try {
        ply::read_scene(bytes);
    } catch (const Error& e) {
        return e.what();
    }
    return {};
}

}  // namespace

TEST_CASE("canonical property list") {
    CHECK(ply::canonical_properties() == standard_names());
    CHECK(ply::kVertexBytes == 248);
}

TEST_CASE("hand-constructed single Gaussian") {
    auto bytes = bytes_of(header_with(standard_names(), 1));
    for (int i = 0; i < 62; ++i) append_float(bytes, i == 58 ? 1.0f : 0.0f);  // rot_0
    const GaussianScene s = ply::read_scene(bytes);
    REQUIRE(s.count() == 1);
    CHECK(s.rotations == std::vector<float>{1.0f, 0.0f, 0.0f, 0.0f});
    CHECK(s.positions == std::vector<float>{0.0f, 0.0f, 0.0f});
    CHECK(s.opacity_logits == std::vector<float>{0.0f});
}

TEST_CASE("property values land in their attributes") {
    auto bytes = bytes_of(header_with(standard_names(), 1));
    for (int i = 0; i < 62; ++i) append_float(bytes, static_cast<float>(i) + 0.5f);
    const GaussianScene s = ply::read_scene(bytes);
    CHECK(s.positions == std::vector<float>{0.5f, 1.5f, 2.5f});
    CHECK(s.sh_dc == std::vector<float>{6.5f, 7.5f, 8.5f});
    CHECK(s.sh_rest.front() == 9.5f);
    CHECK(s.sh_rest.back() == 53.5f);
    CHECK(s.opacity_logits[0] == 54.5f);
    CHECK(s.log_scales == std::vector<float>{55.5f, 56.5f, 57.5f});
    CHECK(s.rotations == std::vector<float>{58.5f, 59.5f, 60.5f, 61.5f});
}

TEST_CASE("empty scenes") {
    const GaussianScene empty = ply::read_scene(bytes_of(header_with(standard_names(), 0)));
    CHECK(empty.count() == 0);
    const auto written = ply::write_scene(GaussianScene{});
    CHECK(written == bytes_of(header_with(standard_names(), 0)));
}

TEST_CASE("writer emits the canonical header and 248 bytes per Gaussian") {
    std::mt19937_64 rng(1);
    const auto s = testutil::random_scene(rng, 1);
    const auto bytes = ply::write_scene(s);
    const std::string header = header_with(standard_names(), 1);
    REQUIRE(bytes.size() == header.size() + 248);
    CHECK(std::string(bytes.begin(), bytes.begin() + static_cast<long>(header.size())) == header);
    // normals are zeros
    for (std::size_t i = header.size() + 12; i < header.size() + 24; ++i) CHECK(bytes[i] == 0);
}

TEST_CASE("round trips are bit-exact") {
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 50; ++trial) {
        auto s = testutil::random_scene(rng, rng() % 40);
        if (trial % 5 == 0 && s.count() > 0) {
            s.positions[0] = -0.0f;
            s.sh_rest[0] = std::numeric_limits<float>::denorm_min();
        }
        const auto bytes = ply::write_scene(s);
        const auto back = ply::read_scene(bytes);
        CHECK(bit_identical(back, s));
        CHECK(ply::write_scene(back) == bytes);
    }
}

TEST_CASE("mutated bodies still round-trip bit-exactly") {
    std::mt19937_64 rng(3);
    const auto s = testutil::random_scene(rng, 8);
    const auto clean = ply::write_scene(s);
    const std::size_t body = clean.size() - 8 * 248;
    for (int trial = 0; trial < 200; ++trial) {
        auto bytes = clean;
        const std::size_t at = body + rng() % (8 * 248);
        bytes[at] = static_cast<std::uint8_t>(rng());
        const auto back = ply::read_scene(bytes);
        auto rewritten = ply::write_scene(back);
        // normals are dropped on read and written as zeros
        for (std::size_t g = 0; g < 8; ++g)
            for (std::size_t k = 12; k < 24; ++k) bytes[body + g * 248 + k] = 0;
        CHECK(rewritten == bytes);
    }
}

TEST_CASE("every truncation yields the truncation error") {
    std::mt19937_64 rng(4);
    const auto full = ply::write_scene(testutil::random_scene(rng, 3));
    for (std::size_t cut = 0; cut < full.size(); ++cut) {
        const std::vector<std::uint8_t> part(full.begin(), full.begin() + static_cast<long>(cut));
        CHECK(kind_of(part) == ErrorKind::Truncation);
    }
}

TEST_CASE("truncated body reports expected and actual sizes") {
    std::mt19937_64 rng(5);
    auto bytes = ply::write_scene(testutil::random_scene(rng, 2));
    bytes.resize(bytes.size() - 10);
    const std::string msg = message_of(bytes);
    CHECK(msg.find("496") != std::string::npos);
    CHECK(msg.find("486") != std::string::npos);
}

TEST_CASE("schema errors name the property") {
    auto names = standard_names();
    names.erase(names.begin() + 53);  // f_rest_44
    auto bytes = bytes_of(header_with(names, 0));
    CHECK(kind_of(bytes) == ErrorKind::Schema);
    CHECK(message_of(bytes).find("f_rest_44") != std::string::npos);

    names = standard_names();
    std::swap(names[0], names[1]);
    bytes = bytes_of(header_with(names, 0));
    CHECK(kind_of(bytes) == ErrorKind::Schema);
    CHECK(message_of(bytes).find("'x'") != std::string::npos);
}

TEST_CASE("malformed headers are parse errors with a byte offset") {
    auto bytes = bytes_of(header_with(standard_names(), 0, "ascii 1.0"));
    CHECK(kind_of(bytes) == ErrorKind::Parse);
    CHECK(message_of(bytes).find("byte 4") != std::string::npos);

    bytes = bytes_of("plx\n" + header_with(standard_names(), 0).substr(4));
    CHECK(kind_of(bytes) == ErrorKind::Parse);

    std::string h = header_with(standard_names(), 0);
    h.replace(h.find("vertex 0"), 8, "vertex x");
    CHECK(kind_of(bytes_of(h)) == ErrorKind::Parse);
}

TEST_CASE("non-float properties and extra elements are schema errors") {
    std::string h = header_with(standard_names(), 0);
    h.replace(h.find("float x"), 7, "double x");
    CHECK(kind_of(bytes_of(h)) == ErrorKind::Schema);

    h = header_with(standard_names(), 0);
    h.insert(h.find("end_header"), "element face 0\nproperty list uchar int vertex_indices\n");
    CHECK(kind_of(bytes_of(h)) == ErrorKind::Schema);
}

TEST_CASE("extra trailing properties: strict by default, lenient on request") {
    auto names = standard_names();
    names.push_back("extra");
    auto bytes = bytes_of(header_with(names, 1));
    for (int i = 0; i < 63; ++i) append_float(bytes, static_cast<float>(i));
    CHECK(kind_of(bytes) == ErrorKind::Schema);
    const auto s = ply::read_scene(bytes, {.lenient_extra_properties = true});
    REQUIRE(s.count() == 1);
    CHECK(s.rotations == std::vector<float>{58.0f, 59.0f, 60.0f, 61.0f});
}

TEST_CASE("trailing bytes after the body are rejected") {
    std::mt19937_64 rng(6);
    auto bytes = ply::write_scene(testutil::random_scene(rng, 1));
    bytes.push_back(0);
    CHECK(kind_of(bytes) == ErrorKind::Parse);
}
