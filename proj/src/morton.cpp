// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "elmgs/codec.hpp"
#include "elmgs/error.hpp"

namespace elmgs {

namespace {

// Spreads the low 21 bits of v so that bit k moves to bit 3k.
std::uint64_t spread_bits(std::uint64_t v) {
    v &= 0x1fffffULL;
    v = (v | (v << 32)) & 0x1f00000000ffffULL;
    v = (v | (v << 16)) & 0x1f0000ff0000ffULL;
    v = (v | (v << 8)) & 0x100f00f00f00f00fULL;
    v = (v | (v << 4)) & 0x10c30c30c30c30c3ULL;
    v = (v | (v << 2)) & 0x1249249249249249ULL;
    return v;
}

std::uint32_t compact_bits(std::uint64_t v) {
    v &= 0x1249249249249249ULL;
    v = (v ^ (v >> 2)) & 0x10c30c30c30c30c3ULL;
    v = (v ^ (v >> 4)) & 0x100f00f00f00f00fULL;
    v = (v ^ (v >> 8)) & 0x1f0000ff0000ffULL;
    v = (v ^ (v >> 16)) & 0x1f00000000ffffULL;
    v = (v ^ (v >> 32)) & 0x1fffffULL;
    return static_cast<std::uint32_t>(v);
}

}  // namespace

std::uint64_t morton_encode(std::uint32_t x, std::uint32_t y, std::uint32_t z) {
    if (x >= kMortonGridSize || y >= kMortonGridSize || z >= kMortonGridSize)
        fail(ErrorKind::InvalidArgument, "Morton grid coordinate exceeds 21 bits");
    return spread_bits(x) | (spread_bits(y) << 1) | (spread_bits(z) << 2);
}

std::array<std::uint32_t, 3> morton_decode(std::uint64_t key) {
    return {compact_bits(key), compact_bits(key >> 1), compact_bits(key >> 2)};
}

Aabb compute_aabb(std::span<const double> positions) {
    Aabb box;
    if (positions.size() % 3 != 0) fail(ErrorKind::InvalidArgument, "positions are not N x 3");
    if (positions.empty()) return box;
    for (int a = 0; a < 3; ++a) box.min[a] = box.max[a] = positions[a];
    for (std::size_t i = 0; i < positions.size(); i += 3)
        for (int a = 0; a < 3; ++a) {
            const double v = positions[i + a];
            if (!std::isfinite(v)) fail(ErrorKind::Numerical, "non-finite position in Morton sort");
            box.min[a] = std::min(box.min[a], v);
            box.max[a] = std::max(box.max[a], v);
        }
    return box;
}

std::array<std::uint32_t, 3> grid_cell(const std::array<double, 3>& p, const Aabb& box) {
    std::array<std::uint32_t, 3> cell{0, 0, 0};
    for (int a = 0; a < 3; ++a) {
        const double extent = box.max[a] - box.min[a];
        if (!(extent > 0.0)) continue;
        const double g = std::floor((p[a] - box.min[a]) / extent * static_cast<double>(kMortonGridSize));
        cell[a] = static_cast<std::uint32_t>(std::clamp(g, 0.0, static_cast<double>(kMortonGridSize - 1)));
    }
    return cell;
}

std::vector<std::size_t> morton_order(std::span<const double> positions) {
    const Aabb box = compute_aabb(positions);
    const std::size_t n = positions.size() / 3;
    std::vector<std::uint64_t> keys(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto c = grid_cell({positions[3 * i], positions[3 * i + 1], positions[3 * i + 2]}, box);
        keys[i] = morton_encode(c[0], c[1], c[2]);
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&keys](std::size_t a, std::size_t b) { return keys[a] < keys[b]; });
    return order;
}

std::vector<std::size_t> morton_order(const GaussianScene& scene) {
    const std::vector<double> p(scene.positions.begin(), scene.positions.end());
    return morton_order(std::span<const double>(p));
}

std::vector<double> decoded_positions(const QuantizedScene& scene) {
    const QuantizerState& qs = scene.quantizers[index_of(Attribute::Position)];
    const auto& codes = scene.codes_of(Attribute::Position);
    std::vector<double> p(codes.size());
    for (std::size_t i = 0; i < codes.size(); ++i) p[i] = static_cast<double>(codes[i]) * qs.step;
    return p;
}

std::vector<std::size_t> morton_order(const QuantizedScene& scene) {
    const std::vector<double> p = decoded_positions(scene);
    return morton_order(std::span<const double>(p));
}

}  // namespace elmgs
