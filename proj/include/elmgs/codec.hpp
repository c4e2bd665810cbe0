// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "elmgs/quantization.hpp"
#include "elmgs/scene.hpp"

namespace elmgs {

// ---------------------------------------------------------------------------
// Morton (Z-order) keys

inline constexpr int kMortonBitsPerAxis = 21;
inline constexpr std::uint32_t kMortonGridSize = 1u << kMortonBitsPerAxis;

/// Interleaves three 21-bit coordinates: bit k of axis a lands at bit 3k + a
/// (x = 0 is least significant).
std::uint64_t morton_encode(std::uint32_t x, std::uint32_t y, std::uint32_t z);
std::array<std::uint32_t, 3> morton_decode(std::uint64_t key);

struct Aabb {
    std::array<double, 3> min{0.0, 0.0, 0.0};
    std::array<double, 3> max{0.0, 0.0, 0.0};

    bool operator==(const Aabb&) const = default;
};

/// Bounds of N x 3 positions; all zeros when empty.
Aabb compute_aabb(std::span<const double> positions);

/// Cell of `p` in the 2^21 grid spanning `box`; degenerate axes map to 0.
std::array<std::uint32_t, 3> grid_cell(const std::array<double, 3>& p, const Aabb& box);

/// Stable sort of N x 3 positions by Morton key over their bounding box.
/// Output i is the index of the i-th Gaussian in Z-order.
std::vector<std::size_t> morton_order(std::span<const double> positions);
std::vector<std::size_t> morton_order(const GaussianScene& scene);
std::vector<std::size_t> morton_order(const QuantizedScene& scene);

/// Dequantized positions of a quantized scene in double precision.
std::vector<double> decoded_positions(const QuantizedScene& scene);

// ---------------------------------------------------------------------------
// Container

enum class Ordering { Morton, Original };

inline constexpr std::array<char, 4> kContainerMagic = {'E', 'L', 'M', 'G'};
inline constexpr std::uint16_t kContainerVersion = 1;
inline constexpr int kDeflateLevel = 9;

struct DecodedContainer {
    QuantizedScene scene;  // in stored order
    bool morton_ordered = false;
    Aabb aabb;
};

/// Per-attribute stream sizes of an encoded container.
struct StreamSizes {
    std::array<std::uint64_t, kAttributeCount> raw{};
    std::array<std::uint64_t, kAttributeCount> compressed{};
};

/// Little-endian two's-complement codes at ceil(bits/8) bytes each.
std::vector<std::uint8_t> serialize_codes(std::span<const std::int64_t> codes, const QuantizerState& qs);

/// Layout, little-endian: magic, u16 version, u16 flags (bit 0: Morton order),
/// u64 count, AABB as 6 f64, then per attribute {u8 id, u8 bits, u8 signed,
/// u8 reserved, f64 step, u64 raw_len, u64 comp_len, raw DEFLATE bytes}, and
/// finally a u32 CRC-32 of everything before it.
std::vector<std::uint8_t> encode(const QuantizedScene& scene, Ordering order);
DecodedContainer decode(std::span<const std::uint8_t> bytes);

/// Reads the stream size table without inflating anything.
StreamSizes stream_sizes(std::span<const std::uint8_t> bytes);

bool looks_like_container(std::span<const std::uint8_t> bytes);

/// Raw (RFC 1951) DEFLATE wrappers over zlib.
std::vector<std::uint8_t> deflate_raw(std::span<const std::uint8_t> data, int level = kDeflateLevel);
std::vector<std::uint8_t> inflate_raw(std::span<const std::uint8_t> data, std::size_t expected_size);

// ---------------------------------------------------------------------------
// Entropy

/// First-order empirical entropy in bits per symbol.
double entropy_bits(std::span<const std::int64_t> codes);

}  // namespace elmgs
