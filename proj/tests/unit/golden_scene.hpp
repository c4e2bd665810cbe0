// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "elmgs/quantization.hpp"

namespace golden {

inline constexpr const char* kContainerFile = "golden.elmg";
inline constexpr const char* kPlyFile = "golden.ply";
inline constexpr const char* kInspectFile = "golden_inspect.json";

/// Four Gaussians at cube corners, listed in Z-order so that Morton sorting is
/// the identity. Steps are powers of two, so every decoded value is exact.
inline elmgs::QuantizedScene scene() {
    using elmgs::Attribute;
    elmgs::QuantizedScene q;
    q.count = 4;
    q.quantizers = {{
        {Attribute::Position, 16, true, 0.25},
        {Attribute::Rotation, 8, true, 1.0 / 64},
        {Attribute::LogScale, 12, true, 1.0 / 128},
        {Attribute::OpacityLogit, 4, true, 0.5},
        {Attribute::ShDc, 8, true, 1.0 / 32},
        {Attribute::ShRest, 4, false, 1.0 / 16},
    }};
    q.codes_of(Attribute::Position) = {0, 0, 0, 4, 0, 0, 0, 4, 0, 4, 4, 4};
    q.codes_of(Attribute::Rotation) = {64, 0, 0, 0, 45, 45, 0, 0, 64, 0, -10, 0, -128, 127, 0, 1};
    q.codes_of(Attribute::LogScale) = {-256, -256, -256, -300, -200, -250, -2048, 2047, 0, -128, -128, -384};
    q.codes_of(Attribute::OpacityLogit) = {4, -8, 7, 0};
    q.codes_of(Attribute::ShDc) = {16, -16, 0, 127, -128, 5, -3, 3, 0, 8, 8, 8};
    auto& rest = q.codes_of(Attribute::ShRest);
    rest.resize(4 * 45);
    for (std::size_t i = 0; i < rest.size(); ++i) rest[i] = static_cast<std::int64_t>((i * 7) % 16);
    return q;
}

}  // namespace golden
