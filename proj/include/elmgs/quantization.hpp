// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "elmgs/image.hpp"
#include "elmgs/renderer.hpp"
#include "elmgs/scene.hpp"

namespace elmgs {

/// Uniform scalar quantizer with a learnable step. Codes span [-Q_N, Q_P]:
/// signed b bits gives Q_N = 2^(b-1), Q_P = 2^(b-1) - 1; unsigned gives
/// Q_N = 0, Q_P = 2^b - 1.
struct QuantizerState {
    Attribute attribute = Attribute::Position;
    int bits = 32;
    bool is_signed = true;
    double step = 1.0;

    std::int64_t q_neg() const { return is_signed ? (std::int64_t{1} << (bits - 1)) : 0; }
    std::int64_t q_pos() const {
        return is_signed ? (std::int64_t{1} << (bits - 1)) - 1 : (std::int64_t{1} << bits) - 1;
    }
    /// Bytes per serialized code.
    std::size_t code_bytes() const { return static_cast<std::size_t>((bits + 7) / 8); }

    /// Throws InvalidArgument unless 2 <= bits <= 32 and step is positive and
    /// finite.
    void validate() const;

    bool operator==(const QuantizerState&) const = default;
};

using QuantizerSet = std::array<QuantizerState, kAttributeCount>;

/// round-half-even(clip(value / step, -Q_N, Q_P)).
std::int64_t quantize(double value, const QuantizerState& qs);

/// code * step. Codes outside [-Q_N, Q_P] are rejected.
double dequantize(std::int64_t code, const QuantizerState& qs);

/// d dequantize(quantize(v)) / d step, with the rounding treated as identity.
double step_gradient(double value, const QuantizerState& qs);

/// Straight-through gradient: 1 strictly inside the clip range, 0 outside.
double value_gradient(double value, const QuantizerState& qs);

/// 2 * mean(|values|) / sqrt(Q_P), floored at 1e-12.
double init_step(std::span<const float> values, const QuantizerState& qs);
double init_step(std::span<const double> values, const QuantizerState& qs);

/// Integer codes of every attribute plus the quantizer that produced them.
struct QuantizedScene {
    std::size_t count = 0;
    QuantizerSet quantizers;
    std::array<std::vector<std::int64_t>, kAttributeCount> codes;

    std::vector<std::int64_t>& codes_of(Attribute a) { return codes[index_of(a)]; }
    const std::vector<std::int64_t>& codes_of(Attribute a) const { return codes[index_of(a)]; }

    /// Throws Corruption when shapes or code ranges are inconsistent.
    void validate() const;

    /// Gaussians reordered so that output i is input perm[i].
    QuantizedScene permuted(std::span<const std::size_t> perm) const;

    bool operator==(const QuantizedScene&) const = default;
};

/// Bit depth per attribute group; defaults match the full-scale pipeline:
/// spherical harmonics at 8 bits, everything else at 32.
struct BitDepths {
    std::array<int, kAttributeCount> bits = {32, 32, 32, 32, 8, 8};

    int& operator[](Attribute a) { return bits[index_of(a)]; }
    int operator[](Attribute a) const { return bits[index_of(a)]; }

    static BitDepths uniform(int b) {
        BitDepths d;
        d.bits.fill(b);
        return d;
    }
};

/// Signed quantizers with steps from init_step over each attribute.
QuantizerSet init_quantizers(const GaussianScene& scene, const BitDepths& depths);

QuantizedScene quantize_scene(const GaussianScene& scene, const QuantizerSet& quantizers);
GaussianScene dequantize_scene(const QuantizedScene& q);

/// dequantize(quantize(.)) applied to every parameter, in double precision.
SceneParams fake_quantize(const SceneParams& params, const QuantizerSet& quantizers);

struct QatOptions {
    FinetuneOptions finetune;
    /// Step learning rate as a fraction of each attribute's initial step.
    double step_lr_fraction = 1e-3;
    /// Attributes whose step is learned; others stay at their initial value.
    std::array<bool, kAttributeCount> learn_step = {true, true, true, true, true, true};
    /// Multiply step gradients by 1 / sqrt(N_attr * Q_P).
    bool scale_step_gradient = true;
};

struct QatResult {
    GaussianScene scene;
    QuantizerSet quantizers;
    std::vector<double> loss_trace;  // loss of the quantized forward at every step
};

/// Quantization-aware fine-tuning: renders from fake-quantized parameters,
/// passes gradients straight through to the raw parameters and learns each
/// attribute's step.
QatResult qat_finetune(const GaussianScene& scene, std::span<const View> views,
                       const QuantizerSet& initial, int steps, const QatOptions& options = {});

}  // namespace elmgs
