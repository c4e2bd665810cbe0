// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace elmgs {

/// Attribute groups of a Gaussian. The numeric value is also the attribute id
/// written into compressed containers.
enum class Attribute : std::uint8_t {
    Position = 0,
    Rotation = 1,
    LogScale = 2,
    OpacityLogit = 3,
    ShDc = 4,
    ShRest = 5,
};

inline constexpr std::size_t kAttributeCount = 6;

inline constexpr std::array<Attribute, kAttributeCount> kAllAttributes = {
    Attribute::Position, Attribute::Rotation, Attribute::LogScale,
    Attribute::OpacityLogit, Attribute::ShDc, Attribute::ShRest};

/// Scalars per Gaussian for each attribute group.
inline constexpr std::array<std::size_t, kAttributeCount> kArity = {3, 4, 3, 1, 3, 45};

/// 3 + 4 + 3 + 1 + 3 + 45.
inline constexpr std::size_t kParametersPerGaussian = 59;

constexpr std::size_t arity(Attribute a) { return kArity[static_cast<std::size_t>(a)]; }
constexpr std::size_t index_of(Attribute a) { return static_cast<std::size_t>(a); }

std::string_view attribute_name(Attribute a);

/// Column-oriented per-Gaussian parameters in their raw (pre-activation)
/// form: quaternions are unnormalized (w, x, y, z), scales are logarithmic and
/// opacities are logits.
template <typename T>
struct SceneArrays {
    std::vector<T> positions;       // N x 3
    std::vector<T> rotations;       // N x 4
    std::vector<T> log_scales;      // N x 3
    std::vector<T> opacity_logits;  // N
    std::vector<T> sh_dc;           // N x 3
    std::vector<T> sh_rest;         // N x 45

    static SceneArrays zeros(std::size_t n) {
        SceneArrays s;
        for (Attribute a : kAllAttributes) s.attribute(a).assign(n * arity(a), T{0});
        return s;
    }

    std::size_t count() const { return opacity_logits.size(); }

    std::vector<T>& attribute(Attribute a) {
        switch (a) {
            case Attribute::Position: return positions;
            case Attribute::Rotation: return rotations;
            case Attribute::LogScale: return log_scales;
            case Attribute::OpacityLogit: return opacity_logits;
            case Attribute::ShDc: return sh_dc;
            case Attribute::ShRest: break;
        }
        return sh_rest;
    }

    const std::vector<T>& attribute(Attribute a) const {
        return const_cast<SceneArrays&>(*this).attribute(a);
    }

    /// True when every attribute array has count() * arity elements.
    bool shapes_consistent() const {
        const std::size_t n = count();
        for (Attribute a : kAllAttributes)
            if (attribute(a).size() != n * arity(a)) return false;
        return true;
    }

    /// Gathers the Gaussians at `indices`, in that order.
    SceneArrays select(std::span<const std::size_t> indices) const {
        SceneArrays out;
        for (Attribute a : kAllAttributes) {
            const std::size_t k = arity(a);
            const auto& src = attribute(a);
            auto& dst = out.attribute(a);
            dst.resize(indices.size() * k);
            for (std::size_t i = 0; i < indices.size(); ++i)
                for (std::size_t j = 0; j < k; ++j) dst[i * k + j] = src[indices[i] * k + j];
        }
        return out;
    }

    template <typename U>
    SceneArrays<U> cast() const {
        SceneArrays<U> out;
        for (Attribute a : kAllAttributes) {
            const auto& src = attribute(a);
            out.attribute(a).assign(src.begin(), src.end());
        }
        return out;
    }

    bool operator==(const SceneArrays&) const = default;
};

/// The object being compressed. Parameters are held in 32-bit floats exactly
/// as in a 3DGS checkpoint.
using GaussianScene = SceneArrays<float>;

/// Double-precision working copy used by the renderer and optimizers.
using SceneParams = SceneArrays<double>;

/// d loss / d raw parameter, same layout as the scene.
using SceneGradients = SceneArrays<double>;

/// Per-Gaussian accumulated gradient magnitude, all entries >= 0.
using GradientScore = std::vector<double>;

/// Throws InvalidArgument when array shapes disagree or a quaternion has zero
/// norm.
template <typename T>
void validate_scene(const SceneArrays<T>& scene);

/// Bitwise equality of every float, so NaN payloads and signed zeros count.
bool bit_identical(const GaussianScene& a, const GaussianScene& b);

double sigmoid(double logit);
double logit(double probability);

inline double activate_opacity(double logit_value) { return sigmoid(logit_value); }

/// Rotation matrix of q / |q| for q = (w, x, y, z).
Eigen::Matrix3d rotation_matrix(const Eigen::Vector4d& q);

/// R S S^T R^T with R from the normalized quaternion and S = diag(scale).
Eigen::Matrix3d covariance3d(const Eigen::Vector4d& q, const Eigen::Vector3d& scale);

/// Activated opacities of every Gaussian.
std::vector<double> activated_opacities(const GaussianScene& scene);

extern template void validate_scene<float>(const SceneArrays<float>&);
extern template void validate_scene<double>(const SceneArrays<double>&);

}  // namespace elmgs
