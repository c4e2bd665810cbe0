// SPDX-License-Identifier: Apache-2.0
#include "elmgs/scene.hpp"

#include <cmath>
#include <cstring>
#include <string>

#include "elmgs/error.hpp"

namespace elmgs {

std::string_view attribute_name(Attribute a) {
    switch (a) {
        case Attribute::Position: return "position";
        case Attribute::Rotation: return "rotation";
        case Attribute::LogScale: return "log_scale";
        case Attribute::OpacityLogit: return "opacity_logit";
        case Attribute::ShDc: return "sh_dc";
        case Attribute::ShRest: return "sh_rest";
    }
    return "unknown";
}

template <typename T>
void validate_scene(const SceneArrays<T>& scene) {
    if (!scene.shapes_consistent())
        fail(ErrorKind::InvalidArgument, "scene attribute arrays disagree on the Gaussian count");
    for (std::size_t i = 0; i < scene.count(); ++i) {
        const T* q = &scene.rotations[4 * i];
        const double norm2 = double(q[0]) * q[0] + double(q[1]) * q[1] +
                             double(q[2]) * q[2] + double(q[3]) * q[3];
        if (!(norm2 > 0.0))
            fail(ErrorKind::InvalidArgument,
                 "Gaussian " + std::to_string(i) + " has a zero-norm quaternion");
    }
}

template void validate_scene<float>(const SceneArrays<float>&);
template void validate_scene<double>(const SceneArrays<double>&);

bool bit_identical(const GaussianScene& a, const GaussianScene& b) {
    for (Attribute attr : kAllAttributes) {
        const auto& x = a.attribute(attr);
        const auto& y = b.attribute(attr);
        if (x.size() != y.size()) return false;
        if (!x.empty() && std::memcmp(x.data(), y.data(), x.size() * sizeof(float)) != 0)
            return false;
    }
    return true;
}

double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double logit(double p) { return std::log(p) - std::log1p(-p); }

Eigen::Matrix3d rotation_matrix(const Eigen::Vector4d& q) {
    const double norm = q.norm();
    if (!(norm > 0.0)) fail(ErrorKind::InvalidArgument, "zero-norm quaternion");
    const double w = q[0] / norm, x = q[1] / norm, y = q[2] / norm, z = q[3] / norm;
    Eigen::Matrix3d r;
    r << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
        2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
        2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
    return r;
}

Eigen::Matrix3d covariance3d(const Eigen::Vector4d& q, const Eigen::Vector3d& scale) {
    if (!(scale.array() > 0.0).all())
        fail(ErrorKind::InvalidArgument, "covariance scale must be positive");
    const Eigen::Matrix3d m = rotation_matrix(q) * scale.asDiagonal();
    return m * m.transpose();
}

std::vector<double> activated_opacities(const GaussianScene& scene) {
    std::vector<double> out(scene.count());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = sigmoid(scene.opacity_logits[i]);
    return out;
}

}  // namespace elmgs
