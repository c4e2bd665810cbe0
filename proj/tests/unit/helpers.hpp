// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "elmgs/image.hpp"
#include "elmgs/scene.hpp"

namespace testutil {

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

/// Arbitrary raw parameters with unit-ish magnitudes.
inline elmgs::GaussianScene random_scene(std::mt19937_64& rng, std::size_t n) {
    auto s = elmgs::GaussianScene::zeros(n);
    for (elmgs::Attribute a : elmgs::kAllAttributes)
        for (float& v : s.attribute(a)) v = static_cast<float>(uniform(rng, -2.0, 2.0));
    for (std::size_t i = 0; i < n; ++i) s.rotations[4 * i] = static_cast<float>(uniform(rng, 0.5, 1.5));
    return s;
}

inline elmgs::Image random_image(std::mt19937_64& rng, int w, int h) {
    elmgs::Image img(w, h);
    for (double& v : img.rgb) v = uniform(rng, 0.0, 1.0);
    return img;
}

/// Camera at (0, 0, -4) looking at the origin.
inline elmgs::Camera front_camera(int w, int h, double focal) {
    return elmgs::look_at({0.0, 0.0, -4.0}, {0.0, 0.0, 0.0}, {0.0, 1.0, 0.0}, w, h, focal);
}

}  // namespace testutil

#include <algorithm>
#include <functional>
#include <string>

#include "elmgs/renderer.hpp"

namespace testutil {

/// Scene for gradient checks: moderate opacities and colors so that neither
/// the alpha clamp, the early stop nor the output clamp engage.
inline elmgs::SceneParams gradcheck_scene(std::mt19937_64& rng, std::size_t n) {
    auto s = elmgs::SceneParams::zeros(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (int k = 0; k < 3; ++k) s.positions[3 * i + k] = uniform(rng, -0.8, 0.8);
        for (int k = 0; k < 4; ++k) s.rotations[4 * i + k] = uniform(rng, -1.0, 1.0);
        s.rotations[4 * i] = uniform(rng, 0.5, 1.5);
        for (int k = 0; k < 3; ++k) s.log_scales[3 * i + k] = std::log(uniform(rng, 0.1, 0.5));
        s.opacity_logits[i] = elmgs::logit(uniform(rng, 0.1, 0.7));
        for (int k = 0; k < 3; ++k) s.sh_dc[3 * i + k] = (uniform(rng, 0.05, 0.95) - 0.5) / elmgs::kShC0;
        for (int k = 0; k < 45; ++k) s.sh_rest[45 * i + k] = uniform(rng, -0.5, 0.5);
    }
    return s;
}

/// Target image whose residual against `rendered` is at least 0.05 in every
/// channel, keeping the L1 term away from its kink.
inline elmgs::Image offset_truth(std::mt19937_64& rng, const elmgs::Image& rendered) {
    elmgs::Image t = rendered;
    for (double& v : t.rgb) {
        const double u = uniform(rng, 0.05, 0.3);
        v = v > 0.5 ? v - u : v + u;
    }
    return t;
}

struct GradMismatch {
    std::string attribute;
    std::size_t entry = 0;
    double analytic = 0.0;
    double numeric = 0.0;
};

/// Compares every analytic gradient entry with a central difference of the
/// loss of the rasterized image. Returns the entries outside tolerance.
inline std::vector<GradMismatch> finite_difference_check(const elmgs::SceneParams& params,
                                                         const elmgs::Camera& camera,
                                                         const elmgs::Image& truth, double h,
                                                         double rel_tol, double abs_tol) {
    const elmgs::BackwardResult r = elmgs::backward(params, camera, truth);
    std::vector<GradMismatch> bad;
    for (elmgs::Attribute a : elmgs::kAllAttributes) {
        const auto& analytic = r.grads.attribute(a);
        for (std::size_t e = 0; e < analytic.size(); ++e) {
            elmgs::SceneParams plus = params, minus = params;
            plus.attribute(a)[e] += h;
            minus.attribute(a)[e] -= h;
            const double lp = elmgs::loss(elmgs::rasterize(plus, camera), truth);
            const double lm = elmgs::loss(elmgs::rasterize(minus, camera), truth);
            const double numeric = (lp - lm) / (2.0 * h);
            const double diff = std::abs(numeric - analytic[e]);
            const double scale = std::max(std::abs(numeric), std::abs(analytic[e]));
            if (!(diff <= abs_tol || diff <= rel_tol * scale))
                bad.push_back({std::string(elmgs::attribute_name(a)), e, analytic[e], numeric});
        }
    }
    return bad;
}

}  // namespace testutil
