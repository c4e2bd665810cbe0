// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "elmgs/image.hpp"
#include "elmgs/scene.hpp"

namespace elmgs {

enum class SynthLayout { Curve, Cluster, Grid };

struct SynthSpec {
    std::uint64_t seed = 0;
    std::size_t n_gaussians = 256;
    /// Share of Gaussians that are near-transparent and sit just outside every
    /// view's frustum.
    double fraction_redundant = 0.0;
    SynthLayout layout = SynthLayout::Curve;
    std::size_t n_views = 4;
    int image_width = 32;
    int image_height = 32;
    /// Standard deviation of the noise added to the visible Gaussians after the
    /// ground truth is rendered, so the returned scene is near but not at the
    /// optimum. Zero reproduces the ground truth exactly.
    double perturbation = 0.0;
    /// Render ground-truth images. Off for scenes too large to rasterize
    /// cheaply.
    bool render_views = true;

    void validate() const;
};

struct SynthScene {
    GaussianScene scene;
    std::vector<View> views;
    std::vector<bool> redundant;  // per Gaussian
};

SynthScene make_scene(const SynthSpec& spec);

/// Cameras on a horizontal ring of radius 4 around the origin, looking at it.
std::vector<Camera> ring_cameras(std::size_t n, int width, int height);

}  // namespace elmgs
