// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "elmgs/error.hpp"
#include "elmgs/metrics.hpp"
#include "elmgs/renderer.hpp"
#include "elmgs/synth.hpp"

using namespace elmgs;

namespace {

SynthSpec small(std::uint64_t seed, double redundant) {
    SynthSpec s;
    s.seed = seed;
    s.n_gaussians = 64;
    s.fraction_redundant = redundant;
    s.image_width = s.image_height = 24;
    return s;
}

}  // namespace

TEST_CASE("without perturbation the scene reproduces its ground truth") {
    for (SynthLayout layout : {SynthLayout::Curve, SynthLayout::Cluster, SynthLayout::Grid}) {
        auto spec = small(1, 0.0);
        spec.layout = layout;
        const SynthScene s = make_scene(spec);
        REQUIRE(s.views.size() == 4);
        for (const View& v : s.views) {
            CHECK(v.image.width == 24);
            CHECK(v.image.height == 24);
            CHECK(loss(rasterize(s.scene.cast<double>(), v.camera), v.image) == 0.0);
        }
    }
}

TEST_CASE("redundant Gaussians are near-transparent") {
    const SynthScene s = make_scene(small(2, 0.5));
    const auto alpha = activated_opacities(s.scene);
    std::size_t low = 0, flagged = 0;
    for (std::size_t i = 0; i < alpha.size(); ++i) {
        low += alpha[i] < 0.01;
        flagged += s.redundant[i];
        CHECK((alpha[i] < 0.01) == s.redundant[i]);
    }
    CHECK(low == 32);
    CHECK(flagged == 32);

    const SynthScene odd = make_scene([] { auto p = small(3, 0.3); p.n_gaussians = 10; return p; }());
    std::size_t count = 0;
    for (bool r : odd.redundant) count += r;
    CHECK(count == 3);
}

TEST_CASE("removing the redundant Gaussians leaves the images unchanged to 60 dB") {
    for (std::uint64_t seed : {4, 5, 6}) {
        auto spec = small(seed, 0.5);
        spec.n_gaussians = 256;
        spec.image_width = spec.image_height = 32;
        const SynthScene s = make_scene(spec);
        std::vector<std::size_t> keep;
        for (std::size_t i = 0; i < s.redundant.size(); ++i)
            if (!s.redundant[i]) keep.push_back(i);
        const GaussianScene visible = s.scene.select(keep);
        for (const View& v : s.views) CHECK(psnr(rasterize(visible.cast<double>(), v.camera), v.image) >= 60.0);
    }
}

TEST_CASE("redundant Gaussians still receive distinct nonzero gradients") {
    auto spec = small(7, 0.5);
    spec.perturbation = 0.05;
    const SynthScene s = make_scene(spec);
    const GradientScore scores = accumulate_scores(s.scene, s.views);
    std::vector<double> redundant;
    for (std::size_t i = 0; i < scores.size(); ++i)
        if (s.redundant[i]) {
            CHECK(scores[i] > 0.0);
            redundant.push_back(scores[i]);
        }
    std::sort(redundant.begin(), redundant.end());
    CHECK(std::adjacent_find(redundant.begin(), redundant.end()) == redundant.end());
}

TEST_CASE("perturbation moves visible Gaussians only") {
    auto spec = small(8, 0.5);
    const SynthScene clean = make_scene(spec);
    spec.perturbation = 0.1;
    const SynthScene noisy = make_scene(spec);
    CHECK(noisy.redundant == clean.redundant);
    for (std::size_t v = 0; v < clean.views.size(); ++v) CHECK(noisy.views[v].image.rgb == clean.views[v].image.rgb);
    for (std::size_t i = 0; i < clean.scene.count(); ++i) {
        const bool same = clean.scene.positions[3 * i] == noisy.scene.positions[3 * i] &&
                          clean.scene.opacity_logits[i] == noisy.scene.opacity_logits[i];
        CHECK(same == clean.redundant[i]);
    }
    CHECK(loss(rasterize(noisy.scene.cast<double>(), noisy.views[0].camera), noisy.views[0].image) > 0.0);
}

TEST_CASE("same seed, same scene") {
    auto spec = small(9, 0.25);
    spec.perturbation = 0.05;
    const SynthScene a = make_scene(spec), b = make_scene(spec);
    CHECK(bit_identical(a.scene, b.scene));
    REQUIRE(a.views.size() == b.views.size());
    for (std::size_t v = 0; v < a.views.size(); ++v) CHECK(a.views[v].image.rgb == b.views[v].image.rgb);
    spec.seed = 10;
    CHECK_FALSE(bit_identical(make_scene(spec).scene, a.scene));
}

TEST_CASE("views can be skipped and sizes vary") {
    auto spec = small(11, 0.0);
    spec.render_views = false;
    spec.n_gaussians = 5000;
    const SynthScene s = make_scene(spec);
    CHECK(s.scene.count() == 5000);
    CHECK(s.views.empty());

    spec = small(12, 0.0);
    spec.n_views = 3;
    spec.image_width = 20;
    spec.image_height = 12;
    const SynthScene r = make_scene(spec);
    REQUIRE(r.views.size() == 3);
    CHECK(r.views[2].image.width == 20);
    CHECK(r.views[2].image.height == 12);
}

TEST_CASE("ring cameras look at the origin from radius 4") {
    const auto cams = ring_cameras(6, 32, 16);
    REQUIRE(cams.size() == 6);
    for (const Camera& c : cams) {
        const Eigen::Vector3d center = -c.rotation.transpose() * c.translation;
        CHECK(std::abs(center.norm() - 4.0) < 1e-12);
        CHECK(std::abs(center.y()) < 1e-12);
        const Eigen::Vector3d origin_cam = c.rotation * Eigen::Vector3d::Zero() + c.translation;
        CHECK(std::abs(origin_cam.x()) < 1e-12);
        CHECK(std::abs(origin_cam.y()) < 1e-12);
        CHECK(origin_cam.z() > 0);
        CHECK(c.fx == 32.0);
    }
}

TEST_CASE("invalid specs") {
    auto spec = small(1, 1.5);
    CHECK_THROWS_AS(make_scene(spec), Error);
    spec = small(1, 0.0);
    spec.image_width = 0;
    CHECK_THROWS_AS(make_scene(spec), Error);
    spec = small(1, 0.0);
    spec.perturbation = -1;
    CHECK_THROWS_AS(make_scene(spec), Error);
}
