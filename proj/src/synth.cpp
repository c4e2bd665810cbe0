// SPDX-License-Identifier: Apache-2.0
#include "elmgs/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "elmgs/error.hpp"
#include "elmgs/renderer.hpp"

namespace elmgs {

namespace {

// Portable draws on top of mt19937_64, whose output sequence is fixed by the
// standard (unlike the std distributions).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        spare_ = r * std::sin(2.0 * std::numbers::pi * u2);
        has_spare_ = true;
        return r * std::cos(2.0 * std::numbers::pi * u2);
    }

    std::size_t below(std::size_t n) { return static_cast<std::size_t>(engine_() % n); }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

void set_quaternion(GaussianScene& s, std::size_t i, double w, double x, double y, double z) {
    s.rotations[4 * i] = static_cast<float>(w);
    s.rotations[4 * i + 1] = static_cast<float>(x);
    s.rotations[4 * i + 2] = static_cast<float>(y);
    s.rotations[4 * i + 3] = static_cast<float>(z);
}

// Visible Gaussian i of n: geometry from the layout, appearance varying
// smoothly with the layout parameter t.
void make_visible(GaussianScene& s, std::size_t i, std::size_t k, std::size_t n, SynthLayout layout, Rng& rng) {
    const double t = n > 1 ? static_cast<double>(k) / static_cast<double>(n - 1) : 0.5;
    const double two_pi = 2.0 * std::numbers::pi;
    double px = 0, py = 0, pz = 0;
    switch (layout) {
        case SynthLayout::Curve: {
            const double angle = 3.0 * std::numbers::pi * t;
            const double radius = 0.45 + 0.35 * t;
            px = radius * std::cos(angle);
            pz = radius * std::sin(angle);
            py = 1.4 * (t - 0.5);
            px += 0.01 * rng.normal();
            py += 0.01 * rng.normal();
            pz += 0.01 * rng.normal();
            break;
        }
        case SynthLayout::Cluster: {
            constexpr int kClusters = 5;
            const int c = static_cast<int>(k % kClusters);
            const double a = two_pi * c / kClusters;
            px = 0.55 * std::cos(a) + 0.18 * rng.normal();
            pz = 0.55 * std::sin(a) + 0.18 * rng.normal();
            py = 0.3 * std::sin(3.0 * a) + 0.18 * rng.normal();
            break;
        }
        case SynthLayout::Grid: {
            const auto side = static_cast<std::size_t>(std::ceil(std::cbrt(static_cast<double>(n))));
            const double step = side > 1 ? 1.4 / static_cast<double>(side - 1) : 0.0;
            px = -0.7 + step * static_cast<double>(k % side);
            py = -0.7 + step * static_cast<double>((k / side) % side);
            pz = -0.7 + step * static_cast<double>(k / (side * side));
            break;
        }
    }
    s.positions[3 * i] = static_cast<float>(px);
    s.positions[3 * i + 1] = static_cast<float>(py);
    s.positions[3 * i + 2] = static_cast<float>(pz);

    const double half = 0.5 * std::numbers::pi * t + 0.1 * rng.normal();
    set_quaternion(s, i, std::cos(half), 0.3 * std::sin(half), std::sin(half), 0.2);
    const double base = std::log(0.09);
    s.log_scales[3 * i] = static_cast<float>(base + 0.3 * std::sin(two_pi * t) + 0.05 * rng.normal());
    s.log_scales[3 * i + 1] = static_cast<float>(base - 0.2 + 0.05 * rng.normal());
    s.log_scales[3 * i + 2] = static_cast<float>(base + 0.2 * std::cos(two_pi * t) + 0.05 * rng.normal());
    // Mostly solid splats: activated opacity roughly in [0.85, 0.98].
    s.opacity_logits[i] = static_cast<float>(2.8 + 0.6 * std::sin(two_pi * 2.0 * t) + 0.2 * rng.normal());
    for (int c = 0; c < 3; ++c)
        s.sh_dc[3 * i + c] =
            static_cast<float>(1.1 * std::sin(two_pi * t + 2.1 * c) + 0.03 * rng.normal());
    for (std::size_t r = 0; r < 45; ++r)
        s.sh_rest[45 * i + r] = static_cast<float>(
            0.08 * std::sin(two_pi * (static_cast<double>(r % 5) + 1.0) * t + static_cast<double>(r)) +
            0.005 * rng.normal());
}

// Near-transparent Gaussian a few pixels above the top edge of every ring view.
void make_redundant(GaussianScene& s, std::size_t i, Rng& rng) {
    const double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double radius = 0.4 * std::sqrt(rng.uniform());
    s.positions[3 * i] = static_cast<float>(radius * std::cos(angle));
    s.positions[3 * i + 1] = static_cast<float>(rng.uniform(2.7, 3.2));
    s.positions[3 * i + 2] = static_cast<float>(radius * std::sin(angle));
    set_quaternion(s, i, 1.0 + 0.1 * rng.normal(), 0.1 * rng.normal(), 0.1 * rng.normal(), 0.1 * rng.normal());
    for (int c = 0; c < 3; ++c) s.log_scales[3 * i + c] = static_cast<float>(std::log(0.01) + 0.2 * rng.normal());
    // Activated opacity in [0.001, 0.009].
    s.opacity_logits[i] = static_cast<float>(logit(rng.uniform(0.001, 0.009)));
    for (int c = 0; c < 3; ++c) s.sh_dc[3 * i + c] = static_cast<float>(0.5 * rng.normal());
    for (std::size_t r = 0; r < 45; ++r) s.sh_rest[45 * i + r] = static_cast<float>(0.02 * rng.normal());
}

}  // namespace

void SynthSpec::validate() const {
    if (!(fraction_redundant >= 0.0 && fraction_redundant <= 1.0))
        fail(ErrorKind::InvalidArgument, "fraction_redundant must lie in [0, 1]");
    if (image_width < 1 || image_height < 1) fail(ErrorKind::InvalidArgument, "image size must be positive");
    if (!(perturbation >= 0.0)) fail(ErrorKind::InvalidArgument, "perturbation must be non-negative");
}

std::vector<Camera> ring_cameras(std::size_t n, int width, int height) {
    std::vector<Camera> cams;
    const double focal = static_cast<double>(std::max(width, height));
    for (std::size_t k = 0; k < n; ++k) {
        const double a = 2.0 * std::numbers::pi * (static_cast<double>(k) + 0.125) / static_cast<double>(n);
        const Eigen::Vector3d eye(4.0 * std::cos(a), 0.0, 4.0 * std::sin(a));
        cams.push_back(look_at(eye, Eigen::Vector3d::Zero(), Eigen::Vector3d::UnitY(), width, height, focal));
    }
    return cams;
}

SynthScene make_scene(const SynthSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);
    const std::size_t n = spec.n_gaussians;
    const auto n_redundant = static_cast<std::size_t>(std::floor(spec.fraction_redundant * static_cast<double>(n)));

    SynthScene out;
    out.scene = GaussianScene::zeros(n);
    out.redundant.assign(n, false);
    // Redundant slots are scattered through the index range.
    std::vector<std::size_t> slots(n);
    for (std::size_t i = 0; i < n; ++i) slots[i] = i;
    for (std::size_t i = n; i > 1; --i) std::swap(slots[i - 1], slots[rng.below(i)]);
    for (std::size_t r = 0; r < n_redundant; ++r) out.redundant[slots[r]] = true;

    const std::size_t n_visible = n - n_redundant;
    std::size_t k = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (out.redundant[i])
            make_redundant(out.scene, i, rng);
        else
            make_visible(out.scene, i, k++, n_visible, spec.layout, rng);
    }

    if (spec.render_views) {
        const SceneParams truth_params = out.scene.cast<double>();
        for (const Camera& cam : ring_cameras(spec.n_views, spec.image_width, spec.image_height))
            out.views.push_back({cam, rasterize(truth_params, cam)});
    }

    if (spec.perturbation > 0.0) {
        const double p = spec.perturbation;
        GaussianScene& s = out.scene;
        for (std::size_t i = 0; i < n; ++i) {
            if (out.redundant[i]) continue;
            for (int c = 0; c < 3; ++c) s.positions[3 * i + c] += static_cast<float>(0.05 * p * rng.normal());
            for (int c = 0; c < 4; ++c) s.rotations[4 * i + c] += static_cast<float>(0.1 * p * rng.normal());
            for (int c = 0; c < 3; ++c) s.log_scales[3 * i + c] += static_cast<float>(0.2 * p * rng.normal());
            s.opacity_logits[i] += static_cast<float>(p * rng.normal());
            for (int c = 0; c < 3; ++c) s.sh_dc[3 * i + c] += static_cast<float>(p * rng.normal());
        }
    }
    return out;
}

}  // namespace elmgs
