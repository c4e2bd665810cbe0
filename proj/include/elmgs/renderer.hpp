// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "elmgs/image.hpp"
#include "elmgs/metrics.hpp"
#include "elmgs/scene.hpp"

namespace elmgs {

/// Degree-0 spherical harmonic basis constant.
inline constexpr double kShC0 = 0.28209479177387814;

struct RenderOptions {
    double near_plane = 0.01;
    double dilation = 0.3;            // px^2 added to both diagonal entries of the 2D covariance
    double alpha_clamp = 0.99;
    double min_transmittance = 1e-4;  // per-pixel accumulation stops below this
    double min_determinant = 1e-12;   // 2D covariances at or below this are skipped
};

struct Projection {
    bool culled = true;
    Eigen::Vector2d mean = Eigen::Vector2d::Zero();
    Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
    double depth = 0.0;
};

/// EWA projection of a 3D Gaussian. Centers at or closer than the near plane
/// come back with `culled` set.
Projection project(const Eigen::Vector3d& mean, const Eigen::Matrix3d& cov3d, const Camera& camera,
                   const RenderOptions& options = {});

/// Constant color of a Gaussian from its DC coefficients.
inline double dc_to_color(double sh) { return 0.5 + kShC0 * sh; }

struct RenderResult {
    Image image;                 // clamped to [0,1]
    std::vector<double> weight;  // per-pixel accumulated alpha, 1 - final transmittance
};

/// Front-to-back alpha compositing of all Gaussians over a black background.
/// Ties in depth are broken by Gaussian index.
RenderResult render(const SceneParams& params, const Camera& camera, const RenderOptions& options = {});

Image rasterize(const SceneParams& params, const Camera& camera, const RenderOptions& options = {});
Image rasterize(const GaussianScene& scene, const Camera& camera, const RenderOptions& options = {});

struct LossOptions {
    double lambda = 0.2;  // SSIM weight
    SsimOptions ssim;
};

/// (1 - lambda) * mean|a - b| + lambda * (1 - SSIM(a, b)).
double loss(const Image& rendered, const Image& truth, const LossOptions& options = {});

/// Loss plus d loss / d rendered pixel. The subgradient of |x| at 0 is 0.
double loss_with_gradient(const Image& rendered, const Image& truth, std::vector<double>& grad,
                          const LossOptions& options = {});

struct BackwardResult {
    double loss = 0.0;
    SceneGradients grads;
};

/// Renders, evaluates the loss against `truth` and returns d loss / d raw
/// parameter for every Gaussian. sh_rest gradients are zero.
BackwardResult backward(const SceneParams& params, const Camera& camera, const Image& truth,
                        const LossOptions& loss_options = {}, const RenderOptions& options = {});
BackwardResult backward(const GaussianScene& scene, const Camera& camera, const Image& truth,
                        const LossOptions& loss_options = {}, const RenderOptions& options = {});

/// Mean over views of the mean |gradient| over all 59 raw parameters of each
/// Gaussian.
GradientScore accumulate_scores(const GaussianScene& scene, std::span<const View> views,
                                const LossOptions& loss_options = {},
                                const RenderOptions& options = {});

/// Per-attribute learning rates for the adaptive-moment optimizer.
struct LearningRates {
    double position = 1.6e-4;
    double rotation = 1e-3;
    double log_scale = 5e-3;
    double opacity_logit = 5e-2;
    double sh_dc = 2.5e-3;
    double sh_rest = 2.5e-3 / 20.0;

    double& operator[](Attribute a);
    double operator[](Attribute a) const;
};

struct FinetuneOptions {
    LearningRates learning_rates;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-15;
    std::uint64_t seed = 0;
    LossOptions loss;
    RenderOptions render;
};

/// First-order adaptive-moment state for one flat parameter block.
class Adam {
public:
    Adam() = default;
    Adam(std::size_t size, double beta1, double beta2, double epsilon);

    /// One update of `params` with learning rate `lr` at 1-based step `t`.
    void step(std::span<double> params, std::span<const double> grads, double lr, long t);

private:
    std::vector<double> m_;
    std::vector<double> v_;
    double beta1_ = 0.9;
    double beta2_ = 0.999;
    double epsilon_ = 1e-15;
};

/// Runs `steps` optimizer iterations, each on one view drawn from a seeded
/// generator. `loss_trace`, when given, receives the loss of every step.
GaussianScene finetune(const GaussianScene& scene, std::span<const View> views, int steps,
                       const FinetuneOptions& options = {}, std::vector<double>* loss_trace = nullptr);

/// Index of the view used at a given step, shared by the fine-tuning loops.
class ViewSampler {
public:
    ViewSampler(std::uint64_t seed, std::size_t view_count);
    std::size_t next();

private:
    std::mt19937_64 rng_;
    std::size_t count_;
};

}  // namespace elmgs
