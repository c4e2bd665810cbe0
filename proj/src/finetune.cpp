// SPDX-License-Identifier: Apache-2.0
#include <cmath>

#include "elmgs/error.hpp"
#include "elmgs/renderer.hpp"

namespace elmgs {

double& LearningRates::operator[](Attribute a) {
    switch (a) {
        case Attribute::Position: return position;
        case Attribute::Rotation: return rotation;
        case Attribute::LogScale: return log_scale;
        case Attribute::OpacityLogit: return opacity_logit;
        case Attribute::ShDc: return sh_dc;
        case Attribute::ShRest: break;
    }
    return sh_rest;
}

double LearningRates::operator[](Attribute a) const {
    return const_cast<LearningRates&>(*this)[a];
}

Adam::Adam(std::size_t size, double beta1, double beta2, double epsilon)
    : m_(size, 0.0), v_(size, 0.0), beta1_(beta1), beta2_(beta2), epsilon_(epsilon) {}

void Adam::step(std::span<double> params, std::span<const double> grads, double lr, long t) {
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t));
    for (std::size_t i = 0; i < params.size(); ++i) {
        m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grads[i];
        v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grads[i] * grads[i];
        const double m_hat = m_[i] / c1;
        const double v_hat = v_[i] / c2;
        params[i] -= lr * m_hat / (std::sqrt(v_hat) + epsilon_);
    }
}

ViewSampler::ViewSampler(std::uint64_t seed, std::size_t view_count) : rng_(seed), count_(view_count) {
    if (view_count == 0) fail(ErrorKind::InvalidArgument, "fine-tuning needs at least one view");
}

std::size_t ViewSampler::next() { return static_cast<std::size_t>(rng_() % count_); }

GaussianScene finetune(const GaussianScene& scene, std::span<const View> views, int steps,
                       const FinetuneOptions& options, std::vector<double>* loss_trace) {
    if (steps < 0) fail(ErrorKind::InvalidArgument, "fine-tuning step count must be non-negative");
    if (steps == 0) return scene;
    validate_scene(scene);
    ViewSampler sampler(options.seed, views.size());
    SceneParams params = scene.cast<double>();
    std::array<Adam, kAttributeCount> optimizers;
    for (Attribute a : kAllAttributes)
        optimizers[index_of(a)] =
            Adam(params.attribute(a).size(), options.beta1, options.beta2, options.epsilon);

    for (int step = 1; step <= steps; ++step) {
        const View& view = views[sampler.next()];
        const BackwardResult r = backward(params, view.camera, view.image, options.loss, options.render);
        if (!std::isfinite(r.loss)) fail(ErrorKind::Numerical, "loss became non-finite during fine-tuning");
        if (loss_trace) loss_trace->push_back(r.loss);
        for (Attribute a : kAllAttributes) {
            const double lr = options.learning_rates[a];
            if (lr == 0.0) continue;
            optimizers[index_of(a)].step(params.attribute(a), r.grads.attribute(a), lr, step);
        }
    }
    return params.cast<float>();
}

}  // namespace elmgs
