// SPDX-License-Identifier: Apache-2.0
#include "elmgs/quantization.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "elmgs/error.hpp"

namespace elmgs {

namespace {

template <typename T>
double init_step_impl(std::span<const T> values, const QuantizerState& qs) {
    qs.validate();
    if (values.empty()) fail(ErrorKind::InvalidArgument, "init_step of an empty attribute");
    double sum = 0.0;
    for (T v : values) sum += std::abs(static_cast<double>(v));
    const double mean = sum / static_cast<double>(values.size());
    return std::max(2.0 * mean / std::sqrt(static_cast<double>(qs.q_pos())), 1e-12);
}

}  // namespace

void QuantizerState::validate() const {
    if (bits < 2 || bits > 32)
        fail(ErrorKind::InvalidArgument, "bit depth " + std::to_string(bits) + " outside [2, 32]");
    if (!(std::isfinite(step) && step > 0.0))
        fail(ErrorKind::InvalidArgument, "quantizer step must be positive and finite");
}

std::int64_t quantize(double value, const QuantizerState& qs) {
    if (!std::isfinite(value)) fail(ErrorKind::Numerical, "cannot quantize a non-finite value");
    const double scaled = std::clamp(value / qs.step, -static_cast<double>(qs.q_neg()),
                                     static_cast<double>(qs.q_pos()));
    // Default floating-point environment rounds half to even.
    return static_cast<std::int64_t>(std::nearbyint(scaled));
}

double dequantize(std::int64_t code, const QuantizerState& qs) {
    if (code < -qs.q_neg() || code > qs.q_pos())
        fail(ErrorKind::InvalidArgument, "code " + std::to_string(code) + " outside the quantizer range");
    return static_cast<double>(code) * qs.step;
}

double step_gradient(double value, const QuantizerState& qs) {
    const double r = value / qs.step;
    const double lo = -static_cast<double>(qs.q_neg());
    const double hi = static_cast<double>(qs.q_pos());
    if (r <= lo) return lo;
    if (r >= hi) return hi;
    return -r + std::nearbyint(r);
}

double value_gradient(double value, const QuantizerState& qs) {
    const double r = value / qs.step;
    return (r > -static_cast<double>(qs.q_neg()) && r < static_cast<double>(qs.q_pos())) ? 1.0 : 0.0;
}

double init_step(std::span<const float> values, const QuantizerState& qs) {
    return init_step_impl(values, qs);
}

double init_step(std::span<const double> values, const QuantizerState& qs) {
    return init_step_impl(values, qs);
}

void QuantizedScene::validate() const {
    for (Attribute a : kAllAttributes) {
        const QuantizerState& qs = quantizers[index_of(a)];
        if (qs.attribute != a) fail(ErrorKind::Corruption, "quantizer attribute ids out of order");
        if (qs.bits < 2 || qs.bits > 32 || !(std::isfinite(qs.step) && qs.step > 0.0))
            fail(ErrorKind::Corruption, "invalid quantizer for " + std::string(attribute_name(a)));
        const auto& c = codes_of(a);
        if (c.size() != count * arity(a))
            fail(ErrorKind::Corruption, "code array for " + std::string(attribute_name(a)) +
                                            " has the wrong length");
        const std::int64_t lo = -qs.q_neg(), hi = qs.q_pos();
        for (std::int64_t v : c)
            if (v < lo || v > hi)
                fail(ErrorKind::Corruption, "code " + std::to_string(v) + " outside range for " +
                                                std::string(attribute_name(a)));
    }
}

QuantizedScene QuantizedScene::permuted(std::span<const std::size_t> perm) const {
    if (perm.size() != count) fail(ErrorKind::InvalidArgument, "permutation length mismatch");
    QuantizedScene out;
    out.count = count;
    out.quantizers = quantizers;
    for (Attribute a : kAllAttributes) {
        const std::size_t k = arity(a);
        const auto& src = codes_of(a);
        auto& dst = out.codes_of(a);
        dst.resize(src.size());
        for (std::size_t i = 0; i < count; ++i)
            for (std::size_t j = 0; j < k; ++j) dst[i * k + j] = src[perm[i] * k + j];
    }
    return out;
}

QuantizerSet init_quantizers(const GaussianScene& scene, const BitDepths& depths) {
    QuantizerSet set;
    for (Attribute a : kAllAttributes) {
        QuantizerState& qs = set[index_of(a)];
        qs.attribute = a;
        qs.bits = depths[a];
        qs.is_signed = true;
        qs.step = 1.0;
        const auto& values = scene.attribute(a);
        qs.step = values.empty() ? 1.0 : init_step(std::span<const float>(values), qs);
    }
    return set;
}

QuantizedScene quantize_scene(const GaussianScene& scene, const QuantizerSet& quantizers) {
    if (!scene.shapes_consistent())
        fail(ErrorKind::InvalidArgument, "scene attribute arrays disagree on the Gaussian count");
    QuantizedScene q;
    q.count = scene.count();
    q.quantizers = quantizers;
    for (Attribute a : kAllAttributes) {
        const QuantizerState& qs = quantizers[index_of(a)];
        qs.validate();
        const auto& values = scene.attribute(a);
        auto& codes = q.codes_of(a);
        codes.resize(values.size());
        for (std::size_t i = 0; i < values.size(); ++i) codes[i] = quantize(values[i], qs);
    }
    return q;
}

GaussianScene dequantize_scene(const QuantizedScene& q) {
    q.validate();
    GaussianScene scene;
    for (Attribute a : kAllAttributes) {
        const QuantizerState& qs = q.quantizers[index_of(a)];
        const auto& codes = q.codes_of(a);
        auto& values = scene.attribute(a);
        values.resize(codes.size());
        for (std::size_t i = 0; i < codes.size(); ++i)
            values[i] = static_cast<float>(dequantize(codes[i], qs));
    }
    return scene;
}

SceneParams fake_quantize(const SceneParams& params, const QuantizerSet& quantizers) {
    SceneParams out = params;
    for (Attribute a : kAllAttributes) {
        const QuantizerState& qs = quantizers[index_of(a)];
        for (double& v : out.attribute(a)) v = dequantize(quantize(v, qs), qs);
    }
    return out;
}

QatResult qat_finetune(const GaussianScene& scene, std::span<const View> views,
                       const QuantizerSet& initial, int steps, const QatOptions& options) {
    if (steps < 0) fail(ErrorKind::InvalidArgument, "QAT step count must be non-negative");
    for (const auto& qs : initial) qs.validate();
    QatResult result{scene, initial, {}};
    if (steps == 0) return result;
    validate_scene(scene);

    const FinetuneOptions& ft = options.finetune;
    ViewSampler sampler(ft.seed, views.size());
    SceneParams params = scene.cast<double>();
    QuantizerSet quantizers = initial;
    std::array<Adam, kAttributeCount> param_opt;
    std::array<Adam, kAttributeCount> step_opt;
    for (Attribute a : kAllAttributes) {
        param_opt[index_of(a)] = Adam(params.attribute(a).size(), ft.beta1, ft.beta2, ft.epsilon);
        step_opt[index_of(a)] = Adam(1, ft.beta1, ft.beta2, ft.epsilon);
    }

    for (int step = 1; step <= steps; ++step) {
        const View& view = views[sampler.next()];
        const SceneParams quantized = fake_quantize(params, quantizers);
        BackwardResult r = backward(quantized, view.camera, view.image, ft.loss, ft.render);
        if (!std::isfinite(r.loss)) fail(ErrorKind::Numerical, "loss became non-finite during QAT");
        result.loss_trace.push_back(r.loss);

        for (Attribute a : kAllAttributes) {
            const std::size_t ai = index_of(a);
            QuantizerState& qs = quantizers[ai];
            const auto& raw = params.attribute(a);
            auto& grad = r.grads.attribute(a);
            double d_step = 0.0;
            for (std::size_t e = 0; e < raw.size(); ++e) {
                d_step += grad[e] * step_gradient(raw[e], qs);
                grad[e] *= value_gradient(raw[e], qs);
            }
            if (options.learn_step[ai] && !raw.empty()) {
                if (options.scale_step_gradient)
                    d_step /= std::sqrt(static_cast<double>(raw.size()) * static_cast<double>(qs.q_pos()));
                double value = qs.step;
                step_opt[ai].step(std::span<double>(&value, 1), std::span<const double>(&d_step, 1),
                                  options.step_lr_fraction * initial[ai].step, step);
                qs.step = std::max(value, 1e-12);
            }
            const double lr = ft.learning_rates[a];
            if (lr != 0.0) param_opt[ai].step(params.attribute(a), grad, lr, step);
        }
    }
    result.scene = params.cast<float>();
    result.quantizers = quantizers;
    return result;
}

}  // namespace elmgs
