// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "elmgs/codec.hpp"
#include "elmgs/image.hpp"
#include "elmgs/quantization.hpp"
#include "elmgs/renderer.hpp"
#include "elmgs/scene.hpp"

namespace elmgs {

using nlohmann::json;

/// Settings of one prune / QAT / encode run. Step counts default to desk
/// scale; the full-scale schedule is rounds 10, prune_interval 500,
/// final_finetune_steps 5000, qat_steps 5000.
struct PipelineConfig {
    std::optional<double> gamma_target;
    std::optional<double> gamma_iter = 0.375;
    int rounds = 4;
    int prune_interval = 50;
    int final_finetune_steps = 200;
    int qat_steps = 200;
    BitDepths bits;
    bool morton = true;
    std::optional<std::uint64_t> seed;
    LearningRates learning_rates;
    double step_lr_fraction = 1e-3;
    /// Also fine-tune the unpruned scene for the same number of steps and
    /// report its opacity histogram next to the pruned one.
    bool baseline = false;
    /// Every k-th view (k > 0) is held out of training and used for
    /// evaluation only; 0 trains and evaluates on all views.
    int holdout_every = 0;

    /// Throws InvalidArgument unless exactly one gamma is set, the seed is
    /// present and all counts are non-negative.
    void validate() const;

    /// gamma_iter, or the per-round fraction derived from gamma_target.
    double per_round_gamma() const;

    /// Applies the keys of a flat JSON object on top of this config. Unknown
    /// keys are rejected. Setting gamma_target clears a gamma_iter that the
    /// same object does not set.
    void merge(const json& j);

    static PipelineConfig from_json(const json& j);
    json to_json() const;
};

/// Number of bins of the activated-opacity histogram used for the entropy
/// comparison (8 bits).
inline constexpr int kOpacityHistogramBins = 256;

/// Counts of activated opacity in `bins` equal-width bins over [0, 1].
std::vector<std::uint64_t> opacity_histogram(const GaussianScene& scene, int bins);

/// First-order entropy in bits of a histogram; 0 for an empty one.
double histogram_entropy(std::span<const std::uint64_t> counts);

struct PipelineResult {
    std::vector<std::uint8_t> container;
    GaussianScene decoded;  // dequantized container contents, stored order
    json report;
};

/// prune_finetune_loop, then qat_finetune, then encode. The report is a pure
/// function of the inputs and the config.
PipelineResult run_pipeline(const GaussianScene& scene, std::span<const View> views, const PipelineConfig& config);

/// Summary of a scene: count, per-attribute ranges and entropy, 64-bin
/// activated-opacity histogram.
json inspect_scene(const GaussianScene& scene);

/// inspect_scene of the dequantized contents plus container metadata;
/// entropies are over the stored integer codes.
json inspect_container(std::span<const std::uint8_t> bytes);

/// Finite numbers as JSON numbers, infinities as the strings "inf"/"-inf".
json json_number(double v);

}  // namespace elmgs
