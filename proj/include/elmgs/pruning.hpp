// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "elmgs/image.hpp"
#include "elmgs/renderer.hpp"
#include "elmgs/scene.hpp"

namespace elmgs {

struct PruneConfig {
    double gamma_iter = 0.0;       // per-round prune fraction, in [0, 1)
    int prune_interval = 500;      // fine-tuning steps after each prune
    int rounds = 10;
    int final_finetune_steps = 5000;

    void validate() const;
};

struct PruneReport {
    std::vector<bool> kept_mask;
    double opacity_threshold = 0.0;
    double gradient_threshold = 0.0;
    std::size_t kept_count = 0;
    std::size_t removed_count = 0;
};

/// Lower order statistic: element floor(gamma * N) of the sorted values,
/// clamped to the last element.
double quantile(std::span<const double> values, double gamma);

/// Gradient-and-opacity-aware pruning. A Gaussian survives when its activated
/// opacity or its gradient score reaches the gamma quantile of its population;
/// it is removed only when both are strictly below. Survivors keep their
/// relative order.
std::pair<GaussianScene, PruneReport> gap_prune(const GaussianScene& scene,
                                                std::span<const double> scores, double gamma_iter);

/// Per-round fraction that reaches `gamma_target` after `t` rounds:
/// 1 - (1 - gamma_target)^(1/t).
double gamma_schedule(double gamma_target, int t);

/// The stages the prune loop drives. The default implementation renders.
class Trainer {
public:
    virtual ~Trainer() = default;
    virtual GradientScore scores(const GaussianScene& scene, std::span<const View> views) = 0;
    virtual GaussianScene finetune(const GaussianScene& scene, std::span<const View> views,
                                   int steps) = 0;
};

class RendererTrainer : public Trainer {
public:
    explicit RendererTrainer(FinetuneOptions options) : options_(std::move(options)) {}

    GradientScore scores(const GaussianScene& scene, std::span<const View> views) override;
    GaussianScene finetune(const GaussianScene& scene, std::span<const View> views, int steps) override;

private:
    FinetuneOptions options_;
    std::uint64_t calls_ = 0;  // decorrelates the view sequence across calls
};

struct PruneRound {
    std::size_t count_before = 0;
    PruneReport report;
};

struct PruneHistory {
    std::vector<PruneRound> rounds;
};

/// rounds x {score, prune, fine-tune prune_interval}, then a final fine-tune.
GaussianScene prune_finetune_loop(const GaussianScene& scene, std::span<const View> views,
                                  const PruneConfig& config, Trainer& trainer,
                                  PruneHistory* history = nullptr);

}  // namespace elmgs
