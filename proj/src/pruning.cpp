// SPDX-License-Identifier: Apache-2.0
#include "elmgs/pruning.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "elmgs/error.hpp"

namespace elmgs {

void PruneConfig::validate() const {
    if (!(gamma_iter >= 0.0 && gamma_iter < 1.0))
        fail(ErrorKind::InvalidArgument, "gamma_iter must lie in [0, 1)");
    if (prune_interval < 0 || rounds < 0 || final_finetune_steps < 0)
        fail(ErrorKind::InvalidArgument, "prune step counts must be non-negative");
}

double quantile(std::span<const double> values, double gamma) {
    if (values.empty()) fail(ErrorKind::InvalidArgument, "quantile of an empty population");
    if (!(gamma >= 0.0 && gamma <= 1.0)) fail(ErrorKind::InvalidArgument, "quantile level must lie in [0, 1]");
    std::vector<double> sorted(values.begin(), values.end());
    const std::size_t n = sorted.size();
    const std::size_t k = std::min(static_cast<std::size_t>(std::floor(gamma * static_cast<double>(n))), n - 1);
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(k), sorted.end());
    return sorted[k];
}

std::pair<GaussianScene, PruneReport> gap_prune(const GaussianScene& scene,
                                                std::span<const double> scores, double gamma_iter) {
    if (scores.size() != scene.count())
        fail(ErrorKind::InvalidArgument, "gradient score length " + std::to_string(scores.size()) +
                                             " does not match Gaussian count " + std::to_string(scene.count()));
    if (!(gamma_iter >= 0.0 && gamma_iter <= 1.0))
        fail(ErrorKind::InvalidArgument, "gamma_iter must lie in [0, 1]");
    PruneReport report;
    if (scene.count() == 0) return {scene, report};

    const std::vector<double> opacity = activated_opacities(scene);
    report.opacity_threshold = quantile(opacity, gamma_iter);
    report.gradient_threshold = quantile(scores, gamma_iter);
    report.kept_mask.resize(scene.count());
    std::vector<std::size_t> kept;
    kept.reserve(scene.count());
    for (std::size_t i = 0; i < scene.count(); ++i) {
        const bool keep = opacity[i] >= report.opacity_threshold || scores[i] >= report.gradient_threshold;
        report.kept_mask[i] = keep;
        if (keep) kept.push_back(i);
    }
    report.kept_count = kept.size();
    report.removed_count = scene.count() - kept.size();
    return {scene.select(kept), report};
}

double gamma_schedule(double gamma_target, int t) {
    if (!(gamma_target >= 0.0 && gamma_target < 1.0))
        fail(ErrorKind::InvalidArgument, "gamma_target must lie in [0, 1)");
    if (t < 1) fail(ErrorKind::InvalidArgument, "pruning round count must be at least 1");
    if (t == 1) return gamma_target;
    // 1 - exp(log1p(-g) / t) keeps precision for small targets.
    return -std::expm1(std::log1p(-gamma_target) / static_cast<double>(t));
}

GradientScore RendererTrainer::scores(const GaussianScene& scene, std::span<const View> views) {
    return accumulate_scores(scene, views, options_.loss, options_.render);
}

GaussianScene RendererTrainer::finetune(const GaussianScene& scene, std::span<const View> views, int steps) {
    FinetuneOptions opts = options_;
    opts.seed = options_.seed + 0x9e3779b97f4a7c15ULL * ++calls_;
    return elmgs::finetune(scene, views, steps, opts);
}

GaussianScene prune_finetune_loop(const GaussianScene& scene, std::span<const View> views,
                                  const PruneConfig& config, Trainer& trainer, PruneHistory* history) {
    config.validate();
    GaussianScene current = scene;
    for (int round = 0; round < config.rounds; ++round) {
        const GradientScore scores = trainer.scores(current, views);
        auto [pruned, report] = gap_prune(current, scores, config.gamma_iter);
        if (history) history->rounds.push_back({current.count(), report});
        current = trainer.finetune(pruned, views, config.prune_interval);
    }
    return trainer.finetune(current, views, config.final_finetune_steps);
}

}  // namespace elmgs
