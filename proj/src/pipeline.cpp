// SPDX-License-Identifier: Apache-2.0
#include "elmgs/pipeline.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <string>

#include "elmgs/error.hpp"
#include "elmgs/metrics.hpp"
#include "elmgs/ply.hpp"
#include "elmgs/pruning.hpp"

namespace elmgs {

namespace {

constexpr int kInspectBins = 64;

template <typename T>
T get_field(const json& j, const char* key) {
    try {
        return j.get<T>();
    } catch (const json::exception&) {
        fail(ErrorKind::InvalidArgument, std::string("config field '") + key + "' has the wrong type");
    }
}

int get_count(const json& j, const char* key) {
    if (!j.is_number_integer()) fail(ErrorKind::InvalidArgument, std::string("config field '") + key + "' must be an integer");
    return get_field<int>(j, key);
}

double mean(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

json entropy_table(const QuantizedScene& q) {
    json out = json::object();
    for (Attribute a : kAllAttributes) {
        const auto& codes = q.codes_of(a);
        out[std::string(attribute_name(a))] = codes.empty() ? 0.0 : entropy_bits(codes);
    }
    return out;
}

json histogram_json(std::span<const std::uint64_t> counts) { return json(std::vector<std::uint64_t>(counts.begin(), counts.end())); }

}  // namespace

json json_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return v;
}

// ---------------------------------------------------------------------------
// Config

void PipelineConfig::validate() const {
    if (gamma_target.has_value() == gamma_iter.has_value())
        fail(ErrorKind::InvalidArgument, "set exactly one of gamma_target and gamma_iter");
    if (gamma_target && !(*gamma_target >= 0.0 && *gamma_target < 1.0))
        fail(ErrorKind::InvalidArgument, "gamma_target must lie in [0, 1)");
    if (gamma_iter && !(*gamma_iter >= 0.0 && *gamma_iter < 1.0))
        fail(ErrorKind::InvalidArgument, "gamma_iter must lie in [0, 1)");
    if (gamma_target && rounds < 1) fail(ErrorKind::InvalidArgument, "gamma_target needs at least one round");
    if (rounds < 0 || prune_interval < 0 || final_finetune_steps < 0 || qat_steps < 0)
        fail(ErrorKind::InvalidArgument, "step counts must be non-negative");
    if (holdout_every < 0) fail(ErrorKind::InvalidArgument, "holdout_every must be non-negative");
    if (!seed) fail(ErrorKind::InvalidArgument, "a seed is required");
    for (int b : bits.bits)
        if (b < 2 || b > 32) fail(ErrorKind::InvalidArgument, "bit depths must lie in [2, 32]");
    if (!(step_lr_fraction >= 0.0)) fail(ErrorKind::InvalidArgument, "step_lr_fraction must be non-negative");
}

double PipelineConfig::per_round_gamma() const {
    if (gamma_iter) return *gamma_iter;
    if (!gamma_target) fail(ErrorKind::InvalidArgument, "set exactly one of gamma_target and gamma_iter");
    return gamma_schedule(*gamma_target, rounds);
}

void PipelineConfig::merge(const json& j) {
    if (!j.is_object()) fail(ErrorKind::InvalidArgument, "config must be a JSON object");
    if (j.contains("gamma_target") && j.contains("gamma_iter"))
        fail(ErrorKind::InvalidArgument, "gamma_target and gamma_iter are mutually exclusive");
    for (const auto& [key, value] : j.items()) {
        const char* k = key.c_str();
        if (key == "gamma_target") {
            gamma_target = get_field<double>(value, k);
            gamma_iter.reset();
        } else if (key == "gamma_iter") {
            gamma_iter = get_field<double>(value, k);
            gamma_target.reset();
        } else if (key == "rounds") {
            rounds = get_count(value, k);
        } else if (key == "prune_interval") {
            prune_interval = get_count(value, k);
        } else if (key == "final_finetune_steps") {
            final_finetune_steps = get_count(value, k);
        } else if (key == "qat_steps") {
            qat_steps = get_count(value, k);
        } else if (key == "morton") {
            morton = get_field<bool>(value, k);
        } else if (key == "seed") {
            if (!value.is_number_integer() || (!value.is_number_unsigned() && value.get<std::int64_t>() < 0))
                fail(ErrorKind::InvalidArgument, "config field 'seed' must be a non-negative integer");
            seed = value.get<std::uint64_t>();
        } else if (key == "step_lr_fraction") {
            step_lr_fraction = get_field<double>(value, k);
        } else if (key == "baseline") {
            baseline = get_field<bool>(value, k);
        } else if (key == "holdout_every") {
            holdout_every = get_count(value, k);
        } else if (key.starts_with("bits_") || key.starts_with("lr_")) {
            const std::string name = key.substr(key.find('_') + 1);
            bool matched = false;
            for (Attribute a : kAllAttributes) {
                if (name != attribute_name(a)) continue;
                matched = true;
                if (key.starts_with("bits_"))
                    bits[a] = get_count(value, k);
                else
                    learning_rates[a] = get_field<double>(value, k);
            }
            if (!matched) fail(ErrorKind::InvalidArgument, "unknown attribute in config key '" + key + "'");
        } else {
            fail(ErrorKind::InvalidArgument, "unknown config key '" + key + "'");
        }
    }
}

PipelineConfig PipelineConfig::from_json(const json& j) {
    PipelineConfig c;
    c.merge(j);
    return c;
}

json PipelineConfig::to_json() const {
    json j;
    if (gamma_target) j["gamma_target"] = *gamma_target;
    if (gamma_iter) j["gamma_iter"] = *gamma_iter;
    j["rounds"] = rounds;
    j["prune_interval"] = prune_interval;
    j["final_finetune_steps"] = final_finetune_steps;
    j["qat_steps"] = qat_steps;
    j["morton"] = morton;
    if (seed) j["seed"] = *seed;
    j["step_lr_fraction"] = step_lr_fraction;
    j["baseline"] = baseline;
    j["holdout_every"] = holdout_every;
    for (Attribute a : kAllAttributes) {
        j["bits_" + std::string(attribute_name(a))] = bits[a];
        j["lr_" + std::string(attribute_name(a))] = learning_rates[a];
    }
    return j;
}

// ---------------------------------------------------------------------------
// Histograms

std::vector<std::uint64_t> opacity_histogram(const GaussianScene& scene, int bins) {
    require(bins > 0, "histogram needs at least one bin");
    std::vector<std::uint64_t> counts(static_cast<std::size_t>(bins), 0);
    for (double a : activated_opacities(scene)) {
        const double pos = std::floor(a * bins);
        ++counts[static_cast<std::size_t>(std::clamp(pos, 0.0, static_cast<double>(bins - 1)))];
    }
    return counts;
}

double histogram_entropy(std::span<const std::uint64_t> counts) {
    std::uint64_t total = 0;
    for (auto c : counts) total += c;
    if (total == 0) return 0.0;
    double h = 0.0;
    for (auto c : counts) {
        if (c == 0) continue;
        const double p = static_cast<double>(c) / static_cast<double>(total);
        h -= p * std::log2(p);
    }
    return h;
}

// ---------------------------------------------------------------------------
// Pipeline

PipelineResult run_pipeline(const GaussianScene& scene, std::span<const View> views, const PipelineConfig& config) {
    config.validate();
    validate_scene(scene);
    if (views.empty()) fail(ErrorKind::InvalidArgument, "the pipeline needs at least one view");

    std::vector<View> train, eval;
    for (std::size_t i = 0; i < views.size(); ++i) {
        const bool held = config.holdout_every > 0 &&
                          (i + 1) % static_cast<std::size_t>(config.holdout_every) == 0;
        (held ? eval : train).push_back(views[i]);
    }
    if (config.holdout_every == 0) eval = train;
    if (train.empty()) fail(ErrorKind::InvalidArgument, "holdout leaves no training views");
    if (eval.empty()) fail(ErrorKind::InvalidArgument, "holdout leaves no evaluation views");

    std::vector<Image> reference;
    for (const View& v : eval) reference.push_back(rasterize(scene, v.camera));

    FinetuneOptions ft;
    ft.learning_rates = config.learning_rates;
    ft.seed = *config.seed;

    PruneConfig prune;
    prune.gamma_iter = config.per_round_gamma();
    prune.rounds = config.rounds;
    prune.prune_interval = config.prune_interval;
    prune.final_finetune_steps = config.final_finetune_steps;
    RendererTrainer trainer(ft);
    PruneHistory history;
    const GaussianScene pruned = prune_finetune_loop(scene, train, prune, trainer, &history);

    const QuantizerSet initial = init_quantizers(pruned, config.bits);
    QatOptions qat;
    qat.finetune = ft;
    qat.finetune.seed = *config.seed ^ 0x5157415451415431ULL;
    qat.step_lr_fraction = config.step_lr_fraction;
    const QatResult tuned = qat_finetune(pruned, train, initial, config.qat_steps, qat);

    const QuantizedScene quantized = quantize_scene(tuned.scene, tuned.quantizers);
    PipelineResult out;
    out.container = encode(quantized, config.morton ? Ordering::Morton : Ordering::Original);
    const DecodedContainer decoded = decode(out.container);
    out.decoded = dequantize_scene(decoded.scene);

    json report;
    report["config"] = config.to_json();
    report["gamma_iter"] = prune.gamma_iter;
    report["input_count"] = scene.count();
    report["final_count"] = out.decoded.count();

    json rounds = json::array();
    for (std::size_t r = 0; r < history.rounds.size(); ++r) {
        const PruneRound& pr = history.rounds[r];
        rounds.push_back({{"round", r + 1},
                          {"count_before", pr.count_before},
                          {"count_after", pr.report.kept_count},
                          {"removed", pr.report.removed_count},
                          {"opacity_threshold", json_number(pr.report.opacity_threshold)},
                          {"gradient_threshold", json_number(pr.report.gradient_threshold)}});
    }
    report["rounds"] = rounds;

    const QuantizedScene before = quantize_scene(scene, init_quantizers(scene, config.bits));
    report["entropy_bits"] = {{"before", entropy_table(before)}, {"after", entropy_table(decoded.scene)}};

    json quantizers = json::object();
    for (const QuantizerState& qs : decoded.scene.quantizers)
        quantizers[std::string(attribute_name(qs.attribute))] = {
            {"bits", qs.bits}, {"signed", qs.is_signed}, {"step", json_number(qs.step)}};
    report["quantizers"] = quantizers;

    json opacity;
    const auto pruned_hist = opacity_histogram(pruned, kOpacityHistogramBins);
    opacity["bins"] = kOpacityHistogramBins;
    opacity["pruned"] = histogram_json(pruned_hist);
    opacity["entropy_pruned"] = histogram_entropy(pruned_hist);
    if (config.baseline) {
        const int total_steps = config.rounds * config.prune_interval + config.final_finetune_steps;
        const GaussianScene base = finetune(scene, train, total_steps, ft);
        const auto base_hist = opacity_histogram(base, kOpacityHistogramBins);
        opacity["baseline"] = histogram_json(base_hist);
        opacity["entropy_baseline"] = histogram_entropy(base_hist);
    }
    report["opacity_histogram"] = opacity;

    const std::size_t raw_bytes = ply::write_scene(scene).size();
    const QualityReport sizes = size_report(out.container.size(), raw_bytes);
    const StreamSizes streams = stream_sizes(out.container);
    json per_stream = json::object();
    for (Attribute a : kAllAttributes)
        per_stream[std::string(attribute_name(a))] = {{"raw", streams.raw[index_of(a)]},
                                         {"compressed", streams.compressed[index_of(a)]}};
    report["sizes"] = {{"ply_bytes", raw_bytes},
                       {"container_bytes", out.container.size()},
                       {"compression_ratio", sizes.compression_ratio},
                       {"streams", per_stream}};

    std::vector<double> psnr_ref, ssim_ref, psnr_gt, ssim_gt;
    const SceneParams decoded_params = out.decoded.cast<double>();
    for (std::size_t i = 0; i < eval.size(); ++i) {
        const Image img = rasterize(decoded_params, eval[i].camera);
        psnr_ref.push_back(psnr(img, reference[i]));
        ssim_ref.push_back(ssim(img, reference[i]));
        psnr_gt.push_back(psnr(img, eval[i].image));
        ssim_gt.push_back(ssim(img, eval[i].image));
    }
    report["quality"] = {{"evaluation_views", eval.size()},
                         {"held_out", config.holdout_every > 0},
                         {"psnr_vs_input_render", json_number(mean(psnr_ref))},
                         {"ssim_vs_input_render", json_number(mean(ssim_ref))},
                         {"psnr_vs_ground_truth", json_number(mean(psnr_gt))},
                         {"ssim_vs_ground_truth", json_number(mean(ssim_gt))}};
    if (!tuned.loss_trace.empty()) report["qat_final_loss"] = json_number(tuned.loss_trace.back());
    out.report = std::move(report);
    return out;
}

// ---------------------------------------------------------------------------
// Inspection

namespace {

json ranges(const GaussianScene& scene) {
    json out = json::object();
    for (Attribute a : kAllAttributes) {
        const auto& v = scene.attribute(a);
        if (v.empty()) {
            out[std::string(attribute_name(a))] = {{"min", nullptr}, {"max", nullptr}};
            continue;
        }
        const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
        out[std::string(attribute_name(a))] = {{"min", json_number(*lo)}, {"max", json_number(*hi)}};
    }
    return out;
}

// Entropy over float32 bit patterns.
json float_entropies(const GaussianScene& scene) {
    json out = json::object();
    for (Attribute a : kAllAttributes) {
        const auto& v = scene.attribute(a);
        std::vector<std::int64_t> symbols(v.size());
        for (std::size_t i = 0; i < v.size(); ++i) symbols[i] = std::bit_cast<std::uint32_t>(v[i]);
        out[std::string(attribute_name(a))] = symbols.empty() ? 0.0 : entropy_bits(symbols);
    }
    return out;
}

json opacity_summary(const GaussianScene& scene) {
    return {{"bins", kInspectBins}, {"counts", histogram_json(opacity_histogram(scene, kInspectBins))}};
}

}  // namespace

json inspect_scene(const GaussianScene& scene) {
    validate_scene(scene);
    return {{"kind", "ply"},
            {"count", scene.count()},
            {"file_bytes", ply::write_scene(scene).size()},
            {"ranges", ranges(scene)},
            {"entropy_bits", float_entropies(scene)},
            {"opacity_histogram", opacity_summary(scene)}};
}

json inspect_container(std::span<const std::uint8_t> bytes) {
    const DecodedContainer dc = decode(bytes);
    const GaussianScene scene = dequantize_scene(dc.scene);
    const StreamSizes streams = stream_sizes(bytes);
    json quantizers = json::object();
    for (const QuantizerState& qs : dc.scene.quantizers)
        quantizers[std::string(attribute_name(qs.attribute))] = {{"bits", qs.bits},
                                                    {"signed", qs.is_signed},
                                                    {"step", json_number(qs.step)},
                                                    {"raw_bytes", streams.raw[index_of(qs.attribute)]},
                                                    {"compressed_bytes", streams.compressed[index_of(qs.attribute)]}};
    return {{"kind", "container"},
            {"count", scene.count()},
            {"file_bytes", bytes.size()},
            {"morton_ordered", dc.morton_ordered},
            {"aabb", {{"min", dc.aabb.min}, {"max", dc.aabb.max}}},
            {"quantizers", quantizers},
            {"ranges", ranges(scene)},
            {"entropy_bits", entropy_table(dc.scene)},
            {"opacity_histogram", opacity_summary(scene)}};
}

}  // namespace elmgs
