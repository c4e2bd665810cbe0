// SPDX-License-Identifier: Apache-2.0
#include "elmgs/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <map>
#include <optional>

#include "elmgs/codec.hpp"
#include "elmgs/io.hpp"
#include "elmgs/metrics.hpp"
#include "elmgs/pipeline.hpp"
#include "elmgs/ply.hpp"
#include "elmgs/pruning.hpp"
#include "elmgs/quantization.hpp"
#include "elmgs/renderer.hpp"
#include "elmgs/synth.hpp"

namespace elmgs::cli {

namespace fs = std::filesystem;

int exit_code_for(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::InvalidArgument: return kUsage;
        case ErrorKind::Io: return kIo;
        case ErrorKind::Numerical: return kNumerical;
        case ErrorKind::Parse:
        case ErrorKind::Schema:
        case ErrorKind::Truncation:
        case ErrorKind::Format:
        case ErrorKind::Corruption: return kData;
    }
    return kData;
}

namespace {

struct Common {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string output;
    bool json = false;
};

void add_common(CLI::App* cmd, Common& c, bool with_config) {
    if (with_config) {
        cmd->add_option("--config", c.config, "Flat JSON pipeline config");
        cmd->add_option("--seed", c.seed, "Random seed (overrides the config)");
    }
    cmd->add_option("--output,-o", c.output, "Output path")->required();
    cmd->add_flag("--json", c.json, "Machine-readable report on standard output");
}

PipelineConfig load_config(const Common& c) {
    PipelineConfig cfg;
    if (!c.config.empty()) {
        const auto bytes = io::read_file(c.config);
        json j;
        try {
            j = json::parse(bytes.begin(), bytes.end());
        } catch (const json::parse_error& e) {
            fail(ErrorKind::Parse, "'" + c.config + "': " + e.what());
        }
        cfg.merge(j);
    }
    if (c.seed) cfg.seed = *c.seed;
    return cfg;
}

GaussianScene load_any(const fs::path& path) {
    const auto bytes = io::read_file(path);
    if (looks_like_container(bytes)) return dequantize_scene(decode(bytes).scene);
    return ply::read_scene(bytes);
}

void write_text(const fs::path& path, const std::string& text) {
    io::write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

void emit(std::ostream& out, const Common& c, const json& report, const std::string& summary) {
    if (c.json)
        out << report.dump(2) << "\n";
    else
        out << summary << "\n";
}

std::string summary_line(const json& r) {
    std::string s = "gaussians " + r["input_count"].dump() + " -> " + r["final_count"].dump();
    s += ", container " + r["sizes"]["container_bytes"].dump() + " bytes";
    s += ", ratio " + r["sizes"]["compression_ratio"].dump();
    s += ", PSNR vs input render " + r["quality"]["psnr_vs_input_render"].dump() + " dB";
    return s;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Compression toolkit for 3D Gaussian Splatting scenes", "elmgs"};
    app.require_subcommand(1);

    std::map<std::string, Common> common;
    std::function<int()> action;

    // pipeline
    std::string p_input, p_views, p_report;
    std::optional<double> p_gamma_iter, p_gamma_target;
    std::optional<int> p_rounds, p_qat;
    bool p_baseline = false;
    {
        auto* cmd = app.add_subcommand("pipeline", "Prune, quantization-aware fine-tune and encode a scene");
        add_common(cmd, common["pipeline"], true);
        cmd->add_option("--input,-i", p_input, "Input 3DGS PLY")->required();
        cmd->add_option("--views", p_views, "Views directory (cameras.json + PNGs)")->required();
        cmd->add_option("--report", p_report, "Also write the JSON report to this file");
        cmd->add_option("--gamma-iter", p_gamma_iter, "Per-round prune fraction");
        cmd->add_option("--gamma-target", p_gamma_target, "Cumulative prune fraction");
        cmd->add_option("--rounds", p_rounds, "Prune rounds");
        cmd->add_option("--qat-steps", p_qat, "Quantization-aware fine-tuning steps");
        cmd->add_flag("--baseline", p_baseline, "Also report the unpruned fine-tuned opacity histogram");
        cmd->callback([&] {
            action = [&]() -> int {
                const Common& c = common["pipeline"];
                PipelineConfig cfg = load_config(c);
                if (p_gamma_iter && p_gamma_target)
                    fail(ErrorKind::InvalidArgument, "--gamma-iter and --gamma-target are mutually exclusive");
                if (p_gamma_iter) cfg.merge({{"gamma_iter", *p_gamma_iter}});
                if (p_gamma_target) cfg.merge({{"gamma_target", *p_gamma_target}});
                if (p_rounds) cfg.rounds = *p_rounds;
                if (p_qat) cfg.qat_steps = *p_qat;
                if (p_baseline) cfg.baseline = true;
                cfg.validate();
                const GaussianScene scene = ply::load(p_input);
                const auto views = io::load_views(p_views);
                const PipelineResult result = run_pipeline(scene, views, cfg);
                io::write_file(c.output, result.container);
                if (!p_report.empty()) write_text(p_report, result.report.dump(2) + "\n");
                emit(out, c, result.report, summary_line(result.report));
                return kSuccess;
            };
        });
    }

    // prune
    std::string pr_input, pr_views;
    {
        auto* cmd = app.add_subcommand("prune", "Gradient-and-opacity-aware pruning with fine-tuning");
        add_common(cmd, common["prune"], true);
        cmd->add_option("--input,-i", pr_input, "Input 3DGS PLY")->required();
        cmd->add_option("--views", pr_views, "Views directory")->required();
        cmd->callback([&] {
            action = [&]() -> int {
                const Common& c = common["prune"];
                const PipelineConfig cfg = load_config(c);
                cfg.validate();
                const GaussianScene scene = ply::load(pr_input);
                const auto views = io::load_views(pr_views);
                FinetuneOptions ft;
                ft.learning_rates = cfg.learning_rates;
                ft.seed = *cfg.seed;
                RendererTrainer trainer(ft);
                PruneConfig pc{cfg.per_round_gamma(), cfg.prune_interval, cfg.rounds, cfg.final_finetune_steps};
                PruneHistory history;
                const GaussianScene pruned = prune_finetune_loop(scene, views, pc, trainer, &history);
                ply::save(c.output, pruned);
                json rounds = json::array();
                for (const PruneRound& r : history.rounds)
                    rounds.push_back({{"count_before", r.count_before},
                                      {"count_after", r.report.kept_count},
                                      {"opacity_threshold", json_number(r.report.opacity_threshold)},
                                      {"gradient_threshold", json_number(r.report.gradient_threshold)}});
                const json report{{"gamma_iter", pc.gamma_iter},
                                  {"input_count", scene.count()},
                                  {"final_count", pruned.count()},
                                  {"rounds", rounds}};
                emit(out, c, report,
                     "gaussians " + std::to_string(scene.count()) + " -> " + std::to_string(pruned.count()));
                return kSuccess;
            };
        });
    }

    // qat
    std::string q_input, q_views;
    {
        auto* cmd = app.add_subcommand("qat", "Quantization-aware fine-tuning, then encode");
        add_common(cmd, common["qat"], true);
        cmd->add_option("--input,-i", q_input, "Input 3DGS PLY")->required();
        cmd->add_option("--views", q_views, "Views directory")->required();
        cmd->callback([&] {
            action = [&]() -> int {
                const Common& c = common["qat"];
                const PipelineConfig cfg = load_config(c);
                cfg.validate();
                const GaussianScene scene = ply::load(q_input);
                const auto views = io::load_views(q_views);
                QatOptions opt;
                opt.finetune.learning_rates = cfg.learning_rates;
                opt.finetune.seed = *cfg.seed;
                opt.step_lr_fraction = cfg.step_lr_fraction;
                const QatResult r = qat_finetune(scene, views, init_quantizers(scene, cfg.bits), cfg.qat_steps, opt);
                const auto bytes = encode(quantize_scene(r.scene, r.quantizers),
                                          cfg.morton ? Ordering::Morton : Ordering::Original);
                io::write_file(c.output, bytes);
                const json report{{"count", scene.count()},
                                  {"steps", cfg.qat_steps},
                                  {"final_loss", r.loss_trace.empty() ? json(nullptr) : json_number(r.loss_trace.back())},
                                  {"container_bytes", bytes.size()}};
                emit(out, c, report, "wrote " + std::to_string(bytes.size()) + " bytes");
                return kSuccess;
            };
        });
    }

    // encode
    std::string e_input;
    bool e_no_morton = false;
    {
        auto* cmd = app.add_subcommand("encode", "Quantize at the initial step sizes and encode");
        add_common(cmd, common["encode"], true);
        cmd->add_option("--input,-i", e_input, "Input 3DGS PLY")->required();
        cmd->add_flag("--no-morton", e_no_morton, "Keep the input order");
        cmd->callback([&] {
            action = [&]() -> int {
                const Common& c = common["encode"];
                PipelineConfig cfg = load_config(c);
                const GaussianScene scene = ply::load(e_input);
                const bool morton = cfg.morton && !e_no_morton;
                const auto bytes = encode(quantize_scene(scene, init_quantizers(scene, cfg.bits)),
                                          morton ? Ordering::Morton : Ordering::Original);
                io::write_file(c.output, bytes);
                const QualityReport q = size_report(bytes.size(), ply::write_scene(scene).size());
                const json report{{"count", scene.count()},
                                  {"ply_bytes", q.raw_bytes},
                                  {"container_bytes", q.compressed_bytes},
                                  {"compression_ratio", q.compression_ratio}};
                emit(out, c, report, "wrote " + std::to_string(bytes.size()) + " bytes");
                return kSuccess;
            };
        });
    }

    // decode
    std::string d_input;
    {
        auto* cmd = app.add_subcommand("decode", "Decode a container to a 3DGS PLY");
        add_common(cmd, common["decode"], false);
        cmd->add_option("--input,-i", d_input, "Input container")->required();
        cmd->callback([&] {
            action = [&]() -> int {
                const Common& c = common["decode"];
                const DecodedContainer dc = decode(io::read_file(d_input));
                const GaussianScene scene = dequantize_scene(dc.scene);
                ply::save(c.output, scene);
                emit(out, c, json{{"count", scene.count()}, {"morton_ordered", dc.morton_ordered}},
                     "decoded " + std::to_string(scene.count()) + " Gaussians");
                return kSuccess;
            };
        });
    }

    // render
    std::string r_input, r_camera;
    {
        auto* cmd = app.add_subcommand("render", "Rasterize a PLY or container to PNG");
        add_common(cmd, common["render"], false);
        cmd->add_option("--input,-i", r_input, "PLY or container")->required();
        cmd->add_option("--camera", r_camera, "Camera JSON")->required();
        cmd->callback([&] {
            action = [&]() -> int {
                const Common& c = common["render"];
                const Camera cam = io::load_camera(r_camera);
                const GaussianScene scene = load_any(r_input);
                io::write_png(c.output, rasterize(scene, cam));
                emit(out, c, json{{"count", scene.count()}, {"width", cam.width}, {"height", cam.height}},
                     "rendered " + std::to_string(cam.width) + "x" + std::to_string(cam.height));
                return kSuccess;
            };
        });
    }

    // inspect
    std::string i_input;
    {
        auto* cmd = app.add_subcommand("inspect", "JSON summary of a PLY or container");
        cmd->add_option("input", i_input, "PLY or container")->required();
        cmd->add_flag("--json", common["inspect"].json, "Compact single-line JSON");
        cmd->callback([&] {
            action = [&]() -> int {
                const auto bytes = io::read_file(i_input);
                json report = looks_like_container(bytes) ? inspect_container(bytes)
                                                          : inspect_scene(ply::read_scene(bytes));
                report["file_bytes"] = bytes.size();
                out << (common["inspect"].json ? report.dump() : report.dump(2)) << "\n";
                return kSuccess;
            };
        });
    }

    // metrics
    std::string m_a, m_b, m_container, m_ply;
    {
        auto* cmd = app.add_subcommand("metrics", "PSNR/SSIM of two PNGs and optional size ratio");
        cmd->add_option("image_a", m_a, "First PNG")->required();
        cmd->add_option("image_b", m_b, "Second PNG")->required();
        cmd->add_option("--container", m_container, "Container for the size report");
        cmd->add_option("--ply", m_ply, "Original PLY for the size report");
        cmd->add_flag("--json", common["metrics"].json, "Compact single-line JSON");
        cmd->callback([&] {
            action = [&]() -> int {
                const Image a = io::read_png(m_a), b = io::read_png(m_b);
                json report{{"psnr", json_number(psnr(a, b))}, {"ssim", json_number(ssim(a, b))}};
                if (!m_container.empty() || !m_ply.empty()) {
                    if (m_container.empty() || m_ply.empty())
                        fail(ErrorKind::InvalidArgument, "--container and --ply go together");
                    const QualityReport q = size_report(fs::file_size(m_container), fs::file_size(m_ply));
                    report["raw_bytes"] = q.raw_bytes;
                    report["compressed_bytes"] = q.compressed_bytes;
                    report["compression_ratio"] = q.compression_ratio;
                }
                out << (common["metrics"].json ? report.dump() : report.dump(2)) << "\n";
                return kSuccess;
            };
        });
    }

    // synth
    SynthSpec spec;
    std::string s_layout = "curve";
    {
        auto* cmd = app.add_subcommand("synth", "Write a synthetic scene.ply and views/ directory");
        Common& c = common["synth"];
        cmd->add_option("--output,-o", c.output, "Output directory")->required();
        cmd->add_option("--seed", spec.seed, "Random seed")->required();
        cmd->add_option("--gaussians,-n", spec.n_gaussians, "Gaussian count");
        cmd->add_option("--redundant", spec.fraction_redundant, "Fraction of redundant Gaussians");
        cmd->add_option("--layout", s_layout, "curve, cluster or grid")
            ->check(CLI::IsMember({"curve", "cluster", "grid"}));
        cmd->add_option("--views", spec.n_views, "View count");
        cmd->add_option("--width", spec.image_width, "Image width");
        cmd->add_option("--height", spec.image_height, "Image height");
        cmd->add_option("--perturbation", spec.perturbation, "Noise on visible Gaussians after rendering");
        cmd->add_flag("--json", c.json, "Machine-readable report on standard output");
        cmd->callback([&] {
            action = [&]() -> int {
                const Common& c2 = common["synth"];
                spec.layout = s_layout == "cluster" ? SynthLayout::Cluster
                              : s_layout == "grid"  ? SynthLayout::Grid
                                                    : SynthLayout::Curve;
                const SynthScene s = make_scene(spec);
                std::error_code ec;
                fs::create_directories(c2.output, ec);
                if (ec) fail(ErrorKind::Io, "cannot create '" + c2.output + "': " + ec.message());
                ply::save(fs::path(c2.output) / "scene.ply", s.scene);
                io::save_views(fs::path(c2.output) / "views", s.views);
                const auto redundant = static_cast<std::size_t>(std::count(s.redundant.begin(), s.redundant.end(), true));
                emit(out, c2, json{{"count", s.scene.count()}, {"redundant", redundant}, {"views", s.views.size()}},
                     "wrote " + std::to_string(s.scene.count()) + " Gaussians and " +
                         std::to_string(s.views.size()) + " views");
                return kSuccess;
            };
        });
    }

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kSuccess : kUsage;
    }

    try {
        return action();
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return exit_code_for(e.kind());
    } catch (const fs::filesystem_error& e) {
        err << "error: " << e.what() << "\n";
        return kIo;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kData;
    }
}

}  // namespace elmgs::cli
