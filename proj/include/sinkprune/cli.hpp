// Copyright (C) 2026 The sinkprune Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <iostream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "sinkprune/attention_scores.hpp"
#include "sinkprune/compare.hpp"
#include "sinkprune/diagnostics.hpp"
#include "sinkprune/npy.hpp"
#include "sinkprune/pipeline.hpp"
#include "sinkprune/serialization.hpp"
#include "sinkprune/sink_score.hpp"
#include "sinkprune/synth_bench.hpp"
#include "sinkprune/version.hpp"

namespace sinkprune::cli {

enum ExitCode : int { kOk = 0, kValidation = 1, kIo = 2 };

/// Optional per-flag overrides layered over a config file.
struct ConfigOverrides {
    std::optional<double> ratio, mu_s, mu_t, w, tau, k_pct;
    std::optional<std::size_t> clip_len, knn;
    std::optional<std::string> strategy, selector;
    std::optional<bool> merge, sink_aware_temporal, sttp_per_pair, merge_temporal_runs;

    void add_to(CLI::App& cmd) {
        cmd.add_option("--ratio", ratio, "Retention ratio r in (0, 1]");
        cmd.add_option("--mu-s", mu_s, "Spatial sink penalty weight");
        cmd.add_option("--mu-t", mu_t, "Temporal sink bonus weight");
        cmd.add_option("--w", w, "Sink score sharpening exponent (default 1.1)");
        cmd.add_option("--tau", tau, "Temporal similarity threshold in (0, 1)");
        cmd.add_option("--clip-len", clip_len, "Temporal clip length in frames (>= 2)");
        cmd.add_option("--strategy", strategy, "spatial_only | temporal_then_spatial");
        cmd.add_option("--selector", selector,
                       "attention_topk | attention_topk_sink_aware | hard_prune_topk | attention_redistribution | dpc_knn");
        cmd.add_option("--k-pct", k_pct, "Top fraction for hard_prune_topk / attention_redistribution");
        cmd.add_option("--knn", knn, "Neighbour count for dpc_knn");
        cmd.add_option("--merge", merge, "Merge pruned tokens into kept ones (true/false)");
        cmd.add_option("--sink-aware-temporal", sink_aware_temporal, "Use the sink-aware temporal test (true/false)");
        cmd.add_option("--sttp-per-pair", sttp_per_pair, "Apply the temporal sink bonus per adjacent pair (true/false)");
        cmd.add_option("--merge-temporal-runs", merge_temporal_runs, "Average pruned runs into their representative");
    }

    void apply(PruneConfig& c) const {
        if (ratio) c.retention_ratio = *ratio;
        if (mu_s) c.mu_s = *mu_s;
        if (mu_t) c.mu_t = *mu_t;
        if (w) c.w = *w;
        if (tau) c.tau = *tau;
        if (k_pct) c.k_pct = *k_pct;
        if (clip_len) c.clip_len = *clip_len;
        if (knn) c.knn = *knn;
        if (strategy) c.strategy = parse_strategy(*strategy);
        if (selector) c.spatial_selector = parse_selector(*selector);
        if (merge) c.merge_pruned = *merge;
        if (sink_aware_temporal) c.sink_aware_temporal = *sink_aware_temporal;
        if (sttp_per_pair) c.sttp_per_pair = *sttp_per_pair;
        if (merge_temporal_runs) c.merge_temporal_runs = *merge_temporal_runs;
    }
};

/// Token grid and scores loaded from NPY files and checked against each other.
struct VideoInputs {
    TokenGrid grid;
    AttentionScores scores;
};

inline AttentionScores load_scores(const std::string& path) {
    npy::Array a = npy::read(path);
    detail::require(a.shape.size() == 2, path + ": scores must be 2-D (frames x patches)");
    return ingest_scores(a.shape[0], a.shape[1], std::move(a.data));
}

inline VideoInputs load_video(const std::string& tokens_path, const std::string& scores_path,
                              std::optional<std::size_t> grid_w, std::optional<std::size_t> grid_h) {
    npy::Array t = npy::read(tokens_path);
    detail::require(t.shape.size() == 3, tokens_path + ": tokens must be 3-D (frames x patches x dim)");
    AttentionScores scores = load_scores(scores_path);
    detail::require(scores.frames() == t.shape[0] && scores.patches() == t.shape[1],
                    "tokens and scores disagree on (frames, patches)");
    TokenGrid grid(t.shape[0], t.shape[1], t.shape[2], std::move(t.data), grid_w, grid_h);
    const ValidationReport report = validate(grid, scores);
    for (const auto& v : report) {
        if (v.kind != ViolationKind::frame_sum) {
            throw ValidationError(v.message);
        }
    }
    return {std::move(grid), std::move(scores)};
}

inline PruneConfig load_config(const std::string& path, const ConfigOverrides& overrides) {
    PruneConfig cfg;
    if (!path.empty()) {
        cfg = read_json_file(path).get<PruneConfig>();
    }
    overrides.apply(cfg);
    cfg.validate();
    return cfg;
}

/// "mu_s=0.01,0.02" -> {"mu_s", {0.01, 0.02}}
inline ParamAxis parse_axis(const std::string& text) {
    const auto eq = text.find('=');
    detail::require(eq != std::string::npos && eq > 0, "grid axis must look like name=v1,v2,...");
    ParamAxis axis{text.substr(0, eq), {}};
    std::stringstream ss(text.substr(eq + 1));
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            axis.second.push_back(std::stod(item, &used));
            detail::require(used == item.size(), "");
        } catch (const std::exception&) {
            throw ValidationError("bad grid value '" + item + "' for " + axis.first);
        }
    }
    detail::require(!axis.second.empty(), "grid axis '" + axis.first + "' has no values");
    return axis;
}

inline void emit(const std::string& path, const std::string& text, std::ostream& out) {
    if (path.empty() || path == "-") {
        out << text;
    } else {
        write_text_file(path, text);
    }
}

inline void emit_json(const std::string& path, const json& j, std::ostream& out) { emit(path, j.dump(2) + "\n", out); }

/**
 * Entry point of the `sinkprune` tool. Every subcommand loads its inputs,
 * calls the matching library routine and serializes the result.
 * Exit codes: 0 success, 1 validation failure, 2 I/O failure or bad usage.
 */
inline int cli_main(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"Sink-aware visual token pruning for video encoders", "sinkprune"};
    app.set_version_flag("--version", std::string(kVersion));
    app.require_subcommand(1);

    // score
    std::string q_path, k_path, score_out, matrix_out;
    auto* score_cmd = app.add_subcommand("score", "Column-mean attention scores from query/key tensors");
    score_cmd->add_option("--q", q_path, "Queries, heads x frames x patches x head_dim (.npy)")->required();
    score_cmd->add_option("--k", k_path, "Keys, same shape as --q (.npy)")->required();
    score_cmd->add_option("--out", score_out, "Scores output, frames x patches (.npy)")->required();
    score_cmd->add_option("--matrix-out", matrix_out, "Optional head-averaged attention matrix (.npy)");

    // sink
    std::string sink_scores_path, sink_out;
    double sink_w = kDefaultSinkExponent;
    auto* sink_cmd = app.add_subcommand("sink", "Per-position sink scores");
    sink_cmd->add_option("--scores", sink_scores_path, "Attention scores, frames x patches (.npy)")->required();
    sink_cmd->add_option("--w", sink_w, "Sharpening exponent")->capture_default_str();
    sink_cmd->add_option("--out", sink_out, "Output JSON (default stdout)");

    // prune / sweep / compare share the video inputs and config flags
    std::string tokens_path, scores_path, config_path, result_out, merged_out, truth_path;
    std::optional<std::size_t> grid_w, grid_h;
    ConfigOverrides overrides;
    auto add_video = [&](CLI::App* cmd) {
        cmd->add_option("--tokens", tokens_path, "Token embeddings, frames x patches x dim (.npy)")->required();
        cmd->add_option("--scores", scores_path, "Attention scores, frames x patches (.npy)")->required();
        cmd->add_option("--config", config_path, "PruneConfig JSON");
        cmd->add_option("--grid-w", grid_w, "Patch grid width");
        cmd->add_option("--grid-h", grid_h, "Patch grid height");
        overrides.add_to(*cmd);
    };

    auto* prune_cmd = app.add_subcommand("prune", "Run the pruning pipeline");
    add_video(prune_cmd);
    prune_cmd->add_option("--out", result_out, "Result JSON (default stdout)");
    prune_cmd->add_option("--merged-out", merged_out, "Merged kept-token embeddings (.npy), requires merging");

    std::vector<std::string> grid_axes;
    bool greedy = false;
    auto* sweep_cmd = app.add_subcommand("sweep", "Parameter sweep over the pipeline");
    add_video(sweep_cmd);
    sweep_cmd->add_option("--grid", grid_axes, "Axis name=v1,v2,... (repeatable)")->required();
    sweep_cmd->add_flag("--greedy", greedy, "Coordinate-wise greedy search instead of the full product");
    sweep_cmd->add_option("--truth", truth_path, "Ground truth JSON; greedy search maximizes salient recall");
    sweep_cmd->add_option("--out", result_out, "Output JSON (default stdout)");

    auto* compare_cmd = app.add_subcommand("compare", "Strategy comparison table (CSV)");
    add_video(compare_cmd);
    compare_cmd->add_option("--truth", truth_path, "Ground truth JSON for recall metrics");
    compare_cmd->add_option("--out", result_out, "Output CSV (default stdout)");

    // analyze
    auto* analyze_cmd = app.add_subcommand("analyze", "Diagnostics on results and scores");
    analyze_cmd->require_subcommand(1);
    std::string an_result, an_baseline, an_out, an_scores;
    double top_pct = kDefaultSinkSetFraction;
    auto* freq_cmd = analyze_cmd->add_subcommand("frequency", "Selection frequency and sink set of a result");
    freq_cmd->add_option("--result", an_result, "Result JSON")->required();
    freq_cmd->add_option("--top-pct", top_pct, "Sink set fraction")->capture_default_str();
    freq_cmd->add_option("--out", an_out, "Output JSON (default stdout)");

    auto* surv_cmd = analyze_cmd->add_subcommand("survival", "Sink-set survival of a result against a baseline");
    surv_cmd->add_option("--baseline", an_baseline, "Baseline result JSON; defines the sink set")->required();
    surv_cmd->add_option("--result", an_result, "Compared result JSON")->required();
    surv_cmd->add_option("--top-pct", top_pct, "Sink set fraction")->capture_default_str();
    surv_cmd->add_option("--out", an_out, "Output JSON (default stdout)");

    std::size_t hm_w = 0, hm_h = 0;
    auto* heat_cmd = analyze_cmd->add_subcommand("heatmap", "Per-frame attention heatmaps (CSV)");
    heat_cmd->add_option("--scores", an_scores, "Attention scores (.npy)")->required();
    heat_cmd->add_option("--grid-w", hm_w, "Patch grid width")->required();
    heat_cmd->add_option("--grid-h", hm_h, "Patch grid height")->required();
    heat_cmd->add_option("--out", an_out, "Output CSV (default stdout)");

    FlopsModel flops_model;
    std::size_t visual_tokens = 0;
    std::optional<double> flops_ratio;
    auto* flops_cmd = analyze_cmd->add_subcommand("flops", "Prefill FLOPs estimate");
    flops_cmd->add_option("--layers", flops_model.layers, "LLM layer count")->required();
    flops_cmd->add_option("--hidden", flops_model.hidden, "Hidden size d")->required();
    flops_cmd->add_option("--ffn", flops_model.ffn_hidden, "FFN intermediate size m")->required();
    flops_cmd->add_option("--text-tokens", flops_model.text_tokens, "Text token count")->capture_default_str();
    flops_cmd->add_option("--visual-tokens", visual_tokens, "Visual token count before pruning")->required();
    flops_cmd->add_option("--ratio", flops_ratio, "Also report the cost at this retention ratio");
    flops_cmd->add_option("--out", an_out, "Output JSON (default stdout)");

    // synth
    std::string scenario_path, out_dir;
    std::optional<std::uint64_t> seed;
    auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic video with ground truth");
    synth_cmd->add_option("--scenario", scenario_path, "Scenario JSON (defaults apply when omitted)");
    synth_cmd->add_option("--seed", seed, "Override the scenario seed");
    synth_cmd->add_option("--out-dir", out_dir, "Directory for tokens.npy, scores.npy, truth.json")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, err, err);
        return kIo;
    }

    try {
        if (*score_cmd) {
            const npy::Array q = npy::read(q_path);
            const npy::Array k = npy::read(k_path);
            detail::require(q.shape.size() == 4, "queries must be 4-D (heads x frames x patches x head_dim)");
            detail::require(q.shape == k.shape, "query and key shapes differ");
            QueryKey qk{q.shape[0], q.shape[1], q.shape[2], q.shape[3], q.data, k.data};
            const AttentionMatrix m = compute_attention_matrix(qk);
            const AttentionScores s = column_mean_scores(m);
            npy::write(score_out, {s.frames(), s.patches()}, s.values());
            if (!matrix_out.empty()) {
                npy::write(matrix_out, {m.frames, m.patches, m.patches}, m.attn);
            }
        } else if (*sink_cmd) {
            emit_json(sink_out, json(sink_scores(load_scores(sink_scores_path), sink_w)), out);
        } else if (*prune_cmd) {
            const VideoInputs in = load_video(tokens_path, scores_path, grid_w, grid_h);
            const PruneResult r = run(in.grid, in.scores, load_config(config_path, overrides));
            if (!merged_out.empty()) {
                detail::require(r.config.merge_pruned, "--merged-out needs merging enabled (--merge true)");
                npy::write(merged_out, {r.selection.kept.size(), in.grid.dim()}, r.selection.merged_embeddings);
            }
            emit_json(result_out, json(r), out);
        } else if (*sweep_cmd) {
            const VideoInputs in = load_video(tokens_path, scores_path, grid_w, grid_h);
            const PruneConfig base = load_config(config_path, overrides);
            ParamGrid pg;
            for (const auto& text : grid_axes) {
                pg.push_back(parse_axis(text));
            }
            std::vector<SweepPoint> pts;
            if (greedy) {
                detail::require(!truth_path.empty(), "--greedy needs --truth to define the objective");
                const GroundTruth truth = read_json_file(truth_path).get<GroundTruth>();
                pts = greedy_sweep(in.grid, in.scores, base, pg,
                                   [&](const PruneResult& r) { return score(r, truth).salient_recall; });
            } else {
                pts = sweep(in.grid, in.scores, base, pg);
            }
            emit_json(result_out, sweep_to_json(pts, greedy), out);
        } else if (*compare_cmd) {
            const VideoInputs in = load_video(tokens_path, scores_path, grid_w, grid_h);
            std::optional<GroundTruth> truth;
            if (!truth_path.empty()) {
                truth = read_json_file(truth_path).get<GroundTruth>();
            }
            const auto rows = compare_strategies(in.grid, in.scores, load_config(config_path, overrides),
                                                 truth ? &*truth : nullptr);
            emit(result_out, comparison_csv(rows), out);
        } else if (*freq_cmd) {
            const PruneResult r = read_json_file(an_result).get<PruneResult>();
            const FrequencyProfile p = selection_frequency(r);
            json j = p;
            j["top_pct"] = top_pct;
            j["sink_set"] = identify_sink_set(p, top_pct);
            emit_json(an_out, j, out);
        } else if (*surv_cmd) {
            const PruneResult a = read_json_file(an_baseline).get<PruneResult>();
            const PruneResult b = read_json_file(an_result).get<PruneResult>();
            const auto set = identify_sink_set(selection_frequency(a), top_pct);
            json j = sink_survival(a, b, set);
            j["sink_set"] = set;
            j["top_pct"] = top_pct;
            emit_json(an_out, j, out);
        } else if (*heat_cmd) {
            emit(an_out, export_heatmap(load_scores(an_scores), hm_w, hm_h), out);
        } else if (*flops_cmd) {
            json j = flops_to_json(flops_model, visual_tokens, estimate_flops_breakdown(flops_model, visual_tokens));
            if (flops_ratio) {
                detail::require(*flops_ratio > 0.0 && *flops_ratio <= 1.0, "--ratio must be in (0, 1]");
                const std::size_t kept = token_budget(*flops_ratio, visual_tokens);
                j["pruned"] = flops_to_json(flops_model, kept, estimate_flops_breakdown(flops_model, kept));
            }
            emit_json(an_out, j, out);
        } else if (*synth_cmd) {
            Scenario scn;
            if (!scenario_path.empty()) {
                scn = read_json_file(scenario_path).get<Scenario>();
            }
            if (seed) {
                scn.seed = *seed;
            }
            const SynthVideo v = generate(scn);
            std::error_code ec;
            std::filesystem::create_directories(out_dir, ec);
            if (ec) {
                throw IoError("cannot create '" + out_dir + "': " + ec.message());
            }
            const std::filesystem::path dir(out_dir);
            npy::write((dir / "tokens.npy").string(), {v.tokens.frames(), v.tokens.patches(), v.tokens.dim()},
                       v.tokens.data());
            npy::write((dir / "scores.npy").string(), {v.scores.frames(), v.scores.patches()}, v.scores.values());
            write_json_file((dir / "truth.json").string(), json(v.truth));
            write_json_file((dir / "scenario.json").string(), json(scn));
        }
    } catch (const ValidationError& e) {
        err << "validation error: " << e.what() << '\n';
        return kValidation;
    } catch (const IoError& e) {
        err << "I/O error: " << e.what() << '\n';
        return kIo;
    } catch (const json::exception& e) {
        err << "validation error: " << e.what() << '\n';
        return kValidation;
    }
    return kOk;
}

}  // namespace sinkprune::cli
