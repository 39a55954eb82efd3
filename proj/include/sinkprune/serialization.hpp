// Copyright (C) 2026 The sinkprune Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "sinkprune/diagnostics.hpp"
#include "sinkprune/pipeline.hpp"
#include "sinkprune/synth_bench.hpp"

namespace sinkprune {

using json = nlohmann::json;

inline constexpr int kResultSchema = 1;

namespace detail {

/// Rejects keys outside `allowed` so typos in config files fail loudly.
inline void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& what) {
    require(j.is_object(), what + " must be a JSON object");
    for (const auto& [key, _] : j.items()) {
        require(allowed.count(key) == 1, "unknown " + what + " field '" + key + "'");
    }
}

template <typename T>
void read_opt(const json& j, const char* key, T& dst) {
    if (j.contains(key)) {
        try {
            dst = j.at(key).get<T>();
        } catch (const json::exception& e) {
            throw ValidationError(std::string("field '") + key + "': " + e.what());
        }
    }
}

inline json ids_to_json(const std::vector<TokenId>& ids) {
    json a = json::array();
    for (const auto& id : ids) {
        a.push_back({id.frame, id.patch});
    }
    return a;
}

inline std::vector<TokenId> ids_from_json(const json& a) {
    std::vector<TokenId> ids;
    for (const auto& e : a) {
        ids.push_back({e.at(0).get<std::size_t>(), e.at(1).get<std::size_t>()});
    }
    return ids;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// PruneConfig

inline void to_json(json& j, const PruneConfig& c) {
    j = json{{"retention_ratio", c.retention_ratio},
             {"mu_s", c.mu_s},
             {"mu_t", c.mu_t},
             {"w", c.w},
             {"tau", c.tau},
             {"clip_len", c.clip_len},
             {"strategy", std::string(to_string(c.strategy))},
             {"spatial_selector", std::string(to_string(c.spatial_selector))},
             {"merge_pruned", c.merge_pruned},
             {"sink_aware_temporal", c.sink_aware_temporal},
             {"k_pct", c.k_pct},
             {"knn", c.knn},
             {"sttp_per_pair", c.sttp_per_pair},
             {"merge_temporal_runs", c.merge_temporal_runs}};
}

/// Missing fields keep their defaults; unknown fields are rejected.
inline void from_json(const json& j, PruneConfig& c) {
    detail::check_keys(j,
                       {"retention_ratio", "mu_s", "mu_t", "w", "tau", "clip_len", "strategy", "spatial_selector",
                        "merge_pruned", "sink_aware_temporal", "k_pct", "knn", "sttp_per_pair", "merge_temporal_runs"},
                       "config");
    detail::read_opt(j, "retention_ratio", c.retention_ratio);
    detail::read_opt(j, "mu_s", c.mu_s);
    detail::read_opt(j, "mu_t", c.mu_t);
    detail::read_opt(j, "w", c.w);
    detail::read_opt(j, "tau", c.tau);
    detail::read_opt(j, "clip_len", c.clip_len);
    detail::read_opt(j, "merge_pruned", c.merge_pruned);
    detail::read_opt(j, "sink_aware_temporal", c.sink_aware_temporal);
    detail::read_opt(j, "k_pct", c.k_pct);
    detail::read_opt(j, "knn", c.knn);
    detail::read_opt(j, "sttp_per_pair", c.sttp_per_pair);
    detail::read_opt(j, "merge_temporal_runs", c.merge_temporal_runs);
    std::string name;
    if (j.contains("strategy")) {
        detail::read_opt(j, "strategy", name);
        c.strategy = parse_strategy(name);
    }
    if (j.contains("spatial_selector")) {
        detail::read_opt(j, "spatial_selector", name);
        c.spatial_selector = parse_selector(name);
    }
}

// ---------------------------------------------------------------------------
// PruneResult

inline void to_json(json& j, const PruneLedger& l) {
    j = json{{"input_tokens", l.input_tokens},
             {"budget", l.budget},
             {"temporally_pruned", l.temporally_pruned},
             {"spatially_pruned", l.spatially_pruned},
             {"merged", l.merged},
             {"output", l.output},
             {"under_budget", l.under_budget},
             {"hard_prune_refilled", l.hard_prune_refilled},
             {"redistribution_fallback_frames", l.redistribution_fallback_frames},
             {"unmerged_frames", l.unmerged_frames}};
}

inline void from_json(const json& j, PruneLedger& l) {
    l.input_tokens = j.at("input_tokens").get<std::size_t>();
    l.budget = j.at("budget").get<std::size_t>();
    l.temporally_pruned = j.at("temporally_pruned").get<std::size_t>();
    l.spatially_pruned = j.at("spatially_pruned").get<std::size_t>();
    l.merged = j.at("merged").get<std::size_t>();
    l.output = j.at("output").get<std::size_t>();
    l.under_budget = j.at("under_budget").get<bool>();
    l.hard_prune_refilled = j.value("hard_prune_refilled", std::size_t{0});
    l.redistribution_fallback_frames = j.value("redistribution_fallback_frames", std::size_t{0});
    l.unmerged_frames = j.value("unmerged_frames", std::size_t{0});
}

inline void to_json(json& j, const SinkScores& s) {
    j = json{{"w", s.w}, {"raw", s.raw}, {"normalized", s.normalized}};
}

inline void from_json(const json& j, SinkScores& s) {
    s.w = j.at("w").get<double>();
    s.raw = j.at("raw").get<std::vector<double>>();
    s.normalized = j.at("normalized").get<std::vector<double>>();
}

inline void to_json(json& j, const PruneResult& r) {
    json merges = json::array();
    for (const auto& m : r.selection.merges) {
        merges.push_back({{"target", {m.target.frame, m.target.patch}}, {"sources", detail::ids_to_json(m.sources)}});
    }
    json sims = json::array();
    for (const auto& s : r.temporal.clip_sims) {
        sims.push_back({s.clip, s.patch, s.value});
    }
    j = json{{"schema", kResultSchema},
             {"frames", r.frames},
             {"patches", r.patches},
             {"config", r.config},
             {"kept", detail::ids_to_json(r.selection.kept)},
             {"merges", merges},
             {"temporal",
              {{"clip_len", r.temporal.clip_len},
               {"pruned", detail::ids_to_json(r.temporal.pruned)},
               {"clip_similarities", sims}}},
             {"ledger", r.ledger},
             {"sink_scores", r.sink}};
}

inline void from_json(const json& j, PruneResult& r) {
    detail::require(j.value("schema", 0) == kResultSchema, "unsupported result schema");
    r.frames = j.at("frames").get<std::size_t>();
    r.patches = j.at("patches").get<std::size_t>();
    r.config = j.at("config").get<PruneConfig>();
    r.selection.kept = detail::ids_from_json(j.at("kept"));
    r.selection.budget = j.at("ledger").at("budget").get<std::size_t>();
    r.selection.merges.clear();
    for (const auto& m : j.at("merges")) {
        r.selection.merges.push_back({{m.at("target").at(0).get<std::size_t>(), m.at("target").at(1).get<std::size_t>()},
                                      detail::ids_from_json(m.at("sources"))});
    }
    const auto& tj = j.at("temporal");
    r.temporal = TemporalPruneSet{r.frames, r.patches, tj.at("clip_len").get<std::size_t>(),
                                  detail::ids_from_json(tj.at("pruned")), {}};
    for (const auto& s : tj.at("clip_similarities")) {
        r.temporal.clip_sims.push_back({s.at(0).get<std::size_t>(), s.at(1).get<std::size_t>(), s.at(2).get<double>()});
    }
    r.ledger = j.at("ledger").get<PruneLedger>();
    r.sink = j.at("sink_scores").get<SinkScores>();
    for (const auto& id : r.selection.kept) {
        detail::require(id.frame < r.frames && id.patch < r.patches, "kept index out of range");
    }
}

// ---------------------------------------------------------------------------
// Synthetic scenarios

inline void to_json(json& j, const Scenario& s) {
    j = json{{"frames", s.frames},
             {"patches", s.patches},
             {"dim", s.dim},
             {"n_sink", s.n_sink},
             {"n_salient", s.n_salient},
             {"salient_span", s.salient_span},
             {"sink_attention_boost", s.sink_attention_boost},
             {"salient_attention_boost", s.salient_attention_boost},
             {"attention_noise", s.attention_noise},
             {"background_drift", s.background_drift},
             {"seed", s.seed}};
    if (s.grid_w) {
        j["grid_w"] = *s.grid_w;
        j["grid_h"] = *s.grid_h;
    }
}

inline void from_json(const json& j, Scenario& s) {
    detail::check_keys(j,
                       {"frames", "patches", "dim", "grid_w", "grid_h", "n_sink", "n_salient", "salient_span",
                        "sink_attention_boost", "salient_attention_boost", "attention_noise", "background_drift", "seed"},
                       "scenario");
    detail::read_opt(j, "frames", s.frames);
    detail::read_opt(j, "patches", s.patches);
    detail::read_opt(j, "dim", s.dim);
    detail::read_opt(j, "n_sink", s.n_sink);
    detail::read_opt(j, "n_salient", s.n_salient);
    detail::read_opt(j, "salient_span", s.salient_span);
    detail::read_opt(j, "sink_attention_boost", s.sink_attention_boost);
    detail::read_opt(j, "salient_attention_boost", s.salient_attention_boost);
    detail::read_opt(j, "attention_noise", s.attention_noise);
    detail::read_opt(j, "background_drift", s.background_drift);
    detail::read_opt(j, "seed", s.seed);
    if (j.contains("grid_w") || j.contains("grid_h")) {
        s.grid_w = j.at("grid_w").get<std::size_t>();
        s.grid_h = j.at("grid_h").get<std::size_t>();
    } else if (j.contains("patches")) {
        s.grid_w.reset();
        s.grid_h.reset();
    }
}

inline void to_json(json& j, const GroundTruth& g) {
    json events = json::array();
    for (const auto& e : g.salient_events) {
        events.push_back({{"patch", e.patch}, {"start_frame", e.start_frame}, {"end_frame", e.end_frame}});
    }
    j = json{{"frames", g.frames},
             {"patches", g.patches},
             {"sink_positions", g.sink_positions},
             {"salient_events", events},
             {"static_positions", g.static_positions}};
}

inline void from_json(const json& j, GroundTruth& g) {
    g.frames = j.at("frames").get<std::size_t>();
    g.patches = j.at("patches").get<std::size_t>();
    g.sink_positions = j.at("sink_positions").get<std::vector<std::size_t>>();
    g.static_positions = j.at("static_positions").get<std::vector<std::size_t>>();
    g.salient_events.clear();
    for (const auto& e : j.at("salient_events")) {
        g.salient_events.push_back({e.at("patch").get<std::size_t>(), e.at("start_frame").get<std::size_t>(),
                                    e.at("end_frame").get<std::size_t>()});
    }
}

inline void to_json(json& j, const BenchMetrics& m) {
    j = json{{"salient_recall", m.salient_recall},
             {"sink_retention", m.sink_retention},
             {"budget_waste", m.budget_waste},
             {"kept", m.kept},
             {"salient_occurrences", m.salient_occurrences},
             {"salient_kept", m.salient_kept},
             {"sink_occurrences", m.sink_occurrences},
             {"sink_kept", m.sink_kept},
             {"waste_tokens", m.waste_tokens},
             {"sink_positions", m.sink_positions},
             {"salient_events", m.salient_events},
             {"static_positions", m.static_positions}};
}

// ---------------------------------------------------------------------------
// Diagnostics reports

inline void to_json(json& j, const FrequencyProfile& p) {
    j = json{{"counts", p.counts}, {"total_selected", p.total_selected}};
}

inline void to_json(json& j, const SinkSurvival& s) {
    j = json{{"kept_a", s.kept_a}, {"kept_b", s.kept_b}, {"reduction_pct", s.reduction_pct_rounded()},
             {"reduction_pct_raw", s.reduction_pct}};
}

inline json flops_to_json(const FlopsModel& model, std::size_t visual_tokens, const FlopsBreakdown& f) {
    // Exact values can exceed 64 bits, so they are emitted as decimal strings.
    return json{{"layers", model.layers},
                {"hidden", model.hidden},
                {"ffn_hidden", model.ffn_hidden},
                {"text_tokens", model.text_tokens},
                {"visual_tokens", visual_tokens},
                {"projection", f.projection.str()},
                {"attention", f.attention.str()},
                {"ffn", f.ffn.str()},
                {"total", f.total.str()}};
}

inline json sweep_to_json(const std::vector<SweepPoint>& points, bool greedy) {
    json out = json::array();
    for (const auto& p : points) {
        json params = json::object();
        for (const auto& [name, value] : p.params) {
            params[name] = value;
        }
        json rec{{"params", params}, {"result", p.result}};
        if (greedy) {
            rec["objective"] = p.objective;
        }
        out.push_back(std::move(rec));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Files

inline json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open '" + path + "'");
    }
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw IoError(path + ": " + e.what());
    }
}

inline void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw IoError("cannot open '" + path + "' for writing");
    }
    out << text;
    if (!out) {
        throw IoError("error writing '" + path + "'");
    }
}

inline void write_json_file(const std::string& path, const json& j) { write_text_file(path, j.dump(2) + "\n"); }

}  // namespace sinkprune
