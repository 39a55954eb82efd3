// Copyright (C) 2026 The sinkprune Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdio>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "sinkprune/diagnostics.hpp"
#include "sinkprune/pipeline.hpp"
#include "sinkprune/synth_bench.hpp"

namespace sinkprune {

struct ComparisonRow {
    std::string label;
    PruneConfig config;
    PruneLedger ledger;
    std::size_t sink_set_kept = 0;
    double sink_reduction_pct = 0.0;  ///< against the spatial-only attention baseline
    std::optional<BenchMetrics> metrics;
};

/// The sweep values used for the naive top-K% strategies.
inline const std::vector<double>& naive_k_grid() {
    static const std::vector<double> grid{0.05, 0.10, 0.15, 0.20};
    return grid;
}

/**
 * Runs the strategy matrix on one video: the spatial-only attention baseline,
 * its sink-aware variant, hard pruning and attention redistribution over
 * naive_k_grid(), DPC-KNN, and the temporal+spatial baseline and sink-aware
 * pair. Retention ratio, mu_s, mu_t, w, tau and clip_len come from `base`.
 * The sink set is the top 10% most frequent positions under the first row.
 */
inline std::vector<ComparisonRow> compare_strategies(const TokenGrid& grid, const AttentionScores& scores,
                                                     const PruneConfig& base, const GroundTruth* truth = nullptr) {
    std::vector<std::pair<std::string, PruneConfig>> plan;
    auto add = [&](std::string label, Strategy strategy, SpatialSelector selector, bool sink_temporal,
                   double k_pct = 0.1) {
        PruneConfig c = base;
        c.strategy = strategy;
        c.spatial_selector = selector;
        c.sink_aware_temporal = sink_temporal;
        c.k_pct = k_pct;
        c.merge_pruned = false;
        plan.emplace_back(std::move(label), c);
    };
    add("spatial_attention_topk", Strategy::spatial_only, SpatialSelector::attention_topk, false);
    add("spatial_sink_aware", Strategy::spatial_only, SpatialSelector::attention_topk_sink_aware, false);
    for (double k : naive_k_grid()) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "spatial_hard_prune_k%02d", static_cast<int>(k * 100 + 0.5));
        add(buf, Strategy::spatial_only, SpatialSelector::hard_prune_topk, false, k);
    }
    for (double k : naive_k_grid()) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "spatial_redistribution_k%02d", static_cast<int>(k * 100 + 0.5));
        add(buf, Strategy::spatial_only, SpatialSelector::attention_redistribution, false, k);
    }
    add("spatial_dpc_knn", Strategy::spatial_only, SpatialSelector::dpc_knn, false);
    add("temporal_spatial_attention_topk", Strategy::temporal_then_spatial, SpatialSelector::attention_topk, false);
    add("temporal_spatial_sink_aware", Strategy::temporal_then_spatial, SpatialSelector::attention_topk_sink_aware,
        true);

    std::vector<PruneResult> results(plan.size());
    for (std::size_t r = 0; r < plan.size(); ++r) {
        results[r] = run(grid, scores, plan[r].second);
    }
    const auto sink_set = identify_sink_set(selection_frequency(results.front()));

    std::vector<ComparisonRow> rows;
    for (std::size_t r = 0; r < plan.size(); ++r) {
        const SinkSurvival surv = sink_survival(results.front(), results[r], sink_set);
        ComparisonRow row{plan[r].first, plan[r].second, results[r].ledger, surv.kept_b, surv.reduction_pct, {}};
        if (truth != nullptr) {
            row.metrics = score(results[r], *truth);
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

inline std::string comparison_csv(const std::vector<ComparisonRow>& rows) {
    const bool with_metrics = !rows.empty() && rows.front().metrics.has_value();
    std::ostringstream out;
    out << "label,strategy,spatial_selector,k_pct,mu_s,mu_t,retention_ratio,budget,output,temporally_pruned,"
           "under_budget,sink_set_kept,sink_reduction_pct";
    if (with_metrics) {
        out << ",salient_recall,sink_retention,budget_waste";
    }
    out << '\n';
    char buf[64];
    auto num = [&](double v) {
        std::snprintf(buf, sizeof(buf), "%.10g", v);
        return std::string(buf);
    };
    for (const auto& r : rows) {
        out << r.label << ',' << to_string(r.config.strategy) << ',' << to_string(r.config.spatial_selector) << ','
            << num(r.config.k_pct) << ',' << num(r.config.mu_s) << ',' << num(r.config.mu_t) << ','
            << num(r.config.retention_ratio) << ',' << r.ledger.budget << ',' << r.ledger.output << ','
            << r.ledger.temporally_pruned << ',' << (r.ledger.under_budget ? 1 : 0) << ',' << r.sink_set_kept << ','
            << num(std::round(r.sink_reduction_pct * 10.0) / 10.0);
        if (with_metrics) {
            out << ',' << num(r.metrics->salient_recall) << ',' << num(r.metrics->sink_retention) << ','
                << num(r.metrics->budget_waste);
        }
        out << '\n';
    }
    return out.str();
}

}  // namespace sinkprune
