// Copyright (C) 2026 The sinkprune Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "sinkprune/core.hpp"
#include "sinkprune/parallel.hpp"
#include "sinkprune/sink_score.hpp"
#include "sinkprune/spatial_pruning.hpp"
#include "sinkprune/temporal_pruning.hpp"

namespace sinkprune {

/// Per-stage token accounting. output = input - temporally_pruned - spatially_pruned.
struct PruneLedger {
    std::size_t input_tokens = 0;
    std::size_t budget = 0;
    std::size_t temporally_pruned = 0;
    std::size_t spatially_pruned = 0;
    std::size_t merged = 0;  ///< pruned tokens folded into a kept token
    std::size_t output = 0;
    bool under_budget = false;
    std::size_t hard_prune_refilled = 0;
    std::size_t redistribution_fallback_frames = 0;
    std::size_t unmerged_frames = 0;

    bool operator==(const PruneLedger&) const = default;

    bool reconciles() const { return output == input_tokens - temporally_pruned - spatially_pruned; }
};

struct PruneResult {
    std::size_t frames = 0;
    std::size_t patches = 0;
    TokenSelection selection;
    TemporalPruneSet temporal;
    PruneConfig config;
    PruneLedger ledger;
    SinkScores sink;
};

/// floor(r * total); the 1e-9 slack absorbs products like 0.29 * 100 landing just below an integer.
inline std::size_t token_budget(double retention_ratio, std::size_t total) {
    return static_cast<std::size_t>(std::floor(retention_ratio * static_cast<double>(total) + 1e-9));
}

/// floor(B / T) per frame, one extra for the first B mod T frames.
inline std::vector<std::size_t> round_robin_quotas(std::size_t budget, std::size_t frames) {
    std::vector<std::size_t> q(frames, budget / frames);
    for (std::size_t t = 0; t < budget % frames; ++t) {
        ++q[t];
    }
    return q;
}

/// Largest-remainder apportionment of `budget` proportional to `weights`.
/// Remainder ties go to the lower frame index. Requires budget <= sum(weights),
/// which keeps every quota within its weight.
inline std::vector<std::size_t> apportion_quotas(std::size_t budget, const std::vector<std::size_t>& weights) {
    const std::size_t total = std::accumulate(weights.begin(), weights.end(), std::size_t{0});
    detail::require(budget <= total, "budget exceeds the available tokens");
    std::vector<std::size_t> q(weights.size(), 0);
    if (budget == 0) {
        return q;
    }
    std::vector<std::size_t> rem(weights.size(), 0);
    std::size_t assigned = 0;
    for (std::size_t t = 0; t < weights.size(); ++t) {
        // Exact integer arithmetic; budget * weight stays far below 2^64 at video scale.
        q[t] = budget * weights[t] / total;
        rem[t] = budget * weights[t] % total;
        assigned += q[t];
    }
    std::vector<std::size_t> order(weights.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return rem[a] > rem[b]; });
    for (std::size_t r = 0; assigned < budget; ++r) {
        ++q[order[r]];
        ++assigned;
    }
    return q;
}

namespace detail {

inline void check_pipeline_inputs(const TokenGrid& grid, const AttentionScores& scores) {
    for (const auto& v : validate(grid, scores)) {
        // Frame mass is allowed the ingestion tolerance; everything else is fatal.
        if (v.kind != ViolationKind::frame_sum) {
            throw ValidationError(v.message);
        }
    }
}

}  // namespace detail

/**
 * @brief Prunes a video's visual tokens down to floor(r * frames * patches).
 *
 * Sink scores are computed once from the full attention. For
 * `temporal_then_spatial` the clip-based temporal stage (sink-aware when
 * `sink_aware_temporal` is set) runs first and the budget is spread over frames
 * in proportion to their surviving tokens; `spatial_only` spreads it evenly.
 * The configured selector then picks each frame's quota among its survivors.
 * If the temporal stage leaves fewer tokens than the budget, all survivors are
 * kept and the ledger is flagged under-budget.
 */
inline PruneResult run(const TokenGrid& grid, const AttentionScores& scores, const PruneConfig& config) {
    config.validate();
    detail::check_pipeline_inputs(grid, scores);
    const std::size_t frames = grid.frames();
    const std::size_t n = grid.patches();
    const std::size_t budget = token_budget(config.retention_ratio, grid.size());
    detail::require(budget >= 1, "retention ratio leaves a budget of zero tokens");

    PruneResult result;
    result.frames = frames;
    result.patches = n;
    result.config = config;
    result.sink = sink_scores(scores, config.w);

    if (config.strategy == Strategy::temporal_then_spatial) {
        result.temporal = config.sink_aware_temporal
                              ? clip_prune_sttp(grid, result.sink, config.tau, config.mu_t, config.clip_len,
                                                config.sttp_per_pair)
                              : clip_prune(grid, config.tau, config.clip_len);
    } else {
        result.temporal = TemporalPruneSet{frames, n, config.clip_len, {}, {}};
    }
    const TokenGrid merged_grid = config.merge_temporal_runs && !result.temporal.pruned.empty()
                                      ? merge_temporal_runs(grid, result.temporal)
                                      : TokenGrid{};
    const TokenGrid& work_grid = merged_grid.size() > 0 ? merged_grid : grid;

    const std::vector<bool> alive = result.temporal.survivors();
    std::vector<std::vector<std::size_t>> candidates(frames);
    std::vector<std::size_t> survivors(frames, 0);
    for (std::size_t t = 0; t < frames; ++t) {
        for (std::size_t i = 0; i < n; ++i) {
            if (alive[t * n + i]) {
                candidates[t].push_back(i);
            }
        }
        survivors[t] = candidates[t].size();
    }
    const std::size_t total_survivors = std::accumulate(survivors.begin(), survivors.end(), std::size_t{0});

    PruneLedger& ledger = result.ledger;
    ledger.input_tokens = grid.size();
    ledger.budget = budget;
    ledger.temporally_pruned = result.temporal.pruned.size();

    std::vector<std::vector<std::size_t>> chosen(frames);
    std::vector<std::size_t> refilled(frames, 0);
    std::vector<char> fallback(frames, 0);
    if (total_survivors <= budget) {
        chosen = candidates;
        ledger.under_budget = total_survivors < budget;
    } else {
        const std::vector<std::size_t> quotas = config.strategy == Strategy::spatial_only
                                                    ? round_robin_quotas(budget, frames)
                                                    : apportion_quotas(budget, survivors);
        const AdjustedScores adjusted = config.spatial_selector == SpatialSelector::attention_topk_sink_aware
                                            ? adjust_stsp(scores, result.sink, config.mu_s)
                                            : AdjustedScores{};
        parallel_for(frames, [&](std::size_t t) {
            const std::size_t quota = quotas[t];
            switch (config.spatial_selector) {
                case SpatialSelector::attention_topk:
                    chosen[t] = select_topk_frame(scores.frame(t), candidates[t], quota);
                    break;
                case SpatialSelector::attention_topk_sink_aware:
                    chosen[t] = select_topk_frame(adjusted.frame(t), candidates[t], quota);
                    break;
                case SpatialSelector::hard_prune_topk:
                    chosen[t] = hard_prune_frame(scores.frame(t), candidates[t], config.k_pct, quota, true, &refilled[t]);
                    break;
                case SpatialSelector::attention_redistribution: {
                    std::vector<double> frame(scores.frame(t).begin(), scores.frame(t).end());
                    fallback[t] = redistribute_frame(frame, candidates[t], config.k_pct) ? 1 : 0;
                    chosen[t] = select_topk_frame(frame, candidates[t], quota);
                    break;
                }
                case SpatialSelector::dpc_knn:
                    chosen[t] = quota == 0 ? std::vector<std::size_t>{}
                                           : dpc_knn_frame(work_grid, t, candidates[t], quota, config.knn);
                    break;
            }
        });
    }

    TokenSelection& sel = result.selection;
    sel.budget = budget;
    for (std::size_t t = 0; t < frames; ++t) {
        for (std::size_t i : chosen[t]) {
            sel.kept.push_back({t, i});
        }
        ledger.hard_prune_refilled += refilled[t];
        ledger.redistribution_fallback_frames += static_cast<std::size_t>(fallback[t]);
    }
    ledger.output = sel.kept.size();
    ledger.spatially_pruned = total_survivors - ledger.output;

    if (config.merge_pruned) {
        MergeOptions opts;
        opts.mergeable = alive;
        opts.skip_frames_without_kept = true;
        for (const auto& id : sel.kept) {
            opts.mergeable[id.flat(n)] = false;
        }
        sel = merge_pruned(work_grid, std::move(sel), opts);
        for (const auto& m : sel.merges) {
            ledger.merged += m.sources.size();
        }
        for (std::size_t t = 0; t < frames; ++t) {
            if (chosen[t].empty() && survivors[t] > 0) {
                ++ledger.unmerged_frames;
            }
        }
    }
    return result;
}

// ---------------------------------------------------------------------------
// Parameter sweeps.

/// Named parameter and the values to try, e.g. {"mu_s", {0.01, 0.02}}.
using ParamAxis = std::pair<std::string, std::vector<double>>;
using ParamGrid = std::vector<ParamAxis>;

struct SweepPoint {
    std::vector<std::pair<std::string, double>> params;
    PruneResult result;
    double objective = 0.0;  ///< filled by greedy sweeps only
};

inline void apply_param(PruneConfig& cfg, const std::string& name, double value) {
    auto as_count = [&](std::size_t& dst) {
        detail::require(value >= 0.0 && std::floor(value) == value, name + " must be a non-negative integer");
        dst = static_cast<std::size_t>(value);
    };
    if (name == "mu_s") {
        cfg.mu_s = value;
    } else if (name == "mu_t") {
        cfg.mu_t = value;
    } else if (name == "w") {
        cfg.w = value;
    } else if (name == "tau") {
        cfg.tau = value;
    } else if (name == "retention_ratio") {
        cfg.retention_ratio = value;
    } else if (name == "k_pct") {
        cfg.k_pct = value;
    } else if (name == "clip_len") {
        as_count(cfg.clip_len);
    } else if (name == "knn") {
        as_count(cfg.knn);
    } else {
        throw ValidationError("unknown sweep parameter '" + name + "'");
    }
}

namespace detail {

inline ParamGrid normalized_grid(ParamGrid grid) {
    require(!grid.empty(), "sweep grid is empty");
    for (auto& [name, values] : grid) {
        require(!values.empty(), "sweep axis '" + name + "' has no values");
        std::sort(values.begin(), values.end());
        values.erase(std::unique(values.begin(), values.end()), values.end());
    }
    return grid;
}

}  // namespace detail

/// Cartesian sweep. Axis values are sorted ascending and points are ordered
/// lexicographically by the value tuple, axes in the given order.
inline std::vector<SweepPoint> sweep(const TokenGrid& grid, const AttentionScores& scores, const PruneConfig& base,
                                     ParamGrid param_grid) {
    param_grid = detail::normalized_grid(std::move(param_grid));
    std::size_t count = 1;
    for (const auto& axis : param_grid) {
        count *= axis.second.size();
    }

    std::vector<SweepPoint> points(count);
    for (std::size_t p = 0; p < count; ++p) {
        std::size_t rest = p;
        auto& params = points[p].params;
        params.resize(param_grid.size());
        for (std::size_t a = param_grid.size(); a-- > 0;) {
            const auto& values = param_grid[a].second;
            params[a] = {param_grid[a].first, values[rest % values.size()]};
            rest /= values.size();
        }
    }
    parallel_for(count, [&](std::size_t p) {
        PruneConfig cfg = base;
        for (const auto& [name, value] : points[p].params) {
            apply_param(cfg, name, value);
        }
        points[p].result = run(grid, scores, cfg);
    });
    return points;
}

/// Coordinate-wise greedy search: each axis in turn is swept with the others
/// held at their best value so far; ties keep the smaller value. Every
/// evaluated point is returned in evaluation order.
inline std::vector<SweepPoint> greedy_sweep(const TokenGrid& grid, const AttentionScores& scores, const PruneConfig& base,
                                            ParamGrid param_grid,
                                            const std::function<double(const PruneResult&)>& objective) {
    param_grid = detail::normalized_grid(std::move(param_grid));
    detail::require(static_cast<bool>(objective), "greedy sweep needs an objective");
    std::vector<double> best(param_grid.size());
    for (std::size_t a = 0; a < param_grid.size(); ++a) {
        best[a] = param_grid[a].second.front();
    }

    std::vector<SweepPoint> evaluated;
    for (std::size_t a = 0; a < param_grid.size(); ++a) {
        const auto& values = param_grid[a].second;
        std::vector<SweepPoint> axis_points(values.size());
        parallel_for(values.size(), [&](std::size_t v) {
            PruneConfig cfg = base;
            auto& pt = axis_points[v];
            for (std::size_t b = 0; b < param_grid.size(); ++b) {
                const double value = b == a ? values[v] : best[b];
                pt.params.emplace_back(param_grid[b].first, value);
                apply_param(cfg, param_grid[b].first, value);
            }
            pt.result = run(grid, scores, cfg);
            pt.objective = objective(pt.result);
        });
        std::size_t arg = 0;
        for (std::size_t v = 1; v < values.size(); ++v) {
            if (axis_points[v].objective > axis_points[arg].objective) {
                arg = v;
            }
        }
        best[a] = values[arg];
        for (auto& pt : axis_points) {
            evaluated.push_back(std::move(pt));
        }
    }
    return evaluated;
}

}  // namespace sinkprune
