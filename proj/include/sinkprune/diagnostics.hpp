// Copyright (C) 2026 The sinkprune Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "sinkprune/core.hpp"
#include "sinkprune/pipeline.hpp"

namespace sinkprune {

/// How often each patch position was kept across frames.
struct FrequencyProfile {
    std::vector<std::size_t> counts;
    std::size_t total_selected = 0;
};

inline FrequencyProfile selection_frequency(const PruneResult& result) {
    FrequencyProfile p{std::vector<std::size_t>(result.patches, 0), 0};
    for (const auto& id : result.selection.kept) {
        detail::require(id.patch < result.patches, "kept index out of range");
        ++p.counts[id.patch];
        ++p.total_selected;
    }
    return p;
}

inline constexpr double kDefaultSinkSetFraction = 0.10;

/// The ceil(top_pct * patches) most frequently kept positions, ascending.
/// Count ties go to the lower patch index.
inline std::vector<std::size_t> identify_sink_set(const FrequencyProfile& profile,
                                                  double top_pct = kDefaultSinkSetFraction) {
    detail::require(top_pct > 0.0 && top_pct <= 1.0, "top_pct must be in (0, 1]");
    const std::size_t n = profile.counts.size();
    const auto m = std::min<std::size_t>(
        n, static_cast<std::size_t>(std::ceil(top_pct * static_cast<double>(n) - 1e-9)));
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) {
        order[i] = i;
    }
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return profile.counts[a] > profile.counts[b]; });
    order.resize(std::max<std::size_t>(m, n == 0 ? 0 : 1));
    std::sort(order.begin(), order.end());
    return order;
}

struct SinkSurvival {
    std::size_t kept_a = 0;  ///< kept occurrences of sink-set positions under result A
    std::size_t kept_b = 0;
    /// 100 * (kept_a - kept_b) / max(kept_a, kept_b); 0 when both are 0.
    double reduction_pct = 0.0;

    /// Reduction rounded to one decimal place, as reported.
    double reduction_pct_rounded() const { return std::round(reduction_pct * 10.0) / 10.0; }
};

inline SinkSurvival sink_survival(const PruneResult& a, const PruneResult& b, const std::vector<std::size_t>& sink_set) {
    detail::require(a.patches == b.patches, "results have different patch counts");
    std::vector<bool> in_set(a.patches, false);
    for (std::size_t i : sink_set) {
        detail::require(i < a.patches, "sink set index out of range");
        in_set[i] = true;
    }
    auto count = [&](const PruneResult& r) {
        return static_cast<std::size_t>(std::count_if(r.selection.kept.begin(), r.selection.kept.end(),
                                                       [&](const TokenId& id) { return in_set[id.patch]; }));
    };
    SinkSurvival s{count(a), count(b), 0.0};
    const std::size_t denom = std::max(s.kept_a, s.kept_b);
    if (denom > 0) {
        s.reduction_pct =
            100.0 * (static_cast<double>(s.kept_a) - static_cast<double>(s.kept_b)) / static_cast<double>(denom);
    }
    return s;
}

// ---------------------------------------------------------------------------
// Prefill cost model.

using BigInt = boost::multiprecision::cpp_int;

struct FlopsModel {
    std::size_t layers = 1;       ///< L
    std::size_t hidden = 1;       ///< d
    std::size_t ffn_hidden = 1;   ///< m
    std::size_t text_tokens = 0;  ///< n_q
};

struct FlopsBreakdown {
    BigInt projection;  ///< L * 4 n d^2
    BigInt attention;   ///< L * 2 n^2 d
    BigInt ffn;         ///< L * 2 n d m
    BigInt total;
};

/// Prefill FLOPs of L x (4nd^2 + 2n^2 d + 2ndm) with n = visual_tokens + n_q, exact.
inline FlopsBreakdown estimate_flops_breakdown(const FlopsModel& model, std::size_t visual_tokens) {
    detail::require(model.layers >= 1 && model.hidden >= 1 && model.ffn_hidden >= 1,
                    "layers, hidden and ffn_hidden must be >= 1");
    const BigInt n = BigInt(visual_tokens) + BigInt(model.text_tokens);
    const BigInt d(model.hidden);
    const BigInt m(model.ffn_hidden);
    const BigInt layers(model.layers);
    FlopsBreakdown f;
    f.projection = layers * 4 * n * d * d;
    f.attention = layers * 2 * n * n * d;
    f.ffn = layers * 2 * n * d * m;
    f.total = f.projection + f.attention + f.ffn;
    return f;
}

inline BigInt estimate_flops(const FlopsModel& model, std::size_t visual_tokens) {
    return estimate_flops_breakdown(model, visual_tokens).total;
}

// ---------------------------------------------------------------------------
// Heatmaps.

/// One block per frame: a "# frame=<t>" line followed by grid_h rows of
/// grid_w comma-separated values, printed with round-trip precision.
inline std::string export_heatmap(const FrameMatrix& scores, std::size_t grid_w, std::size_t grid_h) {
    detail::require(grid_w >= 1 && grid_h >= 1 && grid_w * grid_h == scores.patches(),
                    "heatmap export needs grid_w * grid_h == patches");
    std::ostringstream out;
    char buf[32];
    for (std::size_t t = 0; t < scores.frames(); ++t) {
        out << "# frame=" << t << '\n';
        for (std::size_t r = 0; r < grid_h; ++r) {
            for (std::size_t c = 0; c < grid_w; ++c) {
                std::snprintf(buf, sizeof(buf), "%.17g", scores.at(t, r * grid_w + c));
                out << (c == 0 ? "" : ",") << buf;
            }
            out << '\n';
        }
    }
    return out.str();
}

/// Inverse of export_heatmap; returns frames x (grid_w * grid_h) values.
inline FrameMatrix parse_heatmap(const std::string& csv, std::size_t grid_w, std::size_t grid_h) {
    std::istringstream in(csv);
    std::string line;
    std::vector<double> values;
    std::size_t frames = 0;
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        if (line.rfind("# frame=", 0) == 0) {
            detail::require(frames == 0 || rows == grid_h, "heatmap frame has the wrong number of rows");
            ++frames;
            rows = 0;
            continue;
        }
        detail::require(frames > 0, "heatmap row before any frame header");
        std::istringstream cells(line);
        std::string cell;
        std::size_t cols = 0;
        while (std::getline(cells, cell, ',')) {
            values.push_back(std::stod(cell));
            ++cols;
        }
        detail::require(cols == grid_w, "heatmap row has the wrong number of columns");
        ++rows;
    }
    detail::require(frames > 0 && rows == grid_h, "heatmap is truncated");
    return FrameMatrix(frames, grid_w * grid_h, std::move(values));
}

}  // namespace sinkprune
