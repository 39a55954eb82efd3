// Copyright (C) 2026 The sinkprune Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "sinkprune/core.hpp"

namespace sinkprune {

inline constexpr double kDefaultSinkExponent = 1.1;

/// Sum of each position's attention over all frames, ascending frame order.
inline std::vector<double> accumulate_attention(const AttentionScores& scores) {
    std::vector<double> raw(scores.patches(), 0.0);
    for (std::size_t t = 0; t < scores.frames(); ++t) {
        const auto frame = scores.frame(t);
        for (std::size_t i = 0; i < raw.size(); ++i) {
            raw[i] += frame[i];
        }
    }
    return raw;
}

/// Min-max normalization of raw^w. The power is applied first. A constant
/// profile carries no sink evidence and maps to all zeros.
inline SinkScores normalize_sink(std::vector<double> raw, double w) {
    detail::require(w > 0.0 && std::isfinite(w), "sink exponent w must be > 0");
    detail::require(!raw.empty(), "sink normalization needs at least one position");
    std::vector<double> powered(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        detail::require(raw[i] >= 0.0 && std::isfinite(raw[i]), "raw sink values must be finite and >= 0");
        powered[i] = std::pow(raw[i], w);
    }
    const auto [lo_it, hi_it] = std::minmax_element(powered.begin(), powered.end());
    const double lo = *lo_it;
    const double range = *hi_it - lo;

    std::vector<double> normalized(raw.size(), 0.0);
    if (range > 0.0) {
        for (std::size_t i = 0; i < raw.size(); ++i) {
            normalized[i] = (powered[i] - lo) / range;
        }
    }
    return SinkScores{std::move(raw), std::move(normalized), w};
}

/// Per-position sink score over the whole video.
inline SinkScores sink_scores(const AttentionScores& scores, double w = kDefaultSinkExponent) {
    return normalize_sink(accumulate_attention(scores), w);
}

}  // namespace sinkprune
