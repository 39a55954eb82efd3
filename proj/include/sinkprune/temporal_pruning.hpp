// Copyright (C) 2026 The sinkprune Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cstddef>
#include <vector>

#include "sinkprune/core.hpp"
#include "sinkprune/parallel.hpp"

namespace sinkprune {

struct ClipSimilarity {
    std::size_t clip = 0;
    std::size_t patch = 0;
    double value = 0.0;  ///< product of adjacent-pair cosine similarities in the clip

    bool operator==(const ClipSimilarity&) const = default;
};

/// Tokens removed for temporal redundancy. Clip c spans frames
/// [c * clip_len, min((c + 1) * clip_len, frames)).
struct TemporalPruneSet {
    std::size_t frames = 0;
    std::size_t patches = 0;
    std::size_t clip_len = 0;
    std::vector<TokenId> pruned;             ///< ascending
    std::vector<ClipSimilarity> clip_sims;   ///< ascending by (clip, patch); clips of one frame are absent

    std::size_t clip_count() const { return clip_len == 0 ? 0 : (frames + clip_len - 1) / clip_len; }

    /// Flattened frames x patches mask, true where the token survives.
    std::vector<bool> survivors() const {
        std::vector<bool> alive(frames * patches, true);
        for (const auto& id : pruned) {
            alive[id.flat(patches)] = false;
        }
        return alive;
    }
};

/// Cosine similarity of patch i between frames t and t + 1.
inline double adjacent_similarity(const TokenGrid& grid, std::size_t t, std::size_t i) {
    detail::require(t + 1 < grid.frames(), "adjacent_similarity needs t < frames - 1");
    detail::require(i < grid.patches(), "patch index out of range");
    return cosine_similarity(grid.token(t, i), grid.token(t + 1, i));
}

namespace detail {

/// bonus[i] is the additive sink term mu_t * s_i (empty for the plain rule).
inline TemporalPruneSet clip_prune_impl(const TokenGrid& grid, double tau, std::size_t clip_len,
                                        const std::vector<double>& bonus, bool per_pair) {
    require(clip_len >= 2, "clip_len must be >= 2");
    require(tau > 0.0 && tau < 1.0, "tau must be in (0, 1)");
    const std::size_t n = grid.patches();

    TemporalPruneSet out{grid.frames(), n, clip_len, {}, {}};
    const std::size_t clips = out.clip_count();
    std::vector<std::vector<TokenId>> pruned(clips);
    std::vector<std::vector<ClipSimilarity>> sims(clips);

    parallel_for(clips, [&](std::size_t c) {
        const std::size_t first = c * clip_len;
        const std::size_t last = std::min(first + clip_len, grid.frames());
        if (last - first < 2) {
            return;
        }
        for (std::size_t i = 0; i < n; ++i) {
            const double extra = bonus.empty() ? 0.0 : bonus[i];
            double product = 1.0;
            double boosted = 1.0;
            bool eligible = true;
            for (std::size_t t = first; t + 1 < last; ++t) {
                const double sim = adjacent_similarity(grid, t, i);
                eligible = eligible && sim > 0.0;
                product *= sim;
                boosted *= sim + extra;
            }
            sims[c].push_back({c, i, product});
            const double tested = per_pair ? boosted : product + extra;
            if (eligible && tested > tau) {
                for (std::size_t t = first + 1; t < last; ++t) {
                    pruned[c].push_back({t, i});
                }
            }
        }
    });

    for (std::size_t c = 0; c < clips; ++c) {
        out.pruned.insert(out.pruned.end(), pruned[c].begin(), pruned[c].end());
        out.clip_sims.insert(out.clip_sims.end(), sims[c].begin(), sims[c].end());
    }
    std::sort(out.pruned.begin(), out.pruned.end());
    return out;
}

}  // namespace detail

/**
 * Redundancy pruning over consecutive clips of `clip_len` frames. For each clip
 * and patch the adjacent-frame cosine similarities are multiplied; if the product
 * exceeds `tau` every occurrence after the clip's first frame is pruned. A clip
 * with any non-positive similarity at a patch never prunes that patch.
 */
inline TemporalPruneSet clip_prune(const TokenGrid& grid, double tau, std::size_t clip_len) {
    return detail::clip_prune_impl(grid, tau, clip_len, {}, false);
}

/// Sink-aware variant: the test becomes product + mu_t * s_i > tau. With
/// `per_pair` the bonus is added to each adjacent similarity before the product.
inline TemporalPruneSet clip_prune_sttp(const TokenGrid& grid, const SinkScores& sink, double tau, double mu_t,
                                        std::size_t clip_len, bool per_pair = false) {
    detail::require(mu_t >= 0.0 && std::isfinite(mu_t), "mu_t must be >= 0");
    detail::require(sink.normalized.size() == grid.patches(), "sink scores length does not match patch count");
    std::vector<double> bonus(grid.patches());
    for (std::size_t i = 0; i < bonus.size(); ++i) {
        bonus[i] = mu_t * sink.normalized[i];
    }
    return detail::clip_prune_impl(grid, tau, clip_len, bonus, per_pair);
}

/// Replaces each clip representative (first frame) of a pruned run with the
/// mean of the run's occurrences. Other tokens are copied unchanged.
inline TokenGrid merge_temporal_runs(const TokenGrid& grid, const TemporalPruneSet& set) {
    detail::require(set.frames == grid.frames() && set.patches == grid.patches(), "prune set does not match grid");
    const std::size_t n = grid.patches();
    const std::size_t d = grid.dim();
    std::vector<double> data = grid.data();
    std::vector<std::size_t> run_len(grid.size(), 1);

    for (const auto& id : set.pruned) {
        const TokenId rep{(id.frame / set.clip_len) * set.clip_len, id.patch};
        double* dst = data.data() + rep.flat(n) * d;
        const auto src = grid.token(id);
        for (std::size_t c = 0; c < d; ++c) {
            dst[c] += src[c];
        }
        ++run_len[rep.flat(n)];
    }
    for (std::size_t flat = 0; flat < grid.size(); ++flat) {
        if (run_len[flat] > 1) {
            const double inv = 1.0 / static_cast<double>(run_len[flat]);
            for (std::size_t c = 0; c < d; ++c) {
                data[flat * d + c] *= inv;
            }
        }
    }
    return TokenGrid(grid.frames(), n, d, std::move(data), grid.grid_w(), grid.grid_h());
}

}  // namespace sinkprune
