// Copyright (C) 2026 The sinkprune Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "sinkprune/core.hpp"
#include "sinkprune/parallel.hpp"

namespace sinkprune {

/// Scores after a selector-specific adjustment. Values may be negative.
class AdjustedScores : public FrameMatrix {
public:
    AdjustedScores() = default;
    AdjustedScores(std::size_t frames, std::size_t patches, std::vector<double> values, std::string provenance)
        : FrameMatrix(frames, patches, std::move(values)), m_provenance(std::move(provenance)) {}

    const std::string& provenance() const { return m_provenance; }

private:
    std::string m_provenance;
};

/// Sink-aware spatial adjustment: A[t][i] - mu_s * s[i], same penalty in every frame.
inline AdjustedScores adjust_stsp(const AttentionScores& scores, const SinkScores& sink, double mu_s) {
    detail::require(mu_s >= 0.0 && std::isfinite(mu_s), "mu_s must be >= 0");
    detail::require(sink.normalized.size() == scores.patches(), "sink scores length does not match patch count");
    std::vector<double> adjusted(scores.values().size());
    for (std::size_t t = 0; t < scores.frames(); ++t) {
        for (std::size_t i = 0; i < scores.patches(); ++i) {
            adjusted[t * scores.patches() + i] = scores.at(t, i) - mu_s * sink.normalized[i];
        }
    }
    return AdjustedScores(scores.frames(), scores.patches(), std::move(adjusted), "attention_topk_sink_aware");
}

namespace detail {

/// Candidates ordered by descending score, ties by ascending patch index.
inline std::vector<std::size_t> rank_desc(std::span<const double> scores, std::vector<std::size_t> candidates) {
    std::sort(candidates.begin(), candidates.end(), [&](std::size_t a, std::size_t b) {
        if (scores[a] != scores[b]) {
            return scores[a] > scores[b];
        }
        return a < b;
    });
    return candidates;
}

inline std::vector<std::size_t> all_patches(std::size_t n) {
    std::vector<std::size_t> v(n);
    std::iota(v.begin(), v.end(), std::size_t{0});
    return v;
}

inline std::vector<std::size_t> take_sorted(const std::vector<std::size_t>& ranked, std::size_t k) {
    std::vector<std::size_t> out(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(k));
    std::sort(out.begin(), out.end());
    return out;
}

inline void check_k(std::size_t k, std::size_t patches) {
    require(k >= 1 && k <= patches, "k_per_frame must be in [1, patches]");
}

inline void check_k_pct(double k_pct) { require(k_pct > 0.0 && k_pct < 0.5, "k_pct must be in (0, 0.5)"); }

}  // namespace detail

/// Number of top-attention tokens treated as suspect: ceil(k_pct * n), at least 1.
/// A 1e-9 slack keeps products such as 0.15 * 20 from rounding up past the exact value.
inline std::size_t top_fraction_count(double k_pct, std::size_t n) {
    const auto c = static_cast<std::size_t>(std::ceil(k_pct * static_cast<double>(n) - 1e-9));
    return std::clamp<std::size_t>(c, 1, n);
}

/// Top-k patch indices of one frame among `candidates`, ascending.
inline std::vector<std::size_t> select_topk_frame(std::span<const double> frame, std::vector<std::size_t> candidates,
                                                  std::size_t k) {
    detail::require(k <= candidates.size(), "k exceeds the number of candidate tokens");
    return detail::take_sorted(detail::rank_desc(frame, std::move(candidates)), k);
}

inline TokenSelection select_topk(const FrameMatrix& scores, std::size_t k_per_frame) {
    detail::check_k(k_per_frame, scores.patches());
    TokenSelection sel;
    sel.budget = k_per_frame * scores.frames();
    sel.kept.reserve(sel.budget);
    for (std::size_t t = 0; t < scores.frames(); ++t) {
        for (std::size_t i : select_topk_frame(scores.frame(t), detail::all_patches(scores.patches()), k_per_frame)) {
            sel.kept.push_back({t, i});
        }
    }
    return sel;
}

/// Hard pruning for one frame: drop the top ceil(k_pct * |candidates|) tokens,
/// then take the k best of the remainder. When `refill` is set and the
/// remainder is too small, dropped tokens are taken back in attention order
/// and counted in `*refilled`.
inline std::vector<std::size_t> hard_prune_frame(std::span<const double> frame, std::vector<std::size_t> candidates,
                                                 double k_pct, std::size_t k, bool refill = false,
                                                 std::size_t* refilled = nullptr) {
    detail::require(k <= candidates.size(), "k exceeds the number of candidate tokens");
    if (candidates.empty()) {
        return {};
    }
    const auto ranked = detail::rank_desc(frame, std::move(candidates));
    const std::size_t discard = top_fraction_count(k_pct, ranked.size());
    const std::size_t remainder = ranked.size() - discard;
    if (k <= remainder) {
        std::vector<std::size_t> out(ranked.begin() + static_cast<std::ptrdiff_t>(discard),
                                     ranked.begin() + static_cast<std::ptrdiff_t>(discard + k));
        std::sort(out.begin(), out.end());
        return out;
    }
    detail::require(refill, "hard pruning leaves " + std::to_string(remainder) + " tokens, fewer than k = " +
                                std::to_string(k));
    std::vector<std::size_t> out(ranked.begin() + static_cast<std::ptrdiff_t>(discard), ranked.end());
    const std::size_t extra = k - remainder;
    out.insert(out.end(), ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(extra));
    if (refilled != nullptr) {
        *refilled += extra;
    }
    std::sort(out.begin(), out.end());
    return out;
}

inline TokenSelection hard_prune_topk(const AttentionScores& scores, double k_pct, std::size_t k_per_frame) {
    detail::check_k_pct(k_pct);
    detail::check_k(k_per_frame, scores.patches());
    TokenSelection sel;
    sel.budget = k_per_frame * scores.frames();
    for (std::size_t t = 0; t < scores.frames(); ++t) {
        for (std::size_t i : hard_prune_frame(scores.frame(t), detail::all_patches(scores.patches()), k_pct, k_per_frame)) {
            sel.kept.push_back({t, i});
        }
    }
    return sel;
}

/// Moves the mass of the top ceil(k_pct * |candidates|) tokens onto the other
/// candidates in proportion to their scores. Returns true when the others
/// carry no mass and share it uniformly instead.
inline bool redistribute_frame(std::span<double> frame, const std::vector<std::size_t>& candidates, double k_pct) {
    if (candidates.size() < 2) {
        return false;
    }
    const auto ranked = detail::rank_desc(frame, candidates);
    const std::size_t top = std::min(top_fraction_count(k_pct, ranked.size()), ranked.size() - 1);

    double total = 0.0;
    for (std::size_t i : candidates) {
        total += frame[i];
    }
    double rest = 0.0;
    for (std::size_t r = top; r < ranked.size(); ++r) {
        rest += frame[ranked[r]];
    }
    for (std::size_t r = 0; r < top; ++r) {
        frame[ranked[r]] = 0.0;
    }
    const std::size_t survivors = ranked.size() - top;
    if (rest > 0.0) {
        const double scale = total / rest;
        for (std::size_t r = top; r < ranked.size(); ++r) {
            frame[ranked[r]] *= scale;
        }
        return false;
    }
    for (std::size_t r = top; r < ranked.size(); ++r) {
        frame[ranked[r]] = total / static_cast<double>(survivors);
    }
    return true;
}

struct RedistributionResult {
    AttentionScores scores;
    /// Frames whose remaining tokens had zero mass and received a uniform share.
    std::vector<std::size_t> uniform_fallback_frames;
};

inline RedistributionResult attention_redistribution(const AttentionScores& scores, double k_pct) {
    detail::check_k_pct(k_pct);
    std::vector<double> values = scores.values();
    RedistributionResult out;
    const auto candidates = detail::all_patches(scores.patches());
    for (std::size_t t = 0; t < scores.frames(); ++t) {
        std::span<double> frame(values.data() + t * scores.patches(), scores.patches());
        if (redistribute_frame(frame, candidates, k_pct)) {
            out.uniform_fallback_frames.push_back(t);
        }
    }
    out.scores = AttentionScores(scores.frames(), scores.patches(), std::move(values), scores.renormalized());
    return out;
}

// ---------------------------------------------------------------------------
// Density peaks clustering with k nearest neighbours (feature based).

struct DpcScores {
    std::vector<double> density;     ///< rho: exp(-mean squared distance to the knn nearest)
    std::vector<double> separation;  ///< delta: distance to the nearest denser token
    std::vector<double> score;       ///< rho * delta
};

/// DPC-KNN scores for the tokens `candidates` of frame `t`, indexed like `candidates`.
/// Density ties are ordered by lower patch index, so exactly one token (the
/// global peak) takes the maximum distance as its separation.
inline DpcScores dpc_knn_scores(const TokenGrid& grid, std::size_t t, const std::vector<std::size_t>& candidates,
                                std::size_t knn) {
    const std::size_t n = candidates.size();
    DpcScores out{std::vector<double>(n), std::vector<double>(n), std::vector<double>(n)};
    if (n == 0) {
        return out;
    }
    const std::size_t neighbours = std::min(knn, n - 1);

    std::vector<double> dist(n * n, 0.0);
    for (std::size_t a = 0; a < n; ++a) {
        const auto xa = grid.token(t, candidates[a]);
        for (std::size_t b = a + 1; b < n; ++b) {
            const auto xb = grid.token(t, candidates[b]);
            double sq = 0.0;
            for (std::size_t c = 0; c < xa.size(); ++c) {
                const double diff = xa[c] - xb[c];
                sq += diff * diff;
            }
            dist[a * n + b] = dist[b * n + a] = std::sqrt(sq);
        }
    }

    std::vector<double> row;
    for (std::size_t a = 0; a < n; ++a) {
        row.clear();
        for (std::size_t b = 0; b < n; ++b) {
            if (b != a) {
                row.push_back(dist[a * n + b]);
            }
        }
        std::partial_sort(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(neighbours), row.end());
        double mean_sq = 0.0;
        for (std::size_t r = 0; r < neighbours; ++r) {
            mean_sq += row[r] * row[r];
        }
        out.density[a] = neighbours == 0 ? 1.0 : std::exp(-mean_sq / static_cast<double>(neighbours));
    }

    auto denser = [&](std::size_t b, std::size_t a) {
        return out.density[b] > out.density[a] || (out.density[b] == out.density[a] && candidates[b] < candidates[a]);
    };
    for (std::size_t a = 0; a < n; ++a) {
        double nearest = std::numeric_limits<double>::infinity();
        double farthest = 0.0;
        for (std::size_t b = 0; b < n; ++b) {
            if (b == a) {
                continue;
            }
            farthest = std::max(farthest, dist[a * n + b]);
            if (denser(b, a)) {
                nearest = std::min(nearest, dist[a * n + b]);
            }
        }
        out.separation[a] = std::isinf(nearest) ? farthest : nearest;
        out.score[a] = out.density[a] * out.separation[a];
    }
    return out;
}

/// Top-k by DPC-KNN score for one frame among `candidates`, ascending.
inline std::vector<std::size_t> dpc_knn_frame(const TokenGrid& grid, std::size_t t,
                                              const std::vector<std::size_t>& candidates, std::size_t k,
                                              std::size_t knn) {
    detail::require(k <= candidates.size(), "k exceeds the number of candidate tokens");
    const DpcScores dpc = dpc_knn_scores(grid, t, candidates, knn);
    std::vector<std::size_t> order(candidates.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (dpc.score[a] != dpc.score[b]) {
            return dpc.score[a] > dpc.score[b];
        }
        return candidates[a] < candidates[b];
    });
    std::vector<std::size_t> out;
    out.reserve(k);
    for (std::size_t r = 0; r < k; ++r) {
        out.push_back(candidates[order[r]]);
    }
    std::sort(out.begin(), out.end());
    return out;
}

inline TokenSelection dpc_knn_select(const TokenGrid& grid, std::size_t k_per_frame, std::size_t knn) {
    detail::check_k(k_per_frame, grid.patches());
    detail::require(knn >= 1 && knn < grid.patches(), "knn must be in [1, patches)");
    std::vector<std::vector<std::size_t>> per_frame(grid.frames());
    const auto candidates = detail::all_patches(grid.patches());
    parallel_for(grid.frames(), [&](std::size_t t) { per_frame[t] = dpc_knn_frame(grid, t, candidates, k_per_frame, knn); });

    TokenSelection sel;
    sel.budget = k_per_frame * grid.frames();
    for (std::size_t t = 0; t < grid.frames(); ++t) {
        for (std::size_t i : per_frame[t]) {
            sel.kept.push_back({t, i});
        }
    }
    return sel;
}

// ---------------------------------------------------------------------------
// Contextual merging.

struct MergeOptions {
    /// Flattened frames x patches mask of tokens allowed to be merged away.
    /// Empty means every token that is not kept.
    std::vector<bool> mergeable;
    /// Leave frames with no kept token unmerged instead of failing.
    bool skip_frames_without_kept = false;
};

/**
 * Folds pruned tokens into the kept ones. Each pruned token joins the kept token
 * of the same frame it is most cosine-similar to (ties by lower patch index), and
 * every kept token becomes the mean of itself and its sources. The kept set is
 * unchanged; only `merges` and `merged_embeddings` are filled.
 */
inline TokenSelection merge_pruned(const TokenGrid& grid, TokenSelection sel, const MergeOptions& opts = {}) {
    const std::size_t n = grid.patches();
    const std::size_t d = grid.dim();
    detail::require(opts.mergeable.empty() || opts.mergeable.size() == grid.size(), "mergeable mask size mismatch");
    std::sort(sel.kept.begin(), sel.kept.end());
    std::vector<bool> is_kept(grid.size(), false);
    for (const auto& id : sel.kept) {
        detail::require(id.frame < grid.frames() && id.patch < n, "selection index out of range");
        is_kept[id.flat(n)] = true;
    }

    sel.merges.clear();
    sel.merged_embeddings.assign(sel.kept.size() * d, 0.0);
    std::size_t begin = 0;
    for (std::size_t t = 0; t < grid.frames(); ++t) {
        std::size_t end = begin;
        while (end < sel.kept.size() && sel.kept[end].frame == t) {
            ++end;
        }
        std::vector<std::vector<TokenId>> sources(end - begin);
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t flat = t * n + i;
            if (is_kept[flat] || (!opts.mergeable.empty() && !opts.mergeable[flat])) {
                continue;
            }
            if (begin == end) {
                detail::require(opts.skip_frames_without_kept,
                                "frame " + std::to_string(t) + " has pruned tokens but no kept token to merge into");
                break;
            }
            std::size_t best = begin;
            double best_sim = -std::numeric_limits<double>::infinity();
            for (std::size_t r = begin; r < end; ++r) {
                const double sim = cosine_similarity(grid.token(t, i), grid.token(sel.kept[r]));
                if (sim > best_sim) {
                    best_sim = sim;
                    best = r;
                }
            }
            sources[best - begin].push_back({t, i});
        }
        for (std::size_t r = begin; r < end; ++r) {
            double* out = sel.merged_embeddings.data() + r * d;
            const auto self = grid.token(sel.kept[r]);
            std::copy(self.begin(), self.end(), out);
            const auto& src = sources[r - begin];
            if (src.empty()) {
                continue;
            }
            for (const auto& s : src) {
                const auto x = grid.token(s);
                for (std::size_t c = 0; c < d; ++c) {
                    out[c] += x[c];
                }
            }
            const double inv = 1.0 / static_cast<double>(src.size() + 1);
            for (std::size_t c = 0; c < d; ++c) {
                out[c] *= inv;
            }
            sel.merges.push_back({sel.kept[r], src});
        }
        begin = end;
    }
    return sel;
}

}  // namespace sinkprune
