// Copyright (C) 2026 The sinkprune Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace sinkprune {

/// Raised when inputs violate a shape, range or precondition contract.
struct ValidationError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Raised on file-system or file-format failures.
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {

inline void require(bool cond, const std::string& msg) {
    if (!cond) {
        throw ValidationError(msg);
    }
}

}  // namespace detail

/// A (frame, patch) coordinate. Ordering is frame-major, which matches the
/// flattened id `frame * patches + patch` used in every file and report.
struct TokenId {
    std::size_t frame = 0;
    std::size_t patch = 0;

    auto operator<=>(const TokenId&) const = default;

    std::size_t flat(std::size_t patches) const { return frame * patches + patch; }
};

/// Visual token embeddings laid out as frames x patches x dim, row-major.
class TokenGrid {
public:
    TokenGrid() = default;

    TokenGrid(std::size_t frames, std::size_t patches, std::size_t dim, std::vector<double> data,
              std::optional<std::size_t> grid_w = std::nullopt, std::optional<std::size_t> grid_h = std::nullopt)
        : m_frames(frames), m_patches(patches), m_dim(dim), m_data(std::move(data)), m_grid_w(grid_w),
          m_grid_h(grid_h) {
        detail::require(frames >= 1 && patches >= 1 && dim >= 1, "TokenGrid: frames, patches and dim must be >= 1");
        detail::require(m_data.size() == frames * patches * dim, "TokenGrid: data size does not match shape");
        detail::require(grid_w.has_value() == grid_h.has_value(), "TokenGrid: grid_w and grid_h must be given together");
    }

    std::size_t frames() const { return m_frames; }
    std::size_t patches() const { return m_patches; }
    std::size_t dim() const { return m_dim; }
    std::size_t size() const { return m_frames * m_patches; }

    std::optional<std::size_t> grid_w() const { return m_grid_w; }
    std::optional<std::size_t> grid_h() const { return m_grid_h; }

    std::span<const double> token(std::size_t frame, std::size_t patch) const {
        return {m_data.data() + (frame * m_patches + patch) * m_dim, m_dim};
    }
    std::span<const double> token(TokenId id) const { return token(id.frame, id.patch); }

    const std::vector<double>& data() const { return m_data; }

private:
    std::size_t m_frames = 0;
    std::size_t m_patches = 0;
    std::size_t m_dim = 0;
    std::vector<double> m_data;
    std::optional<std::size_t> m_grid_w;
    std::optional<std::size_t> m_grid_h;
};

/// Per-head query/key tensors, heads x frames x patches x head_dim.
struct QueryKey {
    std::size_t heads = 0;
    std::size_t frames = 0;
    std::size_t patches = 0;
    std::size_t head_dim = 0;
    std::vector<double> q;
    std::vector<double> k;

    std::size_t offset(std::size_t h, std::size_t t, std::size_t i) const {
        return ((h * frames + t) * patches + i) * head_dim;
    }
};

/// A dense frames x patches matrix of per-token values.
class FrameMatrix {
public:
    FrameMatrix() = default;
    FrameMatrix(std::size_t frames, std::size_t patches, std::vector<double> values)
        : m_frames(frames), m_patches(patches), m_values(std::move(values)) {
        detail::require(frames >= 1 && patches >= 1, "frame matrix needs at least one frame and one patch");
        detail::require(m_values.size() == frames * patches, "frame matrix data size does not match shape");
    }

    std::size_t frames() const { return m_frames; }
    std::size_t patches() const { return m_patches; }

    double at(std::size_t frame, std::size_t patch) const { return m_values[frame * m_patches + patch]; }
    double at(TokenId id) const { return at(id.frame, id.patch); }

    std::span<const double> frame(std::size_t t) const { return {m_values.data() + t * m_patches, m_patches}; }
    const std::vector<double>& values() const { return m_values; }

protected:
    std::size_t m_frames = 0;
    std::size_t m_patches = 0;
    std::vector<double> m_values;
};

/// Per-frame token importance in [0, 1]; each frame sums to 1.
class AttentionScores : public FrameMatrix {
public:
    AttentionScores() = default;
    AttentionScores(std::size_t frames, std::size_t patches, std::vector<double> values, bool renormalized = false)
        : FrameMatrix(frames, patches, std::move(values)), m_renormalized(renormalized) {}

    /// True when ingestion had to rescale frames to unit mass.
    bool renormalized() const { return m_renormalized; }

private:
    bool m_renormalized = false;
};

struct SinkScores {
    std::vector<double> raw;         ///< per-position sum of attention over frames
    std::vector<double> normalized;  ///< min-max normalized raw^w, in [0, 1]
    double w = 1.1;
};

struct MergeRecord {
    TokenId target;
    std::vector<TokenId> sources;

    bool operator==(const MergeRecord&) const = default;
};

/// Retained tokens, ascending by (frame, patch).
struct TokenSelection {
    std::vector<TokenId> kept;
    std::vector<MergeRecord> merges;
    /// Row per kept token (same order as `kept`), filled only by merging.
    std::vector<double> merged_embeddings;
    std::size_t budget = 0;
};

enum class Strategy { spatial_only, temporal_then_spatial };

enum class SpatialSelector { attention_topk, attention_topk_sink_aware, hard_prune_topk, attention_redistribution, dpc_knn };

inline std::string_view to_string(Strategy s) {
    switch (s) {
        case Strategy::spatial_only:
            return "spatial_only";
        case Strategy::temporal_then_spatial:
            return "temporal_then_spatial";
    }
    return "?";
}

inline std::string_view to_string(SpatialSelector s) {
    switch (s) {
        case SpatialSelector::attention_topk:
            return "attention_topk";
        case SpatialSelector::attention_topk_sink_aware:
            return "attention_topk_sink_aware";
        case SpatialSelector::hard_prune_topk:
            return "hard_prune_topk";
        case SpatialSelector::attention_redistribution:
            return "attention_redistribution";
        case SpatialSelector::dpc_knn:
            return "dpc_knn";
    }
    return "?";
}

inline Strategy parse_strategy(std::string_view name) {
    for (auto s : {Strategy::spatial_only, Strategy::temporal_then_spatial}) {
        if (to_string(s) == name) {
            return s;
        }
    }
    throw ValidationError("unknown strategy '" + std::string(name) + "'");
}

inline SpatialSelector parse_selector(std::string_view name) {
    for (auto s : {SpatialSelector::attention_topk, SpatialSelector::attention_topk_sink_aware,
                   SpatialSelector::hard_prune_topk, SpatialSelector::attention_redistribution,
                   SpatialSelector::dpc_knn}) {
        if (to_string(s) == name) {
            return s;
        }
    }
    throw ValidationError("unknown spatial selector '" + std::string(name) + "'");
}

struct PruneConfig {
    double retention_ratio = 0.1;
    double mu_s = 0.3;
    double mu_t = 0.07;
    double w = 1.1;
    double tau = 0.9;
    std::size_t clip_len = 4;
    Strategy strategy = Strategy::spatial_only;
    SpatialSelector spatial_selector = SpatialSelector::attention_topk_sink_aware;
    bool merge_pruned = false;
    bool sink_aware_temporal = true;
    /// Only used by hard_prune_topk and attention_redistribution.
    double k_pct = 0.1;
    /// Neighbour count for dpc_knn.
    std::size_t knn = 5;
    /// Apply the temporal sink bonus to each adjacent pair instead of the clip aggregate.
    bool sttp_per_pair = false;
    /// Fold temporally pruned occurrences into their clip representative.
    bool merge_temporal_runs = false;

    bool operator==(const PruneConfig&) const = default;

    void validate() const {
        detail::require(retention_ratio > 0.0 && retention_ratio <= 1.0, "retention_ratio must be in (0, 1]");
        detail::require(mu_s >= 0.0 && std::isfinite(mu_s), "mu_s must be >= 0");
        detail::require(mu_t >= 0.0 && std::isfinite(mu_t), "mu_t must be >= 0");
        detail::require(w > 0.0 && std::isfinite(w), "w must be > 0");
        detail::require(tau > 0.0 && tau < 1.0, "tau must be in (0, 1)");
        detail::require(clip_len >= 2, "clip_len must be >= 2");
        if (spatial_selector == SpatialSelector::hard_prune_topk ||
            spatial_selector == SpatialSelector::attention_redistribution) {
            detail::require(k_pct > 0.0 && k_pct < 0.5, "k_pct must be in (0, 0.5)");
        }
        if (spatial_selector == SpatialSelector::dpc_knn) {
            detail::require(knn >= 1, "knn must be >= 1");
        }
    }
};

/// Cosine similarity; 0 when either vector has zero norm.
inline double cosine_similarity(std::span<const double> a, std::span<const double> b) {
    double dot = 0.0;
    double na = 0.0;
    double nb = 0.0;
    for (std::size_t c = 0; c < a.size(); ++c) {
        dot += a[c] * b[c];
        na += a[c] * a[c];
        nb += b[c] * b[c];
    }
    if (na == 0.0 || nb == 0.0) {
        return 0.0;
    }
    return std::clamp(dot / std::sqrt(na * nb), -1.0, 1.0);
}

enum class ViolationKind { shape, non_finite, out_of_range, frame_sum };

/// One invariant violation found by `validate`.
struct Violation {
    ViolationKind kind;
    std::string message;
    std::optional<TokenId> token;
    std::optional<std::size_t> frame;
};

using ValidationReport = std::vector<Violation>;

inline constexpr double kFrameSumTolerance = 1e-6;

/// Checks grid (and optional scores) invariants without throwing.
inline ValidationReport validate(const TokenGrid& grid, const AttentionScores* scores = nullptr) {
    ValidationReport report;
    for (std::size_t t = 0; t < grid.frames(); ++t) {
        for (std::size_t i = 0; i < grid.patches(); ++i) {
            const auto tok = grid.token(t, i);
            if (!std::all_of(tok.begin(), tok.end(), [](double v) { return std::isfinite(v); })) {
                report.push_back({ViolationKind::non_finite, "non-finite embedding at frame " + std::to_string(t) + ", patch " + std::to_string(i),
                                  TokenId{t, i}, t});
            }
        }
    }
    if (grid.grid_w() && grid.grid_h() && *grid.grid_w() * *grid.grid_h() != grid.patches()) {
        report.push_back({ViolationKind::shape, "grid_w * grid_h != patches", std::nullopt, std::nullopt});
    }
    if (scores == nullptr) {
        return report;
    }
    if (scores->frames() != grid.frames() || scores->patches() != grid.patches()) {
        report.push_back({ViolationKind::shape, "attention scores shape does not match token grid", std::nullopt, std::nullopt});
        return report;
    }
    for (std::size_t t = 0; t < scores->frames(); ++t) {
        double sum = 0.0;
        for (std::size_t i = 0; i < scores->patches(); ++i) {
            const double v = scores->at(t, i);
            if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
                report.push_back({ViolationKind::out_of_range, "score outside [0, 1] at frame " + std::to_string(t) + ", patch " + std::to_string(i),
                                  TokenId{t, i}, t});
            }
            sum += v;
        }
        if (std::isfinite(sum) && std::abs(sum - 1.0) > kFrameSumTolerance) {
            report.push_back({ViolationKind::frame_sum, "frame sum != 1 at frame " + std::to_string(t) + " (sum " + std::to_string(sum) + ")",
                              std::nullopt, t});
        }
    }
    return report;
}

inline ValidationReport validate(const TokenGrid& grid, const AttentionScores& scores) {
    return validate(grid, &scores);
}

}  // namespace sinkprune
