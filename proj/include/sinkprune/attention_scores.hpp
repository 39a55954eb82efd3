// Copyright (C) 2026 The sinkprune Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "sinkprune/core.hpp"
#include "sinkprune/parallel.hpp"

namespace sinkprune {

/// Head-averaged softmax attention, frames x patches x patches. Row j holds
/// the distribution of query j over keys.
struct AttentionMatrix {
    std::size_t frames = 0;
    std::size_t patches = 0;
    std::vector<double> attn;

    double at(std::size_t t, std::size_t row, std::size_t col) const {
        return attn[(t * patches + row) * patches + col];
    }
};

/**
 * @brief Self-attention among the visual tokens of each frame.
 *
 * For every head and frame the logits q_j . k_l are scaled by 1/sqrt(head_dim) and
 * soft-maxed over the key axis (with max subtraction). Heads are combined by an
 * arithmetic mean, so every row of the result stays a probability distribution.
 */
inline AttentionMatrix compute_attention_matrix(const QueryKey& qk) {
    detail::require(qk.heads >= 1 && qk.frames >= 1 && qk.patches >= 1 && qk.head_dim >= 1,
                    "query/key dimensions must all be >= 1");
    const std::size_t expected = qk.heads * qk.frames * qk.patches * qk.head_dim;
    detail::require(qk.q.size() == expected && qk.k.size() == expected, "query and key shapes do not match");
    for (std::size_t idx = 0; idx < expected; ++idx) {
        detail::require(std::isfinite(qk.q[idx]) && std::isfinite(qk.k[idx]), "query/key contain non-finite values");
    }

    const std::size_t n = qk.patches;
    const double scale = 1.0 / std::sqrt(static_cast<double>(qk.head_dim));
    const double head_weight = 1.0 / static_cast<double>(qk.heads);

    AttentionMatrix out{qk.frames, n, std::vector<double>(qk.frames * n * n, 0.0)};
    parallel_for(qk.frames, [&](std::size_t t) {
        std::vector<double> logits(n);
        double* frame_out = out.attn.data() + t * n * n;
        for (std::size_t h = 0; h < qk.heads; ++h) {
            for (std::size_t j = 0; j < n; ++j) {
                const double* qj = qk.q.data() + qk.offset(h, t, j);
                double max_logit = -INFINITY;
                for (std::size_t l = 0; l < n; ++l) {
                    const double* kl = qk.k.data() + qk.offset(h, t, l);
                    double dot = 0.0;
                    for (std::size_t c = 0; c < qk.head_dim; ++c) {
                        dot += qj[c] * kl[c];
                    }
                    logits[l] = dot * scale;
                    max_logit = std::max(max_logit, logits[l]);
                }
                double denom = 0.0;
                for (std::size_t l = 0; l < n; ++l) {
                    logits[l] = std::exp(logits[l] - max_logit);
                    denom += logits[l];
                }
                double* row = frame_out + j * n;
                for (std::size_t l = 0; l < n; ++l) {
                    row[l] += head_weight * (logits[l] / denom);
                }
            }
        }
    });
    return out;
}

/// CLS-equivalent importance: A[t][i] is the mean over queries of attention paid to key i.
inline AttentionScores column_mean_scores(const AttentionMatrix& m) {
    detail::require(m.frames >= 1 && m.patches >= 1 && m.attn.size() == m.frames * m.patches * m.patches,
                    "attention matrix shape is inconsistent");
    const std::size_t n = m.patches;
    std::vector<double> scores(m.frames * n, 0.0);
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t t = 0; t < m.frames; ++t) {
        for (std::size_t i = 0; i < n; ++i) {
            double sum = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                sum += m.at(t, j, i);
            }
            scores[t * n + i] = sum * inv_n;
        }
    }
    return AttentionScores(m.frames, n, std::move(scores));
}

inline AttentionScores compute_scores(const QueryKey& qk) { return column_mean_scores(compute_attention_matrix(qk)); }

inline constexpr double kIngestSumTolerance = 1e-4;

/**
 * Wraps externally computed scores. Negative or non-finite entries are rejected.
 * If any frame's mass differs from 1 by more than 1e-4, every frame is rescaled
 * to unit mass and the result is flagged as renormalized.
 */
inline AttentionScores ingest_scores(std::size_t frames, std::size_t patches, std::vector<double> raw) {
    detail::require(frames >= 1 && patches >= 1, "scores need at least one frame and one patch");
    detail::require(raw.size() == frames * patches, "scores size does not match declared (frames, patches)");
    bool needs_renorm = false;
    std::vector<double> sums(frames, 0.0);
    for (std::size_t t = 0; t < frames; ++t) {
        for (std::size_t i = 0; i < patches; ++i) {
            const double v = raw[t * patches + i];
            detail::require(std::isfinite(v), "scores contain non-finite values");
            detail::require(v >= 0.0, "scores contain negative entries");
            sums[t] += v;
        }
        needs_renorm = needs_renorm || std::abs(sums[t] - 1.0) > kIngestSumTolerance;
    }
    if (needs_renorm) {
        for (std::size_t t = 0; t < frames; ++t) {
            detail::require(sums[t] > 0.0, "frame " + std::to_string(t) + " has zero attention mass");
            for (std::size_t i = 0; i < patches; ++i) {
                raw[t * patches + i] /= sums[t];
            }
        }
    }
    return AttentionScores(frames, patches, std::move(raw), needs_renorm);
}

}  // namespace sinkprune
