// Copyright 2026 The evbudget Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <span>
#include <vector>

#include "evb/budget.hpp"
#include "evb/routers.hpp"

namespace evb {

/// Pooling scales. A frame pooled at scale s contributes n / s^2 tokens.
struct ScaleConfig {
    int s_g = 2;  ///< Global policy scale
    int s_1 = 1;  ///< critical frames under Fragment
    int s_0 = 4;  ///< irrelevant frames under Fragment

    /// Throws InvalidGeometry unless every scale divides sqrt(n), and
    /// InvalidArgument when s_1 > s_0.
    void validate(Tokens n) const;

    bool operator==(const ScaleConfig&) const = default;
};

/// Frames split by predicted relevance, each list in ascending temporal order.
struct RelevancePartition {
    std::vector<int> f1;
    std::vector<int> f0;

    int frame_count() const noexcept { return static_cast<int>(f1.size() + f0.size()); }

    static RelevancePartition from_decisions(const std::vector<bool>& y_hat);

    bool operator==(const RelevancePartition&) const = default;
};

struct KeptFrame {
    int frame = 0;
    int scale = 1;
    Tokens tokens = 0;

    bool operator==(const KeptFrame&) const = default;
};

struct AllocationPlan {
    Policy policy = Policy::Fragment;
    std::vector<KeptFrame> kept;  ///< ascending frame order
    std::vector<int> dropped;     ///< ascending frame order
    Tokens total_tokens = 0;

    // Audit fields. For Fragment plans c1/c0 are the full-tier costs; for
    // Global plans c1 is 0 and c0 is the cost of keeping every frame at s_g.
    // k_sampled is set only when a tier was uniformly subsampled.
    Tokens c1 = 0;
    Tokens c0 = 0;
    std::optional<Tokens> k_sampled;

    int frame_count() const noexcept { return static_cast<int>(kept.size() + dropped.size()); }

    bool operator==(const AllocationPlan&) const = default;
};

/// Structural equality: policy, kept tuples, dropped list and total.
bool same_structure(const AllocationPlan& a, const AllocationPlan& b);

/// Integer square root when n is a perfect square.
std::optional<Tokens> grid_side(Tokens n);

Tokens tokens_at_scale(Tokens n, int s);

/// Picks k of the M candidates at positions floor((j + 0.5) * M / k), j = 0..k-1.
std::vector<int> uniform_sample(std::span<const int> candidates, Tokens k);

AllocationPlan allocate_fragment(const RelevancePartition& partition, Tokens n, Tokens budget,
                                 const ScaleConfig& scales);

AllocationPlan allocate_global(int t, Tokens n, Tokens budget, int s_g);

/// Policy dispatch. A Fragment decision with no relevant frame falls back to
/// the Global policy.
AllocationPlan allocate(const PolicyDecision& decision, std::span<const FrameScore> scores, Tokens n,
                        Tokens budget, const ScaleConfig& scales);
AllocationPlan allocate(Policy policy, std::span<const FrameScore> scores, Tokens n, Tokens budget,
                        const ScaleConfig& scales);

}  // namespace evb
