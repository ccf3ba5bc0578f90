// Copyright 2026 The evbudget Authors
// SPDX-License-Identifier: Apache-2.0

#include "evb/allocator.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "evb/error.hpp"

namespace evb {

namespace {

void check_partition(const RelevancePartition& partition) {
    const int t = partition.frame_count();
    std::vector<char> seen(static_cast<std::size_t>(t), 0);
    for (const auto* tier : {&partition.f1, &partition.f0}) {
        if (!std::is_sorted(tier->begin(), tier->end())) {
            throw Error(ErrorKind::InvalidArgument, "relevance tiers must be in ascending frame order");
        }
        for (int f : *tier) {
            if (f < 0 || f >= t) {
                throw Error(ErrorKind::InvalidArgument, "frame " + std::to_string(f) + " outside 0.." +
                                                            std::to_string(t - 1));
            }
            if (seen[static_cast<std::size_t>(f)]++) {
                throw Error(ErrorKind::DuplicateFrame, "frame " + std::to_string(f) + " listed twice");
            }
        }
    }
}

// Materializes a plan from a per-frame scale assignment (0 = dropped).
AllocationPlan build_plan(Policy policy, std::span<const int> scale_of, Tokens n) {
    AllocationPlan plan;
    plan.policy = policy;
    for (std::size_t f = 0; f < scale_of.size(); ++f) {
        const int s = scale_of[f];
        if (s == 0) {
            plan.dropped.push_back(static_cast<int>(f));
            continue;
        }
        const Tokens tokens = tokens_at_scale(n, s);
        plan.kept.push_back(KeptFrame{static_cast<int>(f), s, tokens});
        plan.total_tokens += tokens;
    }
    if (plan.kept.empty()) {
        throw Error(ErrorKind::BudgetTooSmall, "budget cannot host a single frame");
    }
    return plan;
}

void require_positive_budget(Tokens budget) {
    if (budget <= 0) {
        throw Error(ErrorKind::BudgetTooSmall, "budget " + std::to_string(budget) + " is not positive");
    }
}

}  // namespace

void ScaleConfig::validate(Tokens n) const {
    const auto side = grid_side(n);
    if (!side) {
        throw Error(ErrorKind::InvalidGeometry, "tokens per frame " + std::to_string(n) + " is not a perfect square");
    }
    for (int s : {s_g, s_1, s_0}) {
        if (s <= 0 || *side % s != 0) {
            throw Error(ErrorKind::InvalidGeometry,
                        "scale " + std::to_string(s) + " does not divide grid side " + std::to_string(*side));
        }
    }
    if (s_1 > s_0) {
        throw Error(ErrorKind::InvalidArgument, "critical scale must not be coarser than the irrelevant scale");
    }
}

RelevancePartition RelevancePartition::from_decisions(const std::vector<bool>& y_hat) {
    RelevancePartition p;
    for (std::size_t t = 0; t < y_hat.size(); ++t) {
        (y_hat[t] ? p.f1 : p.f0).push_back(static_cast<int>(t));
    }
    return p;
}

bool same_structure(const AllocationPlan& a, const AllocationPlan& b) {
    return a.policy == b.policy && a.kept == b.kept && a.dropped == b.dropped && a.total_tokens == b.total_tokens;
}

std::optional<Tokens> grid_side(Tokens n) {
    if (n <= 0) {
        return std::nullopt;
    }
    Tokens r = 0;
    while ((r + 1) * (r + 1) <= n) {
        ++r;
    }
    if (r * r != n) {
        return std::nullopt;
    }
    return r;
}

Tokens tokens_at_scale(Tokens n, int s) {
    const auto side = grid_side(n);
    if (!side) {
        throw Error(ErrorKind::InvalidGeometry, "tokens per frame " + std::to_string(n) + " is not a perfect square");
    }
    if (s <= 0 || *side % s != 0) {
        throw Error(ErrorKind::InvalidGeometry,
                    "scale " + std::to_string(s) + " does not divide grid side " + std::to_string(*side));
    }
    return n / (static_cast<Tokens>(s) * s);
}

std::vector<int> uniform_sample(std::span<const int> candidates, Tokens k) {
    const auto m = static_cast<Tokens>(candidates.size());
    if (k < 0) {
        throw Error(ErrorKind::InvalidArgument, "sample size must be non-negative");
    }
    if (k > m) {
        throw Error(ErrorKind::SampleTooLarge,
                    "cannot sample " + std::to_string(k) + " of " + std::to_string(m) + " candidates");
    }
    std::vector<int> out;
    out.reserve(static_cast<std::size_t>(k));
    // floor((j + 0.5) * M / k) == floor((2j + 1) * M / (2k)) in exact integers
    for (Tokens j = 0; j < k; ++j) {
        out.push_back(candidates[static_cast<std::size_t>((2 * j + 1) * m / (2 * k))]);
    }
    return out;
}

AllocationPlan allocate_fragment(const RelevancePartition& partition, Tokens n, Tokens budget,
                                 const ScaleConfig& scales) {
    scales.validate(n);
    check_partition(partition);
    const int t = partition.frame_count();
    if (t == 0) {
        throw Error(ErrorKind::EmptyInput, "no frames to allocate");
    }
    require_positive_budget(budget);

    const Tokens per1 = tokens_at_scale(n, scales.s_1);
    const Tokens per0 = tokens_at_scale(n, scales.s_0);
    const Tokens c1 = static_cast<Tokens>(partition.f1.size()) * per1;
    const Tokens c0 = static_cast<Tokens>(partition.f0.size()) * per0;

    std::vector<int> scale_of(static_cast<std::size_t>(t), 0);
    const auto keep = [&](std::span<const int> frames, int s) {
        for (int f : frames) {
            scale_of[static_cast<std::size_t>(f)] = s;
        }
    };

    std::optional<Tokens> k_sampled;
    if (c1 + c0 <= budget) {
        keep(partition.f1, scales.s_1);
        keep(partition.f0, scales.s_0);
    } else if (c1 <= budget) {
        const Tokens k = (budget - c1) / per0;
        keep(partition.f1, scales.s_1);
        keep(uniform_sample(partition.f0, k), scales.s_0);
        k_sampled = k;
    } else {
        const Tokens k = budget / per1;
        if (k == 0) {
            throw Error(ErrorKind::BudgetTooSmall, "budget " + std::to_string(budget) +
                                                       " is below one critical frame (" + std::to_string(per1) +
                                                       " tokens)");
        }
        keep(uniform_sample(partition.f1, k), scales.s_1);
        k_sampled = k;
    }

    AllocationPlan plan = build_plan(Policy::Fragment, scale_of, n);
    plan.c1 = c1;
    plan.c0 = c0;
    plan.k_sampled = k_sampled;
    return plan;
}

AllocationPlan allocate_global(int t, Tokens n, Tokens budget, int s_g) {
    const Tokens per_frame = tokens_at_scale(n, s_g);
    if (t <= 0) {
        throw Error(ErrorKind::EmptyInput, "no frames to allocate");
    }
    require_positive_budget(budget);

    const Tokens full = static_cast<Tokens>(t) * per_frame;
    std::vector<int> scale_of(static_cast<std::size_t>(t), 0);
    std::optional<Tokens> k_sampled;
    if (full <= budget) {
        std::fill(scale_of.begin(), scale_of.end(), s_g);
    } else {
        const Tokens k = budget / per_frame;
        if (k == 0) {
            throw Error(ErrorKind::BudgetTooSmall, "budget " + std::to_string(budget) +
                                                       " is below one pooled frame (" + std::to_string(per_frame) +
                                                       " tokens)");
        }
        std::vector<int> frames(static_cast<std::size_t>(t));
        std::iota(frames.begin(), frames.end(), 0);
        for (int f : uniform_sample(frames, k)) {
            scale_of[static_cast<std::size_t>(f)] = s_g;
        }
        k_sampled = k;
    }

    AllocationPlan plan = build_plan(Policy::Global, scale_of, n);
    plan.c1 = 0;
    plan.c0 = full;
    plan.k_sampled = k_sampled;
    return plan;
}

AllocationPlan allocate(Policy policy, std::span<const FrameScore> scores, Tokens n, Tokens budget,
                        const ScaleConfig& scales) {
    scales.validate(n);
    const std::size_t t = scores.size();
    if (t == 0) {
        throw Error(ErrorKind::EmptyInput, "no frame scores");
    }
    std::vector<int> seen(t, 0);
    std::vector<bool> y_hat(t, false);
    for (const auto& s : scores) {
        if (s.frame_index < 0 || static_cast<std::size_t>(s.frame_index) >= t) {
            throw Error(ErrorKind::DuplicateFrame, "frame index " + std::to_string(s.frame_index) +
                                                       " outside 0.." + std::to_string(t - 1));
        }
        if (seen[static_cast<std::size_t>(s.frame_index)]++) {
            throw Error(ErrorKind::DuplicateFrame, "frame " + std::to_string(s.frame_index) + " scored twice");
        }
        y_hat[static_cast<std::size_t>(s.frame_index)] = s.y_hat;
    }

    if (policy == Policy::Fragment) {
        if (std::find(y_hat.begin(), y_hat.end(), true) != y_hat.end()) {
            RelevancePartition partition;
            for (std::size_t f = 0; f < t; ++f) {
                (y_hat[f] ? partition.f1 : partition.f0).push_back(static_cast<int>(f));
            }
            return allocate_fragment(partition, n, budget, scales);
        }
    }
    return allocate_global(static_cast<int>(t), n, budget, scales.s_g);
}

AllocationPlan allocate(const PolicyDecision& decision, std::span<const FrameScore> scores, Tokens n,
                        Tokens budget, const ScaleConfig& scales) {
    return allocate(decision.decision, scores, n, budget, scales);
}

}  // namespace evb
