// Copyright 2026 The evbudget Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "evb/allocator.hpp"

namespace evb::oracle {

enum class ViolationKind { BudgetExceeded, PriorityInversion, WrongScale, BadPartition, WrongCount, NonUniformSample };

std::string_view to_string(ViolationKind kind) noexcept;

struct Violation {
    ViolationKind kind;
    std::string detail;
};

inline constexpr int kMaxReferenceFrames = 256;

/// Brute-force reading of the priority hierarchy: keep every critical frame,
/// spend what is left on background frames, and sample uniformly from
/// whichever tier the budget truncates. Shares no code with the allocator.
AllocationPlan reference_allocate(const RelevancePartition& partition, Tokens n, Tokens budget,
                                  const ScaleConfig& scales);

/// Checks a plan against the allocation rules. An empty result means the plan
/// is correct. Global plans are checked against the temporal-subsampling rule.
std::vector<Violation> verify_plan(const AllocationPlan& plan, const RelevancePartition& partition, Tokens n,
                                   Tokens budget, const ScaleConfig& scales);

using FragmentAllocator =
    std::function<AllocationPlan(const RelevancePartition&, Tokens, Tokens, const ScaleConfig&)>;

struct CompareSummary {
    std::uint64_t cases = 0;
    std::uint64_t mismatches = 0;
    std::string first_mismatch;
};

/// Runs `candidate` and reference_allocate over every relevance pattern of
/// every frame count in [t_min, t_max], every scale set and every budget in
/// [budget_lo, budget_hi]. Errors match when both sides fail with the same kind.
CompareSummary exhaustive_compare(int t_min, int t_max, Tokens n, std::span<const ScaleConfig> scale_sets,
                                  Tokens budget_lo, Tokens budget_hi, const FragmentAllocator& candidate = {});

}  // namespace evb::oracle
