// Copyright 2026 The evbudget Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>

namespace evb {

/// Token counts are integral everywhere; there are no fractional tokens.
using Tokens = std::int64_t;

inline constexpr Tokens kDefaultSafetyMargin = 100;

/// Context-window accounting for one request.
struct BudgetConfig {
    Tokens l_max = 0;    ///< maximum context length of the language model
    Tokens l_text = 0;   ///< text prompt length
    Tokens l_gen = 0;    ///< tokens reserved for generation
    Tokens epsilon = kDefaultSafetyMargin;

    bool operator==(const BudgetConfig&) const = default;
};

/// Visual-token budget left after reserving text, generation and the safety margin.
/// Throws BudgetNonPositive when nothing is left for visual tokens and
/// InvalidArgument when any field is negative.
Tokens compute_budget(const BudgetConfig& cfg);

}  // namespace evb
