// Copyright 2026 The evbudget Authors
// SPDX-License-Identifier: Apache-2.0

#include "evb/budget.hpp"

#include <string>

#include "evb/error.hpp"

namespace evb {

Tokens compute_budget(const BudgetConfig& cfg) {
    if (cfg.l_max < 0 || cfg.l_text < 0 || cfg.l_gen < 0 || cfg.epsilon < 0) {
        throw Error(ErrorKind::InvalidArgument, "budget config fields must be non-negative");
    }
    const Tokens budget = cfg.l_max - cfg.l_text - cfg.l_gen - cfg.epsilon;
    if (budget <= 0) {
        throw Error(ErrorKind::BudgetNonPositive,
                    "prompt leaves " + std::to_string(budget) + " tokens for visual content");
    }
    return budget;
}

}  // namespace evb
