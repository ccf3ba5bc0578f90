// Copyright 2026 The evbudget Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <variant>
#include <vector>

#include "evb/allocator.hpp"
#include "evb/budget.hpp"

namespace evb {

/// A side x side grid of token vectors of length `dim`, row-major, flattened.
struct TokenGrid {
    std::size_t side = 0;
    std::size_t dim = 0;
    std::vector<double> values;

    static TokenGrid filled(std::size_t side, std::size_t dim, double value = 0.0);

    std::size_t token_count() const noexcept { return side * side; }
    std::span<const double> token(std::size_t row, std::size_t col) const {
        return {values.data() + (row * side + col) * dim, dim};
    }
    std::span<double> token(std::size_t row, std::size_t col) {
        return {values.data() + (row * side + col) * dim, dim};
    }

    void validate() const;

    bool operator==(const TokenGrid&) const = default;
};

/// Mean of each non-overlapping s x s block. Throws InvalidGeometry unless s divides the side.
TokenGrid mean_pool(const TokenGrid& grid, int s);

struct TextSpan {
    Tokens count = 0;
    bool operator==(const TextSpan&) const = default;
};

struct FramePlaceholder {
    int frame = 0;
    bool operator==(const FramePlaceholder&) const = default;
};

struct VisualSpan {
    int frame = 0;
    TokenGrid tokens;
    bool operator==(const VisualSpan&) const = default;
};

struct PromptTemplate {
    std::vector<std::variant<TextSpan, FramePlaceholder>> segments;

    /// `prefix` text, one placeholder per frame, then `suffix` text.
    static PromptTemplate video_prompt(int frames, Tokens prefix, Tokens suffix);

    Tokens text_tokens() const;
    /// Throws InvalidTemplate unless placeholders are unique and ascending.
    void validate() const;
};

struct TokenSequence {
    std::vector<std::variant<TextSpan, VisualSpan>> segments;
    Tokens total_length = 0;

    Tokens text_tokens() const;
    Tokens visual_tokens() const;
};

/// Substitutes pooled tokens for kept frames and removes the placeholders of
/// dropped frames. `pooled` must hold every kept frame at its planned scale.
TokenSequence reconstruct(const PromptTemplate& prompt, const AllocationPlan& plan,
                          const std::map<int, TokenGrid>& pooled);

/// Pools every kept frame of `plan` from its full-resolution grid.
std::map<int, TokenGrid> pool_kept_frames(const AllocationPlan& plan, std::span<const TokenGrid> frames);

/// Visual tokens fit the visual budget and the whole sequence plus the
/// generation reserve fits the context window.
bool fits_context(const TokenSequence& seq, const BudgetConfig& cfg);

}  // namespace evb
