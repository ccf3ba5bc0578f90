// Copyright 2026 The evbudget Authors
// SPDX-License-Identifier: Apache-2.0

#include "evb/sequencer.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "evb/error.hpp"

namespace evb {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

}  // namespace

TokenGrid TokenGrid::filled(std::size_t side, std::size_t dim, double value) {
    return TokenGrid{side, dim, std::vector<double>(side * side * dim, value)};
}

void TokenGrid::validate() const {
    if (side == 0 || dim == 0) {
        throw Error(ErrorKind::InvalidGeometry, "token grid must have a positive side and dimension");
    }
    if (values.size() != side * side * dim) {
        throw Error(ErrorKind::InvalidGeometry, "token grid holds " + std::to_string(values.size()) +
                                                    " values, expected " + std::to_string(side * side * dim));
    }
    if (!std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); })) {
        throw Error(ErrorKind::InvalidArgument, "token grid values must be finite");
    }
}

TokenGrid mean_pool(const TokenGrid& grid, int s) {
    grid.validate();
    if (s <= 0 || grid.side % static_cast<std::size_t>(s) != 0) {
        throw Error(ErrorKind::InvalidGeometry,
                    "scale " + std::to_string(s) + " does not divide grid side " + std::to_string(grid.side));
    }
    const auto scale = static_cast<std::size_t>(s);
    TokenGrid out = TokenGrid::filled(grid.side / scale, grid.dim);
    const double inv = 1.0 / static_cast<double>(scale * scale);
    for (std::size_t r = 0; r < out.side; ++r) {
        for (std::size_t c = 0; c < out.side; ++c) {
            auto acc = out.token(r, c);
            for (std::size_t dr = 0; dr < scale; ++dr) {
                for (std::size_t dc = 0; dc < scale; ++dc) {
                    const auto src = grid.token(r * scale + dr, c * scale + dc);
                    for (std::size_t k = 0; k < grid.dim; ++k) {
                        acc[k] += src[k];
                    }
                }
            }
            for (double& v : acc) {
                v *= inv;
            }
        }
    }
    return out;
}

PromptTemplate PromptTemplate::video_prompt(int frames, Tokens prefix, Tokens suffix) {
    PromptTemplate t;
    if (prefix > 0) {
        t.segments.emplace_back(TextSpan{prefix});
    }
    for (int f = 0; f < frames; ++f) {
        t.segments.emplace_back(FramePlaceholder{f});
    }
    if (suffix > 0) {
        t.segments.emplace_back(TextSpan{suffix});
    }
    return t;
}

Tokens PromptTemplate::text_tokens() const {
    Tokens sum = 0;
    for (const auto& seg : segments) {
        if (const auto* text = std::get_if<TextSpan>(&seg)) {
            sum += text->count;
        }
    }
    return sum;
}

void PromptTemplate::validate() const {
    int last = -1;
    for (const auto& seg : segments) {
        if (const auto* text = std::get_if<TextSpan>(&seg)) {
            if (text->count < 0) {
                throw Error(ErrorKind::InvalidTemplate, "text span with negative length");
            }
        } else {
            const int frame = std::get<FramePlaceholder>(seg).frame;
            if (frame <= last) {
                throw Error(ErrorKind::InvalidTemplate,
                            "placeholder for frame " + std::to_string(frame) + " is repeated or out of order");
            }
            last = frame;
        }
    }
}

Tokens TokenSequence::text_tokens() const {
    Tokens sum = 0;
    for (const auto& seg : segments) {
        if (const auto* text = std::get_if<TextSpan>(&seg)) {
            sum += text->count;
        }
    }
    return sum;
}

Tokens TokenSequence::visual_tokens() const {
    Tokens sum = 0;
    for (const auto& seg : segments) {
        if (const auto* visual = std::get_if<VisualSpan>(&seg)) {
            sum += static_cast<Tokens>(visual->tokens.token_count());
        }
    }
    return sum;
}

TokenSequence reconstruct(const PromptTemplate& prompt, const AllocationPlan& plan,
                          const std::map<int, TokenGrid>& pooled) {
    prompt.validate();

    std::map<int, const KeptFrame*> kept;
    for (const auto& k : plan.kept) {
        kept.emplace(k.frame, &k);
        const auto it = pooled.find(k.frame);
        if (it == pooled.end()) {
            throw Error(ErrorKind::MissingFrame, "no pooled tokens for kept frame " + std::to_string(k.frame));
        }
        if (static_cast<Tokens>(it->second.token_count()) != k.tokens) {
            throw Error(ErrorKind::ScaleMismatch, "frame " + std::to_string(k.frame) + " pooled to " +
                                                      std::to_string(it->second.token_count()) +
                                                      " tokens, plan expects " + std::to_string(k.tokens));
        }
    }

    TokenSequence seq;
    std::size_t placed = 0;
    for (const auto& seg : prompt.segments) {
        std::visit(overloaded{
                       [&](const TextSpan& text) {
                           seq.segments.emplace_back(text);
                           seq.total_length += text.count;
                       },
                       [&](const FramePlaceholder& ph) {
                           if (!kept.contains(ph.frame)) {
                               return;
                           }
                           const TokenGrid& grid = pooled.at(ph.frame);
                           seq.segments.emplace_back(VisualSpan{ph.frame, grid});
                           seq.total_length += static_cast<Tokens>(grid.token_count());
                           ++placed;
                       },
                   },
                   seg);
    }
    if (placed != kept.size()) {
        throw Error(ErrorKind::MissingFrame, "template lacks a placeholder for some kept frame");
    }
    return seq;
}

std::map<int, TokenGrid> pool_kept_frames(const AllocationPlan& plan, std::span<const TokenGrid> frames) {
    std::map<int, TokenGrid> pooled;
    for (const auto& k : plan.kept) {
        if (k.frame < 0 || static_cast<std::size_t>(k.frame) >= frames.size()) {
            throw Error(ErrorKind::MissingFrame, "no source grid for frame " + std::to_string(k.frame));
        }
        pooled.emplace(k.frame, mean_pool(frames[static_cast<std::size_t>(k.frame)], k.scale));
    }
    return pooled;
}

bool fits_context(const TokenSequence& seq, const BudgetConfig& cfg) {
    const Tokens visual_budget = std::max<Tokens>(cfg.l_max - cfg.l_text - cfg.l_gen - cfg.epsilon, 0);
    return seq.visual_tokens() <= visual_budget && seq.total_length + cfg.l_gen <= cfg.l_max;
}

}  // namespace evb
