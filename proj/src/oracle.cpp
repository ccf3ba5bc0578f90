// Copyright 2026 The evbudget Authors
// SPDX-License-Identifier: Apache-2.0

#include "evb/oracle.hpp"

#include <algorithm>
#include <optional>
#include <set>
#include <variant>

#include "evb/error.hpp"

namespace evb::oracle {

namespace {

// Tokens of one frame after pooling: the pooled grid is (side / s) on each edge.
std::optional<Tokens> pooled_tokens(Tokens n, int s) {
    Tokens side = 0;
    while (side * side < n) {
        ++side;
    }
    if (side * side != n || s <= 0 || side % s != 0) {
        return std::nullopt;
    }
    const Tokens edge = side / s;
    return edge * edge;
}

// Largest position i with i * 2k <= (2j + 1) * M, found by walking forward.
std::vector<int> spread_pick(const std::vector<int>& tier, Tokens k) {
    std::vector<int> picked;
    const auto m = static_cast<Tokens>(tier.size());
    Tokens i = 0;
    for (Tokens j = 0; j < k; ++j) {
        while ((i + 1) * 2 * k <= (2 * j + 1) * m) {
            ++i;
        }
        picked.push_back(tier[static_cast<std::size_t>(i)]);
    }
    return picked;
}

// How many frames of one tier the expected plan keeps.
struct Expectation {
    std::vector<int> critical;
    std::vector<int> background;
};

Expectation expected_fragment(const RelevancePartition& partition, Tokens budget, Tokens hi, Tokens lo) {
    Expectation e;
    Tokens critical_cost = 0;
    for (std::size_t i = 0; i < partition.f1.size(); ++i) {
        critical_cost += hi;
    }
    if (critical_cost > budget) {
        Tokens fit = 0;
        while ((fit + 1) * hi <= budget) {
            ++fit;
        }
        e.critical = spread_pick(partition.f1, fit);
        return e;
    }
    e.critical = partition.f1;
    const Tokens remaining = budget - critical_cost;
    Tokens fit = 0;
    while (fit < static_cast<Tokens>(partition.f0.size()) && (fit + 1) * lo <= remaining) {
        ++fit;
    }
    e.background = fit == static_cast<Tokens>(partition.f0.size()) ? partition.f0 : spread_pick(partition.f0, fit);
    return e;
}

std::vector<int> expected_global(int t, Tokens budget, Tokens per_frame) {
    std::vector<int> all(static_cast<std::size_t>(t));
    for (int f = 0; f < t; ++f) {
        all[static_cast<std::size_t>(f)] = f;
    }
    if (static_cast<Tokens>(t) * per_frame <= budget) {
        return all;
    }
    return spread_pick(all, std::max<Tokens>(budget, 0) / per_frame);
}

std::string frames_text(const std::vector<int>& frames) {
    std::string s = "{";
    for (std::size_t i = 0; i < frames.size(); ++i) {
        s += (i ? "," : "") + std::to_string(frames[i]);
    }
    return s + "}";
}

using Outcome = std::variant<AllocationPlan, ErrorKind>;

Outcome run(const FragmentAllocator& fn, const RelevancePartition& p, Tokens n, Tokens b, const ScaleConfig& s) {
    try {
        return fn(p, n, b, s);
    } catch (const Error& e) {
        return e.kind();
    }
}

std::string describe(const Outcome& o) {
    if (const auto* kind = std::get_if<ErrorKind>(&o)) {
        return std::string(evb::to_string(*kind));
    }
    const auto& plan = std::get<AllocationPlan>(o);
    std::string s = "kept[";
    for (const auto& k : plan.kept) {
        s += std::to_string(k.frame) + "@" + std::to_string(k.scale) + " ";
    }
    return s + "] total " + std::to_string(plan.total_tokens);
}

bool outcomes_equal(const Outcome& a, const Outcome& b) {
    if (a.index() != b.index()) {
        return false;
    }
    if (const auto* ka = std::get_if<ErrorKind>(&a)) {
        return *ka == std::get<ErrorKind>(b);
    }
    return same_structure(std::get<AllocationPlan>(a), std::get<AllocationPlan>(b));
}

}  // namespace

std::string_view to_string(ViolationKind kind) noexcept {
    switch (kind) {
        case ViolationKind::BudgetExceeded: return "BudgetExceeded";
        case ViolationKind::PriorityInversion: return "PriorityInversion";
        case ViolationKind::WrongScale: return "WrongScale";
        case ViolationKind::BadPartition: return "BadPartition";
        case ViolationKind::WrongCount: return "WrongCount";
        case ViolationKind::NonUniformSample: return "NonUniformSample";
    }
    return "Unknown";
}

AllocationPlan reference_allocate(const RelevancePartition& partition, Tokens n, Tokens budget,
                                  const ScaleConfig& scales) {
    const int t = partition.frame_count();
    if (t > kMaxReferenceFrames) {
        throw Error(ErrorKind::InvalidArgument, "reference allocator is limited to " + std::to_string(kMaxReferenceFrames) + " frames");
    }
    if (t == 0) {
        throw Error(ErrorKind::EmptyInput, "no frames to allocate");
    }
    const auto hi = pooled_tokens(n, scales.s_1);
    const auto lo = pooled_tokens(n, scales.s_0);
    if (!hi || !lo || !pooled_tokens(n, scales.s_g)) {
        throw Error(ErrorKind::InvalidGeometry, "scales must divide the frame grid");
    }
    if (scales.s_1 > scales.s_0) {
        throw Error(ErrorKind::InvalidArgument, "critical scale coarser than background scale");
    }
    if (budget <= 0) {
        throw Error(ErrorKind::BudgetTooSmall, "no budget");
    }

    const Expectation e = expected_fragment(partition, budget, *hi, *lo);
    if (e.critical.empty() && e.background.empty()) {
        throw Error(ErrorKind::BudgetTooSmall, "nothing fits");
    }

    AllocationPlan plan;
    plan.policy = Policy::Fragment;
    const std::set<int> critical(e.critical.begin(), e.critical.end());
    const std::set<int> background(e.background.begin(), e.background.end());
    for (int f = 0; f < t; ++f) {
        if (critical.contains(f)) {
            plan.kept.push_back({f, scales.s_1, *hi});
        } else if (background.contains(f)) {
            plan.kept.push_back({f, scales.s_0, *lo});
        } else {
            plan.dropped.push_back(f);
        }
    }
    for (const auto& k : plan.kept) {
        plan.total_tokens += k.tokens;
    }
    plan.c1 = static_cast<Tokens>(partition.f1.size()) * *hi;
    plan.c0 = static_cast<Tokens>(partition.f0.size()) * *lo;
    if (e.critical.size() < partition.f1.size()) {
        plan.k_sampled = static_cast<Tokens>(e.critical.size());
    } else if (e.background.size() < partition.f0.size()) {
        plan.k_sampled = static_cast<Tokens>(e.background.size());
    }
    return plan;
}

std::vector<Violation> verify_plan(const AllocationPlan& plan, const RelevancePartition& partition, Tokens n,
                                   Tokens budget, const ScaleConfig& scales) {
    std::vector<Violation> out;
    const auto report = [&](ViolationKind kind, std::string detail) { out.push_back({kind, std::move(detail)}); };
    const int t = partition.frame_count();

    // Partition integrity.
    std::vector<int> seen(static_cast<std::size_t>(std::max(t, 0)), 0);
    const auto mark = [&](int f) {
        if (f < 0 || f >= t) {
            report(ViolationKind::BadPartition, "frame " + std::to_string(f) + " is outside the video");
            return;
        }
        ++seen[static_cast<std::size_t>(f)];
    };
    for (const auto& k : plan.kept) {
        mark(k.frame);
    }
    for (int f : plan.dropped) {
        mark(f);
    }
    for (int f = 0; f < t; ++f) {
        if (seen[static_cast<std::size_t>(f)] != 1) {
            report(ViolationKind::BadPartition, "frame " + std::to_string(f) + " appears " +
                                                    std::to_string(seen[static_cast<std::size_t>(f)]) +
                                                    " times across kept and dropped");
        }
    }
    const bool kept_sorted = std::is_sorted(plan.kept.begin(), plan.kept.end(),
                                            [](const KeptFrame& a, const KeptFrame& b) { return a.frame < b.frame; });
    if (!kept_sorted || !std::is_sorted(plan.dropped.begin(), plan.dropped.end())) {
        report(ViolationKind::BadPartition, "kept and dropped lists must be in ascending frame order");
    }

    // Token accounting and budget bound.
    Tokens sum = 0;
    for (const auto& k : plan.kept) {
        const auto per = pooled_tokens(n, k.scale);
        if (!per) {
            report(ViolationKind::WrongScale, "frame " + std::to_string(k.frame) + " uses invalid scale " +
                                                  std::to_string(k.scale));
        } else if (*per != k.tokens) {
            report(ViolationKind::WrongCount, "frame " + std::to_string(k.frame) + " claims " +
                                                  std::to_string(k.tokens) + " tokens at scale " +
                                                  std::to_string(k.scale) + ", expected " + std::to_string(*per));
        }
        sum += k.tokens;
    }
    if (sum != plan.total_tokens) {
        report(ViolationKind::WrongCount, "total_tokens " + std::to_string(plan.total_tokens) +
                                              " differs from the kept sum " + std::to_string(sum));
    }
    if (std::max(sum, plan.total_tokens) > budget) {
        report(ViolationKind::BudgetExceeded, "plan uses " + std::to_string(std::max(sum, plan.total_tokens)) +
                                                  " tokens against a budget of " + std::to_string(budget));
    }

    std::vector<int> critical_kept;
    std::vector<int> background_kept;
    std::vector<char> relevant(static_cast<std::size_t>(std::max(t, 0)), 0);
    for (int f : partition.f1) {
        if (f >= 0 && f < t) {
            relevant[static_cast<std::size_t>(f)] = 1;
        }
    }

    if (plan.policy == Policy::Global) {
        std::vector<int> kept_frames;
        for (const auto& k : plan.kept) {
            if (k.scale != scales.s_g) {
                report(ViolationKind::WrongScale, "global frame " + std::to_string(k.frame) + " at scale " +
                                                      std::to_string(k.scale) + ", expected " +
                                                      std::to_string(scales.s_g));
            }
            kept_frames.push_back(k.frame);
        }
        const auto per = pooled_tokens(n, scales.s_g);
        if (!per || t <= 0) {
            return out;
        }
        const std::vector<int> expected = expected_global(t, budget, *per);
        if (expected.size() != kept_frames.size()) {
            report(ViolationKind::WrongCount, "global plan keeps " + std::to_string(kept_frames.size()) +
                                                  " frames, expected " + std::to_string(expected.size()));
        } else if (expected != kept_frames) {
            report(ViolationKind::NonUniformSample,
                   "global frames " + frames_text(kept_frames) + ", expected " + frames_text(expected));
        }
        return out;
    }

    for (const auto& k : plan.kept) {
        const bool critical = k.frame >= 0 && k.frame < t && relevant[static_cast<std::size_t>(k.frame)];
        const int want = critical ? scales.s_1 : scales.s_0;
        if (k.scale != want) {
            report(ViolationKind::WrongScale, std::string(critical ? "critical" : "background") + " frame " +
                                                  std::to_string(k.frame) + " at scale " + std::to_string(k.scale) +
                                                  ", expected " + std::to_string(want));
        }
        (critical ? critical_kept : background_kept).push_back(k.frame);
    }

    if (critical_kept.size() < partition.f1.size() && !background_kept.empty()) {
        report(ViolationKind::PriorityInversion, "background frames " + frames_text(background_kept) +
                                                     " kept while critical frames were dropped");
    }

    const auto hi = pooled_tokens(n, scales.s_1);
    const auto lo = pooled_tokens(n, scales.s_0);
    if (!hi || !lo || budget <= 0) {
        return out;
    }
    const Expectation e = expected_fragment(partition, budget, *hi, *lo);
    const auto check_tier = [&](const char* name, const std::vector<int>& got, const std::vector<int>& want) {
        if (got.size() != want.size()) {
            report(ViolationKind::WrongCount, std::string(name) + " tier keeps " + std::to_string(got.size()) +
                                                  " frames, expected " + std::to_string(want.size()));
        } else if (got != want) {
            report(ViolationKind::NonUniformSample,
                   std::string(name) + " tier kept " + frames_text(got) + ", expected " + frames_text(want));
        }
    };
    check_tier("critical", critical_kept, e.critical);
    check_tier("background", background_kept, e.background);
    return out;
}

CompareSummary exhaustive_compare(int t_min, int t_max, Tokens n, std::span<const ScaleConfig> scale_sets,
                                  Tokens budget_lo, Tokens budget_hi, const FragmentAllocator& candidate) {
    if (t_min < 1 || t_max > 12 || t_min > t_max) {
        throw Error(ErrorKind::InvalidArgument, "exhaustive comparison needs 1 <= t_min <= t_max <= 12");
    }
    const FragmentAllocator allocator = candidate ? candidate : FragmentAllocator(allocate_fragment);
    const FragmentAllocator reference = reference_allocate;

    CompareSummary summary;
    for (int t = t_min; t <= t_max; ++t) {
        for (std::uint32_t pattern = 0; pattern < (1u << t); ++pattern) {
            RelevancePartition partition;
            for (int f = 0; f < t; ++f) {
                ((pattern >> f) & 1u ? partition.f1 : partition.f0).push_back(f);
            }
            for (const auto& scales : scale_sets) {
                for (Tokens b = budget_lo; b <= budget_hi; ++b) {
                    ++summary.cases;
                    const Outcome got = run(allocator, partition, n, b, scales);
                    const Outcome want = run(reference, partition, n, b, scales);
                    if (!outcomes_equal(got, want)) {
                        if (summary.mismatches++ == 0) {
                            summary.first_mismatch = "T=" + std::to_string(t) + " pattern=" +
                                                     std::to_string(pattern) + " scales=(" +
                                                     std::to_string(scales.s_1) + "," + std::to_string(scales.s_0) +
                                                     ") budget=" + std::to_string(b) + ": got " + describe(got) +
                                                     ", reference " + describe(want);
                        }
                    }
                }
            }
        }
    }
    return summary;
}

}  // namespace evb::oracle
