// Copyright 2026 The evbudget Authors
// SPDX-License-Identifier: Apache-2.0

// Acceptance suite: one line per criterion, non-zero exit when any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "evb/allocator.hpp"
#include "evb/budget.hpp"
#include "evb/error.hpp"
#include "evb/harness.hpp"
#include "evb/oracle.hpp"
#include "evb/routers.hpp"
#include "evb/sequencer.hpp"

using namespace evb;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

struct Criterion {
    int id;
    const char* name;
    double time_limit_s;
    std::function<Outcome()> run;
};

RelevancePartition spread_partition(int t, int critical) {
    std::vector<int> all(static_cast<std::size_t>(t));
    for (int f = 0; f < t; ++f) all[static_cast<std::size_t>(f)] = f;
    const auto f1 = uniform_sample(all, critical);
    std::vector<bool> y(static_cast<std::size_t>(t), false);
    for (int f : f1) y[static_cast<std::size_t>(f)] = true;
    return RelevancePartition::from_decisions(y);
}

Outcome branch_traces() {
    const auto p = spread_partition(64, 10);
    const ScaleConfig scales{2, 1, 4};
    const Tokens budgets[] = {12288, 3000, 2000};
    const Tokens totals[] = {3424, 2992, 1792};
    const std::size_t kept[] = {64, 37, 7};
    std::string detail;
    bool ok = true;
    for (int i = 0; i < 3; ++i) {
        const auto plan = allocate_fragment(p, 256, budgets[i], scales);
        ok &= plan.total_tokens == totals[i] && plan.kept.size() == kept[i];
        detail += "b=" + std::to_string(budgets[i]) + ": total " + std::to_string(plan.total_tokens) + ", kept " +
                  std::to_string(plan.kept.size()) + (i < 2 ? "; " : "");
    }
    return {ok, detail};
}

Outcome oracle_equivalence() {
    const std::vector<ScaleConfig> scales{{2, 1, 2}, {2, 1, 4}};
    const auto s = oracle::exhaustive_compare(1, 10, 16, scales, 0, 160);
    std::string detail = std::to_string(s.cases) + " cases, " + std::to_string(s.mismatches) + " mismatches";
    if (s.mismatches) detail += " (first: " + s.first_mismatch + ")";
    return {s.mismatches == 0, detail};
}

Outcome budget_safety() {
    std::mt19937_64 rng(20260101);
    const std::vector<std::pair<Tokens, ScaleConfig>> geometries{
        {256, {2, 1, 4}}, {256, {4, 2, 8}}, {256, {2, 2, 4}}, {256, {2, 1, 16}}, {64, {2, 1, 4}}, {144, {3, 1, 6}},
        {16, {2, 1, 2}}};
    int plans = 0;
    int violations = 0;
    int too_small = 0;
    std::string first;
    while (plans < 10000) {
        const int t = std::uniform_int_distribution<int>(1, 256)(rng);
        const auto& [n, scales] = geometries[rng() % geometries.size()];
        const double density = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
        std::vector<FrameScore> scores;
        std::vector<bool> y;
        for (int f = 0; f < t; ++f) {
            const bool rel = std::bernoulli_distribution(density)(rng);
            y.push_back(rel);
            scores.push_back({f, rel ? 0.9 : 0.1, rel});
        }
        const Policy policy = rng() % 3 == 0 ? Policy::Global : Policy::Fragment;
        const Tokens b = std::uniform_int_distribution<Tokens>(1, static_cast<Tokens>(t) * n)(rng);
        try {
            const auto plan = allocate(policy, scores, n, b, scales);
            ++plans;
            const auto v = oracle::verify_plan(plan, RelevancePartition::from_decisions(y), n, b, scales);
            if (!v.empty()) {
                if (violations == 0) first = std::string(oracle::to_string(v.front().kind)) + ": " + v.front().detail;
                ++violations;
            }
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::BudgetTooSmall) throw;
            ++too_small;
        }
    }
    std::string detail = std::to_string(plans) + " plans verified, " + std::to_string(violations) +
                         " with violations (" + std::to_string(too_small) + " budgets below one frame skipped)";
    if (violations) detail += "; first: " + first;
    return {violations == 0, detail};
}

Outcome reduction_arithmetic() {
    const double a = token_reduction(16384, 5262);
    const double b = token_reduction(16384, 7748);
    char buf[96];
    std::snprintf(buf, sizeof buf, "16384->5262: %.1f%%, 16384->7748: %.1f%%", a, b);
    return {std::abs(a - 67.9) <= 0.05 && std::abs(b - 52.7) <= 0.1, buf};
}

Outcome loss_correctness() {
    const std::vector<double> half(9, 0.5);
    const std::vector<int> labels{1, 0, 0, 1, 1, 1, 0, 1, 0};
    const double bce = bce_loss(half, labels);

    std::mt19937_64 rng(555);
    std::normal_distribution<double> normal(0.0, 1.0);
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
        const HeadKind head = i % 2 ? HeadKind::Semantic : HeadKind::Image;
        const std::size_t dim = 1 + static_cast<std::size_t>(i % 12);
        RouterModel m = RouterModel::zeros(head, dim);
        for (double& w : m.weights) w = 0.5 * normal(rng);
        for (double& b : m.bias) b = 0.5 * normal(rng);
        std::vector<Example> batch(32);
        for (auto& ex : batch) {
            ex.x.resize(dim);
            for (double& v : ex.x) v = normal(rng);
            ex.label = static_cast<int>(rng() % 2);
        }
        worst = std::max(worst, grad_check(m, batch).max_relative_error);
    }
    const double joint = joint_loss(1.0, 0.5, 0.5, TrainingConfig{});
    char buf[160];
    std::snprintf(buf, sizeof buf, "bce(0.5) - ln2 = %.3g, max grad rel. error %.3g, joint %.17g", bce - std::log(2.0),
                  worst, joint);
    return {std::abs(bce - std::log(2.0)) <= 1e-9 && worst < 1e-5 && joint == 1.01, buf};
}

Outcome router_trainability() {
    auto data = make_separable_dataset(2500, 16, 0.25, 42);
    const std::vector<Example> train(data.begin(), data.begin() + 2000);
    const std::vector<Example> held_out(data.begin() + 2000, data.end());
    TrainingConfig cfg;
    cfg.epochs = 300;
    cfg.learning_rate = 0.1;
    cfg.batch_size = 64;
    cfg.seed = 1;
    const RouterModel semantic = train_router(RouterModel::zeros(HeadKind::Semantic, 16), train, cfg);
    const double semantic_acc = accuracy(semantic, held_out);

    WorkloadSpec spec;
    spec.t = 64;
    spec.evidence_frames = 12;
    spec.noise = 0.1;
    std::vector<Workload> fit;
    std::vector<Workload> test;
    for (std::uint64_t s = 0; s < 24; ++s) {
        spec.seed = 1000 + s;
        spec.evidence_mode = static_cast<EvidenceMode>(s % 3);
        (s < 16 ? fit : test).push_back(gen_workload(spec));
    }
    cfg.epochs = 100;
    const RouterModel image = train_router(RouterModel::zeros(HeadKind::Image, 8), image_examples(fit), cfg);
    const double image_acc = accuracy(image, image_examples(test));

    char buf[128];
    std::snprintf(buf, sizeof buf, "semantic held-out %.4f (>= 0.98), image frame-level %.4f (>= 0.95)", semantic_acc,
                  image_acc);
    return {semantic_acc >= 0.98 && image_acc >= 0.95, buf};
}

Outcome sweep_shape() {
    SweepGrid grid;
    grid.configs = {{"64f", 64, {2, 1, 4}}, {"128f", 128, {2, 1, 4}}};
    grid.budgets = {4096, 8192, 12288, 16384, 24576};

    // Monotonicity across a spread of workloads and both router modes.
    bool monotone = true;
    for (EvidenceMode mode : {EvidenceMode::Spread, EvidenceMode::Concentrated, EvidenceMode::Mixed}) {
        for (std::uint64_t seed = 0; seed < 4; ++seed) {
            WorkloadSpec w;
            w.t = 64;
            w.evidence_frames = 6 + static_cast<int>(seed) * 4;
            w.evidence_mode = mode;
            w.seed = seed;
            grid.workloads.push_back(w);
        }
    }
    const std::size_t nw = grid.workloads.size();
    const auto check_monotone = [&](const std::vector<SweepRow>& rows) {
        for (std::size_t c = 0; c < grid.configs.size(); ++c) {
            for (std::size_t w = 0; w < nw; ++w) {
                for (std::size_t b = 1; b < grid.budgets.size(); ++b) {
                    const auto& prev = rows[(c * grid.budgets.size() + b - 1) * nw + w];
                    const auto& cur = rows[(c * grid.budgets.size() + b) * nw + w];
                    monotone &= cur.utility >= prev.utility;
                    monotone &= cur.status != "ok" || cur.total_tokens <= cur.budget;
                }
            }
        }
    };
    check_monotone(budget_sweep(grid));
    grid.router = RouterMode::Trained;
    grid.training.epochs = 200;
    check_monotone(budget_sweep(grid));

    // The constructed crossover workload: spread evidence, count scaled with T.
    SweepGrid cross;
    cross.configs = grid.configs;
    cross.budgets = grid.budgets;
    WorkloadSpec w;
    w.t = 64;
    w.evidence_frames = 12;
    w.evidence_mode = EvidenceMode::Spread;
    w.seed = 17;
    cross.workloads = {w};
    const auto rows = budget_sweep(cross);
    const double u64_lo = rows[0].utility;
    const double u64_hi = rows[4].utility;
    const double u128_lo = rows[5].utility;
    const double u128_hi = rows[9].utility;
    // Strict advantage at the low budget; at the high budget 64f already keeps all of its evidence at
    // full resolution, so 128f can match it but not exceed it.
    char buf[240];
    std::snprintf(buf, sizeof buf,
                  "monotone=%s; 4096: 64f %.3f > 128f %.3f; 24576: 128f %.3f >= 64f %.3f%s",
                  monotone ? "yes" : "no", u64_lo, u128_lo, u128_hi, u64_hi, u128_hi == u64_hi ? " (tie)" : "");
    return {monotone && u64_lo > u128_lo && u128_hi >= u64_hi, buf};
}

Outcome decision_rules() {
    const FrameScore at_half = score_from_logit(0.0);
    const bool image_ok = at_half.p == 0.5 && !at_half.y_hat;
    const bool label_ok = derive_policy_label({"boundary", 0.65, 0.60}, 0.05) == Policy::Global &&
                          derive_policy_label({"zero", 0.60, 0.60}, 0.0) == Policy::Global &&
                          derive_policy_label({"equal", 0.75, 0.50}, 0.25) == Policy::Global;
    const PolicyDecision tie = semantic_forward(RouterModel::zeros(HeadKind::Semantic, 4), FeatureVector{1, 2, 3, 4});
    const bool tie_ok = tie.decision == Policy::Global && decide_policy(3.5, 3.5).decision == Policy::Global;
    return {image_ok && label_ok && tie_ok, std::string("image p=0.5 -> y_hat=") + (at_half.y_hat ? "1" : "0") +
                                                ", margin == tau -> " + (label_ok ? "Global" : "Fragment") +
                                                ", semantic tie -> " + (tie_ok ? "Global" : "Fragment")};
}

Outcome context_guarantee() {
    std::mt19937_64 rng(9001);
    WorkloadSpec base;
    base.t = 64;
    base.evidence_frames = 10;
    TrainingConfig cfg;
    cfg.epochs = 100;
    const RouterPair routers = train_reference_routers(base, 12, cfg);

    const std::vector<std::pair<Tokens, ScaleConfig>> geometries{
        {256, {2, 1, 4}}, {256, {4, 2, 8}}, {64, {2, 1, 4}}, {144, {3, 1, 6}}};
    int fits = 0;
    const int runs = 1000;
    for (int i = 0; i < runs; ++i) {
        const auto& [n, scales] = geometries[static_cast<std::size_t>(i) % geometries.size()];
        WorkloadSpec spec = base;
        spec.t = std::uniform_int_distribution<int>(1, 128)(rng);
        spec.n = n;
        spec.evidence_frames = std::uniform_int_distribution<int>(0, spec.t)(rng);
        spec.evidence_mode = static_cast<EvidenceMode>(rng() % 3);
        spec.noise = std::uniform_real_distribution<double>(0.0, 0.5)(rng);
        spec.seed = rng();

        PipelineOptions opts;
        opts.scales = scales;
        opts.token_dim = 2;
        if (i % 2 == 0) opts.routers = routers;
        const Tokens visual = std::uniform_int_distribution<Tokens>(n, static_cast<Tokens>(spec.t) * n + n)(rng);
        opts.budget.l_text = std::uniform_int_distribution<Tokens>(0, 2000)(rng);
        opts.budget.l_gen = std::uniform_int_distribution<Tokens>(0, 1024)(rng);
        opts.budget.epsilon = 100;
        opts.budget.l_max = visual + opts.budget.l_text + opts.budget.l_gen + opts.budget.epsilon;

        const PipelineResult r = run_pipeline(gen_workload(spec), opts);
        fits += r.fits ? 1 : 0;
    }
    return {fits == runs, std::to_string(fits) + "/" + std::to_string(runs) + " runs satisfy fits_context"};
}

}  // namespace

int main() {
    const std::vector<Criterion> criteria{
        {1, "Fragment allocation branch traces", 1.0, branch_traces},
        {2, "Exhaustive oracle equivalence (T<=10, n=16)", 60.0, oracle_equivalence},
        {3, "Budget safety over 10,000 random instances", 30.0, budget_safety},
        {4, "Token-reduction arithmetic", 1.0, reduction_arithmetic},
        {5, "Loss and gradient correctness", 10.0, loss_correctness},
        {6, "Router trainability", 60.0, router_trainability},
        {7, "Budget-sweep shape", 120.0, sweep_shape},
        {8, "Decision-rule fidelity", 1.0, decision_rules},
        {9, "End-to-end context guarantee (1,000 runs)", 120.0, context_guarantee},
    };

    int failed = 0;
    for (const auto& c : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        const bool in_time = secs < c.time_limit_s;
        const bool pass = o.pass && in_time;
        failed += pass ? 0 : 1;
        std::printf("[%s] AC%d %s: %s (%.3f s, limit %.0f s)\n", pass ? "PASS" : "FAIL", c.id, c.name,
                    o.detail.c_str(), secs, c.time_limit_s);
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
