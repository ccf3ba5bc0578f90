// Copyright 2026 The evbudget Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "evb/allocator.hpp"
#include "evb/budget.hpp"
#include "evb/routers.hpp"
#include "evb/sequencer.hpp"

namespace evb {

enum class EvidenceMode { Concentrated, Spread, Mixed };

/// Synthetic stand-in for one sampled video and its question.
struct WorkloadSpec {
    int t = 64;
    Tokens n = 256;
    EvidenceMode evidence_mode = EvidenceMode::Spread;
    int evidence_frames = 10;
    int feature_dim = 8;
    double noise = 0.1;
    std::uint64_t seed = 0;

    void validate() const;

    bool operator==(const WorkloadSpec&) const = default;
};

struct FrameDescriptor {
    int index = 0;
    FeatureVector features;
    bool relevant = false;
    double evidence = 0.0;

    bool operator==(const FrameDescriptor&) const = default;
};

struct Workload {
    WorkloadSpec spec;
    std::vector<FrameDescriptor> frames;
    FeatureVector query_features;
    Policy policy_label = Policy::Global;

    bool operator==(const Workload&) const = default;
};

/// Deterministic in spec.seed. Relevant frames cluster around +u and the rest
/// around -u for a fixed direction u per feature dimension, so one image head
/// generalizes across workloads; query features do the same for the policy label.
Workload gen_workload(const WorkloadSpec& spec);

/// Frame features and relevance labels, for the image head.
std::vector<Example> image_examples(std::span<const Workload> workloads);
/// Query features and policy labels, for the semantic head.
std::vector<Example> semantic_examples(std::span<const Workload> workloads);

/// `count` points in [-3, 3]^dim whose distance to a random hyperplane through
/// the origin is at least `margin`, labelled by side.
std::vector<Example> make_separable_dataset(std::size_t count, std::size_t dim, double margin, std::uint64_t seed);

struct RouterPair {
    RouterModel semantic;
    RouterModel image;
};

/// Trains both reference heads on `count` fresh workloads derived from `base`,
/// one head at a time.
RouterPair train_reference_routers(const WorkloadSpec& base, int count, const TrainingConfig& cfg);

struct ABRecord {
    std::string category;
    double acc_fragment = 0.0;
    double acc_global = 0.0;
};

/// Fragment only when the Fragment accuracy beats Global by strictly more
/// than tau. Differences within 1e-12 of tau count as equal.
Policy derive_policy_label(const ABRecord& record, double tau);

/// Fidelity-weighted share of ground-truth evidence the plan retains.
double utility(const AllocationPlan& plan, const Workload& workload);

/// 100 * (1 - compressed / dense), rounded to one decimal.
double token_reduction(Tokens dense, Tokens compressed);

/// Router overhead in token-equivalents: 0.5 s router vs 3.0 s prefill at 7,748 tokens.
inline constexpr Tokens kDefaultRouterUnits = 1291;

struct CostModel {
    Tokens router_units = kDefaultRouterUnits;
};

Tokens cost_proxy(const AllocationPlan& plan, bool router_used, const CostModel& model = {});

enum class RouterMode { Oracle, Trained };

struct SweepConfig {
    std::string label;
    int frames = 64;
    ScaleConfig scales;
};

struct SweepGrid {
    /// Base workloads. Each config resamples them at its own frame count, with
    /// the evidence count scaled in proportion.
    std::vector<WorkloadSpec> workloads;
    std::vector<SweepConfig> configs;
    std::vector<Tokens> budgets;
    RouterMode router = RouterMode::Oracle;
    bool router_used = true;
    CostModel cost;
    TrainingConfig training;
    int training_workloads = 16;
};

struct SweepRow {
    std::string config;
    Tokens budget = 0;
    int frames = 0;
    Tokens total_tokens = 0;
    double utility = 0.0;
    double reduction_pct = 0.0;
    Tokens cost_units = 0;
    std::string status = "ok";

    bool operator==(const SweepRow&) const = default;
};

/// Rows ordered by (config, budget, workload). Allocation failures become
/// row statuses; the sweep itself never aborts on them.
std::vector<SweepRow> budget_sweep(const SweepGrid& grid);

enum class ReportFormat { Csv, Json };

std::string format_report(std::span<const SweepRow> rows, ReportFormat format);
void emit_report(std::span<const SweepRow> rows, ReportFormat format, const std::filesystem::path& path);

struct PipelineOptions {
    BudgetConfig budget;
    ScaleConfig scales;
    /// Trained routers; ground truth is used when absent.
    std::optional<RouterPair> routers;
    std::size_t token_dim = 4;
};

struct PipelineResult {
    PolicyDecision decision;
    std::vector<FrameScore> scores;
    AllocationPlan plan;
    TokenSequence sequence;
    bool fits = false;
};

/// Route, allocate, pool and reconstruct one workload.
PipelineResult run_pipeline(const Workload& workload, const PipelineOptions& opts);

/// Applies the EB_SEED environment override when it is set.
std::uint64_t seed_from_env(std::uint64_t fallback);

}  // namespace evb
