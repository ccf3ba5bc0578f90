// Copyright 2026 The evbudget Authors
// SPDX-License-Identifier: Apache-2.0

// File formats: JSON documents for models, plans, workloads, grids and
// sweep grids; JSON lines for frame scores; CSV for A/B records and reports.

#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "evb/allocator.hpp"
#include "evb/harness.hpp"
#include "evb/routers.hpp"
#include "evb/sequencer.hpp"

namespace evb {

using json = nlohmann::json;

std::string_view to_string(Policy p) noexcept;
std::string_view to_string(HeadKind h) noexcept;
std::string_view to_string(EvidenceMode m) noexcept;
Policy policy_from_string(std::string_view s);
HeadKind head_from_string(std::string_view s);
EvidenceMode evidence_mode_from_string(std::string_view s);

void to_json(json& j, const RouterModel& m);
void from_json(const json& j, RouterModel& m);
void to_json(json& j, const FrameScore& s);
void from_json(const json& j, FrameScore& s);
void to_json(json& j, const ScaleConfig& s);
void from_json(const json& j, ScaleConfig& s);
void to_json(json& j, const BudgetConfig& c);
void from_json(const json& j, BudgetConfig& c);
void to_json(json& j, const KeptFrame& k);
void from_json(const json& j, KeptFrame& k);
void to_json(json& j, const AllocationPlan& p);
void from_json(const json& j, AllocationPlan& p);
void to_json(json& j, const TokenGrid& g);
void from_json(const json& j, TokenGrid& g);
void to_json(json& j, const WorkloadSpec& s);
void from_json(const json& j, WorkloadSpec& s);
void to_json(json& j, const FrameDescriptor& f);
void from_json(const json& j, FrameDescriptor& f);
void to_json(json& j, const Workload& w);
void from_json(const json& j, Workload& w);
void to_json(json& j, const SweepRow& r);
void from_json(const json& j, SweepRow& r);
void to_json(json& j, const SweepConfig& c);
void from_json(const json& j, SweepConfig& c);
void to_json(json& j, const SweepGrid& g);
void from_json(const json& j, SweepGrid& g);
void to_json(json& j, const Example& e);
void from_json(const json& j, Example& e);

/// Per-segment `{kind, frame?, count}` plus `total_length`.
json sequence_summary(const TokenSequence& seq);

/// Parses "sg,s1,s0".
ScaleConfig parse_scales(std::string_view text);

/// One verification instance: relevance decisions plus the allocation inputs.
struct Instance {
    Tokens n = 256;
    Tokens budget = 0;
    ScaleConfig scales;
    std::vector<bool> y_hat;
};
void to_json(json& j, const Instance& i);
void from_json(const json& j, Instance& i);

/// Run-config file: a `budget` block and optional `scales` / `n`.
struct RunConfig {
    BudgetConfig budget;
    ScaleConfig scales;
    Tokens n = 256;
};
RunConfig parse_run_config(const json& j);

std::vector<FrameScore> read_scores_jsonl(std::istream& in);
void write_scores_jsonl(std::ostream& out, const std::vector<FrameScore>& scores);

/// CSV with header `category,acc_fragment,acc_global`.
std::vector<ABRecord> read_ab_csv(std::istream& in);

json read_json_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace evb
