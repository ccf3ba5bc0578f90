// Copyright 2026 The evbudget Authors
// SPDX-License-Identifier: Apache-2.0

#include "evb/harness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <future>
#include <numeric>
#include <random>
#include <sstream>

#include "evb/error.hpp"
#include "evb/io.hpp"

namespace evb {

namespace {

FeatureVector unit_direction(std::mt19937_64& rng, std::size_t dim) {
    std::normal_distribution<double> normal(0.0, 1.0);
    FeatureVector v(dim);
    double norm = 0.0;
    do {
        for (double& x : v) {
            x = normal(rng);
        }
        norm = std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
    } while (norm < 1e-6);
    for (double& x : v) {
        x /= norm;
    }
    return v;
}

// Class directions shared by every workload of a given feature dimension.
struct ClassDirections {
    FeatureVector relevance;
    FeatureVector policy;
};

ClassDirections class_directions(std::size_t dim) {
    std::mt19937_64 rng(0xC0FFEEull + dim);
    ClassDirections d;
    d.relevance = unit_direction(rng, dim);
    d.policy = unit_direction(rng, dim);
    return d;
}

FeatureVector noisy_point(const FeatureVector& direction, double sign, double noise, std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    FeatureVector x(direction.size());
    for (std::size_t j = 0; j < x.size(); ++j) {
        x[j] = sign * direction[j] + noise * normal(rng);
    }
    return x;
}

std::vector<int> evidence_positions(const WorkloadSpec& spec, std::mt19937_64& rng) {
    const int t = spec.t;
    const int e = spec.evidence_frames;
    std::vector<int> out;
    if (e == 0) {
        return out;
    }
    const auto block = [&](int start, int len) {
        for (int i = 0; i < len; ++i) {
            out.push_back(start + i);
        }
    };
    switch (spec.evidence_mode) {
        case EvidenceMode::Concentrated: {
            std::uniform_int_distribution<int> pick(0, t - e);
            block(pick(rng), e);
            break;
        }
        case EvidenceMode::Spread: {
            std::vector<int> all(static_cast<std::size_t>(t));
            std::iota(all.begin(), all.end(), 0);
            out = uniform_sample(all, e);
            break;
        }
        case EvidenceMode::Mixed: {
            const int first = (e + 1) / 2;
            const int second = e - first;
            std::uniform_int_distribution<int> jitter(-std::max(1, t / 16), std::max(1, t / 16));
            int start1 = std::clamp(t / 4 - first / 2 + jitter(rng), 0, t - e);
            int start2 = std::clamp(3 * t / 4 - second / 2 + jitter(rng), start1 + first, t - second);
            block(start1, first);
            block(start2, second);
            break;
        }
    }
    return out;
}

// Grids stand in for a frame's projected patch tokens.
TokenGrid synthetic_grid(std::size_t side, std::size_t dim, std::uint64_t seed, int frame) {
    std::mt19937_64 rng(seed ^ (0x9E3779B97F4A7C15ull * static_cast<std::uint64_t>(frame + 1)));
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    TokenGrid g = TokenGrid::filled(side, dim);
    for (double& v : g.values) {
        v = uni(rng);
    }
    return g;
}

struct Routed {
    PolicyDecision decision;
    std::vector<FrameScore> scores;
};

Routed route(const Workload& w, const std::optional<RouterPair>& routers) {
    Routed r;
    if (routers) {
        r.decision = semantic_forward(routers->semantic, w.query_features);
        for (const auto& f : w.frames) {
            r.scores.push_back(image_forward(routers->image, f.features, f.index));
        }
        return r;
    }
    const bool fragment = w.policy_label == Policy::Fragment;
    r.decision.probabilities = {fragment ? 0.0 : 1.0, fragment ? 1.0 : 0.0};
    r.decision.decision = w.policy_label;
    for (const auto& f : w.frames) {
        r.scores.push_back(FrameScore{f.index, f.relevant ? 1.0 : 0.0, f.relevant});
    }
    return r;
}

std::string format_double(const char* fmt, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, fmt, v);
    return buf;
}

}  // namespace

void WorkloadSpec::validate() const {
    if (t < 1) {
        throw Error(ErrorKind::InvalidSpec, "workload needs at least one frame");
    }
    if (!grid_side(n)) {
        throw Error(ErrorKind::InvalidSpec, "tokens per frame must be a perfect square");
    }
    if (evidence_frames < 0 || evidence_frames > t) {
        throw Error(ErrorKind::InvalidSpec, "evidence_frames must lie in [0, t]");
    }
    if (feature_dim < 1) {
        throw Error(ErrorKind::InvalidSpec, "feature_dim must be positive");
    }
    if (!(noise >= 0.0) || !std::isfinite(noise)) {
        throw Error(ErrorKind::InvalidSpec, "noise must be a finite non-negative number");
    }
}

Workload gen_workload(const WorkloadSpec& spec) {
    spec.validate();
    std::mt19937_64 rng(spec.seed);
    const ClassDirections dirs = class_directions(static_cast<std::size_t>(spec.feature_dim));

    Workload w;
    w.spec = spec;
    std::vector<char> relevant(static_cast<std::size_t>(spec.t), 0);
    for (int f : evidence_positions(spec, rng)) {
        relevant[static_cast<std::size_t>(f)] = 1;
    }
    for (int f = 0; f < spec.t; ++f) {
        const bool rel = relevant[static_cast<std::size_t>(f)] != 0;
        w.frames.push_back(FrameDescriptor{f, noisy_point(dirs.relevance, rel ? 1.0 : -1.0, spec.noise, rng), rel,
                                           rel ? 1.0 : 0.0});
    }
    w.policy_label =
        spec.evidence_frames > 0 && spec.evidence_frames < spec.t ? Policy::Fragment : Policy::Global;
    w.query_features =
        noisy_point(dirs.policy, w.policy_label == Policy::Fragment ? 1.0 : -1.0, spec.noise, rng);
    return w;
}

std::vector<Example> image_examples(std::span<const Workload> workloads) {
    std::vector<Example> out;
    for (const auto& w : workloads) {
        for (const auto& f : w.frames) {
            out.push_back(Example{f.features, f.relevant ? 1 : 0});
        }
    }
    return out;
}

std::vector<Example> semantic_examples(std::span<const Workload> workloads) {
    std::vector<Example> out;
    for (const auto& w : workloads) {
        out.push_back(Example{w.query_features, static_cast<int>(w.policy_label)});
    }
    return out;
}

std::vector<Example> make_separable_dataset(std::size_t count, std::size_t dim, double margin, std::uint64_t seed) {
    if (dim == 0 || margin < 0.0) {
        throw Error(ErrorKind::InvalidArgument, "separable dataset needs dim >= 1 and margin >= 0");
    }
    std::mt19937_64 rng(seed);
    const FeatureVector normal = unit_direction(rng, dim);
    std::uniform_real_distribution<double> uni(-3.0, 3.0);
    std::vector<Example> out;
    out.reserve(count);
    FeatureVector x(dim);
    while (out.size() < count) {
        for (double& v : x) {
            v = uni(rng);
        }
        const double distance = std::inner_product(x.begin(), x.end(), normal.begin(), 0.0);
        if (std::abs(distance) >= margin) {
            out.push_back(Example{x, distance > 0.0 ? 1 : 0});
        }
    }
    return out;
}

RouterPair train_reference_routers(const WorkloadSpec& base, int count, const TrainingConfig& cfg) {
    if (count < 1) {
        throw Error(ErrorKind::EmptyInput, "need at least one training workload");
    }
    std::vector<Workload> train;
    for (int i = 0; i < count; ++i) {
        WorkloadSpec s = base;
        s.seed = base.seed + 7919ull * static_cast<std::uint64_t>(i + 1);
        s.evidence_mode = static_cast<EvidenceMode>(i % 3);
        switch (i % 4) {
            case 0: s.evidence_frames = 0; break;
            case 1: s.evidence_frames = s.t; break;
            case 2: s.evidence_frames = std::clamp(base.evidence_frames, 1, std::max(1, s.t - 1)); break;
            default: s.evidence_frames = std::max(1, s.t / 4); break;
        }
        s.evidence_frames = std::min(s.evidence_frames, s.t);
        train.push_back(gen_workload(s));
    }
    const std::size_t dim = static_cast<std::size_t>(base.feature_dim);
    RouterPair pair;
    const auto frames = image_examples(train);
    pair.image = train_router(RouterModel::zeros(HeadKind::Image, dim), frames, cfg);
    const auto queries = semantic_examples(train);
    pair.semantic = train_router(RouterModel::zeros(HeadKind::Semantic, dim), queries, cfg);
    return pair;
}

Policy derive_policy_label(const ABRecord& record, double tau) {
    if (!(tau >= 0.0)) {
        throw Error(ErrorKind::InvalidArgument, "tau must be non-negative");
    }
    const double margin = record.acc_fragment - record.acc_global;
    return margin - tau > 1e-12 ? Policy::Fragment : Policy::Global;
}

double utility(const AllocationPlan& plan, const Workload& workload) {
    const auto t = static_cast<int>(workload.frames.size());
    if (plan.frame_count() != t) {
        throw Error(ErrorKind::ShapeMismatch, "plan covers " + std::to_string(plan.frame_count()) +
                                                  " frames, workload has " + std::to_string(t));
    }
    double total = 0.0;
    for (const auto& f : workload.frames) {
        total += f.evidence;
    }
    double retained = 0.0;
    for (const auto& k : plan.kept) {
        if (k.frame < 0 || k.frame >= t) {
            throw Error(ErrorKind::ShapeMismatch, "plan keeps frame " + std::to_string(k.frame) +
                                                      " outside the workload");
        }
        retained += workload.frames[static_cast<std::size_t>(k.frame)].evidence / (static_cast<double>(k.scale) * k.scale);
    }
    return total == 0.0 ? 1.0 : retained / total;
}

double token_reduction(Tokens dense, Tokens compressed) {
    if (dense <= 0 || compressed < 0) {
        throw Error(ErrorKind::InvalidArgument, "token_reduction needs dense > 0 and compressed >= 0");
    }
    const double pct = 100.0 * (1.0 - static_cast<double>(compressed) / static_cast<double>(dense));
    return std::round(pct * 10.0) / 10.0;
}

Tokens cost_proxy(const AllocationPlan& plan, bool router_used, const CostModel& model) {
    return plan.total_tokens + (router_used ? model.router_units : 0);
}

std::vector<SweepRow> budget_sweep(const SweepGrid& grid) {
    if (grid.workloads.empty() || grid.configs.empty() || grid.budgets.empty()) {
        throw Error(ErrorKind::EmptyInput, "sweep needs workloads, configs and budgets");
    }
    std::optional<RouterPair> routers;
    if (grid.router == RouterMode::Trained) {
        routers = train_reference_routers(grid.workloads.front(), grid.training_workloads, grid.training);
    }

    const std::size_t nw = grid.workloads.size();
    // One task per (config, workload); each yields one row per budget.
    std::vector<std::future<std::vector<SweepRow>>> cells;
    for (std::size_t c = 0; c < grid.configs.size(); ++c) {
        for (std::size_t wi = 0; wi < nw; ++wi) {
            cells.push_back(std::async(std::launch::async, [&, c, wi] {
                const SweepConfig& cfg = grid.configs[c];
                WorkloadSpec spec = grid.workloads[wi];
                const int base_t = spec.t;
                spec.t = cfg.frames;
                spec.evidence_frames =
                    std::clamp((spec.evidence_frames * cfg.frames + base_t / 2) / base_t, 0, cfg.frames);
                const Workload w = gen_workload(spec);
                const Routed r = route(w, routers);
                const std::string label = nw == 1 ? cfg.label : cfg.label + "/w" + std::to_string(wi);
                const Tokens dense = static_cast<Tokens>(cfg.frames) * spec.n;

                std::vector<SweepRow> rows;
                for (Tokens b : grid.budgets) {
                    SweepRow row;
                    row.config = label;
                    row.budget = b;
                    try {
                        const AllocationPlan plan = allocate(r.decision, r.scores, spec.n, b, cfg.scales);
                        row.frames = static_cast<int>(plan.kept.size());
                        row.total_tokens = plan.total_tokens;
                        row.utility = utility(plan, w);
                        row.reduction_pct = token_reduction(dense, plan.total_tokens);
                        row.cost_units = cost_proxy(plan, grid.router_used, grid.cost);
                    } catch (const Error& e) {
                        row.status = std::string(to_string(e.kind()));
                    }
                    rows.push_back(std::move(row));
                }
                return rows;
            }));
        }
    }

    std::vector<std::vector<SweepRow>> results;
    for (auto& f : cells) {
        results.push_back(f.get());
    }
    std::vector<SweepRow> rows;
    for (std::size_t c = 0; c < grid.configs.size(); ++c) {
        for (std::size_t b = 0; b < grid.budgets.size(); ++b) {
            for (std::size_t wi = 0; wi < nw; ++wi) {
                rows.push_back(results[c * nw + wi][b]);
            }
        }
    }
    return rows;
}

std::string format_report(std::span<const SweepRow> rows, ReportFormat format) {
    if (format == ReportFormat::Json) {
        json j = json::array();
        for (const auto& r : rows) {
            j.push_back(r);
        }
        return j.dump(2) + "\n";
    }
    std::ostringstream out;
    out << "config,budget,frames,total_tokens,utility,reduction_pct,cost_units,status\n";
    for (const auto& r : rows) {
        out << r.config << ',' << r.budget << ',' << r.frames << ',' << r.total_tokens << ','
            << format_double("%.6f", r.utility) << ',' << format_double("%.1f", r.reduction_pct) << ','
            << r.cost_units << ',' << r.status << '\n';
    }
    return out.str();
}

void emit_report(std::span<const SweepRow> rows, ReportFormat format, const std::filesystem::path& path) {
    write_text_file(path, format_report(rows, format));
}

PipelineResult run_pipeline(const Workload& workload, const PipelineOptions& opts) {
    const Tokens budget = compute_budget(opts.budget);
    const Tokens n = workload.spec.n;
    const auto side = static_cast<std::size_t>(*grid_side(n));

    PipelineResult result;
    Routed r = route(workload, opts.routers);
    result.decision = r.decision;
    result.scores = std::move(r.scores);
    result.plan = allocate(result.decision, result.scores, n, budget, opts.scales);

    std::vector<TokenGrid> grids;
    grids.reserve(workload.frames.size());
    for (const auto& f : workload.frames) {
        grids.push_back(synthetic_grid(side, opts.token_dim, workload.spec.seed, f.index));
    }
    const auto pooled = pool_kept_frames(result.plan, grids);
    const Tokens prefix = opts.budget.l_text / 2;
    const PromptTemplate prompt = PromptTemplate::video_prompt(static_cast<int>(workload.frames.size()), prefix,
                                                               opts.budget.l_text - prefix);
    result.sequence = reconstruct(prompt, result.plan, pooled);
    result.fits = fits_context(result.sequence, opts.budget);
    return result;
}

std::uint64_t seed_from_env(std::uint64_t fallback) {
    const char* raw = std::getenv("EB_SEED");
    if (raw == nullptr || *raw == '\0') {
        return fallback;
    }
    std::uint64_t seed = 0;
    const std::string_view s(raw);
    const auto res = std::from_chars(s.data(), s.data() + s.size(), seed);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
        throw Error(ErrorKind::ParseError, "EB_SEED must be an unsigned integer, got '" + std::string(s) + "'");
    }
    return seed;
}

}  // namespace evb
