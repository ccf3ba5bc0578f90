// Copyright 2026 The evbudget Authors
// SPDX-License-Identifier: Apache-2.0

// Command-line front end: workload generation, router training, allocation,
// label derivation, budget sweeps and plan verification.

#include <charconv>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "evb/allocator.hpp"
#include "evb/budget.hpp"
#include "evb/error.hpp"
#include "evb/harness.hpp"
#include "evb/io.hpp"
#include "evb/oracle.hpp"
#include "evb/routers.hpp"

namespace {

using namespace evb;
namespace fs = std::filesystem;

std::optional<Tokens> parse_int(const std::string& s) {
    Tokens v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
        return std::nullopt;
    }
    return v;
}

// An integer budget, or a run-config file whose `budget` block is evaluated.
Tokens resolve_budget(const std::string& arg) {
    if (const auto v = parse_int(arg)) {
        return *v;
    }
    return compute_budget(parse_run_config(read_json_file(arg)).budget);
}

std::vector<Example> load_examples(const json& j, HeadKind head) {
    if (j.is_object() && j.contains("examples")) {
        return j.at("examples").get<std::vector<Example>>();
    }
    std::vector<Workload> workloads;
    if (j.is_array()) {
        workloads = j.get<std::vector<Workload>>();
    } else {
        workloads.push_back(j.get<Workload>());
    }
    return head == HeadKind::Image ? image_examples(workloads) : semantic_examples(workloads);
}

void write_json(const fs::path& path, const json& j) { write_text_file(path, j.dump(2) + "\n"); }

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Budgeted visual-token allocation toolkit"};
    app.require_subcommand(1);

    // gen-workload
    auto* gen = app.add_subcommand("gen-workload", "Generate a synthetic workload");
    std::string gen_spec, gen_out;
    gen->add_option("--spec", gen_spec, "Workload spec (JSON)")->required()->check(CLI::ExistingFile);
    gen->add_option("--out", gen_out, "Output workload (JSON)")->required();

    // train-router
    auto* train = app.add_subcommand("train-router", "Train a reference router head");
    std::string head_name, train_data, train_out;
    TrainingConfig tcfg;
    tcfg.epochs = 500;
    train->add_option("--head", head_name, "semantic or image")->required()->check(CLI::IsMember({"semantic", "image"}));
    train->add_option("--data", train_data, "Examples, a workload, or a workload array (JSON)")
        ->required()
        ->check(CLI::ExistingFile);
    train->add_option("--out", train_out, "Output model (JSON)")->required();
    train->add_option("--lr", tcfg.learning_rate, "Learning rate")->capture_default_str();
    train->add_option("--epochs", tcfg.epochs, "Epochs")->capture_default_str();
    train->add_option("--batch", tcfg.batch_size, "Mini-batch size (0 = full batch)")->capture_default_str();
    train->add_option("--seed", tcfg.seed, "Shuffle seed")->capture_default_str();

    // score
    auto* score = app.add_subcommand("score", "Score workload frames with an image head");
    std::string score_model, score_workload, score_out;
    score->add_option("--model", score_model, "Image head (JSON)")->required()->check(CLI::ExistingFile);
    score->add_option("--workload", score_workload, "Workload (JSON)")->required()->check(CLI::ExistingFile);
    score->add_option("--out", score_out, "Output scores (JSON lines)")->required();

    // allocate
    auto* alloc = app.add_subcommand("allocate", "Allocate the visual-token budget over scored frames");
    std::string alloc_scores, alloc_budget, alloc_scales = "2,1,4", alloc_out, alloc_policy = "fragment";
    Tokens alloc_n = 256;
    alloc->add_option("--scores", alloc_scores, "Frame scores (JSON lines)")->required()->check(CLI::ExistingFile);
    alloc->add_option("--budget", alloc_budget, "Integer budget or run-config file")->required();
    alloc->add_option("--scales", alloc_scales, "sg,s1,s0")->capture_default_str();
    alloc->add_option("--n", alloc_n, "Tokens per frame")->capture_default_str();
    alloc->add_option("--policy", alloc_policy, "global or fragment")
        ->capture_default_str()
        ->check(CLI::IsMember({"global", "fragment"}));
    alloc->add_option("--out", alloc_out, "Output plan (JSON)")->required();

    // derive-labels
    auto* labels = app.add_subcommand("derive-labels", "Derive allocation-policy labels from A/B accuracies");
    std::string ab_path;
    double tau = 0.0;
    labels->add_option("--ab", ab_path, "A/B CSV: category,acc_fragment,acc_global")
        ->required()
        ->check(CLI::ExistingFile);
    labels->add_option("--tau", tau, "Accuracy margin threshold")->required();

    // sweep
    auto* sweep = app.add_subcommand("sweep", "Run a budget-sensitivity sweep");
    std::string grid_path, sweep_out;
    sweep->add_option("--grid", grid_path, "Sweep grid (JSON)")->required()->check(CLI::ExistingFile);
    sweep->add_option("--out", sweep_out, "Report path (.csv or .json)")->required();

    // verify
    auto* verify = app.add_subcommand("verify", "Check a plan against the allocation rules");
    std::string verify_plan_path, verify_instance;
    verify->add_option("--plan", verify_plan_path, "Plan (JSON)")->required()->check(CLI::ExistingFile);
    verify->add_option("--instance", verify_instance, "Instance (JSON)")->required()->check(CLI::ExistingFile);

    // pipeline
    auto* pipe = app.add_subcommand("pipeline", "Route, allocate, pool and reconstruct one workload");
    std::string pipe_workload, pipe_config, pipe_image, pipe_semantic, pipe_out;
    pipe->add_option("--workload", pipe_workload, "Workload (JSON)")->required()->check(CLI::ExistingFile);
    pipe->add_option("--config", pipe_config, "Run config with a budget block (JSON)")
        ->required()
        ->check(CLI::ExistingFile);
    pipe->add_option("--image-model", pipe_image, "Image head; ground truth when omitted")->check(CLI::ExistingFile);
    pipe->add_option("--semantic-model", pipe_semantic, "Semantic head; ground truth when omitted")
        ->check(CLI::ExistingFile);
    pipe->add_option("--out", pipe_out, "Sequence summary (JSON)")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) {
            auto spec = read_json_file(gen_spec).get<WorkloadSpec>();
            spec.seed = seed_from_env(spec.seed);
            write_json(gen_out, gen_workload(spec));
        } else if (train->parsed()) {
            const HeadKind head = head_from_string(head_name);
            tcfg.seed = seed_from_env(tcfg.seed);
            const auto examples = load_examples(read_json_file(train_data), head);
            if (examples.empty()) {
                throw Error(ErrorKind::EmptyInput, "no training examples in " + train_data);
            }
            const RouterModel init = RouterModel::zeros(head, examples.front().x.size());
            const RouterModel model = train_router(init, examples, tcfg);
            write_json(train_out, model);
            std::cout << "loss " << mean_loss(init, examples) << " -> " << mean_loss(model, examples)
                      << ", accuracy " << accuracy(model, examples) << "\n";
        } else if (score->parsed()) {
            const auto model = read_json_file(score_model).get<RouterModel>();
            const auto workload = read_json_file(score_workload).get<Workload>();
            std::vector<FrameScore> scores;
            for (const auto& f : workload.frames) {
                scores.push_back(image_forward(model, f.features, f.index));
            }
            std::ofstream out(score_out);
            if (!out) {
                throw Error(ErrorKind::IoFailure, "cannot write " + score_out);
            }
            write_scores_jsonl(out, scores);
        } else if (alloc->parsed()) {
            std::ifstream in(alloc_scores);
            const auto scores = read_scores_jsonl(in);
            const AllocationPlan plan = allocate(policy_from_string(alloc_policy), scores, alloc_n,
                                                 resolve_budget(alloc_budget), parse_scales(alloc_scales));
            write_json(alloc_out, plan);
            std::cout << to_string(plan.policy) << ": kept " << plan.kept.size() << " of " << plan.frame_count()
                      << " frames, " << plan.total_tokens << " tokens\n";
        } else if (labels->parsed()) {
            std::ifstream in(ab_path);
            std::cout << "category,label\n";
            for (const auto& rec : read_ab_csv(in)) {
                std::cout << rec.category << ',' << to_string(derive_policy_label(rec, tau)) << '\n';
            }
        } else if (sweep->parsed()) {
            auto grid = read_json_file(grid_path).get<SweepGrid>();
            if (std::getenv("EB_SEED") != nullptr) {
                const std::uint64_t base = seed_from_env(0);
                for (std::size_t i = 0; i < grid.workloads.size(); ++i) {
                    grid.workloads[i].seed = base + i;
                }
                grid.training.seed = base;
            }
            const auto rows = budget_sweep(grid);
            const bool as_json = fs::path(sweep_out).extension() == ".json";
            emit_report(rows, as_json ? ReportFormat::Json : ReportFormat::Csv, sweep_out);
            std::cout << rows.size() << " rows written to " << sweep_out << "\n";
        } else if (verify->parsed()) {
            const auto plan = read_json_file(verify_plan_path).get<AllocationPlan>();
            const auto inst = read_json_file(verify_instance).get<Instance>();
            const auto partition = RelevancePartition::from_decisions(inst.y_hat);
            const auto violations = oracle::verify_plan(plan, partition, inst.n, inst.budget, inst.scales);
            for (const auto& v : violations) {
                std::cout << oracle::to_string(v.kind) << ": " << v.detail << "\n";
            }
            if (!violations.empty()) {
                return 1;
            }
            std::cout << "ok\n";
        } else if (pipe->parsed()) {
            const auto workload = read_json_file(pipe_workload).get<Workload>();
            const RunConfig rc = parse_run_config(read_json_file(pipe_config));
            PipelineOptions opts;
            opts.budget = rc.budget;
            opts.scales = rc.scales;
            if (!pipe_image.empty() || !pipe_semantic.empty()) {
                if (pipe_image.empty() || pipe_semantic.empty()) {
                    throw Error(ErrorKind::InvalidArgument, "pass both --image-model and --semantic-model");
                }
                opts.routers = RouterPair{read_json_file(pipe_semantic).get<RouterModel>(),
                                          read_json_file(pipe_image).get<RouterModel>()};
            }
            const PipelineResult r = run_pipeline(workload, opts);
            json summary = sequence_summary(r.sequence);
            summary["plan"] = r.plan;
            summary["fits_context"] = r.fits;
            write_json(pipe_out, summary);
            std::cout << to_string(r.plan.policy) << ": " << r.sequence.total_length << " tokens, fits_context "
                      << (r.fits ? "true" : "false") << "\n";
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const json::exception& e) {
        std::cerr << "error: malformed input: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
