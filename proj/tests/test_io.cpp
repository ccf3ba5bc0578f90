// Copyright 2026 The evbudget Authors
// SPDX-License-Identifier: Apache-2.0

#include <random>
#include <sstream>

#include "doctest.h"

#include "evb/error.hpp"
#include "evb/io.hpp"

using namespace evb;

TEST_CASE("plans and models survive a JSON round trip") {
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 200; ++trial) {
        const int t = 1 + static_cast<int>(rng() % 80);
        std::vector<bool> y(static_cast<std::size_t>(t));
        for (std::size_t i = 0; i < y.size(); ++i) y[i] = rng() % 3 == 0;
        const Tokens b = 256 + static_cast<Tokens>(rng() % static_cast<std::uint64_t>(t * 256));
        const auto plan = trial % 2 ? allocate_fragment(RelevancePartition::from_decisions(y), 256, b, {2, 1, 4})
                                    : allocate_global(t, 256, std::max<Tokens>(b, 64), 2);
        CHECK(json::parse(json(plan).dump()).get<AllocationPlan>() == plan);

        RouterModel m = RouterModel::zeros(trial % 3 ? HeadKind::Image : HeadKind::Semantic, 1 + rng() % 6);
        for (double& w : m.weights) w = std::normal_distribution<double>()(rng);
        CHECK(json::parse(json(m).dump()).get<RouterModel>() == m);
    }
}

TEST_CASE("plan JSON layout") {
    const auto plan = allocate_global(4, 16, 10, 2);
    const json j = plan;
    CHECK(j.at("policy") == "global");
    CHECK(j.at("kept").size() == 2);
    CHECK(j.at("kept")[0].at("frame") == 1);
    CHECK(j.at("kept")[0].at("scale") == 2);
    CHECK(j.at("kept")[0].at("tokens") == 4);
    CHECK(j.at("dropped") == json::array({0, 2}));
    CHECK(j.at("total_tokens") == 8);
    CHECK(j.at("k_sampled") == 2);
    CHECK(j.at("c0") == 16);
}

TEST_CASE("model files reject inconsistent shapes") {
    json j = RouterModel::zeros(HeadKind::Semantic, 3);
    j["bias"] = json::array({0.0});
    CHECK_THROWS_AS(j.get<RouterModel>(), Error);
    j["head_kind"] = "other";
    CHECK_THROWS_AS(j.get<RouterModel>(), Error);
}

TEST_CASE("score JSON lines") {
    std::istringstream in(R"({"frame_index":0,"p":0.8,"y_hat":1}

{"frame_index":1,"p":0.2,"y_hat":false}
)");
    const auto scores = read_scores_jsonl(in);
    REQUIRE(scores.size() == 2);
    CHECK(scores[0] == FrameScore{0, 0.8, true});
    CHECK(scores[1] == FrameScore{1, 0.2, false});

    std::ostringstream out;
    write_scores_jsonl(out, scores);
    CHECK(out.str() == "{\"frame_index\":0,\"p\":0.8,\"y_hat\":1}\n{\"frame_index\":1,\"p\":0.2,\"y_hat\":0}\n");

    std::istringstream broken("{\"frame_index\":0}\n");
    try {
        read_scores_jsonl(broken);
        FAIL("expected ParseError");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::ParseError);
    }
}

TEST_CASE("A/B CSV and scale flags") {
    std::istringstream in("category,acc_fragment,acc_global\ncounting,0.70,0.60\n needle , 0.5,0.55\n");
    const auto recs = read_ab_csv(in);
    REQUIRE(recs.size() == 2);
    CHECK(recs[1].category == "needle");
    CHECK(recs[1].acc_global == 0.55);

    std::istringstream bad("x,0.5\n");
    CHECK_THROWS_AS(read_ab_csv(bad), Error);

    CHECK(parse_scales("2,1,4") == ScaleConfig{2, 1, 4});
    CHECK(parse_scales(" 4, 2 ,8") == ScaleConfig{4, 2, 8});
    CHECK_THROWS_AS(parse_scales("2,1"), Error);
    CHECK_THROWS_AS(parse_scales("2,x,4"), Error);
}

TEST_CASE("run config, instances and sequence summaries") {
    const auto rc = parse_run_config(json::parse(R"({"budget":{"l_max":16384,"l_text":512,"l_gen":256},"scales":[2,1,4]})"));
    CHECK(rc.budget.epsilon == 100);
    CHECK(compute_budget(rc.budget) == 15516);
    CHECK(rc.scales == ScaleConfig{2, 1, 4});

    Instance inst{256, 3000, {2, 1, 4}, {true, false, true}};
    const auto back = json::parse(json(inst).dump()).get<Instance>();
    CHECK(back.y_hat == inst.y_hat);
    CHECK(back.budget == 3000);

    TokenSequence seq;
    seq.segments.emplace_back(TextSpan{10});
    seq.segments.emplace_back(VisualSpan{3, TokenGrid::filled(2, 1)});
    seq.total_length = 14;
    const json s = sequence_summary(seq);
    CHECK(s.at("total_length") == 14);
    CHECK(s.at("segments")[0] == json{{"kind", "text"}, {"count", 10}});
    CHECK(s.at("segments")[1] == json{{"kind", "visual"}, {"frame", 3}, {"count", 4}});

    const TokenGrid g{2, 2, {1, 2, 3, 4, 5, 6, 7, 8}};
    const json gj = g;
    CHECK(gj.at("values")[1] == json::array({3.0, 4.0}));
    CHECK(gj.get<TokenGrid>() == g);
}

TEST_CASE("workloads and sweep grids round trip") {
    WorkloadSpec spec;
    spec.t = 12;
    spec.evidence_frames = 3;
    spec.evidence_mode = EvidenceMode::Mixed;
    const Workload w = gen_workload(spec);
    CHECK(json::parse(json(w).dump()).get<Workload>() == w);

    const auto grid = json::parse(R"({
        "workloads": [{"t": 64, "evidence_frames": 12}],
        "configs": [{"frames": 64, "scales": {"s_g": 2, "s_1": 1, "s_0": 4}}, {"label": "big", "frames": 128}],
        "budgets": [4096, 8192],
        "router": "trained",
        "training": {"epochs": 50}
    })").get<SweepGrid>();
    CHECK(grid.configs[0].label == "64f");
    CHECK(grid.configs[1].label == "big");
    CHECK(grid.router == RouterMode::Trained);
    CHECK(grid.training.epochs == 50);
    CHECK(grid.cost.router_units == kDefaultRouterUnits);
}
