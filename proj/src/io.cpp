// Copyright 2026 The evbudget Authors
// SPDX-License-Identifier: Apache-2.0

#include "evb/io.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "evb/error.hpp"

namespace evb {

namespace {

std::string trim(std::string_view s) {
    const auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string_view::npos) {
        return {};
    }
    const auto end = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(begin, end - begin + 1));
}

std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = s.find(sep, start);
        out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
        if (pos == std::string_view::npos) {
            return out;
        }
        start = pos + 1;
    }
}

double parse_double(const std::string& s) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) {
            throw Error(ErrorKind::ParseError, "trailing characters in number '" + s + "'");
        }
        return v;
    } catch (const std::logic_error&) {
        throw Error(ErrorKind::ParseError, "not a number: '" + s + "'");
    }
}

}  // namespace

std::string_view to_string(Policy p) noexcept { return p == Policy::Global ? "global" : "fragment"; }

std::string_view to_string(HeadKind h) noexcept { return h == HeadKind::Semantic ? "semantic" : "image"; }

std::string_view to_string(EvidenceMode m) noexcept {
    switch (m) {
        case EvidenceMode::Concentrated: return "concentrated";
        case EvidenceMode::Spread: return "spread";
        case EvidenceMode::Mixed: return "mixed";
    }
    return "spread";
}

Policy policy_from_string(std::string_view s) {
    if (s == "global") return Policy::Global;
    if (s == "fragment") return Policy::Fragment;
    throw Error(ErrorKind::ParseError, "unknown policy '" + std::string(s) + "'");
}

HeadKind head_from_string(std::string_view s) {
    if (s == "semantic") return HeadKind::Semantic;
    if (s == "image") return HeadKind::Image;
    throw Error(ErrorKind::ParseError, "unknown head kind '" + std::string(s) + "'");
}

EvidenceMode evidence_mode_from_string(std::string_view s) {
    if (s == "concentrated") return EvidenceMode::Concentrated;
    if (s == "spread") return EvidenceMode::Spread;
    if (s == "mixed") return EvidenceMode::Mixed;
    throw Error(ErrorKind::ParseError, "unknown evidence mode '" + std::string(s) + "'");
}

void to_json(json& j, const RouterModel& m) {
    j = json{{"head_kind", to_string(m.head)}, {"dim", m.dim}, {"weights", m.weights}, {"bias", m.bias}};
}

void from_json(const json& j, RouterModel& m) {
    m.head = head_from_string(j.at("head_kind").get<std::string>());
    m.dim = j.at("dim").get<std::size_t>();
    m.weights = j.at("weights").get<std::vector<double>>();
    m.bias = j.at("bias").get<std::vector<double>>();
    m.validate();
}

void to_json(json& j, const FrameScore& s) {
    j = json{{"frame_index", s.frame_index}, {"p", s.p}, {"y_hat", s.y_hat ? 1 : 0}};
}

void from_json(const json& j, FrameScore& s) {
    s.frame_index = j.at("frame_index").get<int>();
    s.p = j.at("p").get<double>();
    const json& y = j.at("y_hat");
    s.y_hat = y.is_boolean() ? y.get<bool>() : y.get<int>() != 0;
}

void to_json(json& j, const ScaleConfig& s) { j = json{{"s_g", s.s_g}, {"s_1", s.s_1}, {"s_0", s.s_0}}; }

void from_json(const json& j, ScaleConfig& s) {
    if (j.is_array()) {
        const auto v = j.get<std::vector<int>>();
        if (v.size() != 3) {
            throw Error(ErrorKind::ParseError, "scales array needs exactly three entries (s_g, s_1, s_0)");
        }
        s = ScaleConfig{v[0], v[1], v[2]};
        return;
    }
    s.s_g = j.value("s_g", 2);
    s.s_1 = j.value("s_1", 1);
    s.s_0 = j.value("s_0", 4);
}

void to_json(json& j, const BudgetConfig& c) {
    j = json{{"l_max", c.l_max}, {"l_text", c.l_text}, {"l_gen", c.l_gen}, {"epsilon", c.epsilon}};
}

void from_json(const json& j, BudgetConfig& c) {
    c.l_max = j.at("l_max").get<Tokens>();
    c.l_text = j.value("l_text", Tokens{0});
    c.l_gen = j.value("l_gen", Tokens{0});
    c.epsilon = j.value("epsilon", kDefaultSafetyMargin);
}

void to_json(json& j, const KeptFrame& k) { j = json{{"frame", k.frame}, {"scale", k.scale}, {"tokens", k.tokens}}; }

void from_json(const json& j, KeptFrame& k) {
    k.frame = j.at("frame").get<int>();
    k.scale = j.at("scale").get<int>();
    k.tokens = j.at("tokens").get<Tokens>();
}

void to_json(json& j, const AllocationPlan& p) {
    j = json{{"policy", to_string(p.policy)},
             {"kept", p.kept},
             {"dropped", p.dropped},
             {"total_tokens", p.total_tokens},
             {"c1", p.c1},
             {"c0", p.c0},
             {"k_sampled", p.k_sampled ? json(*p.k_sampled) : json(nullptr)}};
}

void from_json(const json& j, AllocationPlan& p) {
    p.policy = policy_from_string(j.at("policy").get<std::string>());
    p.kept = j.at("kept").get<std::vector<KeptFrame>>();
    p.dropped = j.at("dropped").get<std::vector<int>>();
    p.total_tokens = j.at("total_tokens").get<Tokens>();
    p.c1 = j.value("c1", Tokens{0});
    p.c0 = j.value("c0", Tokens{0});
    p.k_sampled.reset();
    if (j.contains("k_sampled") && !j.at("k_sampled").is_null()) {
        p.k_sampled = j.at("k_sampled").get<Tokens>();
    }
}

void to_json(json& j, const TokenGrid& g) {
    json values = json::array();
    for (std::size_t r = 0; r < g.side; ++r) {
        for (std::size_t c = 0; c < g.side; ++c) {
            const auto tok = g.token(r, c);
            values.push_back(std::vector<double>(tok.begin(), tok.end()));
        }
    }
    j = json{{"side", g.side}, {"dim", g.dim}, {"values", std::move(values)}};
}

void from_json(const json& j, TokenGrid& g) {
    g.side = j.at("side").get<std::size_t>();
    g.dim = j.at("dim").get<std::size_t>();
    g.values.clear();
    for (const auto& tok : j.at("values")) {
        const auto v = tok.get<std::vector<double>>();
        if (v.size() != g.dim) {
            throw Error(ErrorKind::InvalidGeometry, "token vector length differs from grid dim");
        }
        g.values.insert(g.values.end(), v.begin(), v.end());
    }
    g.validate();
}

void to_json(json& j, const WorkloadSpec& s) {
    j = json{{"t", s.t},
             {"n", s.n},
             {"evidence_mode", to_string(s.evidence_mode)},
             {"evidence_frames", s.evidence_frames},
             {"feature_dim", s.feature_dim},
             {"noise", s.noise},
             {"seed", s.seed}};
}

void from_json(const json& j, WorkloadSpec& s) {
    const WorkloadSpec d;
    s.t = j.value("t", d.t);
    s.n = j.value("n", d.n);
    s.evidence_mode = evidence_mode_from_string(j.value("evidence_mode", std::string(to_string(d.evidence_mode))));
    s.evidence_frames = j.value("evidence_frames", d.evidence_frames);
    s.feature_dim = j.value("feature_dim", d.feature_dim);
    s.noise = j.value("noise", d.noise);
    s.seed = j.value("seed", d.seed);
}

void to_json(json& j, const FrameDescriptor& f) {
    j = json{{"index", f.index}, {"features", f.features}, {"relevant", f.relevant ? 1 : 0}, {"evidence", f.evidence}};
}

void from_json(const json& j, FrameDescriptor& f) {
    f.index = j.at("index").get<int>();
    f.features = j.at("features").get<FeatureVector>();
    const json& r = j.at("relevant");
    f.relevant = r.is_boolean() ? r.get<bool>() : r.get<int>() != 0;
    f.evidence = j.at("evidence").get<double>();
}

void to_json(json& j, const Workload& w) {
    j = json{{"spec", w.spec},
             {"frames", w.frames},
             {"query_features", w.query_features},
             {"policy_label", static_cast<int>(w.policy_label)}};
}

void from_json(const json& j, Workload& w) {
    w.spec = j.at("spec").get<WorkloadSpec>();
    w.frames = j.at("frames").get<std::vector<FrameDescriptor>>();
    w.query_features = j.at("query_features").get<FeatureVector>();
    w.policy_label = j.at("policy_label").get<int>() == 1 ? Policy::Fragment : Policy::Global;
}

void to_json(json& j, const SweepRow& r) {
    j = json{{"config", r.config},         {"budget", r.budget},   {"frames", r.frames},
             {"total_tokens", r.total_tokens}, {"utility", r.utility}, {"reduction_pct", r.reduction_pct},
             {"cost_units", r.cost_units}, {"status", r.status}};
}

void from_json(const json& j, SweepRow& r) {
    r.config = j.at("config").get<std::string>();
    r.budget = j.at("budget").get<Tokens>();
    r.frames = j.at("frames").get<int>();
    r.total_tokens = j.at("total_tokens").get<Tokens>();
    r.utility = j.at("utility").get<double>();
    r.reduction_pct = j.at("reduction_pct").get<double>();
    r.cost_units = j.at("cost_units").get<Tokens>();
    r.status = j.at("status").get<std::string>();
}

void to_json(json& j, const SweepConfig& c) { j = json{{"label", c.label}, {"frames", c.frames}, {"scales", c.scales}}; }

void from_json(const json& j, SweepConfig& c) {
    c.frames = j.at("frames").get<int>();
    c.label = j.value("label", std::to_string(c.frames) + "f");
    c.scales = j.value("scales", ScaleConfig{});
}

void to_json(json& j, const SweepGrid& g) {
    j = json{{"workloads", g.workloads},
             {"configs", g.configs},
             {"budgets", g.budgets},
             {"router", g.router == RouterMode::Oracle ? "oracle" : "trained"},
             {"router_used", g.router_used},
             {"router_units", g.cost.router_units},
             {"training_workloads", g.training_workloads}};
}

void from_json(const json& j, SweepGrid& g) {
    g.workloads = j.at("workloads").get<std::vector<WorkloadSpec>>();
    g.configs = j.at("configs").get<std::vector<SweepConfig>>();
    g.budgets = j.at("budgets").get<std::vector<Tokens>>();
    const std::string router = j.value("router", std::string("oracle"));
    if (router != "oracle" && router != "trained") {
        throw Error(ErrorKind::ParseError, "router must be 'oracle' or 'trained'");
    }
    g.router = router == "oracle" ? RouterMode::Oracle : RouterMode::Trained;
    g.router_used = j.value("router_used", true);
    g.cost.router_units = j.value("router_units", kDefaultRouterUnits);
    g.training_workloads = j.value("training_workloads", 16);
    if (j.contains("training")) {
        const json& t = j.at("training");
        g.training.learning_rate = t.value("learning_rate", g.training.learning_rate);
        g.training.epochs = t.value("epochs", g.training.epochs);
        g.training.batch_size = t.value("batch_size", g.training.batch_size);
        g.training.seed = t.value("seed", g.training.seed);
    }
}

void to_json(json& j, const Example& e) { j = json{{"x", e.x}, {"label", e.label}}; }

void from_json(const json& j, Example& e) {
    e.x = j.at("x").get<FeatureVector>();
    e.label = j.at("label").get<int>();
}

void to_json(json& j, const Instance& i) {
    std::vector<int> y(i.y_hat.begin(), i.y_hat.end());
    j = json{{"n", i.n}, {"budget", i.budget}, {"scales", i.scales}, {"y_hat", y}};
}

void from_json(const json& j, Instance& i) {
    i.n = j.at("n").get<Tokens>();
    i.budget = j.at("budget").get<Tokens>();
    i.scales = j.value("scales", ScaleConfig{});
    i.y_hat.clear();
    for (const auto& y : j.at("y_hat")) {
        i.y_hat.push_back(y.is_boolean() ? y.get<bool>() : y.get<int>() != 0);
    }
}

json sequence_summary(const TokenSequence& seq) {
    json segments = json::array();
    for (const auto& seg : seq.segments) {
        if (const auto* text = std::get_if<TextSpan>(&seg)) {
            segments.push_back(json{{"kind", "text"}, {"count", text->count}});
        } else {
            const auto& v = std::get<VisualSpan>(seg);
            segments.push_back(json{{"kind", "visual"}, {"frame", v.frame}, {"count", v.tokens.token_count()}});
        }
    }
    return json{{"segments", std::move(segments)}, {"total_length", seq.total_length}};
}

ScaleConfig parse_scales(std::string_view text) {
    const auto parts = split(text, ',');
    if (parts.size() != 3) {
        throw Error(ErrorKind::ParseError, "scales must look like sg,s1,s0");
    }
    int v[3];
    for (std::size_t i = 0; i < 3; ++i) {
        const auto& p = parts[i];
        const auto res = std::from_chars(p.data(), p.data() + p.size(), v[i]);
        if (res.ec != std::errc{} || res.ptr != p.data() + p.size()) {
            throw Error(ErrorKind::ParseError, "bad scale '" + p + "'");
        }
    }
    return ScaleConfig{v[0], v[1], v[2]};
}

RunConfig parse_run_config(const json& j) {
    RunConfig rc;
    rc.budget = j.at("budget").get<BudgetConfig>();
    if (j.contains("scales")) {
        rc.scales = j.at("scales").get<ScaleConfig>();
    }
    rc.n = j.value("n", rc.n);
    return rc;
}

std::vector<FrameScore> read_scores_jsonl(std::istream& in) {
    std::vector<FrameScore> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) {
            continue;
        }
        try {
            out.push_back(json::parse(line).get<FrameScore>());
        } catch (const json::exception& e) {
            throw Error(ErrorKind::ParseError, "score line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

void write_scores_jsonl(std::ostream& out, const std::vector<FrameScore>& scores) {
    for (const auto& s : scores) {
        out << json(s).dump() << '\n';
    }
}

std::vector<ABRecord> read_ab_csv(std::istream& in) {
    std::vector<ABRecord> out;
    std::string line;
    bool header = true;
    while (std::getline(in, line)) {
        if (trim(line).empty()) {
            continue;
        }
        const auto cells = split(line, ',');
        if (cells.size() != 3) {
            throw Error(ErrorKind::ParseError, "A/B rows need category,acc_fragment,acc_global");
        }
        if (header) {
            header = false;
            if (cells[0] == "category") {
                continue;
            }
        }
        out.push_back(ABRecord{cells[0], parse_double(cells[1]), parse_double(cells[2])});
    }
    return out;
}

json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorKind::IoFailure, "cannot open " + path.string());
    }
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw Error(ErrorKind::ParseError, path.string() + ": " + e.what());
    }
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error(ErrorKind::IoFailure, "cannot write " + path.string());
    }
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) {
        throw Error(ErrorKind::IoFailure, "short write to " + path.string());
    }
}

}  // namespace evb
