// Copyright 2026 The evbudget Authors
// SPDX-License-Identifier: Apache-2.0

#include "evb/routers.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "evb/error.hpp"

namespace evb {

namespace {

double clamp_probability(double p) {
    return std::clamp(p, kProbabilityClamp, 1.0 - kProbabilityClamp);
}

bool inside_clamp(double p) {
    return p > kProbabilityClamp && p < 1.0 - kProbabilityClamp;
}

double sigmoid(double z) {
    if (z >= 0.0) {
        return 1.0 / (1.0 + std::exp(-z));
    }
    const double e = std::exp(z);
    return e / (1.0 + e);
}

void check_input(const RouterModel& model, std::span<const double> x) {
    if (x.size() != model.dim) {
        throw Error(ErrorKind::DimensionMismatch, "feature dimension " + std::to_string(x.size()) +
                                                      " does not match model dimension " +
                                                      std::to_string(model.dim));
    }
}

double row_logit(const RouterModel& model, std::size_t row, std::span<const double> x) {
    const double* w = model.weights.data() + row * model.dim;
    double z = model.bias[row];
    for (std::size_t j = 0; j < model.dim; ++j) {
        z += w[j] * x[j];
    }
    return z;
}

double& parameter(RouterModel& model, std::size_t i) {
    const std::size_t nw = model.weights.size();
    return i < nw ? model.weights[i] : model.bias[i - nw];
}

void check_dataset(const RouterModel& model, std::span<const Example> data) {
    if (data.empty()) {
        throw Error(ErrorKind::EmptyInput, "training batch is empty");
    }
    for (const auto& ex : data) {
        check_input(model, ex.x);
        if (ex.label != 0 && ex.label != 1) {
            throw Error(ErrorKind::InvalidArgument, "labels must be 0 or 1, got " + std::to_string(ex.label));
        }
    }
}

// Accumulates the mean loss and its gradient over the examples selected by
// `index`, in index order.
template <typename IndexRange>
LossAndGradient accumulate(const RouterModel& model, std::span<const Example> data, const IndexRange& index) {
    LossAndGradient out;
    out.gradient.assign(model.parameter_count(), 0.0);
    const std::size_t nw = model.weights.size();
    std::size_t count = 0;
    std::array<double, 2> dz{};

    for (std::size_t i : index) {
        const Example& ex = data[i];
        ++count;
        if (model.head == HeadKind::Image) {
            const double p = sigmoid(row_logit(model, 0, ex.x));
            const double pc = clamp_probability(p);
            out.loss -= ex.label == 1 ? std::log(pc) : std::log(1.0 - pc);
            dz[0] = inside_clamp(p) ? p - ex.label : 0.0;
        } else {
            const PolicyDecision d = decide_policy(row_logit(model, 0, ex.x), row_logit(model, 1, ex.x));
            const double p_label = d.probabilities[static_cast<std::size_t>(ex.label)];
            out.loss -= std::log(clamp_probability(p_label));
            const bool live = inside_clamp(p_label);
            for (std::size_t c = 0; c < 2; ++c) {
                dz[c] = live ? d.probabilities[c] - (static_cast<int>(c) == ex.label ? 1.0 : 0.0) : 0.0;
            }
        }
        for (std::size_t r = 0; r < model.rows(); ++r) {
            double* g = out.gradient.data() + r * model.dim;
            for (std::size_t j = 0; j < model.dim; ++j) {
                g[j] += dz[r] * ex.x[j];
            }
            out.gradient[nw + r] += dz[r];
        }
    }
    const double inv = 1.0 / static_cast<double>(count);
    out.loss *= inv;
    for (double& g : out.gradient) {
        g *= inv;
    }
    return out;
}

std::vector<std::size_t> iota_index(std::size_t n) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    return idx;
}

}  // namespace

RouterModel RouterModel::zeros(HeadKind head, std::size_t dim) {
    RouterModel m;
    m.head = head;
    m.dim = dim;
    m.weights.assign(m.rows() * dim, 0.0);
    m.bias.assign(m.rows(), 0.0);
    return m;
}

void RouterModel::validate() const {
    if (weights.size() != rows() * dim || bias.size() != rows()) {
        throw Error(ErrorKind::DimensionMismatch, "router parameters do not match head kind and dimension");
    }
    const auto finite = [](double v) { return std::isfinite(v); };
    if (!std::all_of(weights.begin(), weights.end(), finite) || !std::all_of(bias.begin(), bias.end(), finite)) {
        throw Error(ErrorKind::InvalidArgument, "router parameters must be finite");
    }
}

void TrainingConfig::validate() const {
    if (!(learning_rate > 0.0)) {
        throw Error(ErrorKind::InvalidArgument, "learning_rate must be positive");
    }
    if (epochs < 0) {
        throw Error(ErrorKind::InvalidArgument, "epochs must be non-negative");
    }
    if (batch_size < 0) {
        throw Error(ErrorKind::InvalidArgument, "batch_size must be non-negative");
    }
    if (lambda_s < 0.0 || lambda_v < 0.0) {
        throw Error(ErrorKind::InvalidArgument, "loss weights must be non-negative");
    }
}

PolicyDecision decide_policy(double logit_global, double logit_fragment) {
    const double m = std::max(logit_global, logit_fragment);
    const double e0 = std::exp(logit_global - m);
    const double e1 = std::exp(logit_fragment - m);
    const double z = e0 + e1;
    PolicyDecision d;
    d.probabilities = {e0 / z, e1 / z};
    d.decision = d.probabilities[1] > d.probabilities[0] ? Policy::Fragment : Policy::Global;
    return d;
}

PolicyDecision semantic_forward(const RouterModel& model, std::span<const double> query) {
    if (model.head != HeadKind::Semantic) {
        throw Error(ErrorKind::InvalidArgument, "semantic_forward needs a semantic head");
    }
    model.validate();
    check_input(model, query);
    return decide_policy(row_logit(model, 0, query), row_logit(model, 1, query));
}

FrameScore score_from_logit(double logit, int frame_index) {
    const double p = sigmoid(logit);
    return FrameScore{frame_index, p, p > 0.5};
}

FrameScore image_forward(const RouterModel& model, std::span<const double> frame, int frame_index) {
    if (model.head != HeadKind::Image) {
        throw Error(ErrorKind::InvalidArgument, "image_forward needs an image head");
    }
    model.validate();
    check_input(model, frame);
    return score_from_logit(row_logit(model, 0, frame), frame_index);
}

double bce_loss(std::span<const double> probabilities, std::span<const int> labels) {
    if (probabilities.empty()) {
        throw Error(ErrorKind::EmptyInput, "bce_loss needs at least one prediction");
    }
    if (probabilities.size() != labels.size()) {
        throw Error(ErrorKind::DimensionMismatch, "predictions and labels differ in length");
    }
    double sum = 0.0;
    for (std::size_t t = 0; t < probabilities.size(); ++t) {
        const double p = clamp_probability(probabilities[t]);
        const double y = labels[t];
        sum += y * std::log(p) + (1.0 - y) * std::log(1.0 - p);
    }
    return -sum / static_cast<double>(probabilities.size());
}

double ce_loss(const PolicyDecision& decision, int label) {
    if (label != 0 && label != 1) {
        throw Error(ErrorKind::InvalidArgument, "policy label must be 0 or 1");
    }
    return -std::log(clamp_probability(decision.probabilities[static_cast<std::size_t>(label)]));
}

double joint_loss(double l_lm, double l_sem, double l_img, const TrainingConfig& cfg) {
    // Auxiliary terms first: they are small, and this rounds the common cases exactly.
    return l_lm + (cfg.lambda_s * l_sem + cfg.lambda_v * l_img);
}

LossAndGradient loss_and_gradient(const RouterModel& model, std::span<const Example> batch) {
    model.validate();
    check_dataset(model, batch);
    return accumulate(model, batch, iota_index(batch.size()));
}

double mean_loss(const RouterModel& model, std::span<const Example> batch) {
    return loss_and_gradient(model, batch).loss;
}

RouterModel train_router(RouterModel model, std::span<const Example> dataset, const TrainingConfig& cfg) {
    cfg.validate();
    model.validate();
    check_dataset(model, dataset);

    std::vector<std::size_t> order = iota_index(dataset.size());
    const std::size_t batch =
        cfg.batch_size <= 0 ? dataset.size() : std::min<std::size_t>(cfg.batch_size, dataset.size());
    std::mt19937_64 rng(cfg.seed);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        if (batch < dataset.size()) {
            std::shuffle(order.begin(), order.end(), rng);
        }
        for (std::size_t start = 0; start < order.size(); start += batch) {
            const std::size_t stop = std::min(order.size(), start + batch);
            const std::span<const std::size_t> slice(order.data() + start, stop - start);
            const LossAndGradient lg = accumulate(model, dataset, slice);
            for (std::size_t i = 0; i < lg.gradient.size(); ++i) {
                parameter(model, i) -= cfg.learning_rate * lg.gradient[i];
            }
        }
    }
    return model;
}

double accuracy(const RouterModel& model, std::span<const Example> dataset) {
    check_dataset(model, dataset);
    std::size_t hits = 0;
    for (const auto& ex : dataset) {
        const int predicted = model.head == HeadKind::Image
                                  ? static_cast<int>(image_forward(model, ex.x).y_hat)
                                  : static_cast<int>(semantic_forward(model, ex.x).decision);
        hits += predicted == ex.label ? 1 : 0;
    }
    return static_cast<double>(hits) / static_cast<double>(dataset.size());
}

GradCheckReport grad_check(const RouterModel& model, std::span<const Example> batch, const GradCheckOptions& opts) {
    GradCheckReport report;
    report.analytic = loss_and_gradient(model, batch).gradient;
    if (opts.perturb_index) {
        report.analytic.at(*opts.perturb_index) += opts.perturbation;
    }
    report.numeric.resize(report.analytic.size());

    RouterModel probe = model;
    for (std::size_t i = 0; i < report.analytic.size(); ++i) {
        const double original = parameter(probe, i);
        parameter(probe, i) = original + opts.step;
        const double up = mean_loss(probe, batch);
        parameter(probe, i) = original - opts.step;
        const double down = mean_loss(probe, batch);
        parameter(probe, i) = original;
        report.numeric[i] = (up - down) / (2.0 * opts.step);

        const double a = report.analytic[i];
        const double n = report.numeric[i];
        const double rel = std::abs(a - n) / std::max(std::abs(a) + std::abs(n), 1e-4);
        report.max_relative_error = std::max(report.max_relative_error, rel);
    }
    return report;
}

}  // namespace evb
