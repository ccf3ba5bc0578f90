// Copyright 2026 The evbudget Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace evb {

/// Dominant allocation policy. The numeric values are the class labels.
enum class Policy : int { Global = 0, Fragment = 1 };

enum class HeadKind { Semantic, Image };

using FeatureVector = std::vector<double>;

/// Linear reference head. Semantic heads have two rows (Global, Fragment),
/// image heads a single row. Weights are stored row-major.
struct RouterModel {
    HeadKind head = HeadKind::Image;
    std::size_t dim = 0;
    std::vector<double> weights;
    std::vector<double> bias;

    static RouterModel zeros(HeadKind head, std::size_t dim);

    std::size_t rows() const noexcept { return head == HeadKind::Semantic ? 2 : 1; }
    std::size_t parameter_count() const noexcept { return rows() * (dim + 1); }

    /// Throws DimensionMismatch when the parameter arrays disagree with head/dim,
    /// InvalidArgument on non-finite parameters.
    void validate() const;

    bool operator==(const RouterModel&) const = default;
};

struct PolicyDecision {
    std::array<double, 2> probabilities{0.5, 0.5};  ///< (p_global, p_fragment)
    Policy decision = Policy::Global;
};

struct FrameScore {
    int frame_index = 0;
    double p = 0.0;
    bool y_hat = false;

    bool operator==(const FrameScore&) const = default;
};

struct TrainingConfig {
    double learning_rate = 0.1;
    int epochs = 100;
    int batch_size = 0;  ///< 0 trains full-batch
    double lambda_s = 0.01;
    double lambda_v = 0.01;
    std::uint64_t seed = 0;

    void validate() const;
};

/// One supervised example. Labels are 0/1 for both heads.
struct Example {
    FeatureVector x;
    int label = 0;
};

inline constexpr double kProbabilityClamp = 1e-12;

/// Two-class softmax over the semantic logits; an exact tie resolves to Global.
PolicyDecision semantic_forward(const RouterModel& model, std::span<const double> query);
PolicyDecision decide_policy(double logit_global, double logit_fragment);

/// Sigmoid relevance; y_hat is set only for p strictly above 0.5.
FrameScore image_forward(const RouterModel& model, std::span<const double> frame, int frame_index = 0);
FrameScore score_from_logit(double logit, int frame_index = 0);

double bce_loss(std::span<const double> probabilities, std::span<const int> labels);
double ce_loss(const PolicyDecision& decision, int label);
double joint_loss(double l_lm, double l_sem, double l_img, const TrainingConfig& cfg);

struct LossAndGradient {
    double loss = 0.0;
    /// Same layout as the model: all weights row-major, then the bias.
    std::vector<double> gradient;
};

/// Mean loss of the head's own objective (BCE for image, CE for semantic)
/// over the batch, with its analytic gradient. Clamped probabilities have zero
/// derivative, matching the clamped loss.
LossAndGradient loss_and_gradient(const RouterModel& model, std::span<const Example> batch);
double mean_loss(const RouterModel& model, std::span<const Example> batch);

/// Plain (mini-)batch gradient descent on one head. Deterministic given cfg.seed.
RouterModel train_router(RouterModel model, std::span<const Example> dataset, const TrainingConfig& cfg);

/// Fraction of examples whose predicted class equals the label.
double accuracy(const RouterModel& model, std::span<const Example> dataset);

struct GradCheckOptions {
    double step = 1e-5;
    /// Fault injection: adds `perturbation` to one analytic gradient entry.
    std::optional<std::size_t> perturb_index;
    double perturbation = 0.0;
};

struct GradCheckReport {
    double max_relative_error = 0.0;
    std::vector<double> analytic;
    std::vector<double> numeric;
};

/// Compares the analytic gradient against central finite differences.
/// Relative error per parameter is |a - n| / max(|a| + |n|, 1e-4).
GradCheckReport grad_check(const RouterModel& model, std::span<const Example> batch,
                           const GradCheckOptions& opts = {});

}  // namespace evb
