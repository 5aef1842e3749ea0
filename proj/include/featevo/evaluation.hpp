// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "featevo/dataset.hpp"
#include "featevo/external_runner.hpp"
#include "featevo/feature_table.hpp"

#include <json.hpp>

#include <vector>

namespace featevo::eval
{

struct LearnerConfig
{
    enum class Kind
    {
        BuiltinLogreg,
        External,
    };
    Kind kind = Kind::BuiltinLogreg;
    double l2_lambda = 1e-3;
    double learning_rate = 0.1;
    int iterations = 300;
    /// Used when kind is External. Placeholders: {train_csv} {test_csv} {output_csv}.
    dsl::RunnerConfig external;

    void validate() const;
};

/// Per-column standardization fitted on training rows.
struct Preprocessor
{
    std::vector<double> mean;
    std::vector<double> stddev;
};

Preprocessor fit_preprocess(const FeatureTable& train);
FeatureTable apply(const Preprocessor& pre, const FeatureTable& table);

struct LogisticModel
{
    std::vector<double> weights;
    double intercept = 0.0;

    double predict(std::span<const double> x) const;
};

/// Mean cross-entropy plus lambda * |w|^2 (intercept unpenalized).
double logreg_loss(const FeatureTable& x, const std::vector<int>& y, const LogisticModel& model, double lambda);

/// Gradient of logreg_loss: weights first, then the intercept.
std::vector<double> logreg_gradient(const FeatureTable& x, const std::vector<int>& y, const LogisticModel& model,
                                    double lambda);

LogisticModel train_logreg(const FeatureTable& x, const std::vector<int>& y, const LearnerConfig& config);

double auc(const std::vector<int>& labels, const std::vector<double>& scores);

struct MetricsReport
{
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    double auc = 0.0;

    bool operator==(const MetricsReport&) const = default;
};

nlohmann::json to_json(const MetricsReport& report);
MetricsReport metrics_from_json(const nlohmann::json& doc);

MetricsReport classification_metrics(const std::vector<int>& labels, const std::vector<double>& scores,
                                     double threshold = 0.5);

/// Baseline columns joined with `features`, learner fitted on the train
/// side, metrics reported on the test side.
MetricsReport evaluate_feature_set(const FeatureTable& features, const data::Dataset& dataset,
                                   const data::EntitySplit& split, const LearnerConfig& config);

} // namespace featevo::eval
