// SPDX-License-Identifier: Apache-2.0
#include "featevo/evaluation.hpp"

#include "featevo/subprocess.hpp"
#include "featevo/util.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace featevo::eval
{

namespace
{

double sigmoid(double z)
{
    if (z >= 0)
        return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

/// log(1 + exp(z)) without overflow.
double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

void require_both_classes(const std::vector<int>& labels)
{
    bool pos = false;
    bool neg = false;
    for (int y : labels)
        (y == 1 ? pos : neg) = true;
    if (!pos || !neg)
        throw DegenerateLabelsError("labels contain a single class");
}

double linear(const LogisticModel& m, std::span<const double> x)
{
    double z = m.intercept;
    for (std::size_t j = 0; j < m.weights.size(); ++j)
        z += m.weights[j] * x[j];
    return z;
}

} // namespace

void LearnerConfig::validate() const
{
    if (!(l2_lambda >= 0.0) || !std::isfinite(l2_lambda))
        throw ConfigError("l2_lambda must be a finite value >= 0");
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
        throw ConfigError("learning_rate must be a finite value > 0");
    if (iterations < 1)
        throw ConfigError("iterations must be >= 1");
    if (kind == Kind::External && external.command_template.empty())
        throw ConfigError("external learner needs a command template");
}

Preprocessor fit_preprocess(const FeatureTable& train)
{
    Preprocessor pre;
    const std::size_t n = train.rows();
    pre.mean.assign(train.cols(), 0.0);
    pre.stddev.assign(train.cols(), 0.0);
    if (n == 0)
        return pre;
    for (std::size_t c = 0; c < train.cols(); ++c)
    {
        double sum = 0.0;
        for (std::size_t r = 0; r < n; ++r)
            sum += train.at(r, c);
        const double mu = sum / static_cast<double>(n);
        double ss = 0.0;
        for (std::size_t r = 0; r < n; ++r)
            ss += (train.at(r, c) - mu) * (train.at(r, c) - mu);
        pre.mean[c] = mu;
        pre.stddev[c] = std::sqrt(ss / static_cast<double>(n));
    }
    return pre;
}

FeatureTable apply(const Preprocessor& pre, const FeatureTable& table)
{
    FeatureTable out = table;
    for (std::size_t r = 0; r < table.rows(); ++r)
        for (std::size_t c = 0; c < table.cols(); ++c)
            out.at(r, c) = pre.stddev[c] == 0.0 ? 0.0 : (table.at(r, c) - pre.mean[c]) / pre.stddev[c];
    return out;
}

double LogisticModel::predict(std::span<const double> x) const { return sigmoid(linear(*this, x)); }

double logreg_loss(const FeatureTable& x, const std::vector<int>& y, const LogisticModel& model, double lambda)
{
    double loss = 0.0;
    for (std::size_t r = 0; r < x.rows(); ++r)
    {
        const double z = linear(model, x.row(r));
        // -[y log s(z) + (1-y) log(1-s(z))] = softplus(z) - y z
        loss += softplus(z) - (y[r] == 1 ? z : 0.0);
    }
    loss /= static_cast<double>(x.rows());
    for (double w : model.weights)
        loss += lambda * w * w;
    return loss;
}

std::vector<double> logreg_gradient(const FeatureTable& x, const std::vector<int>& y, const LogisticModel& model,
                                    double lambda)
{
    const std::size_t d = model.weights.size();
    std::vector<double> grad(d + 1, 0.0);
    for (std::size_t r = 0; r < x.rows(); ++r)
    {
        const auto row = x.row(r);
        const double err = sigmoid(linear(model, row)) - static_cast<double>(y[r]);
        for (std::size_t j = 0; j < d; ++j)
            grad[j] += err * row[j];
        grad[d] += err;
    }
    const double n = static_cast<double>(x.rows());
    for (std::size_t j = 0; j < d; ++j)
        grad[j] = grad[j] / n + 2.0 * lambda * model.weights[j];
    grad[d] /= n;
    return grad;
}

LogisticModel train_logreg(const FeatureTable& x, const std::vector<int>& y, const LearnerConfig& config)
{
    config.validate();
    if (y.size() != x.rows())
        throw std::invalid_argument("train_logreg: label count differs from row count");
    require_both_classes(y);
    LogisticModel model;
    model.weights.assign(x.cols(), 0.0);
    for (int it = 0; it < config.iterations; ++it)
    {
        auto grad = logreg_gradient(x, y, model, config.l2_lambda);
        for (std::size_t j = 0; j < model.weights.size(); ++j)
            model.weights[j] -= config.learning_rate * grad[j];
        model.intercept -= config.learning_rate * grad.back();
    }
    return model;
}

double auc(const std::vector<int>& labels, const std::vector<double>& scores)
{
    if (labels.size() != scores.size())
        throw std::invalid_argument("auc: labels and scores differ in length");
    require_both_classes(labels);
    const std::size_t n = scores.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    double positive_rank_sum = 0.0;
    std::size_t n_pos = 0;
    for (std::size_t i = 0; i < n;)
    {
        std::size_t j = i;
        while (j + 1 < n && scores[order[j + 1]] == scores[order[i]])
            ++j;
        // average 1-based rank of the tie group
        const double rank = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
        for (std::size_t k = i; k <= j; ++k)
            if (labels[order[k]] == 1)
            {
                positive_rank_sum += rank;
                ++n_pos;
            }
        i = j + 1;
    }
    const double p = static_cast<double>(n_pos);
    const double q = static_cast<double>(n - n_pos);
    return (positive_rank_sum - p * (p + 1.0) / 2.0) / (p * q);
}

MetricsReport classification_metrics(const std::vector<int>& labels, const std::vector<double>& scores,
                                     double threshold)
{
    MetricsReport m;
    m.auc = auc(labels, scores);
    double tp = 0, fp = 0, tn = 0, fn = 0;
    for (std::size_t i = 0; i < labels.size(); ++i)
    {
        const bool predicted = scores[i] >= threshold;
        if (labels[i] == 1)
            (predicted ? tp : fn) += 1;
        else
            (predicted ? fp : tn) += 1;
    }
    m.accuracy = (tp + tn) / static_cast<double>(labels.size());
    m.precision = tp + fp == 0 ? 0.0 : tp / (tp + fp);
    m.recall = tp + fn == 0 ? 0.0 : tp / (tp + fn);
    m.f1 = m.precision + m.recall == 0 ? 0.0 : 2.0 * m.precision * m.recall / (m.precision + m.recall);
    return m;
}

nlohmann::json to_json(const MetricsReport& r)
{
    return nlohmann::json{
        {"accuracy", r.accuracy}, {"precision", r.precision}, {"recall", r.recall}, {"f1", r.f1}, {"auc", r.auc}};
}

MetricsReport metrics_from_json(const nlohmann::json& doc)
{
    MetricsReport r;
    r.accuracy = doc.at("accuracy").get<double>();
    r.precision = doc.at("precision").get<double>();
    r.recall = doc.at("recall").get<double>();
    r.f1 = doc.at("f1").get<double>();
    r.auc = doc.at("auc").get<double>();
    return r;
}

namespace
{

std::string matrix_csv(const FeatureTable& x, const std::vector<int>* labels)
{
    std::string out = "entity_id";
    for (const auto& c : x.columns())
        out += "," + csv_escape(c);
    if (labels)
        out += ",label";
    out += "\n";
    for (std::size_t r = 0; r < x.rows(); ++r)
    {
        out += csv_escape(x.entity_ids()[r]);
        for (std::size_t c = 0; c < x.cols(); ++c)
            out += "," + format_double(x.at(r, c));
        if (labels)
            out += "," + std::to_string((*labels)[r]);
        out += "\n";
    }
    return out;
}

std::vector<double> external_scores(const LearnerConfig& config, const FeatureTable& train,
                                    const std::vector<int>& y_train, const FeatureTable& test)
{
    dsl::TempDir dir;
    const auto train_path = dir.path() / "train.csv";
    const auto test_path = dir.path() / "test.csv";
    const auto output_path = dir.path() / "scores.csv";
    write_file_atomic(train_path, matrix_csv(train, &y_train));
    write_file_atomic(test_path, matrix_csv(test, nullptr));
    const auto command = dsl::expand_command(config.external.command_template, {
                                                                                   {"train_csv", train_path.string()},
                                                                                   {"test_csv", test_path.string()},
                                                                                   {"output_csv", output_path.string()},
                                                                               });
    auto result = run_shell(command,
                            std::chrono::milliseconds(static_cast<long long>(config.external.timeout_seconds * 1000.0)));
    if (result.timed_out)
        throw TimeoutError("external learner exceeded " + format_double(config.external.timeout_seconds) + " s");
    if (result.exit_code != 0)
        throw dsl::RunnerError(result.exit_code, result.stderr_text);
    if (!std::filesystem::exists(output_path))
        throw dsl::OutputContractError("external learner produced no output file");
    auto table = dsl::read_feature_csv(read_file(output_path), test.entity_ids());
    if (table.cols() != 1 || table.columns().front() != "score")
        throw dsl::OutputContractError("external learner output must have columns entity_id,score");
    std::vector<double> scores(table.rows());
    for (std::size_t r = 0; r < table.rows(); ++r)
        scores[r] = table.at(r, 0);
    return scores;
}

} // namespace

MetricsReport evaluate_feature_set(const FeatureTable& features, const data::Dataset& dataset,
                                   const data::EntitySplit& split, const LearnerConfig& config)
{
    config.validate();
    auto side = [&](const std::vector<std::string>& ids) {
        auto base = data::baseline_matrix(dataset, ids);
        if (features.cols() == 0)
            return base;
        FeatureTable extra;
        try
        {
            extra = features.select_rows(ids);
        }
        catch (const std::out_of_range& e)
        {
            throw dsl::OutputContractError(std::string("feature table does not cover the split: ") + e.what());
        }
        return base.concat(extra);
    };
    auto train = side(split.train);
    auto test = side(split.test);
    std::vector<int> y_train;
    std::vector<int> y_test;
    for (const auto& id : split.train)
        y_train.push_back(dataset.label(id));
    for (const auto& id : split.test)
        y_test.push_back(dataset.label(id));

    std::vector<double> scores;
    if (config.kind == LearnerConfig::Kind::External)
    {
        scores = external_scores(config, train, y_train, test);
    }
    else
    {
        const auto pre = fit_preprocess(train);
        const auto model = train_logreg(apply(pre, train), y_train, config);
        const auto x_test = apply(pre, test);
        for (std::size_t r = 0; r < x_test.rows(); ++r)
            scores.push_back(model.predict(x_test.row(r)));
    }
    return classification_metrics(y_test, scores);
}

} // namespace featevo::eval
