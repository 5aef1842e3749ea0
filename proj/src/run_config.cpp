// SPDX-License-Identifier: Apache-2.0
#include "featevo/orchestrator.hpp"

#include "featevo/util.hpp"

namespace featevo::orch
{

namespace
{

using nlohmann::json;

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& value)
{
    std::filesystem::path p = value;
    return (p.is_absolute() ? p : base / p).lexically_normal();
}

template <class T>
void read_opt(const json& obj, const char* key, T& out)
{
    if (obj.contains(key))
        out = obj.at(key).get<T>();
}

} // namespace

void RunConfig::validate() const
{
    if (max_iterations < 1)
        throw ConfigError("max_iterations must be >= 1");
    if (max_critic_iters < 1)
        throw ConfigError("max_critic_iters must be >= 1");
    if (exemplars_k < 0)
        throw ConfigError("exemplars_k must be >= 0");
    if (out_dir.empty())
        throw ConfigError("out_dir is required");
    if (dataset.events.empty() || dataset.labels.empty() || dataset.schema.empty())
        throw ConfigError("dataset needs events, labels and schema paths");
    if (!(dataset.split.train_fraction > 0.0 && dataset.split.train_fraction < 1.0))
        throw ConfigError("split train_fraction must lie strictly between 0 and 1");
    if (dsl.kind == DslBackend::Kind::External && dsl.runner.command_template.empty())
        throw ConfigError("external dsl backend needs a command_template");
    if (dsl.workers < 1)
        throw ConfigError("dsl workers must be >= 1");
    if (wall_clock_seconds && !(*wall_clock_seconds > 0.0))
        throw ConfigError("wall_clock_seconds must be > 0");
    provider.validate();
    bandit.validate();
    learner.validate();
    memory.validate();
}

RunConfig config_from_json(const json& doc, const std::filesystem::path& base_dir)
{
    RunConfig c;
    try
    {
        if (!doc.is_object())
            throw ConfigError("config must be a JSON object");
        const auto& ds = doc.at("dataset");
        c.dataset.events = resolve(base_dir, ds.at("events").get<std::string>());
        c.dataset.labels = resolve(base_dir, ds.at("labels").get<std::string>());
        c.dataset.schema = resolve(base_dir, ds.at("schema").get<std::string>());
        if (ds.contains("split"))
        {
            const auto& sp = ds.at("split");
            const auto mode = sp.value("mode", std::string("from_labels"));
            if (mode == "from_labels")
                c.dataset.split.mode = data::SplitSpec::Mode::FromLabels;
            else if (mode == "random")
                c.dataset.split.mode = data::SplitSpec::Mode::Random;
            else
                throw ConfigError("split mode must be 'from_labels' or 'random'");
            read_opt(sp, "train_fraction", c.dataset.split.train_fraction);
            read_opt(sp, "seed", c.dataset.split.seed);
        }

        c.provider = agents::provider_config_from_json(doc.at("provider"), base_dir);

        if (doc.contains("bandit"))
        {
            const auto& b = doc.at("bandit");
            read_opt(b, "exploration_c", c.bandit.exploration_c);
            read_opt(b, "rng_seed", c.bandit.rng_seed);
            if (b.contains("action_probs"))
            {
                const auto& p = b.at("action_probs");
                read_opt(p, "propose_feature", c.bandit.action_probs.propose_feature);
                read_opt(p, "synthesize", c.bandit.action_probs.synthesize);
                read_opt(p, "create", c.bandit.action_probs.create);
            }
        }

        if (doc.contains("learner"))
        {
            const auto& l = doc.at("learner");
            const auto kind = l.value("kind", std::string("builtin_logreg"));
            if (kind == "builtin_logreg")
                c.learner.kind = eval::LearnerConfig::Kind::BuiltinLogreg;
            else if (kind == "external")
                c.learner.kind = eval::LearnerConfig::Kind::External;
            else
                throw ConfigError("learner kind must be 'builtin_logreg' or 'external'");
            read_opt(l, "l2_lambda", c.learner.l2_lambda);
            read_opt(l, "learning_rate", c.learner.learning_rate);
            read_opt(l, "iterations", c.learner.iterations);
            read_opt(l, "command_template", c.learner.external.command_template);
            read_opt(l, "timeout_seconds", c.learner.external.timeout_seconds);
        }

        if (doc.contains("dsl_backend"))
        {
            const auto& d = doc.at("dsl_backend");
            const auto kind = d.value("kind", std::string("builtin"));
            if (kind == "builtin")
                c.dsl.kind = DslBackend::Kind::Builtin;
            else if (kind == "external")
                c.dsl.kind = DslBackend::Kind::External;
            else
                throw ConfigError("dsl_backend kind must be 'builtin' or 'external'");
            read_opt(d, "command_template", c.dsl.runner.command_template);
            read_opt(d, "timeout_seconds", c.dsl.runner.timeout_seconds);
            read_opt(d, "workers", c.dsl.workers);
            read_opt(d, "per_entity_anchor", c.dsl.per_entity_anchor);
            if (d.contains("time_budget_ms"))
                c.dsl.time_budget_ms = d.at("time_budget_ms").get<long long>();
        }

        read_opt(doc, "max_iterations", c.max_iterations);
        read_opt(doc, "max_critic_iters", c.max_critic_iters);
        read_opt(doc, "exemplars_k", c.exemplars_k);

        if (doc.contains("memory"))
        {
            const auto& m = doc.at("memory");
            read_opt(m, "k", c.memory.k);
            read_opt(m, "dim", c.memory.dim);
            read_opt(m, "max_chars", c.memory.max_chars);
            if (m.contains("endpoint"))
            {
                const auto& e = m.at("endpoint");
                memory::EmbeddingEndpoint ep;
                ep.url = e.at("url").get<std::string>();
                ep.model_name = e.at("model_name").get<std::string>();
                read_opt(e, "api_key_env_var", ep.api_key_env_var);
                read_opt(e, "timeout_seconds", ep.timeout_seconds);
                read_opt(e, "max_retries", ep.max_retries);
                c.memory.endpoint = ep;
            }
        }

        c.out_dir = resolve(base_dir, doc.at("out_dir").get<std::string>());
        read_opt(doc, "prior_ideas", c.prior_ideas);
        if (doc.contains("ablation"))
        {
            const auto& a = doc.at("ablation");
            read_opt(a, "critics", c.ablation.critics);
            read_opt(a, "memory", c.ablation.memory);
            read_opt(a, "ucb", c.ablation.ucb);
        }
        if (doc.contains("prompt_dir"))
            c.prompt_dir = resolve(base_dir, doc.at("prompt_dir").get<std::string>());
        if (doc.contains("wall_clock_seconds"))
            c.wall_clock_seconds = doc.at("wall_clock_seconds").get<double>();
    }
    catch (const json::exception& e)
    {
        throw ConfigError(std::string("config: ") + e.what());
    }
    c.validate();
    return c;
}

RunConfig load_config(const std::filesystem::path& path)
{
    json doc;
    try
    {
        doc = json::parse(read_file(path));
    }
    catch (const json::exception& e)
    {
        throw ConfigError(path.string() + ": " + e.what());
    }
    catch (const IoError& e)
    {
        throw ConfigError(e.what());
    }
    auto base = std::filesystem::absolute(path).parent_path();
    return config_from_json(doc, base);
}

json to_json(const RunConfig& c)
{
    json doc;
    doc["dataset"] = {{"events", c.dataset.events.string()},
                      {"labels", c.dataset.labels.string()},
                      {"schema", c.dataset.schema.string()},
                      {"split",
                       {{"mode", c.dataset.split.mode == data::SplitSpec::Mode::Random ? "random" : "from_labels"},
                        {"train_fraction", c.dataset.split.train_fraction},
                        {"seed", c.dataset.split.seed}}}};
    doc["provider"] = agents::to_json(c.provider);
    doc["bandit"] = {{"exploration_c", c.bandit.exploration_c},
                     {"rng_seed", c.bandit.rng_seed},
                     {"action_probs",
                      {{"propose_feature", c.bandit.action_probs.propose_feature},
                       {"synthesize", c.bandit.action_probs.synthesize},
                       {"create", c.bandit.action_probs.create}}}};
    doc["learner"] = {{"kind", c.learner.kind == eval::LearnerConfig::Kind::External ? "external" : "builtin_logreg"},
                      {"l2_lambda", c.learner.l2_lambda},
                      {"learning_rate", c.learner.learning_rate},
                      {"iterations", c.learner.iterations}};
    if (c.learner.kind == eval::LearnerConfig::Kind::External)
    {
        doc["learner"]["command_template"] = c.learner.external.command_template;
        doc["learner"]["timeout_seconds"] = c.learner.external.timeout_seconds;
    }
    doc["dsl_backend"] = {{"kind", c.dsl.kind == DslBackend::Kind::External ? "external" : "builtin"},
                          {"workers", c.dsl.workers},
                          {"per_entity_anchor", c.dsl.per_entity_anchor}};
    if (c.dsl.kind == DslBackend::Kind::External)
    {
        doc["dsl_backend"]["command_template"] = c.dsl.runner.command_template;
        doc["dsl_backend"]["timeout_seconds"] = c.dsl.runner.timeout_seconds;
    }
    if (c.dsl.time_budget_ms)
        doc["dsl_backend"]["time_budget_ms"] = *c.dsl.time_budget_ms;
    doc["max_iterations"] = c.max_iterations;
    doc["max_critic_iters"] = c.max_critic_iters;
    doc["exemplars_k"] = c.exemplars_k;
    doc["memory"] = {{"k", c.memory.k}, {"dim", c.memory.dim}, {"max_chars", c.memory.max_chars}};
    if (c.memory.endpoint)
        doc["memory"]["endpoint"] = {{"url", c.memory.endpoint->url},
                                     {"model_name", c.memory.endpoint->model_name},
                                     {"api_key_env_var", c.memory.endpoint->api_key_env_var},
                                     {"timeout_seconds", c.memory.endpoint->timeout_seconds},
                                     {"max_retries", c.memory.endpoint->max_retries}};
    doc["out_dir"] = c.out_dir.string();
    doc["prior_ideas"] = c.prior_ideas;
    doc["ablation"] = {{"critics", c.ablation.critics}, {"memory", c.ablation.memory}, {"ucb", c.ablation.ucb}};
    if (c.prompt_dir)
        doc["prompt_dir"] = c.prompt_dir->string();
    if (c.wall_clock_seconds)
        doc["wall_clock_seconds"] = *c.wall_clock_seconds;
    return doc;
}

} // namespace featevo::orch
