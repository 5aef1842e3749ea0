// SPDX-License-Identifier: Apache-2.0
#include "featevo/agents.hpp"

#include "featevo/bandit.hpp"
#include "featevo/dsl.hpp"
#include "featevo/http.hpp"
#include "featevo/util.hpp"
#include "prompts_embedded.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <set>

namespace featevo::agents
{

std::string to_string(MessageRole role)
{
    switch (role)
    {
    case MessageRole::System: return "system";
    case MessageRole::User: return "user";
    case MessageRole::Assistant: return "assistant";
    }
    return "?";
}

// ---------------------------------------------------------------- providers

void ProviderConfig::validate() const
{
    if (kind == Kind::Scripted)
    {
        if (scripted_dir.empty())
            throw ConfigError("scripted provider needs scripted_dir");
        return;
    }
    if (endpoint_url.empty())
        throw ConfigError("http provider needs endpoint_url");
    if (model_name.empty())
        throw ConfigError("http provider needs model_name");
    if (api_key_env_var.empty())
        throw ConfigError("http provider needs api_key_env_var");
    if (temperature && !(*temperature >= 0.0))
        throw ConfigError("temperature must be >= 0");
    if (max_retries < 0)
        throw ConfigError("max_retries must be >= 0");
    if (timeout_seconds < 1)
        throw ConfigError("timeout_seconds must be >= 1");
    if (backoff_base_ms < 0)
        throw ConfigError("backoff_base_ms must be >= 0");
}

ProviderConfig provider_config_from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir)
{
    ProviderConfig c;
    try
    {
        const auto kind = doc.at("kind").get<std::string>();
        if (kind == "scripted")
        {
            c.kind = ProviderConfig::Kind::Scripted;
            std::filesystem::path dir = doc.at("scripted_dir").get<std::string>();
            c.scripted_dir = dir.is_absolute() ? dir : base_dir / dir;
        }
        else if (kind == "http")
        {
            c.kind = ProviderConfig::Kind::Http;
            c.endpoint_url = doc.at("endpoint_url").get<std::string>();
            c.model_name = doc.at("model_name").get<std::string>();
            c.api_key_env_var = doc.at("api_key_env_var").get<std::string>();
            if (doc.contains("temperature"))
                c.temperature = doc.at("temperature").get<double>();
            c.max_retries = doc.value("max_retries", c.max_retries);
            c.timeout_seconds = doc.value("timeout_seconds", c.timeout_seconds);
            c.backoff_base_ms = doc.value("backoff_base_ms", c.backoff_base_ms);
        }
        else
        {
            throw ConfigError("provider kind must be 'scripted' or 'http', got '" + kind + "'");
        }
    }
    catch (const nlohmann::json::exception& e)
    {
        throw ConfigError(std::string("provider config: ") + e.what());
    }
    c.validate();
    return c;
}

nlohmann::json to_json(const ProviderConfig& c)
{
    if (c.kind == ProviderConfig::Kind::Scripted)
        return {{"kind", "scripted"}, {"scripted_dir", c.scripted_dir.string()}};
    nlohmann::json doc = {{"kind", "http"},
                          {"endpoint_url", c.endpoint_url},
                          {"model_name", c.model_name},
                          {"api_key_env_var", c.api_key_env_var},
                          {"max_retries", c.max_retries},
                          {"timeout_seconds", c.timeout_seconds},
                          {"backoff_base_ms", c.backoff_base_ms}};
    if (c.temperature)
        doc["temperature"] = *c.temperature;
    return doc;
}

double default_temperature(const std::string& role_tag)
{
    static const std::set<std::string> idea_roles = {kFeatureProposer, kIdeaSynthesizer, kIdeaCreator, kEvaluator,
                                                     kMemoryAgent};
    return idea_roles.count(role_tag) ? 0.7 : 0.2;
}

ScriptedProvider::ScriptedProvider(std::filesystem::path dir) : dir_(std::move(dir))
{
    if (!std::filesystem::is_directory(dir_))
        throw ConfigError("scripted transcript directory does not exist: " + dir_.string());
}

std::string ScriptedProvider::complete(const std::vector<ChatMessage>&, const CallOptions& options)
{
    auto folder = dir_ / options.role_tag;
    std::string key = options.role_tag;
    if (!options.scope.empty() && std::filesystem::is_directory(folder / options.scope))
    {
        folder /= options.scope;
        key += "/" + options.scope;
    }
    int& ordinal = ordinals_[key];
    char name[32];
    std::snprintf(name, sizeof(name), "%03d.txt", ordinal);
    const auto path = folder / name;
    if (!std::filesystem::exists(path))
        throw ScriptExhaustedError("no transcript left for '" + key + "' (wanted " + path.string() + ")");
    ++ordinal;
    return read_file(path);
}

HttpProvider::HttpProvider(ProviderConfig config) : config_(std::move(config)) { config_.validate(); }

std::string HttpProvider::complete(const std::vector<ChatMessage>& messages, const CallOptions& options)
{
    nlohmann::json body;
    body["model"] = config_.model_name;
    body["temperature"] = options.temperature;
    body["messages"] = nlohmann::json::array();
    for (const auto& m : messages)
        body["messages"].push_back({{"role", to_string(m.role)}, {"content", m.content}});

    HttpPostOptions post;
    const char* key = std::getenv(config_.api_key_env_var.c_str());
    if (key == nullptr || *key == '\0')
        throw ConfigError("environment variable " + config_.api_key_env_var + " is not set");
    post.bearer_token = key;
    post.timeout_seconds = config_.timeout_seconds;
    post.max_retries = config_.max_retries;
    post.backoff_base_ms = config_.backoff_base_ms;

    const auto reply = http_post_json(config_.endpoint_url, body, post);
    try
    {
        return reply.at("choices").at(0).at("message").at("content").get<std::string>();
    }
    catch (const nlohmann::json::exception& e)
    {
        throw TransportError(std::string("unexpected completion response shape: ") + e.what());
    }
}

std::unique_ptr<Provider> make_provider(const ProviderConfig& config)
{
    if (config.kind == ProviderConfig::Kind::Scripted)
        return std::make_unique<ScriptedProvider>(config.scripted_dir);
    return std::make_unique<HttpProvider>(config);
}

// ------------------------------------------------------------------ prompts

const std::map<std::string, std::vector<std::string>>& PromptSet::required_placeholders()
{
    static const std::map<std::string, std::vector<std::string>> required = {
        {"system", {}},
        {kFeatureProposer, {"idea", "features", "schema", "short_memory", "long_memory", "grammar", "feedback"}},
        {kIdeaSynthesizer, {"knowledge_base", "schema", "long_memory", "feedback"}},
        {kIdeaCreator, {"knowledge_base", "schema", "long_memory", "feedback"}},
        {kCodeAgent, {"idea", "feature", "program", "exemplars", "schema", "grammar", "feedback"}},
        {kIdeaCritic, {"artifact", "idea", "knowledge_base", "schema"}},
        {kCodeCritic, {"feature", "program", "check", "schema", "grammar"}},
        {kEvaluator, {"idea", "feature", "metrics", "score", "long_memory"}},
        {kMemoryAgent, {"idea", "neighbors"}},
    };
    return required;
}

PromptSet PromptSet::load(const std::optional<std::filesystem::path>& dir)
{
    PromptSet set;
    for (const auto& [name, required] : required_placeholders())
    {
        std::string text = builtin_prompt(name);
        if (dir)
        {
            const auto path = *dir / (name + ".txt");
            if (std::filesystem::exists(path))
                text = read_file(path);
        }
        for (const auto& key : required)
            if (text.find("{" + key + "}") == std::string::npos)
                throw ConfigError("prompt template '" + name + "' is missing placeholder {" + key + "}");
        set.templates_[name] = std::move(text);
    }
    return set;
}

const std::string& PromptSet::raw(const std::string& name) const
{
    auto it = templates_.find(name);
    if (it == templates_.end())
        throw ConfigError("unknown prompt template '" + name + "'");
    return it->second;
}

std::string PromptSet::render(const std::string& name, const std::map<std::string, std::string>& values) const
{
    const std::string& text = raw(name);
    std::string out;
    out.reserve(text.size());
    std::size_t i = 0;
    while (i < text.size())
    {
        if (text[i] == '{')
        {
            const auto close = text.find('}', i + 1);
            if (close != std::string::npos)
            {
                auto it = values.find(text.substr(i + 1, close - i - 1));
                if (it != values.end())
                {
                    out += it->second;
                    i = close + 1;
                    continue;
                }
            }
        }
        out += text[i++];
    }
    return out;
}

// ------------------------------------------------------------ wire format

namespace
{

std::string require_string(const nlohmann::json& obj, const char* field, const char* where)
{
    if (!obj.contains(field))
        throw OutputParseError(std::string(where) + " is missing the field \"" + field + "\"");
    if (!obj.at(field).is_string())
        throw OutputParseError(std::string(where) + " field \"" + field + "\" must be a string");
    return obj.at(field).get<std::string>();
}

std::string require_nonempty(const nlohmann::json& obj, const char* field, const char* where)
{
    auto value = require_string(obj, field, where);
    if (value.find_first_not_of(" \t\r\n") == std::string::npos)
        throw OutputParseError(std::string(where) + " field \"" + field + "\" must not be empty");
    return value;
}

std::string last_json_block(const std::string& text)
{
    static const std::string fence = "```json";
    std::size_t pos = std::string::npos;
    std::size_t search = 0;
    std::string block;
    bool found = false;
    while ((pos = text.find(fence, search)) != std::string::npos)
    {
        const auto body_start = text.find('\n', pos + fence.size());
        if (body_start == std::string::npos)
            break;
        // the tag must be exactly json
        if (text.find_first_not_of(" \t\r", pos + fence.size()) != body_start)
        {
            search = pos + fence.size();
            continue;
        }
        const auto end = text.find("```", body_start + 1);
        if (end == std::string::npos)
            break;
        block = text.substr(body_start + 1, end - body_start - 1);
        found = true;
        search = end + 3;
    }
    if (!found)
        throw OutputParseError("no fenced ```json block found in the reply");
    return block;
}

} // namespace

ParsedOutput parse_agent_output(const std::string& text, OutputKind expected)
{
    nlohmann::json doc;
    try
    {
        doc = nlohmann::json::parse(last_json_block(text));
    }
    catch (const nlohmann::json::exception& e)
    {
        throw OutputParseError(std::string("the json block is malformed: ") + e.what());
    }
    if (!doc.is_object())
        throw OutputParseError("the json block must be an object");

    const bool critic = expected == OutputKind::Critique;
    ParsedOutput parsed;
    auto reasoning = [&](const char* field) {
        return critic ? require_string(doc, field, "reply") : require_nonempty(doc, field, "reply");
    };
    parsed.trace.analyze = reasoning("analyze");
    parsed.trace.self_reflect = reasoning("self_reflect");
    parsed.trace.reconstruct = reasoning("reconstruct");
    if (!doc.contains("output") || !doc.at("output").is_object())
        throw OutputParseError("reply is missing the object field \"output\"");
    const auto& out = doc.at("output");

    switch (expected)
    {
    case OutputKind::IdeaProposal:
    {
        IdeaProposal p;
        p.insight = require_nonempty(out, "insight", "output");
        if (out.contains("parent_ids"))
        {
            const auto& ids = out.at("parent_ids");
            if (!ids.is_array())
                throw OutputParseError("output field \"parent_ids\" must be a list of idea ids");
            for (const auto& id : ids)
            {
                if (!id.is_number_integer())
                    throw OutputParseError("output field \"parent_ids\" must hold integer idea ids");
                p.parent_ids.push_back(id.get<int>());
            }
        }
        parsed.output = std::move(p);
        break;
    }
    case OutputKind::FeatureProposal:
    {
        FeatureProposal p;
        p.name = require_nonempty(out, "name", "output");
        p.reason = require_nonempty(out, "reason", "output");
        p.summary = require_nonempty(out, "summary", "output");
        p.pseudocode = require_nonempty(out, "pseudocode", "output");
        if (!dsl::is_valid_identifier(p.name))
            throw OutputParseError("feature name '" + p.name +
                                   "' is not a valid identifier ([a-z_][a-z0-9_]*, not a keyword)");
        parsed.output = std::move(p);
        break;
    }
    case OutputKind::CodeProposal:
        parsed.output = CodeProposal{require_nonempty(out, "program", "output")};
        break;
    case OutputKind::MemorySummary:
        parsed.output = MemorySummary{require_string(out, "text", "output")};
        break;
    case OutputKind::Critique:
    {
        Critique c;
        const auto verdict = require_string(out, "verdict", "output");
        if (verdict == "accept")
            c.verdict = Critique::Verdict::Accept;
        else if (verdict == "reject")
            c.verdict = Critique::Verdict::Reject;
        else
            throw OutputParseError("output field \"verdict\" must be \"accept\" or \"reject\"");
        if (out.contains("feedback"))
            c.feedback = require_string(out, "feedback", "output");
        if (!c.accepted() && c.feedback.find_first_not_of(" \t\r\n") == std::string::npos)
            throw OutputParseError("a reject verdict needs nonempty feedback");
        parsed.output = std::move(c);
        break;
    }
    }
    return parsed;
}

// --------------------------------------------------------------- rendering

std::string render_idea(const kb::Idea& idea)
{
    std::string out = "[idea " + std::to_string(idea.id) + "] " + idea.insight;
    if (!idea.parent_ids.empty())
    {
        std::vector<std::string> ids;
        for (int p : idea.parent_ids)
            ids.push_back(std::to_string(p));
        out += " (combines ideas " + join(ids, ", ") + ")";
    }
    return out;
}

std::string render_feature_list(const kb::Idea& idea)
{
    if (idea.features.empty())
        return "(none yet)";
    std::string out;
    for (const auto& f : idea.features)
    {
        out += "- " + f.name + " [" + kb::to_string(f.status);
        if (f.score)
            out += ", score " + format_double(*f.score);
        out += "]: " + f.summary + "\n";
    }
    return out;
}

std::string render_knowledge_base(const kb::KnowledgeBase& kb, double exploration_c)
{
    if (kb.empty())
        return "(no ideas yet)";
    std::string out;
    for (const auto& idea : kb.ideas())
    {
        const double value = bandit::ucb(idea, kb.total_visits(), exploration_c);
        out += render_idea(idea) + "\n";
        out += "  visits " + std::to_string(idea.visit_count) + ", cumulative score " +
               format_double(idea.cumulative_score) + ", ucb " + (std::isinf(value) ? "inf" : format_double(value)) +
               "\n";
        for (const auto& f : idea.features)
        {
            if (f.status != kb::FeatureStatus::Accepted && f.status != kb::FeatureStatus::Rejected)
                continue;
            out += "  - " + f.name + " (" + kb::to_string(f.status);
            if (f.score)
                out += ", score " + format_double(*f.score);
            out += "): " + f.summary + "\n";
        }
    }
    return out;
}

std::string render_feature(const FeatureProposal& f)
{
    return "name: " + f.name + "\nreason: " + f.reason + "\nsummary: " + f.summary + "\npseudocode:\n" + f.pseudocode;
}

std::string render_metrics(const eval::MetricsReport& m)
{
    return "auc " + format_double(m.auc) + ", accuracy " + format_double(m.accuracy) + ", precision " +
           format_double(m.precision) + ", recall " + format_double(m.recall) + ", f1 " + format_double(m.f1);
}

// ------------------------------------------------------------------ agents

namespace
{

std::string scope_for(const kb::Idea& idea) { return "idea_" + std::to_string(idea.id); }

ParsedOutput call(AgentContext& ctx, const std::string& role, const std::string& scope, const std::string& prompt,
                  OutputKind kind)
{
    std::vector<ChatMessage> messages = {{MessageRole::System, ctx.prompts.raw("system")},
                                         {MessageRole::User, prompt}};
    CallOptions options{role, scope, ctx.temperature_override.value_or(default_temperature(role))};
    std::string reply = ctx.provider.complete(messages, options);
    if (ctx.log)
        ctx.log->push_back({role, scope, messages, reply});
    return parse_agent_output(reply, kind);
}

std::string feedback_text(const std::optional<std::string>& feedback) { return feedback ? *feedback : "(none)"; }

} // namespace

FeatureProposal propose_feature(AgentContext& ctx, const kb::Idea& idea, const std::string& short_memory,
                                const std::string& long_memory, const std::optional<std::string>& feedback)
{
    const auto prompt = ctx.prompts.render(kFeatureProposer, {{"idea", render_idea(idea)},
                                                              {"features", render_feature_list(idea)},
                                                              {"schema", ctx.schema.render()},
                                                              {"short_memory", short_memory},
                                                              {"long_memory", long_memory.empty() ? "(empty)" : long_memory},
                                                              {"grammar", dsl::grammar_reference()},
                                                              {"feedback", feedback_text(feedback)}});
    auto parsed = call(ctx, kFeatureProposer, scope_for(idea), prompt, OutputKind::FeatureProposal);
    auto proposal = std::get<FeatureProposal>(parsed.output);
    if (idea.has_feature_named(proposal.name))
        throw OutputParseError("duplicate name: idea " + std::to_string(idea.id) + " already has a feature named '" +
                               proposal.name + "'");
    return proposal;
}

IdeaProposal synthesize_idea(AgentContext& ctx, const kb::KnowledgeBase& kb, const std::string& long_memory,
                             double exploration_c, const std::optional<std::string>& feedback)
{
    const auto prompt = ctx.prompts.render(kIdeaSynthesizer, {{"knowledge_base", render_knowledge_base(kb, exploration_c)},
                                                              {"schema", ctx.schema.render()},
                                                              {"long_memory", long_memory.empty() ? "(empty)" : long_memory},
                                                              {"feedback", feedback_text(feedback)}});
    auto parsed = call(ctx, kIdeaSynthesizer, "", prompt, OutputKind::IdeaProposal);
    auto proposal = std::get<IdeaProposal>(parsed.output);
    std::set<int> distinct(proposal.parent_ids.begin(), proposal.parent_ids.end());
    if (distinct.size() != proposal.parent_ids.size())
        throw OutputParseError("parent_ids must not repeat an idea");
    if (distinct.size() < 2)
        throw OutputParseError("a combined idea must list at least two parent_ids");
    for (int id : distinct)
        if (id < 0 || static_cast<std::size_t>(id) >= kb.size())
            throw OutputParseError("parent id " + std::to_string(id) + " does not exist");
    return proposal;
}

IdeaProposal create_idea(AgentContext& ctx, const kb::KnowledgeBase& kb, const std::string& long_memory,
                         double exploration_c, const std::optional<std::string>& feedback)
{
    const auto prompt = ctx.prompts.render(kIdeaCreator, {{"knowledge_base", render_knowledge_base(kb, exploration_c)},
                                                          {"schema", ctx.schema.render()},
                                                          {"long_memory", long_memory.empty() ? "(empty)" : long_memory},
                                                          {"feedback", feedback_text(feedback)}});
    auto parsed = call(ctx, kIdeaCreator, "", prompt, OutputKind::IdeaProposal);
    auto proposal = std::get<IdeaProposal>(parsed.output);
    if (!proposal.parent_ids.empty())
        throw OutputParseError("a new idea must not list parent_ids");
    return proposal;
}

CodeProposal generate_code(AgentContext& ctx, const CodeRequest& request, const std::optional<std::string>& feedback)
{
    const auto prompt = ctx.prompts.render(
        kCodeAgent, {{"idea", render_idea(*request.idea)},
                     {"feature", render_feature(request.feature)},
                     {"program", request.prior_program.empty() ? "(empty)" : request.prior_program},
                     {"exemplars", request.exemplars.empty() ? "(none yet)" : request.exemplars},
                     {"schema", ctx.schema.render()},
                     {"grammar", dsl::grammar_reference()},
                     {"feedback", feedback_text(feedback)}});
    auto parsed = call(ctx, kCodeAgent, scope_for(*request.idea), prompt, OutputKind::CodeProposal);
    return std::get<CodeProposal>(parsed.output);
}

std::optional<std::string> check_code(const std::string& program_text, const std::string& prior_program,
                                      const std::string& feature_name, const data::DataSchema& schema)
{
    dsl::Program program;
    try
    {
        program = dsl::parse(program_text);
        dsl::typecheck(program, schema);
    }
    catch (const dsl::ParseError& e)
    {
        return std::string("parse error: ") + e.what();
    }
    catch (const dsl::TypecheckError& e)
    {
        return std::string("type error: ") + e.what();
    }
    dsl::Program prior;
    if (!prior_program.empty())
        prior = dsl::parse(prior_program);
    if (program.defs.size() != prior.defs.size() + 1)
        return "the program must contain the " + std::to_string(prior.defs.size()) +
               " accepted definitions plus exactly one new definition, found " + std::to_string(program.defs.size()) +
               " definitions";
    for (std::size_t i = 0; i < prior.defs.size(); ++i)
        if (!(program.defs[i] == prior.defs[i]))
            return "accepted definition '" + prior.defs[i].name + "' must stay unchanged at position " +
                   std::to_string(i + 1);
    if (program.defs.back().name != feature_name)
        return "the new definition must be named '" + feature_name + "', found '" + program.defs.back().name + "'";
    return std::nullopt;
}

Critique critique_idea(AgentContext& ctx, const std::string& artifact, const std::string& context,
                       const kb::KnowledgeBase& kb, double exploration_c, const std::string& scope)
{
    const auto prompt = ctx.prompts.render(kIdeaCritic, {{"artifact", artifact},
                                                         {"idea", context},
                                                         {"knowledge_base", render_knowledge_base(kb, exploration_c)},
                                                         {"schema", ctx.schema.render()}});
    return std::get<Critique>(call(ctx, kIdeaCritic, scope, prompt, OutputKind::Critique).output);
}

Critique critique_code(AgentContext& ctx, const CodeRequest& request, const std::string& program_text, bool use_llm)
{
    if (auto failure = check_code(program_text, request.prior_program, request.feature.name, ctx.schema))
        return {Critique::Verdict::Reject, *failure};
    if (!use_llm)
        return {Critique::Verdict::Accept, ""};
    const auto prompt = ctx.prompts.render(kCodeCritic, {{"feature", render_feature(request.feature)},
                                                         {"program", program_text},
                                                         {"check", "parses and type-checks against the schema"},
                                                         {"schema", ctx.schema.render()},
                                                         {"grammar", dsl::grammar_reference()}});
    return std::get<Critique>(call(ctx, kCodeCritic, scope_for(*request.idea), prompt, OutputKind::Critique).output);
}

MemorySummary evaluate_summarize(AgentContext& ctx, const kb::Idea& idea, const FeatureProposal& feature,
                                 const eval::MetricsReport& metrics, double score, const std::string& long_memory)
{
    const auto prompt = ctx.prompts.render(kEvaluator, {{"idea", render_idea(idea)},
                                                        {"feature", render_feature(feature)},
                                                        {"metrics", render_metrics(metrics)},
                                                        {"score", (score > 0 ? "+" : "") + format_double(score)},
                                                        {"long_memory", long_memory.empty() ? "(empty)" : long_memory}});
    return std::get<MemorySummary>(call(ctx, kEvaluator, scope_for(idea), prompt, OutputKind::MemorySummary).output);
}

} // namespace featevo::agents
