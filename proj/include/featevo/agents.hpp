// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "featevo/dataset.hpp"
#include "featevo/error.hpp"
#include "featevo/evaluation.hpp"
#include "featevo/knowledge_base.hpp"

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

namespace featevo::agents
{

class TransportError : public Error
{
public:
    using Error::Error;
};

class ScriptExhaustedError : public Error
{
public:
    using Error::Error;
};

/// Malformed or contract-violating agent output; the message is fed back to
/// the agent on retry.
class OutputParseError : public Error
{
public:
    using Error::Error;
};

enum class MessageRole
{
    System,
    User,
    Assistant,
};

std::string to_string(MessageRole role);

struct ChatMessage
{
    MessageRole role = MessageRole::User;
    std::string content;
};

// Role tags. They name transcript directories and prompt templates.
inline constexpr const char* kFeatureProposer = "feature_proposer";
inline constexpr const char* kIdeaSynthesizer = "idea_synthesizer";
inline constexpr const char* kIdeaCreator = "idea_creator";
inline constexpr const char* kCodeAgent = "code_agent";
inline constexpr const char* kIdeaCritic = "idea_critic";
inline constexpr const char* kCodeCritic = "code_critic";
inline constexpr const char* kEvaluator = "evaluator";
inline constexpr const char* kMemoryAgent = "memory_agent";

struct ProviderConfig
{
    enum class Kind
    {
        Scripted,
        Http,
    };
    Kind kind = Kind::Scripted;
    std::filesystem::path scripted_dir;
    std::string endpoint_url;
    std::string model_name;
    std::string api_key_env_var;
    /// Overrides the per-role defaults when set.
    std::optional<double> temperature;
    int max_retries = 3;
    int timeout_seconds = 60;
    int backoff_base_ms = 500;

    void validate() const;
};

ProviderConfig provider_config_from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir);
nlohmann::json to_json(const ProviderConfig& config);

/// 0.7 for idea roles, 0.2 for code and critic roles.
double default_temperature(const std::string& role_tag);

struct CallOptions
{
    std::string role_tag;
    /// Optional sub-key; the scripted provider prefers <role>/<scope>/ when present.
    std::string scope;
    double temperature = 0.7;
};

class Provider
{
public:
    virtual ~Provider() = default;
    virtual std::string complete(const std::vector<ChatMessage>& messages, const CallOptions& options) = 0;
};

/// Replays <dir>/<role>/<NNN>.txt by per-role call ordinal. When a scope is
/// given and <dir>/<role>/<scope>/ exists, that directory is used with its
/// own ordinal instead.
class ScriptedProvider : public Provider
{
public:
    explicit ScriptedProvider(std::filesystem::path dir);

    std::string complete(const std::vector<ChatMessage>& messages, const CallOptions& options) override;

    const std::map<std::string, int>& ordinals() const { return ordinals_; }
    void set_ordinals(std::map<std::string, int> ordinals) { ordinals_ = std::move(ordinals); }

private:
    std::filesystem::path dir_;
    std::map<std::string, int> ordinals_;
};

/// Chat-completion endpoint client with retry on 5xx and transport failures.
class HttpProvider : public Provider
{
public:
    explicit HttpProvider(ProviderConfig config);

    std::string complete(const std::vector<ChatMessage>& messages, const CallOptions& options) override;

private:
    ProviderConfig config_;
};

std::unique_ptr<Provider> make_provider(const ProviderConfig& config);

/// One provider exchange, kept for the iteration transcript.
struct Exchange
{
    std::string role_tag;
    std::string scope;
    std::vector<ChatMessage> messages;
    std::string reply;
};

/// Named prompt templates with {placeholder} substitution.
class PromptSet
{
public:
    /// Built-in templates, optionally overridden file by file from `dir`.
    /// Throws ConfigError when a template lacks a required placeholder.
    static PromptSet load(const std::optional<std::filesystem::path>& dir = std::nullopt);

    std::string render(const std::string& name, const std::map<std::string, std::string>& values) const;
    const std::string& raw(const std::string& name) const;

    /// Placeholders every template must contain.
    static const std::map<std::string, std::vector<std::string>>& required_placeholders();

private:
    std::map<std::string, std::string> templates_;
};

/// Everything an agent call needs besides its own inputs.
struct AgentContext
{
    Provider& provider;
    const PromptSet& prompts;
    const data::DataSchema& schema;
    std::optional<double> temperature_override;
    /// Exchanges are appended here when set.
    std::vector<Exchange>* log = nullptr;
};

struct ThinkTrace
{
    std::string analyze;
    std::string self_reflect;
    std::string reconstruct;
};

struct IdeaProposal
{
    std::string insight;
    std::vector<int> parent_ids;
};

struct FeatureProposal
{
    std::string name;
    std::string reason;
    std::string summary;
    std::string pseudocode;
};

struct CodeProposal
{
    std::string program_text;
};

struct MemorySummary
{
    std::string text;
};

struct Critique
{
    enum class Verdict
    {
        Accept,
        Reject,
    };
    Verdict verdict = Verdict::Accept;
    std::string feedback;

    bool accepted() const { return verdict == Verdict::Accept; }
};

enum class OutputKind
{
    IdeaProposal,
    FeatureProposal,
    CodeProposal,
    MemorySummary,
    Critique,
};

using AgentOutput = std::variant<IdeaProposal, FeatureProposal, CodeProposal, MemorySummary, Critique>;

struct ParsedOutput
{
    ThinkTrace trace;
    AgentOutput output;
};

/// Reads the last ```json fenced block of `text`.
ParsedOutput parse_agent_output(const std::string& text, OutputKind expected);

/// Text renderings shared by prompts and reports.
std::string render_idea(const kb::Idea& idea);
std::string render_feature_list(const kb::Idea& idea);
std::string render_knowledge_base(const kb::KnowledgeBase& kb, double exploration_c);
std::string render_feature(const FeatureProposal& feature);
std::string render_metrics(const eval::MetricsReport& metrics);

FeatureProposal propose_feature(AgentContext& ctx, const kb::Idea& idea, const std::string& short_memory,
                                const std::string& long_memory, const std::optional<std::string>& feedback = {});

IdeaProposal synthesize_idea(AgentContext& ctx, const kb::KnowledgeBase& kb, const std::string& long_memory,
                             double exploration_c, const std::optional<std::string>& feedback = {});

IdeaProposal create_idea(AgentContext& ctx, const kb::KnowledgeBase& kb, const std::string& long_memory,
                         double exploration_c, const std::optional<std::string>& feedback = {});

struct CodeRequest
{
    const kb::Idea* idea = nullptr;
    FeatureProposal feature;
    std::string prior_program;
    std::string exemplars;
};

CodeProposal generate_code(AgentContext& ctx, const CodeRequest& request,
                           const std::optional<std::string>& feedback = {});

/// Parse, typecheck and structure check of a code proposal: the prior
/// definitions unchanged and in order, then exactly one new definition named
/// after the feature. Returns the failure reason, or nothing when it passes.
std::optional<std::string> check_code(const std::string& program_text, const std::string& prior_program,
                                      const std::string& feature_name, const data::DataSchema& schema);

Critique critique_idea(AgentContext& ctx, const std::string& artifact, const std::string& context,
                       const kb::KnowledgeBase& kb, double exploration_c, const std::string& scope = {});

/// Mechanical pre-check first; a failing program is rejected without a
/// provider call. `use_llm` false skips the LLM critic entirely.
Critique critique_code(AgentContext& ctx, const CodeRequest& request, const std::string& program_text,
                       bool use_llm);

MemorySummary evaluate_summarize(AgentContext& ctx, const kb::Idea& idea, const FeatureProposal& feature,
                                 const eval::MetricsReport& metrics, double score, const std::string& long_memory);

/// Outcome of a bounded generate/critique loop.
template <class T>
struct RefineResult
{
    std::optional<T> artifact;
    /// Every rejection reason in order; a forfeit carries max_z of them.
    std::vector<std::string> feedback;
    int generate_calls = 0;

    bool forfeited() const { return !artifact.has_value(); }
};

/// Alternates generate and critique, passing the last feedback back into
/// generate. Output parse errors from either side count as rejections.
template <class T>
RefineResult<T> refine_loop(const std::function<T(const std::optional<std::string>&)>& generate,
                            const std::function<Critique(const T&)>& critic, int max_z)
{
    if (max_z < 1)
        throw ConfigError("max critic iterations must be >= 1");
    RefineResult<T> result;
    std::optional<std::string> feedback;
    for (int z = 0; z < max_z; ++z)
    {
        ++result.generate_calls;
        std::optional<T> candidate;
        try
        {
            candidate = generate(feedback);
        }
        catch (const OutputParseError& e)
        {
            feedback = std::string("your reply could not be used: ") + e.what();
            result.feedback.push_back(*feedback);
            continue;
        }
        Critique verdict;
        try
        {
            verdict = critic(*candidate);
        }
        catch (const OutputParseError& e)
        {
            verdict = {Critique::Verdict::Reject, std::string("critic reply could not be used: ") + e.what()};
        }
        if (verdict.accepted())
        {
            result.artifact = std::move(candidate);
            return result;
        }
        feedback = verdict.feedback;
        result.feedback.push_back(verdict.feedback);
    }
    return result;
}

} // namespace featevo::agents
