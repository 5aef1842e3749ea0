// SPDX-License-Identifier: Apache-2.0
#include "featevo/memory.hpp"

#include "featevo/http.hpp"
#include "featevo/util.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdlib>

namespace featevo::memory
{

namespace
{

/// FNV-1a over the bytes, seeded through the offset basis, then a
/// splitmix64 finalizer for better low-bit spread.
std::uint64_t hash64(const std::string& token, std::uint64_t seed)
{
    std::uint64_t h = 0xcbf29ce484222325ULL ^ seed;
    for (unsigned char c : token)
    {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    h ^= h >> 30;
    h *= 0xbf58476d1ce4e5b9ULL;
    h ^= h >> 27;
    h *= 0x94d049bb133111ebULL;
    h ^= h >> 31;
    return h;
}

constexpr std::uint64_t kIndexSeed = 0x9e3779b97f4a7c15ULL;
constexpr std::uint64_t kSignSeed = 0xd6e8feb86659fd93ULL;

void normalize(std::vector<double>& v)
{
    double norm = 0.0;
    for (double x : v)
        norm += x * x;
    norm = std::sqrt(norm);
    if (norm == 0.0)
        return;
    for (double& x : v)
        x /= norm;
}

} // namespace

void MemoryConfig::validate() const
{
    if (k < 0)
        throw ConfigError("memory k must be >= 0");
    if (dim < 1)
        throw ConfigError("memory dim must be >= 1");
    if (max_chars < 1)
        throw ConfigError("memory max_chars must be >= 1");
    if (endpoint && (endpoint->url.empty() || endpoint->model_name.empty()))
        throw ConfigError("embedding endpoint needs url and model_name");
}

std::vector<double> embed(const std::string& text, int dim)
{
    std::vector<double> v(static_cast<std::size_t>(dim), 0.0);
    std::string token;
    auto flush = [&] {
        if (token.empty())
            return;
        const auto idx = hash64(token, kIndexSeed) % static_cast<std::uint64_t>(dim);
        v[idx] += (hash64(token, kSignSeed) % 2) ? 1.0 : -1.0;
        token.clear();
    };
    for (unsigned char c : text)
    {
        if (std::isalnum(c))
            token += static_cast<char>(std::tolower(c));
        else
            flush();
    }
    flush();
    normalize(v);
    return v;
}

std::vector<double> embed_remote(const std::string& text, const EmbeddingEndpoint& endpoint)
{
    HttpPostOptions post;
    post.timeout_seconds = endpoint.timeout_seconds;
    post.max_retries = endpoint.max_retries;
    if (!endpoint.api_key_env_var.empty())
    {
        const char* key = std::getenv(endpoint.api_key_env_var.c_str());
        if (key == nullptr || *key == '\0')
            throw ConfigError("environment variable " + endpoint.api_key_env_var + " is not set");
        post.bearer_token = key;
    }
    const auto reply = http_post_json(endpoint.url, {{"model", endpoint.model_name}, {"input", text}}, post);
    std::vector<double> v;
    try
    {
        v = reply.at("data").at(0).at("embedding").get<std::vector<double>>();
    }
    catch (const nlohmann::json::exception& e)
    {
        throw agents::TransportError(std::string("unexpected embedding response shape: ") + e.what());
    }
    normalize(v);
    return v;
}

double cosine(const std::vector<double>& a, const std::vector<double>& b)
{
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size() && i < b.size(); ++i)
    {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0)
        return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

std::string embedding_text(const kb::Idea& idea)
{
    std::string text = idea.insight;
    for (const auto& f : idea.features)
        text += "\n" + f.summary;
    return text;
}

void EmbeddingIndex::put(int idea_id, std::vector<double> vector)
{
    if (static_cast<int>(vector.size()) != dim_)
        throw std::invalid_argument("embedding has dimension " + std::to_string(vector.size()) + ", index expects " +
                                    std::to_string(dim_));
    normalize(vector);
    entries_[idea_id] = std::move(vector);
}

nlohmann::json EmbeddingIndex::to_json() const
{
    nlohmann::json entries = nlohmann::json::object();
    for (const auto& [id, v] : entries_)
        entries[std::to_string(id)] = v;
    return {{"dim", dim_}, {"entries", entries}};
}

EmbeddingIndex EmbeddingIndex::from_json(const nlohmann::json& doc)
{
    try
    {
        EmbeddingIndex index(doc.at("dim").get<int>());
        for (const auto& [key, value] : doc.at("entries").items())
        {
            auto v = value.get<std::vector<double>>();
            if (static_cast<int>(v.size()) != index.dim_)
                throw kb::CorruptStateError("embedding for idea " + key + " has the wrong dimension");
            index.entries_[std::stoi(key)] = std::move(v);
        }
        return index;
    }
    catch (const nlohmann::json::exception& e)
    {
        throw kb::CorruptStateError(std::string("index.json: ") + e.what());
    }
}

std::vector<int> retrieve_related(const EmbeddingIndex& index, int query_idea_id, int k)
{
    auto q = index.entries().find(query_idea_id);
    if (q == index.entries().end() || k <= 0)
        return {};
    std::vector<std::pair<double, int>> scored;
    for (const auto& [id, v] : index.entries())
    {
        if (id == query_idea_id)
            continue;
        bool zero = std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0; });
        if (zero)
            continue;
        double dot = 0.0;
        for (std::size_t i = 0; i < v.size(); ++i)
            dot += v[i] * q->second[i];
        scored.emplace_back(dot, id);
    }
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first)
            return a.first > b.first;
        return a.second < b.second;
    });
    std::vector<int> out;
    for (std::size_t i = 0; i < scored.size() && static_cast<int>(i) < k; ++i)
        out.push_back(scored[i].second);
    return out;
}

std::string render_neighbors(const std::vector<const kb::Idea*>& neighbors)
{
    std::string out;
    for (const auto* idea : neighbors)
    {
        out += agents::render_idea(*idea) + "\n";
        std::string positive, negative;
        for (const auto& f : idea->features)
        {
            std::string line = "    - " + f.name + (f.score ? " (score " + format_double(*f.score) + ")" : "") +
                               ": " + f.summary + "\n";
            if (f.status == kb::FeatureStatus::Accepted)
                positive += line;
            else if (f.status == kb::FeatureStatus::Rejected)
                negative += line;
        }
        out += "  positive features:\n" + (positive.empty() ? "    (none)\n" : positive);
        out += "  negative features:\n" + (negative.empty() ? "    (none)\n" : negative);
    }
    return out;
}

ShortTermMemory build_short_term(agents::AgentContext& ctx, const kb::Idea& current,
                                 const std::vector<const kb::Idea*>& neighbors)
{
    if (neighbors.empty())
        return {kNoRelatedExperience, {}};
    const auto prompt =
        ctx.prompts.render(agents::kMemoryAgent, {{"idea", agents::render_idea(current)}, {"neighbors", render_neighbors(neighbors)}});
    std::vector<agents::ChatMessage> messages = {{agents::MessageRole::System, ctx.prompts.raw("system")},
                                                 {agents::MessageRole::User, prompt}};
    const std::string scope = "idea_" + std::to_string(current.id);
    agents::CallOptions options{agents::kMemoryAgent, scope,
                                ctx.temperature_override.value_or(agents::default_temperature(agents::kMemoryAgent))};
    const auto reply = ctx.provider.complete(messages, options);
    if (ctx.log)
        ctx.log->push_back({agents::kMemoryAgent, scope, messages, reply});
    ShortTermMemory stm;
    stm.text = std::get<agents::MemorySummary>(agents::parse_agent_output(reply, agents::OutputKind::MemorySummary).output).text;
    for (const auto* n : neighbors)
        stm.source_idea_ids.push_back(n->id);
    return stm;
}

LongTermMemory update_long_term(const LongTermMemory& memory, const agents::MemorySummary& summary, int iteration)
{
    LongTermMemory next = memory;
    next.updated_at_iteration = iteration;
    next.text = summary.text;
    if (next.text.size() > next.max_chars)
    {
        auto cut = next.text.rfind("\n\n", next.max_chars);
        if (cut == std::string::npos || cut == 0)
        {
            cut = next.max_chars;
            // keep multi-byte UTF-8 sequences whole
            while (cut > 0 && (static_cast<unsigned char>(next.text[cut]) & 0xC0) == 0x80)
                --cut;
        }
        next.text.resize(cut);
    }
    return next;
}

} // namespace featevo::memory
