// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "featevo/agents.hpp"
#include "featevo/knowledge_base.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace featevo::memory
{

inline constexpr const char* kNoRelatedExperience = "no related prior experience";

struct EmbeddingEndpoint
{
    std::string url;
    std::string model_name;
    std::string api_key_env_var;
    int timeout_seconds = 60;
    int max_retries = 3;
};

struct MemoryConfig
{
    int k = 3;
    int dim = 256;
    std::size_t max_chars = 4000;
    /// When set, embeddings come from this endpoint instead of the hashed embedder.
    std::optional<EmbeddingEndpoint> endpoint;

    void validate() const;
};

/// Hashed bag of words: lowercase tokens split on non-alphanumerics, each
/// adding a signed unit at a hashed index, then L2-normalized.
std::vector<double> embed(const std::string& text, int dim = 256);

/// Embedding through a remote endpoint; the result is L2-normalized.
std::vector<double> embed_remote(const std::string& text, const EmbeddingEndpoint& endpoint);

double cosine(const std::vector<double>& a, const std::vector<double>& b);

/// Insight followed by every feature summary, newline separated.
std::string embedding_text(const kb::Idea& idea);

class EmbeddingIndex
{
public:
    explicit EmbeddingIndex(int dim = 256) : dim_(dim) {}

    int dim() const { return dim_; }
    const std::map<int, std::vector<double>>& entries() const { return entries_; }

    /// Stores `vector` normalized; a zero vector is kept as zeros.
    void put(int idea_id, std::vector<double> vector);
    bool contains(int idea_id) const { return entries_.count(idea_id) > 0; }

    nlohmann::json to_json() const;
    static EmbeddingIndex from_json(const nlohmann::json& doc);

    bool operator==(const EmbeddingIndex&) const = default;

private:
    int dim_;
    std::map<int, std::vector<double>> entries_;
};

/// Top-k ids by cosine to the query, excluding the query and zero vectors;
/// ties go to the smaller id.
std::vector<int> retrieve_related(const EmbeddingIndex& index, int query_idea_id, int k);

struct ShortTermMemory
{
    std::string text;
    std::vector<int> source_idea_ids;
};

/// Summarizes the neighbors through the memory agent; no call without neighbors.
ShortTermMemory build_short_term(agents::AgentContext& ctx, const kb::Idea& current,
                                 const std::vector<const kb::Idea*>& neighbors);

/// Prompt section listing each neighbor with its accepted and rejected features.
std::string render_neighbors(const std::vector<const kb::Idea*>& neighbors);

struct LongTermMemory
{
    std::string text;
    std::size_t max_chars = 4000;
    int updated_at_iteration = 0;

    bool operator==(const LongTermMemory&) const = default;
};

/// Replaces the document with the summary, cut at the last paragraph break
/// that fits in max_chars (a hard cut when none does).
LongTermMemory update_long_term(const LongTermMemory& memory, const agents::MemorySummary& summary, int iteration);

} // namespace featevo::memory
