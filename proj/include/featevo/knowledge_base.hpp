// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "featevo/error.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace featevo::kb
{

class ProvenanceError : public Error
{
public:
    using Error::Error;
};

class StateError : public Error
{
public:
    using Error::Error;
};

class CorruptStateError : public Error
{
public:
    using Error::Error;
};

enum class Origin
{
    Prior,
    Synthesized,
    Created,
};

enum class FeatureStatus
{
    Pending,
    Accepted,
    Rejected,
    Failed,
};

std::string to_string(Origin origin);
std::string to_string(FeatureStatus status);

/// One concrete realization of an idea.
struct FeatureImpl
{
    int id = 0;
    std::string name;
    std::string reason;
    std::string summary;
    std::string pseudocode;
    FeatureStatus status = FeatureStatus::Pending;
    std::optional<double> score;
    int iteration = 0;
    std::optional<std::string> program_fragment;

    bool operator==(const FeatureImpl&) const = default;
};

/// An island: an insight plus its population of feature implementations.
struct Idea
{
    int id = 0;
    std::string insight;
    Origin origin = Origin::Prior;
    std::vector<int> parent_ids;
    std::vector<FeatureImpl> features;
    int visit_count = 0;
    double cumulative_score = 0.0;
    int created_at_iteration = 0;

    bool operator==(const Idea&) const = default;

    const FeatureImpl* find_feature(int feature_id) const;
    bool has_feature_named(const std::string& name) const;
};

class KnowledgeBase
{
public:
    int add_idea(const std::string& insight, Origin origin, std::vector<int> parent_ids, int iteration = 0);

    /// Appends a pending feature and returns its id.
    int add_feature(int idea_id, FeatureImpl feature);

    /// Accepts iff score > 0; updates visit counts and cumulative score.
    void record_outcome(int idea_id, int feature_id, double score);

    /// Marks a pending feature failed; counts and scores are untouched.
    void mark_failed(int idea_id, int feature_id);

    /// Accepted features of an idea in insertion order.
    std::vector<FeatureImpl> accepted_program(int idea_id) const;

    const std::vector<Idea>& ideas() const { return ideas_; }
    const Idea& idea(int idea_id) const;
    bool empty() const { return ideas_.empty(); }
    std::size_t size() const { return ideas_.size(); }
    int total_visits() const { return total_visits_; }
    int next_feature_id() const { return next_feature_id_; }

    /// Throws CorruptStateError when any structural invariant fails.
    void validate() const;

    nlohmann::json to_json() const;
    static KnowledgeBase from_json(const nlohmann::json& doc);

    void save(const std::filesystem::path& path) const;
    static KnowledgeBase load(const std::filesystem::path& path);

    bool operator==(const KnowledgeBase&) const = default;

private:
    Idea& mutable_idea(int idea_id);
    FeatureImpl& pending_feature(int idea_id, int feature_id);

    std::vector<Idea> ideas_;
    int total_visits_ = 0;
    int next_feature_id_ = 0;
};

} // namespace featevo::kb
