// SPDX-License-Identifier: Apache-2.0
#include "featevo/knowledge_base.hpp"

#include "featevo/identifier.hpp"
#include "featevo/util.hpp"

#include <cmath>
#include <set>

namespace featevo::kb
{

using nlohmann::json;

std::string to_string(Origin origin)
{
    switch (origin)
    {
    case Origin::Prior: return "prior";
    case Origin::Synthesized: return "synthesized";
    case Origin::Created: return "created";
    }
    return "?";
}

std::string to_string(FeatureStatus status)
{
    switch (status)
    {
    case FeatureStatus::Pending: return "pending";
    case FeatureStatus::Accepted: return "accepted";
    case FeatureStatus::Rejected: return "rejected";
    case FeatureStatus::Failed: return "failed";
    }
    return "?";
}

namespace
{

Origin origin_from_string(const std::string& s)
{
    if (s == "prior")
        return Origin::Prior;
    if (s == "synthesized")
        return Origin::Synthesized;
    if (s == "created")
        return Origin::Created;
    throw CorruptStateError("unknown idea origin '" + s + "'");
}

FeatureStatus status_from_string(const std::string& s)
{
    if (s == "pending")
        return FeatureStatus::Pending;
    if (s == "accepted")
        return FeatureStatus::Accepted;
    if (s == "rejected")
        return FeatureStatus::Rejected;
    if (s == "failed")
        return FeatureStatus::Failed;
    throw CorruptStateError("unknown feature status '" + s + "'");
}

} // namespace

const FeatureImpl* Idea::find_feature(int feature_id) const
{
    for (const auto& f : features)
        if (f.id == feature_id)
            return &f;
    return nullptr;
}

bool Idea::has_feature_named(const std::string& name) const
{
    for (const auto& f : features)
        if (f.name == name)
            return true;
    return false;
}

int KnowledgeBase::add_idea(const std::string& insight, Origin origin, std::vector<int> parent_ids, int iteration)
{
    if (insight.empty())
        throw ProvenanceError("idea insight must be nonempty");
    const int id = static_cast<int>(ideas_.size());
    if (origin == Origin::Synthesized)
    {
        std::set<int> distinct(parent_ids.begin(), parent_ids.end());
        if (distinct.size() < 2 || distinct.size() != parent_ids.size())
            throw ProvenanceError("a synthesized idea needs at least two distinct parents");
        for (int p : parent_ids)
            if (p < 0 || p >= id)
                throw ProvenanceError("parent id " + std::to_string(p) + " does not name an existing idea");
    }
    else if (!parent_ids.empty())
    {
        throw ProvenanceError("only synthesized ideas carry parents");
    }
    Idea idea;
    idea.id = id;
    idea.insight = insight;
    idea.origin = origin;
    idea.parent_ids = std::move(parent_ids);
    idea.created_at_iteration = iteration;
    ideas_.push_back(std::move(idea));
    return id;
}

int KnowledgeBase::add_feature(int idea_id, FeatureImpl feature)
{
    auto& idea = mutable_idea(idea_id);
    if (!dsl::is_valid_identifier(feature.name))
        throw StateError("feature name '" + feature.name + "' is not a valid identifier");
    if (idea.has_feature_named(feature.name))
        throw StateError("idea " + std::to_string(idea_id) + " already has a feature named '" + feature.name + "'");
    feature.id = next_feature_id_++;
    feature.status = FeatureStatus::Pending;
    feature.score.reset();
    idea.features.push_back(std::move(feature));
    return idea.features.back().id;
}

void KnowledgeBase::record_outcome(int idea_id, int feature_id, double score)
{
    auto& feature = pending_feature(idea_id, feature_id);
    feature.score = score;
    feature.status = score > 0.0 ? FeatureStatus::Accepted : FeatureStatus::Rejected;
    auto& idea = mutable_idea(idea_id);
    idea.visit_count += 1;
    idea.cumulative_score += score;
    total_visits_ += 1;
}

void KnowledgeBase::mark_failed(int idea_id, int feature_id)
{
    pending_feature(idea_id, feature_id).status = FeatureStatus::Failed;
}

std::vector<FeatureImpl> KnowledgeBase::accepted_program(int idea_id) const
{
    std::vector<FeatureImpl> out;
    for (const auto& f : idea(idea_id).features)
        if (f.status == FeatureStatus::Accepted)
            out.push_back(f);
    return out;
}

const Idea& KnowledgeBase::idea(int idea_id) const
{
    if (idea_id < 0 || static_cast<std::size_t>(idea_id) >= ideas_.size())
        throw StateError("no idea with id " + std::to_string(idea_id));
    return ideas_[static_cast<std::size_t>(idea_id)];
}

Idea& KnowledgeBase::mutable_idea(int idea_id)
{
    return const_cast<Idea&>(idea(idea_id));
}

FeatureImpl& KnowledgeBase::pending_feature(int idea_id, int feature_id)
{
    auto& idea = mutable_idea(idea_id);
    for (auto& f : idea.features)
    {
        if (f.id != feature_id)
            continue;
        if (f.status != FeatureStatus::Pending)
            throw StateError("feature " + std::to_string(feature_id) + " is " + to_string(f.status) + ", not pending");
        return f;
    }
    throw StateError("idea " + std::to_string(idea_id) + " has no feature " + std::to_string(feature_id));
}

void KnowledgeBase::validate() const
{
    auto fail = [](const std::string& msg) { throw CorruptStateError(msg); };
    int visits = 0;
    std::set<int> feature_ids;
    for (std::size_t i = 0; i < ideas_.size(); ++i)
    {
        const auto& idea = ideas_[i];
        const std::string where = "idea " + std::to_string(i);
        if (idea.id != static_cast<int>(i))
            fail(where + ": ids must be dense from 0");
        if (idea.insight.empty())
            fail(where + ": empty insight");
        if (idea.origin == Origin::Synthesized)
        {
            std::set<int> distinct(idea.parent_ids.begin(), idea.parent_ids.end());
            if (distinct.size() < 2 || distinct.size() != idea.parent_ids.size())
                fail(where + ": synthesized idea needs at least two distinct parents");
            for (int p : idea.parent_ids)
                if (p < 0 || p >= idea.id)
                    fail(where + ": parent " + std::to_string(p) + " is not an earlier idea");
        }
        else if (!idea.parent_ids.empty())
        {
            fail(where + ": only synthesized ideas carry parents");
        }
        if (idea.visit_count < 0)
            fail(where + ": negative visit count");

        int evaluated = 0;
        double score_sum = 0.0;
        std::set<std::string> names;
        for (const auto& f : idea.features)
        {
            const std::string fw = where + " feature " + std::to_string(f.id);
            if (!feature_ids.insert(f.id).second)
                fail(fw + ": duplicate feature id");
            if (f.id >= next_feature_id_)
                fail(fw + ": id beyond next_feature_id");
            if (!dsl::is_valid_identifier(f.name))
                fail(fw + ": invalid name '" + f.name + "'");
            if (!names.insert(f.name).second)
                fail(fw + ": duplicate name '" + f.name + "'");
            switch (f.status)
            {
            case FeatureStatus::Accepted:
                if (!f.score || !(*f.score > 0.0))
                    fail(fw + ": accepted requires a positive score");
                break;
            case FeatureStatus::Rejected:
                if (!f.score || *f.score > 0.0)
                    fail(fw + ": rejected requires a score <= 0");
                break;
            case FeatureStatus::Pending:
            case FeatureStatus::Failed:
                if (f.score)
                    fail(fw + ": " + to_string(f.status) + " feature must not carry a score");
                break;
            }
            if (f.score)
            {
                ++evaluated;
                score_sum += *f.score;
            }
        }
        if (evaluated != idea.visit_count)
            fail(where + ": visit_count " + std::to_string(idea.visit_count) + " != evaluated features " +
                 std::to_string(evaluated));
        if (std::abs(score_sum - idea.cumulative_score) > 1e-12)
            fail(where + ": cumulative_score does not match feature scores");
        visits += idea.visit_count;
    }
    if (visits != total_visits_)
        fail("total_visits " + std::to_string(total_visits_) + " != sum of visit counts " + std::to_string(visits));
}

json KnowledgeBase::to_json() const
{
    json ideas = json::array();
    for (const auto& idea : ideas_)
    {
        json features = json::array();
        for (const auto& f : idea.features)
        {
            features.push_back({
                {"id", f.id},
                {"name", f.name},
                {"reason", f.reason},
                {"summary", f.summary},
                {"pseudocode", f.pseudocode},
                {"status", to_string(f.status)},
                {"score", f.score ? json(*f.score) : json(nullptr)},
                {"iteration", f.iteration},
                {"program_fragment", f.program_fragment ? json(*f.program_fragment) : json(nullptr)},
            });
        }
        ideas.push_back({
            {"id", idea.id},
            {"insight", idea.insight},
            {"origin", to_string(idea.origin)},
            {"parent_ids", idea.parent_ids},
            {"visit_count", idea.visit_count},
            {"cumulative_score", idea.cumulative_score},
            {"created_at_iteration", idea.created_at_iteration},
            {"features", features},
        });
    }
    return {{"total_visits", total_visits_}, {"ideas", ideas}};
}

KnowledgeBase KnowledgeBase::from_json(const json& doc)
{
    KnowledgeBase kb;
    try
    {
        kb.total_visits_ = doc.at("total_visits").get<int>();
        int max_feature = -1;
        for (const auto& j : doc.at("ideas"))
        {
            Idea idea;
            idea.id = j.at("id").get<int>();
            idea.insight = j.at("insight").get<std::string>();
            idea.origin = origin_from_string(j.at("origin").get<std::string>());
            idea.parent_ids = j.at("parent_ids").get<std::vector<int>>();
            idea.visit_count = j.at("visit_count").get<int>();
            idea.cumulative_score = j.at("cumulative_score").get<double>();
            idea.created_at_iteration = j.at("created_at_iteration").get<int>();
            for (const auto& fj : j.at("features"))
            {
                FeatureImpl f;
                f.id = fj.at("id").get<int>();
                f.name = fj.at("name").get<std::string>();
                f.reason = fj.at("reason").get<std::string>();
                f.summary = fj.at("summary").get<std::string>();
                f.pseudocode = fj.at("pseudocode").get<std::string>();
                f.status = status_from_string(fj.at("status").get<std::string>());
                if (!fj.at("score").is_null())
                    f.score = fj.at("score").get<double>();
                f.iteration = fj.at("iteration").get<int>();
                if (!fj.at("program_fragment").is_null())
                    f.program_fragment = fj.at("program_fragment").get<std::string>();
                max_feature = std::max(max_feature, f.id);
                idea.features.push_back(std::move(f));
            }
            kb.ideas_.push_back(std::move(idea));
        }
        kb.next_feature_id_ = max_feature + 1;
    }
    catch (const json::exception& e)
    {
        throw CorruptStateError(std::string("malformed knowledge base: ") + e.what());
    }
    kb.validate();
    return kb;
}

void KnowledgeBase::save(const std::filesystem::path& path) const
{
    write_file_atomic(path, to_json().dump(2) + "\n");
}

KnowledgeBase KnowledgeBase::load(const std::filesystem::path& path)
{
    json doc;
    try
    {
        doc = json::parse(read_file(path));
    }
    catch (const json::parse_error& e)
    {
        throw CorruptStateError(std::string("knowledge base is not valid JSON: ") + e.what());
    }
    return from_json(doc);
}

} // namespace featevo::kb
