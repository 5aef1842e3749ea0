// SPDX-License-Identifier: Apache-2.0
#include "featevo/orchestrator.hpp"

namespace featevo::orch
{

using nlohmann::json;

std::string to_string(Outcome outcome)
{
    switch (outcome)
    {
    case Outcome::Accepted: return "accepted";
    case Outcome::Rejected: return "rejected";
    case Outcome::ForfeitedIdea: return "forfeited_idea";
    case Outcome::ForfeitedCode: return "forfeited_code";
    case Outcome::Error: return "error";
    case Outcome::IdeaAdded: return "idea_added";
    }
    return "?";
}

Outcome outcome_from_string(const std::string& text)
{
    for (auto o : {Outcome::Accepted, Outcome::Rejected, Outcome::ForfeitedIdea, Outcome::ForfeitedCode,
                   Outcome::Error, Outcome::IdeaAdded})
        if (to_string(o) == text)
            return o;
    throw kb::CorruptStateError("unknown outcome '" + text + "'");
}

json IterationRecord::to_json() const
{
    json doc;
    doc["iteration"] = iteration;
    doc["action"] = bandit::to_string(action);
    doc["idea_id"] = idea_id ? json(*idea_id) : json(nullptr);
    doc["feature_id"] = feature_id ? json(*feature_id) : json(nullptr);
    doc["feature_name"] = feature_name ? json(*feature_name) : json(nullptr);
    doc["program"] = program;
    doc["critiques"] = json::array();
    for (const auto& c : critiques)
        doc["critiques"].push_back({{"stage", c.stage}, {"feedback", c.feedback}});
    doc["metrics"] = metrics ? eval::to_json(*metrics) : json(nullptr);
    doc["score"] = score ? json(*score) : json(nullptr);
    doc["outcome"] = to_string(outcome);
    doc["error"] = error;
    doc["notes"] = notes;
    doc["memory_sources"] = memory_sources;
    doc["best_metric"] = best_metric;
    return doc;
}

IterationRecord IterationRecord::from_json(const json& doc)
{
    try
    {
        IterationRecord r;
        r.iteration = doc.at("iteration").get<int>();
        r.action = bandit::action_from_string(doc.at("action").get<std::string>());
        if (!doc.at("idea_id").is_null())
            r.idea_id = doc.at("idea_id").get<int>();
        if (!doc.at("feature_id").is_null())
            r.feature_id = doc.at("feature_id").get<int>();
        if (!doc.at("feature_name").is_null())
            r.feature_name = doc.at("feature_name").get<std::string>();
        r.program = doc.at("program").get<std::string>();
        for (const auto& c : doc.at("critiques"))
            r.critiques.push_back({c.at("stage").get<std::string>(), c.at("feedback").get<std::string>()});
        if (!doc.at("metrics").is_null())
            r.metrics = eval::metrics_from_json(doc.at("metrics"));
        if (!doc.at("score").is_null())
            r.score = doc.at("score").get<double>();
        r.outcome = outcome_from_string(doc.at("outcome").get<std::string>());
        r.error = doc.at("error").get<std::string>();
        r.notes = doc.at("notes").get<std::vector<std::string>>();
        r.memory_sources = doc.at("memory_sources").get<std::vector<int>>();
        r.best_metric = doc.at("best_metric").get<double>();
        return r;
    }
    catch (const json::exception& e)
    {
        throw kb::CorruptStateError(std::string("record.json: ") + e.what());
    }
}

json RunState::to_json() const
{
    json doc;
    doc["format"] = 1;
    doc["last_iteration"] = last_iteration;
    doc["knowledge_base"] = kb.to_json();
    doc["long_term_memory"] = {{"text", long_term.text},
                               {"max_chars", long_term.max_chars},
                               {"updated_at_iteration", long_term.updated_at_iteration}};
    doc["index"] = index.to_json();
    doc["ordinals"] = ordinals;
    doc["rng_state"] = rng_state;
    doc["baseline"] = eval::to_json(baseline);
    json metrics = json::object();
    for (const auto& [id, m] : idea_metrics)
        metrics[std::to_string(id)] = eval::to_json(m);
    doc["idea_metrics"] = metrics;
    doc["best"] = {{"metric", best.metric},
                   {"idea_id", best.idea_id ? json(*best.idea_id) : json(nullptr)},
                   {"program", best.program},
                   {"iteration", best.iteration}};
    doc["best_trajectory"] = best_trajectory;
    return doc;
}

RunState RunState::from_json(const json& doc)
{
    try
    {
        if (doc.at("format").get<int>() != 1)
            throw kb::CorruptStateError("unsupported state format");
        RunState s;
        s.last_iteration = doc.at("last_iteration").get<int>();
        s.kb = kb::KnowledgeBase::from_json(doc.at("knowledge_base"));
        const auto& ltm = doc.at("long_term_memory");
        s.long_term.text = ltm.at("text").get<std::string>();
        s.long_term.max_chars = ltm.at("max_chars").get<std::size_t>();
        s.long_term.updated_at_iteration = ltm.at("updated_at_iteration").get<int>();
        s.index = memory::EmbeddingIndex::from_json(doc.at("index"));
        s.ordinals = doc.at("ordinals").get<std::map<std::string, int>>();
        s.rng_state = doc.at("rng_state").get<std::string>();
        s.baseline = eval::metrics_from_json(doc.at("baseline"));
        for (const auto& [key, value] : doc.at("idea_metrics").items())
            s.idea_metrics[std::stoi(key)] = eval::metrics_from_json(value);
        const auto& best = doc.at("best");
        s.best.metric = best.at("metric").get<double>();
        if (!best.at("idea_id").is_null())
            s.best.idea_id = best.at("idea_id").get<int>();
        s.best.program = best.at("program").get<std::string>();
        s.best.iteration = best.at("iteration").get<int>();
        s.best_trajectory = doc.at("best_trajectory").get<std::vector<double>>();
        return s;
    }
    catch (const json::exception& e)
    {
        throw kb::CorruptStateError(std::string("state.json: ") + e.what());
    }
}

} // namespace featevo::orch
