// SPDX-License-Identifier: Apache-2.0
#include "featevo/bandit.hpp"

#include <cmath>
#include <limits>

namespace featevo::bandit
{

std::string to_string(Action action)
{
    switch (action)
    {
    case Action::ProposeFeature: return "propose_feature";
    case Action::Synthesize: return "synthesize";
    case Action::Create: return "create";
    }
    return "?";
}

Action action_from_string(const std::string& text)
{
    if (text == "propose_feature")
        return Action::ProposeFeature;
    if (text == "synthesize")
        return Action::Synthesize;
    if (text == "create")
        return Action::Create;
    throw ConfigError("unknown action '" + text + "'");
}

void BanditConfig::validate() const
{
    if (!(exploration_c >= 0.0) || !std::isfinite(exploration_c))
        throw ConfigError("exploration_c must be a finite value >= 0");
    const auto& p = action_probs;
    if (p.propose_feature < 0.0 || p.synthesize < 0.0 || p.create < 0.0)
        throw ConfigError("action probabilities must be nonnegative");
    if (std::abs(p.propose_feature + p.synthesize + p.create - 1.0) > 1e-12)
        throw ConfigError("action probabilities must sum to 1");
}

double ucb(double cumulative_score, int visit_count, int total_visits, double c)
{
    if (visit_count <= 0)
        return std::numeric_limits<double>::infinity();
    const double q_i = static_cast<double>(visit_count);
    const double q = static_cast<double>(total_visits);
    return cumulative_score / q_i + c * std::sqrt(std::log(q) / q_i);
}

double ucb(const kb::Idea& idea, int total_visits, double c)
{
    return ucb(idea.cumulative_score, idea.visit_count, total_visits, c);
}

int select_idea(const kb::KnowledgeBase& kb, const BanditConfig& config)
{
    if (kb.empty())
        throw EmptyKnowledgeBaseError("cannot select an idea from an empty knowledge base");
    int best = 0;
    double best_value = ucb(kb.ideas().front(), kb.total_visits(), config.exploration_c);
    for (const auto& idea : kb.ideas())
    {
        double value = ucb(idea, kb.total_visits(), config.exploration_c);
        // strict: ties keep the earliest id
        if (value > best_value)
        {
            best_value = value;
            best = idea.id;
        }
    }
    return best;
}

int select_idea_uniform(const kb::KnowledgeBase& kb, Rng& rng)
{
    if (kb.empty())
        throw EmptyKnowledgeBaseError("cannot select an idea from an empty knowledge base");
    return static_cast<int>(rng.below(kb.size()));
}

Action choose_action(const kb::KnowledgeBase& kb, const BanditConfig& config, Rng& rng)
{
    const double u = rng.uniform();
    const auto& p = config.action_probs;
    Action drawn = Action::Create;
    if (u < p.propose_feature)
        drawn = Action::ProposeFeature;
    else if (u < p.propose_feature + p.synthesize)
        drawn = Action::Synthesize;

    if (kb.empty())
        return Action::Create;
    if (drawn == Action::Synthesize && kb.size() < 2)
        return Action::Create;
    return drawn;
}

} // namespace featevo::bandit
