// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "featevo/error.hpp"
#include "featevo/knowledge_base.hpp"
#include "featevo/random.hpp"

#include <cstdint>
#include <string>

namespace featevo::bandit
{

class EmptyKnowledgeBaseError : public Error
{
public:
    using Error::Error;
};

enum class Action
{
    ProposeFeature,
    Synthesize,
    Create,
};

std::string to_string(Action action);
Action action_from_string(const std::string& text);

struct ActionProbs
{
    double propose_feature = 0.70;
    double synthesize = 0.15;
    double create = 0.15;
};

struct BanditConfig
{
    double exploration_c = 1.41421356;
    ActionProbs action_probs;
    std::uint64_t rng_seed = 0;

    /// Throws ConfigError unless c >= 0 and the probabilities are a distribution.
    void validate() const;
};

/// Utility of one new feature: metric with it minus metric without it.
inline double relative_score(double metric_new, double metric_prev) { return metric_new - metric_prev; }

/// Mean reward plus c * sqrt(ln(total) / visits); +inf for unvisited ideas.
double ucb(double cumulative_score, int visit_count, int total_visits, double c);
double ucb(const kb::Idea& idea, int total_visits, double c);

/// Highest-UCB idea; ties go to the smallest id.
int select_idea(const kb::KnowledgeBase& kb, const BanditConfig& config);

/// Ablation replacement for select_idea: one uniform draw over ideas.
int select_idea_uniform(const kb::KnowledgeBase& kb, Rng& rng);

/// Samples an action with one uniform variate, then repairs infeasible
/// draws: an empty knowledge base forces Create, and Synthesize with fewer
/// than two ideas falls back to Create.
Action choose_action(const kb::KnowledgeBase& kb, const BanditConfig& config, Rng& rng);

} // namespace featevo::bandit
