// SPDX-License-Identifier: Apache-2.0
#include "featevo/orchestrator.hpp"

#include "featevo/util.hpp"

#include <cstdio>

namespace featevo::orch
{

namespace fs = std::filesystem;

namespace
{

std::string fixed(double value, int digits = 4)
{
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", digits, value);
    return buf;
}

std::string signed_fixed(double value)
{
    return (value > 0 ? "+" : "") + fixed(value);
}

std::string table(const std::vector<IterationRecord>& records)
{
    std::string out = "| iter | action | idea | feature | outcome | auc | score | best auc |\n"
                      "|---:|---|---:|---|---|---:|---:|---:|\n";
    for (const auto& r : records)
    {
        out += "| " + std::to_string(r.iteration) + " | " + bandit::to_string(r.action) + " | " +
               (r.idea_id ? std::to_string(*r.idea_id) : "-") + " | " + r.feature_name.value_or("-") + " | " +
               to_string(r.outcome) + " | " + (r.metrics ? fixed(r.metrics->auc) : "-") + " | " +
               (r.score ? signed_fixed(*r.score) : "-") + " | " + fixed(r.best_metric) + " |\n";
    }
    return out;
}

} // namespace

std::string report(const fs::path& run_dir)
{
    if (!fs::exists(run_dir / "state.json"))
        throw ConfigError(run_dir.string() + " is not a run directory (no state.json)");
    const auto state = RunState::from_json(nlohmann::json::parse(read_file(run_dir / "state.json")));
    const auto records = load_records(run_dir);
    const std::string iterations = table(records);

    std::string md = "# Run report\n\n";
    md += "- iterations completed: " + std::to_string(state.last_iteration) + "\n";
    md += "- baseline auc: " + fixed(state.baseline.auc) + "\n";
    md += "- best auc during the run: " + fixed(state.best.metric);
    if (state.best.idea_id)
        md += " (idea " + std::to_string(*state.best.idea_id) + ", iteration " + std::to_string(state.best.iteration) +
              ")";
    md += "\n";
    if (fs::exists(run_dir / "best" / "metrics.json"))
    {
        const auto best = nlohmann::json::parse(read_file(run_dir / "best" / "metrics.json"));
        md += "- selected solution: " + best.value("source", std::string("?")) + ", auc " +
              fixed(best.at("auc").get<double>()) + "\n";
    }

    md += "\n## Score trajectory\n\n";
    md += "Best auc after each iteration:\n\n```\n";
    for (std::size_t i = 0; i < state.best_trajectory.size(); ++i)
        md += std::to_string(i + 1) + "\t" + fixed(state.best_trajectory[i]) + "\n";
    md += "```\n";

    md += "\n## Ideas and features\n\n";
    if (state.kb.empty())
        md += "(no ideas)\n";
    for (const auto& idea : state.kb.ideas())
    {
        md += "- **idea " + std::to_string(idea.id) + "** (" + kb::to_string(idea.origin);
        if (!idea.parent_ids.empty())
        {
            std::vector<std::string> ids;
            for (int p : idea.parent_ids)
                ids.push_back(std::to_string(p));
            md += " of " + join(ids, ", ");
        }
        md += ", visits " + std::to_string(idea.visit_count) + ", cumulative score " +
              signed_fixed(idea.cumulative_score) + "): " + idea.insight + "\n";
        for (const auto& f : idea.features)
        {
            md += "  - `" + f.name + "` " + kb::to_string(f.status);
            if (f.score)
                md += " " + signed_fixed(*f.score);
            md += ": " + f.summary + "\n";
        }
    }

    md += "\n## Iterations\n\n" + iterations;
    write_file_atomic(run_dir / "report.md", md);
    return iterations;
}

} // namespace featevo::orch
