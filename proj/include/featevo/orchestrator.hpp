// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "featevo/agents.hpp"
#include "featevo/bandit.hpp"
#include "featevo/dataset.hpp"
#include "featevo/dsl.hpp"
#include "featevo/evaluation.hpp"
#include "featevo/external_runner.hpp"
#include "featevo/knowledge_base.hpp"
#include "featevo/memory.hpp"

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace featevo::orch
{

class LockError : public Error
{
public:
    using Error::Error;
};

struct Ablation
{
    bool critics = true;
    bool memory = true;
    bool ucb = true;
};

struct DatasetConfig
{
    std::filesystem::path events;
    std::filesystem::path labels;
    std::filesystem::path schema;
    data::SplitSpec split;
};

struct DslBackend
{
    enum class Kind
    {
        Builtin,
        External,
    };
    Kind kind = Kind::Builtin;
    dsl::RunnerConfig runner;
    std::size_t workers = 1;
    bool per_entity_anchor = false;
    std::optional<long long> time_budget_ms;
};

struct RunConfig
{
    DatasetConfig dataset;
    agents::ProviderConfig provider;
    bandit::BanditConfig bandit;
    eval::LearnerConfig learner;
    DslBackend dsl;
    int max_iterations = 10;
    int max_critic_iters = 3;
    memory::MemoryConfig memory;
    std::filesystem::path out_dir;
    std::vector<std::string> prior_ideas;
    Ablation ablation;
    std::optional<std::filesystem::path> prompt_dir;
    /// Accepted features from other ideas shown to the code agent.
    int exemplars_k = 3;
    std::optional<double> wall_clock_seconds;

    void validate() const;
};

/// Relative paths resolve against `base_dir`.
RunConfig config_from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir);
RunConfig load_config(const std::filesystem::path& path);
nlohmann::json to_json(const RunConfig& config);

enum class Outcome
{
    Accepted,
    Rejected,
    ForfeitedIdea,
    ForfeitedCode,
    Error,
    IdeaAdded,
};

std::string to_string(Outcome outcome);
Outcome outcome_from_string(const std::string& text);

struct CritiqueEntry
{
    std::string stage; // "idea" or "code"
    std::string feedback;

    bool operator==(const CritiqueEntry&) const = default;
};

struct IterationRecord
{
    int iteration = 0;
    bandit::Action action = bandit::Action::Create;
    std::optional<int> idea_id;
    std::optional<int> feature_id;
    std::optional<std::string> feature_name;
    std::string program;
    std::vector<CritiqueEntry> critiques;
    std::optional<eval::MetricsReport> metrics;
    std::optional<double> score;
    Outcome outcome = Outcome::Error;
    std::string error;
    /// Non-fatal problems, such as an unusable evaluator reply.
    std::vector<std::string> notes;
    std::vector<int> memory_sources;
    double best_metric = 0.0;

    nlohmann::json to_json() const;
    static IterationRecord from_json(const nlohmann::json& doc);
};

struct BestSoFar
{
    double metric = 0.0;
    std::optional<int> idea_id;
    std::string program;
    int iteration = 0;
};

/// Everything needed to continue a run; persisted as state.json.
struct RunState
{
    int last_iteration = 0;
    kb::KnowledgeBase kb;
    memory::LongTermMemory long_term;
    memory::EmbeddingIndex index;
    std::map<std::string, int> ordinals;
    std::string rng_state;
    eval::MetricsReport baseline;
    /// Metric of each idea's accepted program; ideas without an entry sit at the baseline.
    std::map<int, eval::MetricsReport> idea_metrics;
    BestSoFar best;
    std::vector<double> best_trajectory;

    nlohmann::json to_json() const;
    static RunState from_json(const nlohmann::json& doc);
};

struct Candidate
{
    std::string label; // "baseline", "idea <id>" or "union"
    std::string program;
    FeatureTable features;
    eval::MetricsReport metrics;
};

/// Exclusive hold on a run directory through <dir>/.lock.
class RunLock
{
public:
    explicit RunLock(const std::filesystem::path& run_dir);
    ~RunLock();
    RunLock(const RunLock&) = delete;
    RunLock& operator=(const RunLock&) = delete;

private:
    std::filesystem::path path_;
};

/// Live run: configuration, loaded data, provider and mutable state.
class Run
{
public:
    /// Creates the run directory, evaluates the baseline and persists iteration 0.
    static std::unique_ptr<Run> create(const RunConfig& config);

    /// Reopens a run directory, discarding iteration directories past the
    /// persisted pointer. `max_iterations` overrides the stored budget.
    static std::unique_ptr<Run> open(const std::filesystem::path& run_dir, std::optional<int> max_iterations = {});

    /// One iteration; everything is written before it returns.
    IterationRecord step();

    /// Steps until the budget (or `stop_after` iterations in total) is reached.
    void run_until_done(std::optional<int> stop_after = {});

    bool done() const;

    /// Best of each idea's accepted program and the union program, baseline
    /// when nothing was accepted. Ties keep the earlier candidate.
    Candidate select_best() const;

    /// Writes best/{program.fdl, features.csv, metrics.json}.
    Candidate write_best() const;

    const RunConfig& config() const { return config_; }
    const RunState& state() const { return state_; }
    const data::Dataset& dataset() const { return *dataset_; }
    const data::EntitySplit& split() const { return split_; }

    /// Union of all accepted definitions, with colliding names prefixed i<id>_.
    std::string union_program() const;

    /// Features of a program over every labeled entity.
    FeatureTable compute_features(const std::string& program_text) const;

private:
    Run(RunConfig config, std::unique_ptr<data::Dataset> dataset);

    void persist(const RunState& next) const;
    std::string exemplars(int exclude_idea) const;
    std::string idea_program(const kb::KnowledgeBase& kb, int idea_id) const;
    void write_iteration(const IterationRecord& record, const std::vector<agents::Exchange>& log,
                         const std::optional<FeatureTable>& features) const;

    RunConfig config_;
    std::unique_ptr<data::Dataset> dataset_;
    data::EntitySplit split_;
    std::vector<std::string> ids_;
    agents::PromptSet prompts_;
    std::unique_ptr<agents::Provider> provider_;
    std::unique_ptr<RunLock> lock_;
    RunState state_;
    std::chrono::steady_clock::time_point started_;
};

struct RunResult
{
    std::filesystem::path run_dir;
    Candidate best;
    std::vector<double> best_trajectory;
};

RunResult run(const RunConfig& config);
RunResult resume(const std::filesystem::path& run_dir, std::optional<int> max_iterations = {});

/// Adds a prior idea to a persisted run that is not currently running.
int inject_idea(const std::filesystem::path& run_dir, const std::string& text);

/// Copies best/ artifacts to `dest`.
void export_run(const std::filesystem::path& run_dir, const std::filesystem::path& dest);

/// Writes report.md and returns the per-iteration table.
std::string report(const std::filesystem::path& run_dir);

std::vector<IterationRecord> load_records(const std::filesystem::path& run_dir);

} // namespace featevo::orch
