// SPDX-License-Identifier: Apache-2.0
#include "featevo/orchestrator.hpp"

#include "featevo/util.hpp"

#include <algorithm>
#include <cerrno>
#include <csignal>
#include <cstdio>
#include <fcntl.h>
#include <mutex>
#include <set>
#include <unistd.h>

namespace featevo::orch
{

namespace fs = std::filesystem;
using nlohmann::json;

namespace
{

constexpr const char* kStateFile = "state.json";
constexpr const char* kConfigFile = "config.json";
constexpr const char* kLockFile = ".lock";

bool process_alive(long pid)
{
    if (pid <= 0)
        return false;
    return ::kill(static_cast<pid_t>(pid), 0) == 0 || errno == EPERM;
}

/// Lock files held by this process; a file naming our pid but absent here is stale.
std::mutex held_mutex;
std::set<fs::path> held_locks;

bool try_create_lock(const fs::path& path)
{
    int fd = ::open(path.c_str(), O_CREAT | O_EXCL | O_WRONLY | O_CLOEXEC, 0644);
    if (fd < 0)
    {
        if (errno == EEXIST)
            return false;
        throw IoError("cannot create lock file " + path.string());
    }
    const std::string pid = std::to_string(::getpid()) + "\n";
    [[maybe_unused]] auto written = ::write(fd, pid.data(), pid.size());
    ::close(fd);
    return true;
}

std::optional<int> iteration_dir_number(const fs::path& p)
{
    const auto name = p.filename().string();
    if (name.empty() || !std::all_of(name.begin(), name.end(), [](char c) { return c >= '0' && c <= '9'; }))
        return std::nullopt;
    return std::stoi(name);
}

std::string transcript_text(const agents::Exchange& e)
{
    std::string out = "role: " + e.role_tag + "\n";
    if (!e.scope.empty())
        out += "scope: " + e.scope + "\n";
    for (const auto& m : e.messages)
        out += "\n=== " + agents::to_string(m.role) + " ===\n" + m.content + "\n";
    out += "\n=== reply ===\n" + e.reply + "\n";
    return out;
}

RunState load_state(const fs::path& run_dir)
{
    const auto path = run_dir / kStateFile;
    if (!fs::exists(path))
        throw ConfigError(run_dir.string() + " is not a run directory (no " + kStateFile + ")");
    json doc;
    try
    {
        doc = json::parse(read_file(path));
    }
    catch (const json::exception& e)
    {
        throw kb::CorruptStateError(path.string() + ": " + e.what());
    }
    return RunState::from_json(doc);
}

void write_state(const fs::path& run_dir, const RunState& state)
{
    write_file_atomic(run_dir / kStateFile, state.to_json().dump(2) + "\n");
}

/// Renames derived references inside a definition body.
void rename_refs(dsl::Expr& e, const std::map<std::string, std::string>& renames)
{
    if (e.kind == dsl::NodeKind::Ref)
    {
        auto it = renames.find(e.text);
        if (it != renames.end())
            e.text = it->second;
    }
    for (auto& a : e.args)
        rename_refs(a, renames);
}

} // namespace

// ------------------------------------------------------------------- locking

RunLock::RunLock(const fs::path& run_dir) : path_(fs::absolute(run_dir / kLockFile).lexically_normal())
{
    std::lock_guard guard(held_mutex);
    if (held_locks.count(path_))
        throw LockError(run_dir.string() + " is in use by this process");
    if (!try_create_lock(path_))
    {
        long holder = 0;
        try
        {
            holder = std::stol(read_file(path_));
        }
        catch (const std::exception&)
        {
            holder = 0;
        }
        if (process_alive(holder) && holder != ::getpid())
            throw LockError(run_dir.string() + " is in use by process " + std::to_string(holder));
        // stale lock from a process that no longer exists
        std::error_code ec;
        fs::remove(path_, ec);
        if (!try_create_lock(path_))
            throw LockError(run_dir.string() + " is in use");
    }
    held_locks.insert(path_);
}

RunLock::~RunLock()
{
    std::lock_guard guard(held_mutex);
    held_locks.erase(path_);
    std::error_code ec;
    fs::remove(path_, ec);
}

// ---------------------------------------------------------------- lifecycle

Run::Run(RunConfig config, std::unique_ptr<data::Dataset> dataset)
    : config_(std::move(config)), dataset_(std::move(dataset)), prompts_(agents::PromptSet::load(config_.prompt_dir)),
      started_(std::chrono::steady_clock::now())
{
    split_ = data::split_entities(*dataset_, config_.dataset.split);
    ids_ = split_.train;
    ids_.insert(ids_.end(), split_.test.begin(), split_.test.end());
    std::sort(ids_.begin(), ids_.end());
    provider_ = agents::make_provider(config_.provider);
}

std::unique_ptr<Run> Run::create(const RunConfig& config)
{
    config.validate();
    const fs::path dir = config.out_dir;
    if (fs::exists(dir / kStateFile))
        throw ConfigError(dir.string() + " already holds a run; use resume");
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec)
        throw IoError("cannot create run directory " + dir.string() + ": " + ec.message());
    auto lock = std::make_unique<RunLock>(dir);

    auto dataset =
        std::make_unique<data::Dataset>(data::load_dataset(config.dataset.events, config.dataset.labels, config.dataset.schema));
    std::unique_ptr<Run> run(new Run(config, std::move(dataset)));
    run->lock_ = std::move(lock);

    RunState& s = run->state_;
    for (const auto& text : config.prior_ideas)
        s.kb.add_idea(text, kb::Origin::Prior, {}, 0);
    s.long_term.max_chars = config.memory.max_chars;
    s.index = memory::EmbeddingIndex(config.memory.dim);
    s.rng_state = Rng(config.bandit.rng_seed).state();
    s.baseline = eval::evaluate_feature_set(FeatureTable(run->ids_, {}), *run->dataset_, run->split_, config.learner);
    s.best = {s.baseline.auc, std::nullopt, "", 0};

    fs::create_directories(dir / "iterations");
    write_file_atomic(dir / kConfigFile, to_json(config).dump(2) + "\n");
    run->persist(s);
    return run;
}

std::unique_ptr<Run> Run::open(const fs::path& run_dir, std::optional<int> max_iterations)
{
    if (!fs::exists(run_dir / kStateFile))
        throw ConfigError(run_dir.string() + " is not a run directory (no " + kStateFile + ")");
    auto lock = std::make_unique<RunLock>(run_dir);
    auto config = load_config(run_dir / kConfigFile);
    config.out_dir = fs::absolute(run_dir).lexically_normal();
    if (max_iterations)
    {
        config.max_iterations = *max_iterations;
        config.validate();
        write_file_atomic(run_dir / kConfigFile, to_json(config).dump(2) + "\n");
    }
    auto state = load_state(run_dir);

    // iteration directories past the commit point belong to an interrupted step
    if (fs::exists(run_dir / "iterations"))
    {
        std::vector<fs::path> stale;
        for (const auto& entry : fs::directory_iterator(run_dir / "iterations"))
        {
            auto n = iteration_dir_number(entry.path());
            if (!n || *n > state.last_iteration)
                stale.push_back(entry.path());
        }
        for (const auto& p : stale)
            fs::remove_all(p);
    }

    auto dataset =
        std::make_unique<data::Dataset>(data::load_dataset(config.dataset.events, config.dataset.labels, config.dataset.schema));
    std::unique_ptr<Run> run(new Run(config, std::move(dataset)));
    run->lock_ = std::move(lock);
    run->state_ = std::move(state);
    if (auto* scripted = dynamic_cast<agents::ScriptedProvider*>(run->provider_.get()))
        scripted->set_ordinals(run->state_.ordinals);
    // rewrite the mirrors in case the previous process stopped before them
    run->persist(run->state_);
    return run;
}

bool Run::done() const
{
    if (state_.last_iteration >= config_.max_iterations)
        return true;
    if (config_.wall_clock_seconds)
    {
        std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - started_;
        if (elapsed.count() >= *config_.wall_clock_seconds)
            return true;
    }
    return false;
}

void Run::run_until_done(std::optional<int> stop_after)
{
    while (!done() && (!stop_after || state_.last_iteration < *stop_after))
        step();
}

// -------------------------------------------------------------- persistence

void Run::persist(const RunState& next) const
{
    const fs::path& dir = config_.out_dir;
    write_state(dir, next);
    next.kb.save(dir / "knowledge_base.json");
    fs::create_directories(dir / "memory");
    write_file_atomic(dir / "memory" / "long_term.txt", next.long_term.text);
    write_file_atomic(dir / "memory" / "index.json", next.index.to_json().dump() + "\n");
}

void Run::write_iteration(const IterationRecord& record, const std::vector<agents::Exchange>& log,
                          const std::optional<FeatureTable>& features) const
{
    const fs::path final_dir = config_.out_dir / "iterations" / std::to_string(record.iteration);
    const fs::path tmp_dir = config_.out_dir / "iterations" / (std::to_string(record.iteration) + ".partial");
    fs::remove_all(tmp_dir);
    fs::remove_all(final_dir);
    fs::create_directories(tmp_dir / "transcripts");

    write_file_atomic(tmp_dir / "record.json", record.to_json().dump(2) + "\n");
    if (!record.program.empty())
        write_file_atomic(tmp_dir / "program.fdl", record.program);
    if (features)
        write_file_atomic(tmp_dir / "features.csv", features->to_csv());
    if (record.metrics)
        write_file_atomic(tmp_dir / "metrics.json", eval::to_json(*record.metrics).dump(2) + "\n");
    for (std::size_t i = 0; i < log.size(); ++i)
    {
        char prefix[16];
        std::snprintf(prefix, sizeof(prefix), "%02zu_", i);
        write_file_atomic(tmp_dir / "transcripts" / (prefix + log[i].role_tag + ".txt"), transcript_text(log[i]));
    }
    fs::rename(tmp_dir, final_dir);
}

// ------------------------------------------------------------------ helpers

std::string Run::idea_program(const kb::KnowledgeBase& kb, int idea_id) const
{
    const auto accepted = kb.accepted_program(idea_id);
    if (config_.dsl.kind == DslBackend::Kind::External)
        return accepted.empty() ? std::string() : accepted.back().program_fragment.value_or("");
    std::string out;
    for (const auto& f : accepted)
        out += f.program_fragment.value_or("");
    return out;
}

std::string Run::exemplars(int exclude_idea) const
{
    struct Item
    {
        double score;
        int feature_id;
        int idea_id;
        const kb::FeatureImpl* feature;
    };
    std::vector<Item> items;
    for (const auto& idea : state_.kb.ideas())
    {
        if (idea.id == exclude_idea)
            continue;
        for (const auto& f : idea.features)
            if (f.status == kb::FeatureStatus::Accepted && f.score && f.program_fragment)
                items.push_back({*f.score, f.id, idea.id, &f});
    }
    std::sort(items.begin(), items.end(), [](const Item& a, const Item& b) {
        if (a.score != b.score)
            return a.score > b.score;
        return a.feature_id < b.feature_id;
    });
    std::string out;
    for (std::size_t i = 0; i < items.size() && static_cast<int>(i) < config_.exemplars_k; ++i)
    {
        const auto& it = items[i];
        out += "# " + it.feature->summary + " (idea " + std::to_string(it.idea_id) + ", score " +
               format_double(it.score) + ")\n" + *it.feature->program_fragment;
        if (out.back() != '\n')
            out += "\n";
    }
    return out;
}

FeatureTable Run::compute_features(const std::string& program_text) const
{
    if (config_.dsl.kind == DslBackend::Kind::External)
        return dsl::execute_external(config_.dsl.runner, program_text,
                                     {config_.dataset.events, config_.dataset.labels, config_.dataset.schema}, ids_);
    dsl::ExecOptions options;
    options.workers = config_.dsl.workers;
    options.per_entity_anchor = config_.dsl.per_entity_anchor;
    if (config_.dsl.time_budget_ms)
        options.time_budget = std::chrono::milliseconds(*config_.dsl.time_budget_ms);
    return dsl::execute(dsl::parse(program_text), *dataset_, ids_, options);
}

std::string Run::union_program() const
{
    std::vector<std::pair<int, dsl::Program>> programs;
    std::map<std::string, int> owners;
    for (const auto& idea : state_.kb.ideas())
    {
        auto text = idea_program(state_.kb, idea.id);
        if (text.empty())
            continue;
        auto program = dsl::parse(text);
        for (const auto& name : program.names())
            ++owners[name];
        programs.emplace_back(idea.id, std::move(program));
    }
    dsl::Program merged;
    for (auto& [id, program] : programs)
    {
        std::map<std::string, std::string> renames;
        for (const auto& name : program.names())
            if (owners[name] > 1)
                renames[name] = "i" + std::to_string(id) + "_" + name;
        for (auto& def : program.defs)
        {
            if (auto it = renames.find(def.name); it != renames.end())
                def.name = it->second;
            if (auto* expr = std::get_if<dsl::Expr>(&def.body))
                rename_refs(*expr, renames);
            merged.defs.push_back(std::move(def));
        }
    }
    return dsl::pretty_print(merged);
}

Candidate Run::select_best() const
{
    std::vector<std::pair<std::string, std::string>> programs;
    for (const auto& idea : state_.kb.ideas())
    {
        auto text = idea_program(state_.kb, idea.id);
        if (!text.empty())
            programs.emplace_back("idea " + std::to_string(idea.id), std::move(text));
    }
    if (programs.size() >= 2 && config_.dsl.kind == DslBackend::Kind::Builtin)
        programs.emplace_back("union", union_program());

    std::optional<Candidate> best;
    for (const auto& [label, text] : programs)
    {
        Candidate c;
        c.label = label;
        c.program = text;
        try
        {
            c.features = compute_features(text);
            c.metrics = eval::evaluate_feature_set(c.features, *dataset_, split_, config_.learner);
        }
        catch (const Error&)
        {
            continue;
        }
        if (!best || c.metrics.auc > best->metrics.auc)
            best = std::move(c);
    }
    if (best)
        return *best;
    return {"baseline", "", FeatureTable(ids_, {}), state_.baseline};
}

Candidate Run::write_best() const
{
    auto best = select_best();
    const fs::path dir = config_.out_dir / "best";
    fs::create_directories(dir);
    write_file_atomic(dir / "program.fdl", best.program);
    write_file_atomic(dir / "features.csv", best.features.to_csv());
    json metrics = eval::to_json(best.metrics);
    metrics["source"] = best.label;
    write_file_atomic(dir / "metrics.json", metrics.dump(2) + "\n");
    return best;
}

// --------------------------------------------------------------------- step

IterationRecord Run::step()
{
    const int t = state_.last_iteration + 1;
    RunState next = state_;
    Rng rng;
    rng.set_state(next.rng_state);
    std::vector<agents::Exchange> log;
    agents::AgentContext ctx{*provider_, prompts_, dataset_->schema(), config_.provider.temperature, &log};
    const double c = config_.bandit.exploration_c;
    const int z = config_.max_critic_iters;
    const std::string long_memory = config_.ablation.memory ? next.long_term.text : "(memory disabled)";
    auto* scripted = dynamic_cast<agents::ScriptedProvider*>(provider_.get());

    IterationRecord rec;
    rec.iteration = t;
    std::optional<FeatureTable> features;

    auto embed_idea = [&](const kb::Idea& idea) {
        const auto text = memory::embedding_text(idea);
        next.index.put(idea.id, config_.memory.endpoint ? memory::embed_remote(text, *config_.memory.endpoint)
                                                        : memory::embed(text, config_.memory.dim));
    };

    try
    {
        rec.action = bandit::choose_action(next.kb, config_.bandit, rng);

        if (rec.action != bandit::Action::ProposeFeature)
        {
            const bool synth = rec.action == bandit::Action::Synthesize;
            auto generate = [&](const std::optional<std::string>& fb) {
                return synth ? agents::synthesize_idea(ctx, next.kb, long_memory, c, fb)
                             : agents::create_idea(ctx, next.kb, long_memory, c, fb);
            };
            auto critic = [&](const agents::IdeaProposal& p) -> agents::Critique {
                if (!config_.ablation.critics)
                    return {};
                std::string artifact = "insight: " + p.insight;
                if (!p.parent_ids.empty())
                {
                    std::vector<std::string> ids;
                    for (int id : p.parent_ids)
                        ids.push_back(std::to_string(id));
                    artifact += "\ncombines ideas: " + join(ids, ", ");
                }
                const std::string context =
                    synth ? "a new idea combining existing ideas" : "an entirely new idea for the knowledge base";
                return agents::critique_idea(ctx, artifact, context, next.kb, c);
            };
            auto result = agents::refine_loop<agents::IdeaProposal>(generate, critic, z);
            for (const auto& fb : result.feedback)
                rec.critiques.push_back({"idea", fb});
            if (result.forfeited())
            {
                rec.outcome = Outcome::ForfeitedIdea;
            }
            else
            {
                const int id = next.kb.add_idea(result.artifact->insight,
                                                synth ? kb::Origin::Synthesized : kb::Origin::Created,
                                                result.artifact->parent_ids, t);
                rec.idea_id = id;
                rec.outcome = Outcome::IdeaAdded;
                if (config_.ablation.memory)
                    embed_idea(next.kb.idea(id));
            }
        }
        else
        {
            const int idea_id = config_.ablation.ucb ? bandit::select_idea(next.kb, config_.bandit)
                                                     : bandit::select_idea_uniform(next.kb, rng);
            rec.idea_id = idea_id;
            const kb::Idea idea = next.kb.idea(idea_id);

            std::string short_memory = "(memory disabled)";
            if (config_.ablation.memory)
            {
                for (const auto& other : next.kb.ideas())
                    if (!next.index.contains(other.id))
                        embed_idea(other);
                std::vector<const kb::Idea*> neighbors;
                for (int id : memory::retrieve_related(next.index, idea_id, config_.memory.k))
                    neighbors.push_back(&next.kb.idea(id));
                try
                {
                    auto stm = memory::build_short_term(ctx, idea, neighbors);
                    short_memory = stm.text;
                    rec.memory_sources = stm.source_idea_ids;
                }
                catch (const agents::OutputParseError& e)
                {
                    short_memory = "(related experience unavailable)";
                    rec.notes.push_back(std::string("memory agent reply ignored: ") + e.what());
                }
            }

            const std::string scope = "idea_" + std::to_string(idea_id);
            auto propose = [&](const std::optional<std::string>& fb) {
                return agents::propose_feature(ctx, idea, short_memory, long_memory, fb);
            };
            auto feature_critic = [&](const agents::FeatureProposal& p) -> agents::Critique {
                if (!config_.ablation.critics)
                    return {};
                return agents::critique_idea(ctx, agents::render_feature(p),
                                             agents::render_idea(idea) + "\nfeatures so far:\n" +
                                                 agents::render_feature_list(idea),
                                             next.kb, c, scope);
            };
            auto proposal = agents::refine_loop<agents::FeatureProposal>(propose, feature_critic, z);
            for (const auto& fb : proposal.feedback)
                rec.critiques.push_back({"idea", fb});

            if (proposal.forfeited())
            {
                rec.outcome = Outcome::ForfeitedIdea;
            }
            else
            {
                const auto& feature = *proposal.artifact;
                rec.feature_name = feature.name;
                agents::CodeRequest request{&idea, feature, idea_program(next.kb, idea_id), exemplars(idea_id)};
                const bool external = config_.dsl.kind == DslBackend::Kind::External;

                std::optional<std::pair<std::string, FeatureTable>> executed; // external backend cache
                auto generate = [&](const std::optional<std::string>& fb) {
                    return agents::generate_code(ctx, request, fb);
                };
                auto code_critic = [&](const agents::CodeProposal& p) -> agents::Critique {
                    if (!external)
                        return agents::critique_code(ctx, request, p.program_text, config_.ablation.critics);
                    try
                    {
                        executed.emplace(p.program_text, compute_features(p.program_text));
                    }
                    catch (const dsl::RunnerError& e)
                    {
                        return {agents::Critique::Verdict::Reject, "the program failed: " + e.stderr_text()};
                    }
                    catch (const dsl::OutputContractError& e)
                    {
                        return {agents::Critique::Verdict::Reject, e.what()};
                    }
                    if (!config_.ablation.critics)
                        return {};
                    return agents::critique_code(ctx, request, p.program_text, true);
                };
                auto code = agents::refine_loop<agents::CodeProposal>(generate, code_critic, z);
                for (const auto& fb : code.feedback)
                    rec.critiques.push_back({"code", fb});

                kb::FeatureImpl impl;
                impl.name = feature.name;
                impl.reason = feature.reason;
                impl.summary = feature.summary;
                impl.pseudocode = feature.pseudocode;
                impl.iteration = t;

                if (code.forfeited())
                {
                    rec.feature_id = next.kb.add_feature(idea_id, impl);
                    next.kb.mark_failed(idea_id, *rec.feature_id);
                    rec.outcome = Outcome::ForfeitedCode;
                }
                else
                {
                    std::string program = code.artifact->program_text;
                    if (external)
                    {
                        impl.program_fragment = program;
                    }
                    else
                    {
                        auto parsed = dsl::parse(program);
                        program = dsl::pretty_print(parsed);
                        impl.program_fragment = dsl::pretty_print(parsed.defs.back()) + "\n";
                    }
                    rec.program = program;
                    rec.feature_id = next.kb.add_feature(idea_id, impl);

                    std::optional<eval::MetricsReport> metrics;
                    try
                    {
                        if (executed && executed->first == code.artifact->program_text)
                            features = executed->second;
                        else
                            features = compute_features(program);
                        metrics = eval::evaluate_feature_set(*features, *dataset_, split_, config_.learner);
                    }
                    catch (const dsl::ExecutionError& e)
                    {
                        rec.error = e.what();
                    }
                    catch (const TimeoutError& e)
                    {
                        rec.error = e.what();
                    }
                    catch (const dsl::RunnerError& e)
                    {
                        rec.error = e.what();
                    }
                    catch (const dsl::OutputContractError& e)
                    {
                        rec.error = e.what();
                    }
                    catch (const DegenerateLabelsError& e)
                    {
                        rec.error = e.what();
                    }

                    if (!metrics)
                    {
                        next.kb.mark_failed(idea_id, *rec.feature_id);
                        rec.outcome = Outcome::Error;
                    }
                    else
                    {
                        auto prev_it = next.idea_metrics.find(idea_id);
                        const auto& prev = prev_it == next.idea_metrics.end() ? next.baseline : prev_it->second;
                        const double score = bandit::relative_score(metrics->auc, prev.auc);
                        next.kb.record_outcome(idea_id, *rec.feature_id, score);
                        rec.metrics = metrics;
                        rec.score = score;
                        rec.outcome = score > 0 ? Outcome::Accepted : Outcome::Rejected;
                        if (score > 0)
                        {
                            next.idea_metrics[idea_id] = *metrics;
                            if (metrics->auc > next.best.metric)
                                next.best = {metrics->auc, idea_id, program, t};
                        }
                        if (config_.ablation.memory)
                        {
                            try
                            {
                                auto summary = agents::evaluate_summarize(ctx, next.kb.idea(idea_id), feature,
                                                                          *metrics, score, next.long_term.text);
                                next.long_term = memory::update_long_term(next.long_term, summary, t);
                            }
                            catch (const agents::OutputParseError& e)
                            {
                                rec.notes.push_back(std::string("evaluator reply ignored: ") + e.what());
                            }
                        }
                    }
                }
                if (config_.ablation.memory)
                    embed_idea(next.kb.idea(idea_id));
            }
        }
    }
    catch (...)
    {
        // the step is abandoned; keep the provider aligned with the committed state
        if (scripted)
            scripted->set_ordinals(state_.ordinals);
        throw;
    }

    next.rng_state = rng.state();
    next.last_iteration = t;
    next.best_trajectory.push_back(next.best.metric);
    rec.best_metric = next.best.metric;
    if (scripted)
        next.ordinals = scripted->ordinals();

    write_iteration(rec, log, features);
    persist(next);
    state_ = std::move(next);
    return rec;
}

// ---------------------------------------------------------------- front end

RunResult run(const RunConfig& config)
{
    auto r = Run::create(config);
    r->run_until_done();
    auto best = r->write_best();
    return {config.out_dir, std::move(best), r->state().best_trajectory};
}

RunResult resume(const fs::path& run_dir, std::optional<int> max_iterations)
{
    auto r = Run::open(run_dir, max_iterations);
    r->run_until_done();
    auto best = r->write_best();
    return {run_dir, std::move(best), r->state().best_trajectory};
}

int inject_idea(const fs::path& run_dir, const std::string& text)
{
    if (!fs::exists(run_dir / kStateFile))
        throw ConfigError(run_dir.string() + " is not a run directory (no " + kStateFile + ")");
    RunLock lock(run_dir);
    auto state = load_state(run_dir);
    const int id = state.kb.add_idea(text, kb::Origin::Prior, {}, state.last_iteration);
    write_state(run_dir, state);
    state.kb.save(run_dir / "knowledge_base.json");
    return id;
}

void export_run(const fs::path& run_dir, const fs::path& dest)
{
    const auto best = run_dir / "best";
    if (!fs::exists(best / "metrics.json"))
        throw IoError(run_dir.string() + " has no best/ artifacts yet");
    fs::create_directories(dest);
    for (const char* name : {"program.fdl", "features.csv", "metrics.json"})
        fs::copy_file(best / name, dest / name, fs::copy_options::overwrite_existing);
}

std::vector<IterationRecord> load_records(const fs::path& run_dir)
{
    std::vector<std::pair<int, fs::path>> dirs;
    if (fs::exists(run_dir / "iterations"))
        for (const auto& entry : fs::directory_iterator(run_dir / "iterations"))
            if (auto n = iteration_dir_number(entry.path()); n && fs::exists(entry.path() / "record.json"))
                dirs.emplace_back(*n, entry.path());
    std::sort(dirs.begin(), dirs.end());
    std::vector<IterationRecord> records;
    for (const auto& [n, path] : dirs)
    {
        json doc;
        try
        {
            doc = json::parse(read_file(path / "record.json"));
        }
        catch (const json::exception& e)
        {
            throw kb::CorruptStateError((path / "record.json").string() + ": " + e.what());
        }
        records.push_back(IterationRecord::from_json(doc));
    }
    return records;
}

} // namespace featevo::orch
