// SPDX-License-Identifier: Apache-2.0
#include "featevo/orchestrator.hpp"
#include "featevo/subprocess.hpp"
#include "featevo/util.hpp"
#include "scenario.hpp"

#include <gtest/gtest.h>

#include <set>

using namespace featevo;
using namespace featevo::orch;
namespace fs = std::filesystem;

namespace
{

struct Mini
{
    fs::path root;
    synth::GeneratedFiles data;
    fixture::TranscriptWriter writer;
    RunConfig config;
};

/// Planted data and an empty transcript directory; only ProposeFeature by default.
Mini mini(const std::string& name, std::vector<std::string> priors)
{
    const auto root = fixture::fresh_dir(name);
    Mini m{root, synth::write_planted_churn(root / "data"), fixture::TranscriptWriter(root / "transcripts"), {}};
    fs::create_directories(root / "transcripts");
    m.config.dataset = {m.data.events, m.data.labels, m.data.schema, {}};
    m.config.provider.kind = agents::ProviderConfig::Kind::Scripted;
    m.config.provider.scripted_dir = root / "transcripts";
    m.config.bandit.action_probs = {1.0, 0.0, 0.0};
    m.config.max_iterations = 5;
    m.config.max_critic_iters = 3;
    m.config.out_dir = root / "run";
    m.config.prior_ideas = std::move(priors);
    return m;
}

fixture::Visit accepted_visit(const std::string& name, const std::string& definition)
{
    fixture::Visit v;
    v.name = name;
    v.summary = name + " summary";
    v.definition = "feature " + name + " = " + definition + "\n";
    v.accepted = true;
    return v;
}

std::string cli(const std::string& args, int* code = nullptr)
{
    auto r = run_shell(std::string(FEATEVO_CLI) + " " + args, std::chrono::seconds(60));
    if (code)
        *code = r.exit_code;
    return r.stdout_text + r.stderr_text;
}

void write_config(const RunConfig& config, const fs::path& path) { write_file_atomic(path, to_json(config).dump(2)); }

std::map<std::string, std::string> snapshot(const fs::path& run_dir)
{
    std::map<std::string, std::string> files;
    for (const auto& e : fs::recursive_directory_iterator(run_dir))
        if (e.is_regular_file() && e.path().filename() != ".lock" && e.path().filename() != "config.json")
            files[fs::relative(e.path(), run_dir).string()] = read_file(e.path());
    return files;
}

} // namespace

TEST(RunCreate, PersistsIterationZero)
{
    auto m = mini("create", {"activity", "spend"});
    auto run = Run::create(m.config);
    const auto& s = run->state();
    EXPECT_EQ(s.last_iteration, 0);
    ASSERT_EQ(s.kb.size(), 2u);
    EXPECT_EQ(s.kb.idea(0).origin, kb::Origin::Prior);
    EXPECT_EQ(s.kb.idea(1).insight, "spend");
    EXPECT_EQ(s.best.metric, s.baseline.auc);
    EXPECT_FALSE(s.best.idea_id);
    for (const char* f : {"state.json", "config.json", "knowledge_base.json", "memory/index.json", ".lock"})
        EXPECT_TRUE(fs::exists(m.config.out_dir / f)) << f;
    EXPECT_TRUE(fs::is_directory(m.config.out_dir / "iterations"));
    EXPECT_THROW(Run::create(m.config), ConfigError); // already a run
}

TEST(RunCreate, NoBaselineColumnsGivesHalf)
{
    auto m = mini("no_baseline", {"activity"});
    auto schema = nlohmann::json::parse(read_file(m.data.schema));
    schema["baseline_feature_columns"] = nlohmann::json::array();
    write_file_atomic(m.data.schema, schema.dump());
    auto run = Run::create(m.config);
    EXPECT_EQ(run->state().baseline.auc, 0.5);
}

TEST(RunCreate, RejectsZeroIterations)
{
    auto m = mini("zero_iter", {});
    m.config.max_iterations = 0;
    EXPECT_THROW(m.config.validate(), ConfigError);
    EXPECT_THROW(Run::create(m.config), ConfigError);
    EXPECT_FALSE(fs::exists(m.config.out_dir / "state.json"));
}

TEST(RunStep, EmptyKnowledgeBaseForcesCreate)
{
    auto m = mini("force_create", {});
    m.writer.add(agents::kIdeaCreator, "", fixture::idea_reply("device switching signals churn"));
    m.writer.add(agents::kIdeaCritic, "", fixture::accept_reply());
    auto run = Run::create(m.config);
    auto rec = run->step();
    EXPECT_EQ(rec.action, bandit::Action::Create);
    EXPECT_EQ(rec.outcome, Outcome::IdeaAdded);
    ASSERT_EQ(run->state().kb.size(), 1u);
    EXPECT_EQ(run->state().kb.idea(0).origin, kb::Origin::Created);
    EXPECT_EQ(run->state().kb.idea(0).created_at_iteration, 1);
    EXPECT_EQ(run->state().kb.total_visits(), 0);
    EXPECT_TRUE(run->state().index.contains(0));
}

TEST(RunStep, AcceptedFeatureUpdatesIdeaAndBest)
{
    auto m = mini("accept", {"activity near the end of the log"});
    fixture::write_idea_visits(m.writer, 0, {accepted_visit("recent_events", "count() window last 7 days")}, 3);
    auto run = Run::create(m.config);
    const double baseline = run->state().baseline.auc;
    auto rec = run->step();
    EXPECT_EQ(rec.action, bandit::Action::ProposeFeature);
    EXPECT_EQ(rec.idea_id, 0);
    EXPECT_EQ(rec.outcome, Outcome::Accepted);
    ASSERT_TRUE(rec.score && rec.metrics);
    EXPECT_GT(*rec.score, 0.0);
    EXPECT_EQ(*rec.score, rec.metrics->auc - baseline);
    const auto& idea = run->state().kb.idea(0);
    EXPECT_EQ(idea.visit_count, 1);
    EXPECT_EQ(idea.cumulative_score, *rec.score);
    ASSERT_EQ(idea.features.size(), 1u);
    EXPECT_EQ(idea.features[0].status, kb::FeatureStatus::Accepted);
    EXPECT_EQ(run->state().best.idea_id, 0);
    EXPECT_EQ(run->state().best.metric, rec.metrics->auc);
    EXPECT_EQ(run->state().idea_metrics.at(0).auc, rec.metrics->auc);
    EXPECT_NE(run->state().long_term.text.find("Recent activity matters most."), std::string::npos);
    EXPECT_EQ(run->state().long_term.updated_at_iteration, 1);
    EXPECT_TRUE(rec.memory_sources.empty()); // a single idea has no neighbors
    for (const char* f : {"record.json", "metrics.json", "program.fdl", "features.csv", "transcripts"})
        EXPECT_TRUE(fs::exists(m.config.out_dir / "iterations" / "1" / f)) << f;
    EXPECT_EQ(std::distance(fs::directory_iterator(m.config.out_dir / "iterations" / "1" / "transcripts"),
                            fs::directory_iterator{}),
              5); // proposer, idea critic, code agent, code critic, evaluator
    // the critic rejected nothing, so no critiques were recorded
    EXPECT_TRUE(rec.critiques.empty());
}

TEST(RunStep, ConstantFeatureIsRejectedWithZeroScore)
{
    auto m = mini("reject", {"refunds"});
    fixture::write_idea_visits(m.writer, 0, fixture::filler_visits(1, ""), 3);
    auto run = Run::create(m.config);
    auto rec = run->step();
    EXPECT_EQ(rec.outcome, Outcome::Rejected);
    ASSERT_TRUE(rec.score);
    EXPECT_EQ(*rec.score, 0.0);
    EXPECT_EQ(run->state().kb.idea(0).visit_count, 1);
    EXPECT_EQ(run->state().kb.idea(0).features[0].status, kb::FeatureStatus::Rejected);
    EXPECT_FALSE(run->state().best.idea_id);
    EXPECT_EQ(run->state().idea_metrics.count(0), 0u);
}

TEST(RunStep, CodeForfeitLeavesVisitsUnchanged)
{
    auto m = mini("forfeit_code", {"purchases"});
    auto v = accepted_visit("recent_purchases", "count() where action = \"purchase\" window last 7 days");
    v.accepted = false;
    v.broken_code_attempts = 1;
    v.critic_code_rejections = 2;
    fixture::write_idea_visits(m.writer, 0, {v}, 3);
    auto run = Run::create(m.config);
    auto rec = run->step();
    EXPECT_EQ(rec.outcome, Outcome::ForfeitedCode);
    EXPECT_EQ(rec.critiques.size(), 3u);
    EXPECT_NE(rec.critiques[0].feedback.find("parse error"), std::string::npos);
    EXPECT_EQ(rec.critiques[0].stage, "code");
    const auto& idea = run->state().kb.idea(0);
    EXPECT_EQ(idea.visit_count, 0);
    EXPECT_EQ(run->state().kb.total_visits(), 0);
    ASSERT_EQ(idea.features.size(), 1u);
    EXPECT_EQ(idea.features[0].status, kb::FeatureStatus::Failed);
    EXPECT_FALSE(rec.metrics);
}

TEST(RunStep, ProposalForfeitAddsNoFeature)
{
    auto m = mini("forfeit_idea", {"purchases"});
    for (int i = 0; i < 3; ++i)
    {
        m.writer.add(agents::kFeatureProposer, "idea_0",
                     fixture::feature_reply("f" + std::to_string(i), "vague", "something"));
        m.writer.add(agents::kIdeaCritic, "idea_0", fixture::reject_reply("still vague"));
    }
    auto run = Run::create(m.config);
    auto rec = run->step();
    EXPECT_EQ(rec.outcome, Outcome::ForfeitedIdea);
    EXPECT_EQ(rec.critiques.size(), 3u);
    EXPECT_TRUE(run->state().kb.idea(0).features.empty());
    EXPECT_EQ(run->state().kb.idea(0).visit_count, 0);
}

TEST(RunStep, ProviderExhaustionLeavesStateUntouched)
{
    auto m = mini("exhausted", {"purchases"});
    auto run = Run::create(m.config);
    const auto before = read_file(m.config.out_dir / "state.json");
    EXPECT_THROW(run->step(), agents::ScriptExhaustedError);
    EXPECT_EQ(read_file(m.config.out_dir / "state.json"), before);
    EXPECT_EQ(run->state().last_iteration, 0);
    EXPECT_TRUE(fs::is_empty(m.config.out_dir / "iterations"));
}

TEST(RunStep, NoCriticsSkipsLlmCritics)
{
    auto m = mini("no_critics", {"activity"});
    m.config.ablation.critics = false;
    m.writer.add(agents::kFeatureProposer, "idea_0",
                 fixture::feature_reply("recent_events", "events last week", "count last 7 days"));
    m.writer.add(agents::kCodeAgent, "idea_0", fixture::code_reply("feature recent_events = count( window\n"));
    m.writer.add(agents::kCodeAgent, "idea_0",
                 fixture::code_reply("feature recent_events = count() window last 7 days\n"));
    m.writer.add(agents::kEvaluator, "idea_0", fixture::text_reply("ok"));
    auto run = Run::create(m.config);
    auto rec = run->step();
    EXPECT_EQ(rec.outcome, Outcome::Accepted);
    // the mechanical check still rejected the broken program
    ASSERT_EQ(rec.critiques.size(), 1u);
    EXPECT_EQ(rec.critiques[0].stage, "code");
}

TEST(SelectBest, SingleIdeaAndBaseline)
{
    auto m = mini("best_single", {"activity", "refunds"});
    fixture::write_idea_visits(m.writer, 0, {accepted_visit("recent_events", "count() window last 7 days")}, 3);
    auto run = Run::create(m.config);
    EXPECT_EQ(run->select_best().label, "baseline");
    EXPECT_EQ(run->select_best().metrics.auc, run->state().baseline.auc);
    run->step();
    auto best = run->select_best();
    EXPECT_EQ(best.label, "idea 0");
    EXPECT_EQ(best.program, "feature recent_events = count() window last 7 days\n");
    EXPECT_EQ(best.metrics.auc, run->state().idea_metrics.at(0).auc);
}

TEST(SelectBest, UnionOfComplementaryIdeasWins)
{
    auto m = mini("best_union", {"phone activity", "desktop activity"});
    m.config.memory.k = 0;
    fixture::write_idea_visits(
        m.writer, 0, {accepted_visit("phone_recent", "count() where device = \"ios\" window last 7 days")}, 3);
    fixture::write_idea_visits(
        m.writer, 1, {accepted_visit("other_recent", "count() where device != \"ios\" window last 7 days")}, 3);
    auto run = Run::create(m.config);
    run->step();
    run->step();
    ASSERT_EQ(run->state().idea_metrics.size(), 2u);
    auto best = run->select_best();
    EXPECT_EQ(best.label, "union");
    EXPECT_GT(best.metrics.auc, run->state().idea_metrics.at(0).auc);
    EXPECT_GT(best.metrics.auc, run->state().idea_metrics.at(1).auc);
    EXPECT_NE(best.program.find("phone_recent"), std::string::npos);
    EXPECT_NE(best.program.find("other_recent"), std::string::npos);
}

TEST(InjectIdea, OpensWithInfiniteUcbAndRespectsLock)
{
    auto m = mini("inject", {"activity"});
    fixture::write_idea_visits(m.writer, 0, fixture::filler_visits(1, ""), 3);
    {
        auto run = Run::create(m.config);
        run->step();
        EXPECT_THROW(inject_idea(m.config.out_dir, "locked out"), LockError);
    }
    const int id = inject_idea(m.config.out_dir, "night sessions");
    EXPECT_EQ(id, 1);
    fixture::write_idea_visits(m.writer, 1, fixture::filler_visits(1, "night_"), 3);
    auto run = Run::open(m.config.out_dir);
    const auto& idea = run->state().kb.idea(1);
    EXPECT_EQ(idea.origin, kb::Origin::Prior);
    EXPECT_EQ(idea.visit_count, 0);
    EXPECT_EQ(idea.created_at_iteration, 1);
    auto rec = run->step();
    EXPECT_EQ(rec.idea_id, 1);
    EXPECT_THROW(inject_idea(m.root / "nowhere", "x"), ConfigError);
}

TEST(Resume, MatchesUninterruptedRunByteForByte)
{
    auto a = fixture::planted_fixture(fixture::fresh_dir("resume_a"), 2);
    auto b = fixture::planted_fixture(fixture::fresh_dir("resume_b"), 2);
    run(a.config);
    {
        auto r = Run::create(b.config);
        r->run_until_done(5);
        EXPECT_EQ(r->state().last_iteration, 5);
    }
    // debris of an interrupted sixth step, plus a lock left by a dead process
    fs::create_directories(b.config.out_dir / "iterations" / "6.partial");
    fs::create_directories(b.config.out_dir / "iterations" / "7");
    write_file_atomic(b.config.out_dir / ".lock", "999999999\n");
    resume(b.config.out_dir);
    EXPECT_FALSE(fs::exists(b.config.out_dir / "iterations" / "6.partial"));
    const auto sa = snapshot(a.config.out_dir);
    const auto sb = snapshot(b.config.out_dir);
    ASSERT_EQ(sa.size(), sb.size());
    for (const auto& [name, content] : sa)
    {
        ASSERT_TRUE(sb.count(name)) << name;
        EXPECT_EQ(content, sb.at(name)) << name;
    }
}

TEST(Resume, ExtendsBudget)
{
    auto f = fixture::planted_fixture(fixture::fresh_dir("extend"), 2);
    f.config.max_iterations = 4;
    run(f.config);
    auto result = resume(f.config.out_dir, 6);
    EXPECT_EQ(result.best_trajectory.size(), 6u);
    EXPECT_EQ(load_config(f.config.out_dir / "config.json").max_iterations, 6);
    EXPECT_EQ(load_records(f.config.out_dir).size(), 6u);
}

TEST(Resume, RefusesNonRunDirectory)
{
    EXPECT_THROW(Run::open(fixture::fresh_dir("not_a_run")), ConfigError);
}

TEST(Config, JsonRoundTripAndRelativePaths)
{
    auto m = mini("config", {"a", "b"});
    m.config.bandit.exploration_c = 2.5;
    m.config.ablation.ucb = false;
    m.config.memory.k = 5;
    m.config.dsl.workers = 3;
    m.config.wall_clock_seconds = 30;
    const auto doc = to_json(m.config);
    const auto back = config_from_json(doc, "/elsewhere");
    EXPECT_EQ(to_json(back), doc);

    auto rel = doc;
    rel["dataset"]["events"] = "data/events.csv";
    rel["out_dir"] = "runs/x";
    const auto resolved = config_from_json(rel, m.root);
    EXPECT_EQ(resolved.dataset.events, m.root / "data/events.csv");
    EXPECT_EQ(resolved.out_dir, m.root / "runs/x");

    write_file_atomic(m.root / "bad.json", "{\"dataset\": 3}");
    EXPECT_THROW(load_config(m.root / "bad.json"), ConfigError);
    EXPECT_THROW(load_config(m.root / "missing.json"), ConfigError);
}

TEST(Report, TableHasOneRowPerIteration)
{
    auto f = fixture::planted_fixture(fixture::fresh_dir("report"), 2);
    run(f.config);
    const auto table = report(f.config.out_dir);
    int rows = 0;
    for (std::size_t pos = 0; (pos = table.find("\n| ", pos)) != std::string::npos; ++pos)
        ++rows;
    EXPECT_EQ(rows, f.config.max_iterations); // header row starts the string
    const auto md = read_file(f.config.out_dir / "report.md");
    EXPECT_NE(md.find("# Run report"), std::string::npos);
    EXPECT_NE(md.find("recent_events"), std::string::npos);
    EXPECT_NE(md.find("forfeited_code"), std::string::npos);
}

TEST(Export, CopiesBestArtifacts)
{
    auto m = mini("export", {"activity"});
    fixture::write_idea_visits(m.writer, 0, {accepted_visit("recent_events", "count() window last 7 days")}, 3);
    m.config.max_iterations = 1;
    {
        auto r = Run::create(m.config);
        EXPECT_THROW(export_run(m.config.out_dir, m.root / "out"), IoError);
    }
    resume(m.config.out_dir);
    export_run(m.config.out_dir, m.root / "out");
    EXPECT_EQ(read_file(m.root / "out" / "program.fdl"), "feature recent_events = count() window last 7 days\n");
    const auto metrics = nlohmann::json::parse(read_file(m.root / "out" / "metrics.json"));
    EXPECT_EQ(metrics.at("source"), "idea 0");
    EXPECT_NE(read_file(m.root / "out" / "features.csv").find("recent_events"), std::string::npos);
}

TEST(Cli, ExitCodesAndAblationFlags)
{
    auto m = mini("cli", {"activity"});
    fixture::write_idea_visits(m.writer, 0, {accepted_visit("recent_events", "count() window last 7 days")}, 3);
    m.config.max_iterations = 1;
    write_config(m.config, m.root / "run.json");

    int code = -1;
    cli("run --config " + shell_quote((m.root / "missing.json").string()), &code);
    EXPECT_EQ(code, 2);

    auto broken = m.config;
    broken.dataset.events = m.root / "nope.csv";
    broken.out_dir = m.root / "broken_run";
    write_config(broken, m.root / "broken.json");
    cli("run --config " + shell_quote((m.root / "broken.json").string()), &code);
    EXPECT_EQ(code, 3);

    auto dry = m.config;
    dry.provider.scripted_dir = m.root / "empty_transcripts";
    fs::create_directories(dry.provider.scripted_dir);
    dry.out_dir = m.root / "dry_run";
    write_config(dry, m.root / "dry.json");
    const auto err = cli("run --config " + shell_quote((m.root / "dry.json").string()), &code);
    EXPECT_EQ(code, 4) << err;

    const auto out = cli("run --config " + shell_quote((m.root / "run.json").string()) +
                             " --no-critics --no-memory --no-ucb --seed 9",
                         &code);
    EXPECT_EQ(code, 0) << out;
    const auto cfg = nlohmann::json::parse(read_file(m.config.out_dir / "config.json"));
    EXPECT_EQ(cfg.at("ablation").at("critics"), false);
    EXPECT_EQ(cfg.at("ablation").at("memory"), false);
    EXPECT_EQ(cfg.at("ablation").at("ucb"), false);
    EXPECT_EQ(cfg.at("bandit").at("rng_seed"), 9);

    cli("report --run " + shell_quote(m.config.out_dir.string()), &code);
    EXPECT_EQ(code, 0);
    cli("export --run " + shell_quote(m.config.out_dir.string()) + " --dest " + shell_quote((m.root / "x").string()),
        &code);
    EXPECT_EQ(code, 0);
    EXPECT_TRUE(fs::exists(m.root / "x" / "program.fdl"));

    // a lock held by a live process blocks resume
    write_file_atomic(m.config.out_dir / ".lock", "1\n");
    cli("resume --run " + shell_quote(m.config.out_dir.string()), &code);
    EXPECT_EQ(code, 2);
    fs::remove(m.config.out_dir / ".lock");

    cli("bogus-subcommand", &code);
    EXPECT_NE(code, 0);
}
