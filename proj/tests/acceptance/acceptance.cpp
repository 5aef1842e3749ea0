// SPDX-License-Identifier: Apache-2.0
// Acceptance checks: one PASS/FAIL line per criterion, nonzero exit on any failure.
#include "featevo/bandit.hpp"
#include "featevo/dsl.hpp"
#include "featevo/evaluation.hpp"
#include "featevo/memory.hpp"
#include "featevo/orchestrator.hpp"
#include "featevo/subprocess.hpp"
#include "featevo/util.hpp"
#include "oracles.hpp"
#include "scenario.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <set>
#include <sstream>
#include <sys/wait.h>
#include <unistd.h>

using namespace featevo;
namespace fs = std::filesystem;

namespace
{

/// Collects failed expectations for one criterion.
class Check
{
public:
    void expect(bool ok, const std::string& what)
    {
        if (!ok && failures_.size() < 5)
            failures_.push_back(what);
        failed_ = failed_ || !ok;
    }
    void note(const std::string& text) { notes_.push_back(text); }
    bool passed() const { return !failed_; }

    std::string detail() const
    {
        std::string out = join(notes_, "; ");
        if (!failures_.empty())
            out += (out.empty() ? "" : "; ") + std::string("failed: ") + join(failures_, " | ");
        return out;
    }

private:
    bool failed_ = false;
    std::vector<std::string> failures_;
    std::vector<std::string> notes_;
};

double seconds_since(std::chrono::steady_clock::time_point start)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string num(double v, int digits = 4)
{
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
    return buf;
}

std::string sci(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.2e", v);
    return buf;
}

void record(kb::KnowledgeBase& kb, int idea, double score)
{
    kb::FeatureImpl f;
    f.name = "f" + std::to_string(kb.next_feature_id());
    f.reason = "r";
    f.summary = "s";
    f.pseudocode = "p";
    kb.record_outcome(idea, kb.add_feature(idea, f), score);
}

// ------------------------------------------------------------------ criteria

void bandit_exactness(Check& check)
{
    const auto start = std::chrono::steady_clock::now();
    Rng rng(9001);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i)
    {
        const int qi = 1 + static_cast<int>(rng.below(1000));
        const int q = qi + static_cast<int>(rng.below(5000));
        const double cum = (rng.uniform() - 0.5) * 0.2 * qi;
        const double c = rng.uniform() * 3.0;
        worst = std::max(worst, std::abs(bandit::ucb(cum, qi, q, c) - oracle::ucb(cum, qi, q, c)));
    }
    check.expect(worst <= 1e-9, "ucb error " + sci(worst));
    check.note("max ucb error " + sci(worst));

    int mismatches = 0;
    for (int i = 0; i < 1000; ++i)
    {
        auto kb = oracle::random_kb(rng, 8, 30);
        bandit::BanditConfig cfg;
        cfg.exploration_c = rng.uniform() * 2.0;
        mismatches += bandit::select_idea(kb, cfg) != oracle::select_idea(kb, cfg.exploration_c);
    }
    check.expect(mismatches == 0, std::to_string(mismatches) + " select_idea mismatches");
    check.note("select_idea agrees on 1000 kbs");

    int revisits = 0;
    for (int trial = 0; trial < 200; ++trial)
    {
        auto kb = oracle::random_kb(rng, 6, 10);
        const int extra = 1 + static_cast<int>(rng.below(5));
        for (int i = 0; i < extra; ++i)
            kb.add_idea("new", kb::Origin::Created, {});
        std::set<int> unvisited;
        for (const auto& idea : kb.ideas())
            if (idea.visit_count == 0)
                unvisited.insert(idea.id);
        while (!unvisited.empty())
        {
            const int chosen = bandit::select_idea(kb, {});
            if (!unvisited.count(chosen))
            {
                ++revisits;
                break;
            }
            unvisited.erase(chosen);
            record(kb, chosen, (rng.uniform() - 0.5) * 0.1);
        }
    }
    check.expect(revisits == 0, std::to_string(revisits) + " revisits before all unvisited ideas");
    const double elapsed = seconds_since(start);
    check.expect(elapsed < 5.0, "took " + num(elapsed, 2) + " s");
    check.note(num(elapsed, 2) + " s");
}

void relative_score(Check& check)
{
    Rng rng(9002);
    kb::KnowledgeBase kb;
    std::vector<std::pair<int, int>> pending;
    long double recorded = 0;
    int wrong_status = 0, recorded_count = 0;
    for (int op = 0; op < 10000; ++op)
    {
        const double r = rng.uniform();
        if (kb.empty() || r < 0.05)
        {
            kb.add_idea("idea", kb::Origin::Prior, {});
        }
        else if (r < 0.5 || pending.empty())
        {
            const int idea = static_cast<int>(rng.below(kb.size()));
            kb::FeatureImpl f;
            f.name = "f" + std::to_string(op);
            f.reason = f.summary = f.pseudocode = "x";
            pending.emplace_back(idea, kb.add_feature(idea, f));
        }
        else
        {
            const auto pick = rng.below(pending.size());
            auto [idea, id] = pending[pick];
            pending.erase(pending.begin() + static_cast<std::ptrdiff_t>(pick));
            if (rng.uniform() < 0.15)
            {
                kb.mark_failed(idea, id);
                continue;
            }
            const double score = rng.uniform() < 0.1 ? 0.0 : (rng.uniform() - 0.5) * 0.1;
            kb.record_outcome(idea, id, score);
            recorded += score;
            ++recorded_count;
            const auto status = kb.idea(idea).find_feature(id)->status;
            wrong_status += status != (score > 0 ? kb::FeatureStatus::Accepted : kb::FeatureStatus::Rejected);
        }
    }
    long double total = 0;
    for (const auto& idea : kb.ideas())
        total += idea.cumulative_score;
    check.expect(wrong_status == 0, std::to_string(wrong_status) + " features with the wrong status");
    const double drift = static_cast<double>(std::abs(total - recorded));
    check.expect(drift <= 1e-12, "conservation drift " + sci(drift));
    check.expect(kb.total_visits() == recorded_count, "visit count differs from recorded outcomes");
    check.note(std::to_string(recorded_count) + " outcomes, drift " + sci(drift));
    check.expect(bandit::relative_score(0.7, 0.65) > 0 && bandit::relative_score(0.65, 0.65) == 0,
                 "relative_score sign");
}

void auc_oracle(Check& check)
{
    Rng rng(9003);
    double worst = 0;
    for (int trial = 0; trial < 500; ++trial)
    {
        const std::size_t n = 2 + rng.below(49);
        std::vector<int> y(n);
        std::vector<double> s(n);
        for (std::size_t i = 0; i < n; ++i)
        {
            y[i] = rng.uniform() < 0.5;
            s[i] = rng.uniform() < 0.3 ? std::round(rng.uniform() * 4) / 4 : rng.uniform();
        }
        y[0] = 0;
        y[1] = 1;
        worst = std::max(worst, std::abs(eval::auc(y, s) - oracle::pairwise_auc(y, s)));
    }
    check.expect(worst <= 1e-12, "auc error " + sci(worst));
    const double example = eval::auc({1, 0, 1, 0}, {0.9, 0.8, 0.3, 0.2});
    check.expect(example == 0.75, "worked example gave " + std::to_string(example));
    check.note("max error " + sci(worst) + ", example " + num(example, 2));
}

FeatureTable random_table(Rng& rng, std::size_t rows, std::size_t cols)
{
    std::vector<std::string> ids, names;
    for (std::size_t r = 0; r < rows; ++r)
        ids.push_back("e" + std::to_string(r));
    for (std::size_t c = 0; c < cols; ++c)
        names.push_back("c" + std::to_string(c));
    FeatureTable t(ids, names);
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c)
            t.at(r, c) = rng.uniform() * 4.0 - 2.0;
    return t;
}

void learner_soundness(Check& check)
{
    Rng rng(9004);
    double worst = 0;
    for (int trial = 0; trial < 100; ++trial)
    {
        const std::size_t rows = 5 + rng.below(20), cols = 1 + rng.below(5);
        auto x = random_table(rng, rows, cols);
        std::vector<int> y(rows);
        for (auto& v : y)
            v = rng.uniform() < 0.5;
        y[0] = 0;
        y[1] = 1;
        eval::LogisticModel m;
        for (std::size_t j = 0; j < cols; ++j)
            m.weights.push_back(rng.uniform() - 0.5);
        m.intercept = rng.uniform() - 0.5;
        const double lambda = rng.uniform() * 0.1;
        const auto grad = eval::logreg_gradient(x, y, m, lambda);
        for (std::size_t j = 0; j <= cols; ++j)
        {
            auto plus = m, minus = m;
            (j < cols ? plus.weights[j] : plus.intercept) += 1e-5;
            (j < cols ? minus.weights[j] : minus.intercept) -= 1e-5;
            const double fd = (eval::logreg_loss(x, y, plus, lambda) - eval::logreg_loss(x, y, minus, lambda)) / 2e-5;
            const double scale = std::max({std::abs(fd), std::abs(grad[j]), 1e-6});
            worst = std::max(worst, std::abs(fd - grad[j]) / scale);
        }
    }
    check.expect(worst < 1e-4, "gradient relative error " + sci(worst));
    check.note("max gradient relative error " + sci(worst));

    // separable 1-D data, evaluated on held-out points
    std::vector<std::string> train_ids, test_ids;
    for (int i = 0; i < 20; ++i)
        train_ids.push_back("t" + std::to_string(i));
    for (int i = 0; i < 10; ++i)
        test_ids.push_back("h" + std::to_string(i));
    FeatureTable train(train_ids, {"x"}), test(test_ids, {"x"});
    std::vector<int> y_train, y_test;
    for (int i = 0; i < 20; ++i)
    {
        train.at(static_cast<std::size_t>(i), 0) = (i % 2 ? 1.0 : -1.0) * (1.0 + i * 0.1);
        y_train.push_back(i % 2);
    }
    for (int i = 0; i < 10; ++i)
    {
        test.at(static_cast<std::size_t>(i), 0) = (i % 2 ? 1.0 : -1.0) * (0.5 + i * 0.3);
        y_test.push_back(i % 2);
    }
    eval::LearnerConfig cfg;
    cfg.l2_lambda = 1e-4;
    cfg.learning_rate = 0.5;
    cfg.iterations = 500;
    const auto pre = eval::fit_preprocess(train);
    const auto model = eval::train_logreg(eval::apply(pre, train), y_train, cfg);
    const auto scaled = eval::apply(pre, test);
    std::vector<double> scores;
    for (std::size_t r = 0; r < scaled.rows(); ++r)
        scores.push_back(model.predict(scaled.row(r)));
    const double separable = eval::auc(y_test, scores);
    check.expect(separable == 1.0, "separable test auc " + std::to_string(separable));

    int increases = 0;
    for (int trial = 0; trial < 20; ++trial)
    {
        auto x = random_table(rng, 30, 3);
        std::vector<int> y(30);
        for (auto& v : y)
            v = rng.uniform() < 0.5;
        y[0] = 0;
        y[1] = 1;
        eval::LearnerConfig slow;
        slow.learning_rate = 0.01;
        double previous = std::numeric_limits<double>::infinity();
        for (int it = 1; it <= 50; ++it)
        {
            slow.iterations = it;
            const double loss = eval::logreg_loss(x, y, eval::train_logreg(x, y, slow), slow.l2_lambda);
            increases += loss > previous + 1e-15;
            previous = loss;
        }
    }
    check.expect(increases == 0, std::to_string(increases) + " loss increases at lr 0.01");
    check.note("separable test auc " + num(separable, 2) + ", loss increases " + std::to_string(increases));
}

double first_value(const std::string& program, const data::Dataset& d)
{
    return dsl::execute(dsl::parse(program), d, {"A"}).at(0, 0);
}

void dsl_correctness(Check& check)
{
    Rng rng(9005);
    int round_trip_failures = 0;
    for (int i = 0; i < 1000; ++i)
    {
        const auto p = oracle::random_program(rng, 5);
        try
        {
            round_trip_failures += !(dsl::parse(dsl::pretty_print(p)) == p);
        }
        catch (const std::exception&)
        {
            ++round_trip_failures;
        }
    }
    check.expect(round_trip_failures == 0, std::to_string(round_trip_failures) + " round-trip failures");

    int oracle_failures = 0;
    for (int trial = 0; trial < 500; ++trial)
    {
        auto log = oracle::random_log(rng, 10, 100);
        auto d = log.to_dataset();
        auto program = oracle::random_restricted_program(rng, 1 + static_cast<int>(rng.below(4)));
        auto table = dsl::execute(program, d, log.entities);
        for (std::size_t r = 0; r < log.entities.size(); ++r)
            for (std::size_t c = 0; c < program.defs.size(); ++c)
            {
                const double expected = oracle::row_scan(program.defs[c], log, log.entities[r]);
                const double got = table.at(r, c);
                const bool count = std::get<dsl::AggSpec>(program.defs[c].body).agg == dsl::Aggregate::Count;
                oracle_failures += count ? got != expected
                                         : std::abs(got - expected) > 1e-12 * std::max(1.0, std::abs(expected));
            }
    }
    check.expect(oracle_failures == 0, std::to_string(oracle_failures) + " cells differ from the row scan");

    data::DataSchema schema;
    schema.columns = {{"uid", data::DType::Categorical, ""}, {"ts", data::DType::Timestamp, ""}};
    schema.entity_id_column = "uid";
    schema.timestamp_column = "ts";
    const std::string labels = "entity_id,label\nA,1\nB,0\n";
    auto d = data::dataset_from_text("uid,ts\nA,100\nA,200\nA,300\nB,300\n", labels, schema);
    auto late = data::dataset_from_text("uid,ts\nA,100\nA,200\nA,300\nB,10000\n", labels, schema);
    auto edge = data::dataset_from_text("uid,ts\nA,6400\nA,6401\nB,10000\n", labels, schema);
    const bool windows = first_value("feature n = count() window last 150 hours", d) == 3.0 &&
                         first_value("feature n = count() window last 1 hours", d) == 3.0 &&
                         first_value("feature n = count() window last 1 hours", late) == 0.0 &&
                         first_value("feature n = count() window last 1 hours", edge) == 1.0;
    check.expect(windows, "window anchor hand cases");

    int worker_mismatches = 0;
    for (int trial = 0; trial < 100; ++trial)
    {
        auto log = oracle::random_log(rng, 30, 300);
        auto data = log.to_dataset();
        auto program = oracle::random_restricted_program(rng, 3);
        dsl::ExecOptions many;
        many.workers = 2 + rng.below(7);
        worker_mismatches += !(dsl::execute(program, data, log.entities) ==
                               dsl::execute(program, data, log.entities, many));
    }
    check.expect(worker_mismatches == 0, std::to_string(worker_mismatches) + " worker mismatches");
    check.note("1000 round trips, 500 oracle pairs, window cases, 100 worker comparisons");
}

struct Planted
{
    fixture::Fixture fixture;
    double elapsed = 0;
    std::vector<orch::IterationRecord> records;
    std::vector<std::string> visit_violations;
    orch::Candidate best;
    std::vector<double> trajectory;
    std::size_t entities = 0, events = 0;
    double mean_negative = 0, mean_positive = 0;
};

Planted run_planted(std::uint64_t seed)
{
    Planted p{fixture::planted_fixture(fixture::fresh_dir("accept_planted"), seed)};
    const auto start = std::chrono::steady_clock::now();
    auto run = orch::Run::create(p.fixture.config);
    while (!run->done())
    {
        const auto before = run->state().kb;
        const auto rec = run->step();
        if (rec.outcome == orch::Outcome::ForfeitedCode || rec.outcome == orch::Outcome::ForfeitedIdea)
        {
            bool same = before.total_visits() == run->state().kb.total_visits();
            for (const auto& idea : before.ideas())
                same = same && idea.visit_count == run->state().kb.idea(idea.id).visit_count &&
                       idea.cumulative_score == run->state().kb.idea(idea.id).cumulative_score;
            if (!same)
                p.visit_violations.push_back("iteration " + std::to_string(rec.iteration));
        }
    }
    p.best = run->write_best();
    p.trajectory = run->state().best_trajectory;
    p.elapsed = seconds_since(start);
    p.records = orch::load_records(p.fixture.config.out_dir);

    const auto& d = run->dataset();
    const auto ids = d.labeled_ids();
    p.entities = ids.size();
    p.events = d.events().size();
    const auto table = dsl::execute(dsl::parse(synth::planted_feature_program()), d, ids);
    double sum[2] = {0, 0};
    int n[2] = {0, 0};
    for (std::size_t r = 0; r < ids.size(); ++r)
    {
        const int y = d.label(ids[r]);
        sum[y] += table.at(r, 0);
        ++n[y];
    }
    p.mean_negative = n[0] ? sum[0] / n[0] : 0;
    p.mean_positive = n[1] ? sum[1] / n[1] : 0;
    return p;
}

void end_to_end(Check& check)
{
    const auto p = run_planted(2);
    check.note(std::to_string(p.entities) + " entities, " + std::to_string(p.events) + " events");
    check.expect(p.entities >= 150 && p.entities <= 250, "entity count");
    check.expect(p.events >= 3000 && p.events <= 7000, "event count");
    check.expect(p.mean_negative >= 3.0 * p.mean_positive,
                 "final-window means " + num(p.mean_negative, 2) + " vs " + num(p.mean_positive, 2));
    check.note("final-window mean events " + num(p.mean_negative, 2) + " (retained) vs " + num(p.mean_positive, 2) +
               " (churned)");

    int synth = 0, create = 0, rejected = 0, code_forfeits = 0;
    for (const auto& r : p.records)
    {
        synth += r.action == bandit::Action::Synthesize && r.outcome == orch::Outcome::IdeaAdded;
        create += r.action == bandit::Action::Create && r.outcome == orch::Outcome::IdeaAdded;
        rejected += r.outcome == orch::Outcome::Rejected;
        code_forfeits += r.outcome == orch::Outcome::ForfeitedCode;
    }
    check.expect(p.records.size() >= 12, std::to_string(p.records.size()) + " iterations");
    check.expect(synth >= 1, "no synthesized idea");
    check.expect(create >= 1, "no created idea");
    check.expect(rejected >= 2, std::to_string(rejected) + " rejected features");
    check.expect(code_forfeits >= 1, "no code forfeit");
    check.note(std::to_string(p.records.size()) + " iterations: " + std::to_string(synth) + " synthesize, " +
               std::to_string(create) + " create, " + std::to_string(rejected) + " rejected, " +
               std::to_string(code_forfeits) + " code forfeits");

    check.expect(p.best.metrics.auc >= 0.85, "best auc " + num(p.best.metrics.auc));
    check.note("best " + p.best.label + " auc " + num(p.best.metrics.auc));
    bool monotone = true;
    for (std::size_t i = 1; i < p.trajectory.size(); ++i)
        monotone = monotone && p.trajectory[i] >= p.trajectory[i - 1];
    check.expect(monotone, "best trajectory decreased");
    check.expect(p.visit_violations.empty(), "forfeit changed visits at " + join(p.visit_violations, ", "));
    check.expect(p.elapsed < 60.0, "took " + num(p.elapsed, 2) + " s");
    const auto& cfg = p.fixture.config;
    check.expect(cfg.provider.kind == agents::ProviderConfig::Kind::Scripted && !cfg.memory.endpoint,
                 "a network provider or embedding endpoint is configured");
    check.note(num(p.elapsed, 2) + " s, scripted provider, hashed embeddings");
}

std::map<int, std::string> record_files(const fs::path& run_dir)
{
    std::map<int, std::string> out;
    for (const auto& e : fs::directory_iterator(run_dir / "iterations"))
        if (fs::exists(e.path() / "record.json"))
            out[std::stoi(e.path().filename().string())] = read_file(e.path() / "record.json");
    return out;
}

long dead_pid()
{
    const pid_t child = ::fork();
    if (child == 0)
        ::_exit(0);
    int status = 0;
    ::waitpid(child, &status, 0);
    return child;
}

void determinism(Check& check)
{
    auto a = fixture::planted_fixture(fixture::fresh_dir("accept_det_a"), 2);
    auto b = fixture::planted_fixture(fixture::fresh_dir("accept_det_b"), 2);
    orch::run(a.config);
    orch::run(b.config);
    const auto ra = record_files(a.config.out_dir);
    const auto rb = record_files(b.config.out_dir);
    check.expect(ra.size() == 12 && ra == rb, "two runs differ");
    check.note(std::to_string(ra.size()) + " records identical across two runs");

    auto c = fixture::planted_fixture(fixture::fresh_dir("accept_det_c"), 2);
    {
        auto run = orch::Run::create(c.config);
        run->run_until_done(5);
    }
    // what a kill during iteration 6 leaves behind
    fs::create_directories(c.config.out_dir / "iterations" / "6.partial");
    write_file_atomic(c.config.out_dir / "iterations" / "6.partial" / "record.json", "{}");
    write_file_atomic(c.config.out_dir / ".lock", std::to_string(dead_pid()) + "\n");
    orch::resume(c.config.out_dir);
    const auto rc = record_files(c.config.out_dir);
    int differing = 0;
    for (int t = 6; t <= 12; ++t)
        differing += !rc.count(t) || !ra.count(t) || rc.at(t) != ra.at(t);
    check.expect(differing == 0, std::to_string(differing) + " of records 6-12 differ after resume");
    check.expect(!fs::exists(c.config.out_dir / "iterations" / "6.partial"), "partial directory survived");
    check.expect(rc == ra, "resumed run differs from the uninterrupted run");
    check.note("resume after 5 with a partial step and stale lock reproduces 6-12");
}

/// Counts calls and returns a fixed summary.
class CountingProvider : public agents::Provider
{
public:
    int calls = 0;
    std::string complete(const std::vector<agents::ChatMessage>&, const agents::CallOptions&) override
    {
        ++calls;
        return fixture::text_reply("summary");
    }
};

void memory_properties(Check& check)
{
    Rng rng(9008);
    int mismatches = 0;
    for (int trial = 0; trial < 1000; ++trial)
    {
        const auto index = oracle::random_index(rng, 12, 1 + static_cast<int>(rng.below(6)));
        const int query = static_cast<int>(rng.below(index.entries().size()));
        const int k = static_cast<int>(rng.below(6));
        mismatches += memory::retrieve_related(index, query, k) != oracle::retrieve_related(index, query, k);
    }
    check.expect(mismatches == 0, std::to_string(mismatches) + " retrieval mismatches");

    int too_long = 0;
    for (int trial = 0; trial < 1000; ++trial)
    {
        std::string text;
        const int parts = 1 + static_cast<int>(rng.below(8));
        for (int p = 0; p < parts; ++p)
            text += std::string(1 + rng.below(80), 'a') + (rng.uniform() < 0.6 ? "\n\n" : " ");
        memory::LongTermMemory m;
        m.max_chars = 1 + rng.below(200);
        too_long += memory::update_long_term(m, {text}, trial).text.size() > m.max_chars;
    }
    check.expect(too_long == 0, std::to_string(too_long) + " long-term documents over max_chars");

    CountingProvider provider;
    auto prompts = agents::PromptSet::load();
    data::DataSchema schema;
    agents::AgentContext ctx{provider, prompts, schema, std::nullopt, nullptr};
    kb::Idea idea;
    const auto stm = memory::build_short_term(ctx, idea, {});
    check.expect(provider.calls == 0, "zero-neighbor short-term memory called the provider");
    check.expect(stm.text == memory::kNoRelatedExperience, "zero-neighbor text");
    memory::build_short_term(ctx, idea, {&idea});
    check.expect(provider.calls == 1, "one-neighbor short-term memory made no call");
    check.note("1000 retrievals, 1000 long-term bounds, no call without neighbors");
}

std::optional<int> first_reach(const fs::path& run_dir, const std::string& feature)
{
    for (const auto& r : orch::load_records(run_dir))
        if (r.feature_name == feature && r.outcome == orch::Outcome::Accepted)
            return r.iteration;
    return std::nullopt;
}

void ablation(Check& check)
{
    // each flag through the command-line tool on a one-iteration run
    const auto root = fixture::fresh_dir("accept_cli");
    auto f = fixture::planted_fixture(root, 2);
    f.config.max_iterations = 1;
    write_file_atomic(root / "run.json", orch::to_json(f.config).dump(2));
    const std::vector<std::pair<std::string, std::string>> flags = {
        {"--no-critics", "critics"}, {"--no-memory", "memory"}, {"--no-ucb", "ucb"}};
    for (const auto& [flag, key] : flags)
    {
        const auto out = root / ("run" + flag);
        const auto r = run_shell(std::string(FEATEVO_CLI) + " run --config " + shell_quote((root / "run.json").string()) +
                                     " --out " + shell_quote(out.string()) + " " + flag,
                                 std::chrono::seconds(60));
        check.expect(r.exit_code == 0, flag + " exited " + std::to_string(r.exit_code) + ": " + r.stderr_text);
        if (r.exit_code != 0)
            continue;
        const auto cfg = nlohmann::json::parse(read_file(out / "config.json")).at("ablation");
        bool only_this = true;
        for (const auto& [other_flag, other] : flags)
            only_this = only_this && cfg.at(other).get<bool>() == (other != key);
        check.expect(only_this, flag + " recorded as " + cfg.dump());
    }
    check.note("--no-critics, --no-memory and --no-ucb recorded in config.json");

    auto with_ucb = fixture::decoy_fixture(fixture::fresh_dir("accept_ucb"), 1);
    auto uniform = fixture::decoy_fixture(fixture::fresh_dir("accept_uniform"), 1);
    uniform.config.ablation.ucb = false;
    orch::run(with_ucb.config);
    orch::run(uniform.config);
    const auto a = first_reach(with_ucb.config.out_dir, "recent_events");
    const auto b = first_reach(uniform.config.out_dir, "recent_events");
    const auto show = [](const std::optional<int>& v) { return v ? std::to_string(*v) : std::string("never"); };
    check.expect(a.has_value(), "ucb run never reached the planted feature");
    check.expect(a && (!b || *a < *b), "ucb reached it at " + show(a) + ", uniform at " + show(b));
    check.note("planted feature reached at iteration " + show(a) + " with ucb, " + show(b) + " uniform");
}

} // namespace

int main()
{
    const std::vector<std::pair<std::string, std::function<void(Check&)>>> criteria = {
        {"bandit exactness", bandit_exactness},
        {"relative score semantics", relative_score},
        {"auc oracle", auc_oracle},
        {"learner soundness", learner_soundness},
        {"dsl correctness", dsl_correctness},
        {"end-to-end scripted run", end_to_end},
        {"determinism and resume", determinism},
        {"memory properties", memory_properties},
        {"ablation harness", ablation},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i)
    {
        Check check;
        try
        {
            criteria[i].second(check);
        }
        catch (const std::exception& e)
        {
            check.expect(false, std::string("exception: ") + e.what());
        }
        failures += !check.passed();
        std::printf("criterion %zu %s: %s (%s)\n", i + 1, check.passed() ? "PASS" : "FAIL", criteria[i].first.c_str(),
                    check.detail().c_str());
        std::fflush(stdout);
    }
    return failures == 0 ? 0 : 1;
}
