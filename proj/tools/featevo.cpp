// SPDX-License-Identifier: Apache-2.0
// Command-line front end for running and inspecting feature evolution runs.
#include "featevo/orchestrator.hpp"
#include "featevo/synthetic.hpp"
#include "featevo/util.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

namespace
{

namespace orch = featevo::orch;

enum ExitCode
{
    kOk = 0,
    kFailure = 1,
    kConfig = 2,
    kDataset = 3,
    kProvider = 4,
};

void print_result(const orch::RunResult& result)
{
    std::printf("run directory: %s\n", result.run_dir.string().c_str());
    std::printf("best solution: %s, auc %.4f\n", result.best.label.c_str(), result.best.metrics.auc);
    std::printf("best auc by iteration:");
    for (double v : result.best_trajectory)
        std::printf(" %.4f", v);
    std::printf("\n");
}

int guarded(const std::function<void()>& body)
{
    try
    {
        body();
        return kOk;
    }
    catch (const featevo::ConfigError& e)
    {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kConfig;
    }
    catch (const orch::LockError& e)
    {
        std::fprintf(stderr, "locked: %s\n", e.what());
        return kConfig;
    }
    catch (const featevo::data::SchemaError& e)
    {
        std::fprintf(stderr, "dataset error: %s\n", e.what());
        return kDataset;
    }
    catch (const featevo::data::DatasetIoError& e)
    {
        std::fprintf(stderr, "dataset error: %s\n", e.what());
        return kDataset;
    }
    catch (const featevo::data::ParseError& e)
    {
        std::fprintf(stderr, "dataset error: %s\n", e.what());
        return kDataset;
    }
    catch (const featevo::data::DegenerateSplitError& e)
    {
        std::fprintf(stderr, "dataset error: %s\n", e.what());
        return kDataset;
    }
    catch (const featevo::DegenerateLabelsError& e)
    {
        std::fprintf(stderr, "dataset error: %s\n", e.what());
        return kDataset;
    }
    catch (const featevo::agents::TransportError& e)
    {
        std::fprintf(stderr, "provider error: %s\n", e.what());
        return kProvider;
    }
    catch (const featevo::agents::ScriptExhaustedError& e)
    {
        std::fprintf(stderr, "provider error: %s\n", e.what());
        return kProvider;
    }
    catch (const std::exception& e)
    {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kFailure;
    }
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Evolve predictive features for event logs with LLM agents"};
    app.require_subcommand(1);

    std::string config_path;
    std::optional<int> iterations;
    std::optional<std::uint64_t> seed;
    bool no_critics = false;
    bool no_memory = false;
    bool no_ucb = false;
    auto* run_cmd = app.add_subcommand("run", "start a new run from a config file");
    run_cmd->add_option("--config", config_path, "run config (JSON)")->required();
    run_cmd->add_option("--iterations", iterations, "iteration budget, overrides max_iterations");
    run_cmd->add_option("--seed", seed, "bandit seed, overrides bandit.rng_seed");
    run_cmd->add_flag("--no-critics", no_critics, "skip the LLM critics (mechanical code checks stay)");
    run_cmd->add_flag("--no-memory", no_memory, "disable long- and short-term memory");
    run_cmd->add_flag("--no-ucb", no_ucb, "pick ideas uniformly at random instead of by UCB");
    std::string out_override;
    run_cmd->add_option("--out", out_override, "run directory, overrides out_dir");

    std::string run_dir;
    auto* resume_cmd = app.add_subcommand("resume", "continue an interrupted or extended run");
    resume_cmd->add_option("--run", run_dir, "run directory")->required();
    resume_cmd->add_option("--iterations", iterations, "new total iteration budget");

    std::string dest;
    auto* export_cmd = app.add_subcommand("export", "copy the best program, features and metrics");
    export_cmd->add_option("--run", run_dir, "run directory")->required();
    export_cmd->add_option("--dest", dest, "destination directory")->required();

    auto* report_cmd = app.add_subcommand("report", "print the iteration table and write report.md");
    report_cmd->add_option("--run", run_dir, "run directory")->required();

    std::string text;
    auto* inject_cmd = app.add_subcommand("inject-idea", "add a human idea to a stopped run");
    inject_cmd->add_option("--run", run_dir, "run directory")->required();
    inject_cmd->add_option("--text", text, "the idea's insight")->required();

    std::string synth_dir;
    std::uint64_t synth_seed = 7;
    int synth_entities = 200;
    auto* synth_cmd = app.add_subcommand("synth", "write the planted-signal churn dataset");
    synth_cmd->add_option("--dest", synth_dir, "output directory")->required();
    synth_cmd->add_option("--seed", synth_seed, "generator seed");
    synth_cmd->add_option("--entities", synth_entities, "number of entities");

    CLI11_PARSE(app, argc, argv);

    if (*run_cmd)
        return guarded([&] {
            auto config = orch::load_config(config_path);
            if (iterations)
                config.max_iterations = *iterations;
            if (seed)
                config.bandit.rng_seed = *seed;
            if (!out_override.empty())
                config.out_dir = std::filesystem::absolute(out_override);
            config.ablation.critics = config.ablation.critics && !no_critics;
            config.ablation.memory = config.ablation.memory && !no_memory;
            config.ablation.ucb = config.ablation.ucb && !no_ucb;
            config.validate();
            print_result(orch::run(config));
        });
    if (*resume_cmd)
        return guarded([&] { print_result(orch::resume(run_dir, iterations)); });
    if (*export_cmd)
        return guarded([&] {
            orch::export_run(run_dir, dest);
            std::printf("exported best artifacts to %s\n", dest.c_str());
        });
    if (*report_cmd)
        return guarded([&] {
            std::cout << orch::report(run_dir);
            std::printf("wrote %s\n", (std::filesystem::path(run_dir) / "report.md").string().c_str());
        });
    if (*inject_cmd)
        return guarded([&] { std::printf("added idea %d\n", orch::inject_idea(run_dir, text)); });
    if (*synth_cmd)
        return guarded([&] {
            featevo::synth::PlantedChurnSpec spec;
            spec.seed = synth_seed;
            spec.entities = synth_entities;
            auto files = featevo::synth::write_planted_churn(synth_dir, spec);
            std::printf("wrote %s, %s, %s\n", files.events.string().c_str(), files.labels.string().c_str(),
                        files.schema.string().c_str());
        });
    return kOk;
}
