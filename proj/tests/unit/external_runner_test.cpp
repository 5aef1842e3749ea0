// SPDX-License-Identifier: Apache-2.0
#include "featevo/external_runner.hpp"
#include "featevo/subprocess.hpp"
#include "featevo/util.hpp"
#include "scenario.hpp"

#include <gtest/gtest.h>

#include <chrono>

using namespace featevo;
using namespace featevo::dsl;
using namespace std::chrono_literals;

TEST(Subprocess, CapturesOutputAndStatus)
{
    auto r = run_shell("echo out; echo err 1>&2; exit 3", 5000ms);
    EXPECT_EQ(r.exit_code, 3);
    EXPECT_FALSE(r.timed_out);
    EXPECT_EQ(r.stdout_text, "out\n");
    EXPECT_EQ(r.stderr_text, "err\n");
}

TEST(Subprocess, TimeoutKillsProcessGroup)
{
    const auto start = std::chrono::steady_clock::now();
    auto r = run_shell("sleep 30 & sleep 30; echo never", 300ms);
    EXPECT_TRUE(r.timed_out);
    EXPECT_LT(std::chrono::steady_clock::now() - start, 5s);
    EXPECT_EQ(r.stdout_text.find("never"), std::string::npos);
}

TEST(Subprocess, LargeOutputDoesNotDeadlock)
{
    auto r = run_shell("head -c 300000 /dev/zero | tr '\\0' a; head -c 300000 /dev/zero | tr '\\0' b 1>&2", 10000ms);
    EXPECT_EQ(r.exit_code, 0);
    EXPECT_EQ(r.stdout_text.size(), 300000u);
    EXPECT_EQ(r.stderr_text.size(), 300000u);
}

TEST(Subprocess, ShellQuote)
{
    auto r = run_shell("printf %s " + shell_quote("it's a $HOME `x`"), 5000ms);
    EXPECT_EQ(r.stdout_text, "it's a $HOME `x`");
}

TEST(ExternalRunner, ExpandCommandQuotesValues)
{
    EXPECT_EQ(expand_command("run {program} > {output}", {{"program", "/tmp/a b"}, {"output", "o.csv"}}),
              "run '/tmp/a b' > 'o.csv'");
    EXPECT_EQ(expand_command("x {unknown}", {{"program", "p"}}), "x {unknown}");
}

namespace
{

DatasetPaths paths(const std::filesystem::path& dir)
{
    write_file_atomic(dir / "events.csv", "uid,ts\nA,1\n");
    write_file_atomic(dir / "labels.csv", "entity_id,label\nA,1\n");
    write_file_atomic(dir / "schema.json", "{}");
    return {dir / "events.csv", dir / "labels.csv", dir / "schema.json"};
}

} // namespace

TEST(ExternalRunner, IdentityRunnerCopiesTable)
{
    const auto dir = fixture::fresh_dir("runner_identity");
    write_file_atomic(dir / "prebuilt.csv", "entity_id,f1,f2\nB,3,4.5\nA,1,2\n");
    RunnerConfig cfg{"cp " + shell_quote((dir / "prebuilt.csv").string()) + " {output}", 10};
    auto t = execute_external(cfg, "ignored", paths(dir), {"A", "B"});
    EXPECT_EQ(t.columns(), (std::vector<std::string>{"f1", "f2"}));
    EXPECT_EQ(t.at(0, 0), 1.0);
    EXPECT_EQ(t.at(1, 1), 4.5);
}

TEST(ExternalRunner, ProgramAndPathsReachTheCommand)
{
    const auto dir = fixture::fresh_dir("runner_program");
    // the "program" is a shell script that writes the table from the labels file
    const std::string program = "printf 'entity_id,n\\n' > \"$2\"; tail -n +2 \"$1\" | cut -d, -f1 | "
                                "while read id; do echo \"$id,7\" >> \"$2\"; done\n";
    RunnerConfig cfg{"sh {program} {labels} {output}", 10};
    auto t = execute_external(cfg, program, paths(dir), {"A"});
    EXPECT_EQ(t.at(0, 0), 7.0);
}

TEST(ExternalRunner, NonzeroExitCarriesStderr)
{
    const auto dir = fixture::fresh_dir("runner_fail");
    RunnerConfig cfg{"echo 'bad column' 1>&2; exit 1", 10};
    try
    {
        execute_external(cfg, "x", paths(dir), {"A"});
        FAIL() << "expected RunnerError";
    }
    catch (const RunnerError& e)
    {
        EXPECT_EQ(e.exit_code(), 1);
        EXPECT_NE(e.stderr_text().find("bad column"), std::string::npos);
    }
}

TEST(ExternalRunner, MissingEntityBreaksContract)
{
    const auto dir = fixture::fresh_dir("runner_missing");
    RunnerConfig cfg{"printf 'entity_id,f\\nA,1\\n' > {output}", 10};
    EXPECT_THROW(execute_external(cfg, "x", paths(dir), {"A", "B"}), OutputContractError);
}

TEST(ExternalRunner, TimeoutRaises)
{
    const auto dir = fixture::fresh_dir("runner_timeout");
    RunnerConfig cfg{"sleep 20", 0.2};
    EXPECT_THROW(execute_external(cfg, "x", paths(dir), {"A"}), TimeoutError);
}

TEST(ExternalRunner, CsvContractChecks)
{
    EXPECT_THROW(read_feature_csv("id,f\nA,1\n", {"A"}), OutputContractError);
    EXPECT_THROW(read_feature_csv("entity_id,f\nA,abc\n", {"A"}), OutputContractError);
    EXPECT_THROW(read_feature_csv("entity_id,f\nA,inf\n", {"A"}), OutputContractError);
    EXPECT_THROW(read_feature_csv("entity_id,f\nA,1\nA,2\n", {"A"}), OutputContractError);
    EXPECT_THROW(read_feature_csv("entity_id,f\nA,1,2\n", {"A"}), OutputContractError);
    auto t = read_feature_csv("entity_id,f\nZ,9\nA,1\n", {"A"});
    EXPECT_EQ(t.rows(), 1u);
    EXPECT_EQ(t.at(0, 0), 1.0);
}

TEST(ExternalRunner, TempDirIsRemoved)
{
    std::filesystem::path p;
    {
        TempDir tmp;
        p = tmp.path();
        write_file_atomic(p / "x", "y");
        EXPECT_TRUE(std::filesystem::exists(p));
    }
    EXPECT_FALSE(std::filesystem::exists(p));
}
