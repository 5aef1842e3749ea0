// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "featevo/error.hpp"
#include "featevo/feature_table.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace featevo::dsl
{

/// Nonzero exit of an external command; `stderr_text` becomes critic feedback.
class RunnerError : public Error
{
public:
    RunnerError(int exit_code, std::string stderr_text)
        : Error("external command exited with status " + std::to_string(exit_code) + ": " + stderr_text),
          exit_code_(exit_code), stderr_text_(std::move(stderr_text))
    {
    }
    int exit_code() const { return exit_code_; }
    const std::string& stderr_text() const { return stderr_text_; }

private:
    int exit_code_;
    std::string stderr_text_;
};

class OutputContractError : public Error
{
public:
    using Error::Error;
};

struct RunnerConfig
{
    /// Placeholders: {program} {events} {labels} {schema} {output}.
    std::string command_template;
    double timeout_seconds = 60.0;
};

struct DatasetPaths
{
    std::filesystem::path events;
    std::filesystem::path labels;
    std::filesystem::path schema;
};

/// Runs a generated program through an external command and reads back its
/// per-entity CSV (entity_id followed by numeric columns).
FeatureTable execute_external(const RunnerConfig& runner, const std::string& program_text, const DatasetPaths& paths,
                              const std::vector<std::string>& ids);

/// Parses an entity_id-keyed numeric CSV and returns rows for `ids` in order.
FeatureTable read_feature_csv(const std::string& text, const std::vector<std::string>& ids);

/// Scoped temporary directory, removed on destruction.
class TempDir
{
public:
    TempDir();
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

/// Substitutes each {key} with the shell-quoted value.
std::string expand_command(std::string command_template,
                           const std::vector<std::pair<std::string, std::string>>& values);

} // namespace featevo::dsl
