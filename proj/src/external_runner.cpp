// SPDX-License-Identifier: Apache-2.0
#include "featevo/external_runner.hpp"

#include "featevo/subprocess.hpp"
#include "featevo/util.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <unordered_map>

namespace featevo::dsl
{

TempDir::TempDir()
{
    auto base = std::filesystem::temp_directory_path() / "featevo-XXXXXX";
    std::string pattern = base.string();
    if (::mkdtemp(pattern.data()) == nullptr)
        throw IoError("cannot create temporary directory under " + base.parent_path().string());
    path_ = pattern;
}

TempDir::~TempDir()
{
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
}

std::string expand_command(std::string command_template,
                           const std::vector<std::pair<std::string, std::string>>& values)
{
    for (const auto& [key, value] : values)
        command_template = replace_all(std::move(command_template), "{" + key + "}", shell_quote(value));
    return command_template;
}

FeatureTable read_feature_csv(const std::string& text, const std::vector<std::string>& ids)
{
    std::vector<CsvRecord> records;
    try
    {
        records = parse_csv(text);
    }
    catch (const IoError& e)
    {
        throw OutputContractError(std::string("malformed output CSV: ") + e.what());
    }
    if (records.empty() || records.front().fields.empty() || records.front().fields.front() != "entity_id")
        throw OutputContractError("output CSV must start with an entity_id column");
    std::vector<std::string> columns(records.front().fields.begin() + 1, records.front().fields.end());

    std::unordered_map<std::string, std::vector<double>> rows;
    for (std::size_t i = 1; i < records.size(); ++i)
    {
        const auto& rec = records[i];
        if (rec.fields.size() == 1 && rec.fields[0].empty())
            continue;
        if (rec.fields.size() != columns.size() + 1)
            throw OutputContractError("line " + std::to_string(rec.line) + ": expected " +
                                      std::to_string(columns.size() + 1) + " fields");
        std::vector<double> values;
        for (std::size_t c = 1; c < rec.fields.size(); ++c)
        {
            const auto& cell = rec.fields[c];
            double v = 0.0;
            auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
            if (ec != std::errc() || ptr != cell.data() + cell.size() || !std::isfinite(v))
                throw OutputContractError("line " + std::to_string(rec.line) + ", column '" + columns[c - 1] +
                                          "': not a finite number: '" + cell + "'");
            values.push_back(v);
        }
        if (!rows.emplace(rec.fields[0], std::move(values)).second)
            throw OutputContractError("duplicate entity '" + rec.fields[0] + "' in output");
    }

    FeatureTable table(ids, columns);
    for (std::size_t r = 0; r < ids.size(); ++r)
    {
        auto it = rows.find(ids[r]);
        if (it == rows.end())
            throw OutputContractError("output is missing entity '" + ids[r] + "'");
        for (std::size_t c = 0; c < columns.size(); ++c)
            table.at(r, c) = it->second[c];
    }
    return table;
}

FeatureTable execute_external(const RunnerConfig& runner, const std::string& program_text, const DatasetPaths& paths,
                              const std::vector<std::string>& ids)
{
    TempDir dir;
    const auto program_path = dir.path() / "program.txt";
    const auto output_path = dir.path() / "output.csv";
    write_file_atomic(program_path, program_text);

    const std::string command = expand_command(runner.command_template, {
                                                                            {"program", program_path.string()},
                                                                            {"events", paths.events.string()},
                                                                            {"labels", paths.labels.string()},
                                                                            {"schema", paths.schema.string()},
                                                                            {"output", output_path.string()},
                                                                        });
    auto timeout = std::chrono::milliseconds(static_cast<long long>(runner.timeout_seconds * 1000.0));
    auto result = run_shell(command, timeout);
    if (result.timed_out)
        throw TimeoutError("external runner exceeded " + format_double(runner.timeout_seconds) + " s");
    if (result.exit_code != 0)
        throw RunnerError(result.exit_code, result.stderr_text);
    if (!std::filesystem::exists(output_path))
        throw OutputContractError("external runner produced no output file");
    return read_feature_csv(read_file(output_path), ids);
}

} // namespace featevo::dsl
