// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

namespace featevo::synth
{

/// Churn-style event log with a planted signal: positive entities are far
/// less active in the final window than negative ones, while every other
/// column is label-independent noise.
struct PlantedChurnSpec
{
    int entities = 200;
    double positive_rate = 0.4;
    int history_days = 53;
    int final_window_days = 7;
    /// Events per entity before the final window, drawn uniformly.
    int history_min = 16;
    int history_max = 24;
    /// Final-window events, drawn uniformly per class.
    int negative_recent_min = 4;
    int negative_recent_max = 10;
    int positive_recent_min = 0;
    int positive_recent_max = 2;
    double train_fraction = 0.7;
    std::int64_t start_time = 1700006400; // 2023-11-15T00:00:00Z
    std::uint64_t seed = 7;
};

struct GeneratedFiles
{
    std::filesystem::path events;
    std::filesystem::path labels;
    std::filesystem::path schema;
};

/// Writes events.csv, labels.csv (with split tags) and schema.json into `dir`.
GeneratedFiles write_planted_churn(const std::filesystem::path& dir, const PlantedChurnSpec& spec = {});

/// The definition that realizes the planted signal.
std::string planted_feature_program(const PlantedChurnSpec& spec = {});

} // namespace featevo::synth
