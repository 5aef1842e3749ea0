// SPDX-License-Identifier: Apache-2.0
#include "featevo/synthetic.hpp"

#include "featevo/error.hpp"
#include "featevo/random.hpp"
#include "featevo/util.hpp"

#include <algorithm>
#include <cstdio>
#include <vector>

#include <json.hpp>

namespace featevo::synth
{

namespace
{

struct Event
{
    std::int64_t ts;
    std::string entity;
    std::string action;
    std::string amount;
    std::string device;
    int session_seconds;
};

int uniform_int(Rng& rng, int lo, int hi) { return lo + static_cast<int>(rng.below(static_cast<std::uint64_t>(hi - lo + 1))); }

} // namespace

GeneratedFiles write_planted_churn(const std::filesystem::path& dir, const PlantedChurnSpec& spec)
{
    if (spec.entities < 4 || spec.history_days < 1 || spec.final_window_days < 1)
        throw ConfigError("planted dataset needs at least 4 entities and positive day counts");
    std::filesystem::create_directories(dir);
    Rng rng(spec.seed);

    static const char* actions[] = {"login", "view", "click", "purchase"};
    static const char* devices[] = {"ios", "android", "web"};
    const std::int64_t day = 86400;
    const std::int64_t window_start = spec.start_time + static_cast<std::int64_t>(spec.history_days) * day;
    const std::int64_t end = window_start + static_cast<std::int64_t>(spec.final_window_days) * day;

    std::vector<Event> events;
    std::string labels = "entity_id,label,split\n";
    for (int e = 0; e < spec.entities; ++e)
    {
        char id[16];
        std::snprintf(id, sizeof(id), "u%03d", e);
        const bool positive = rng.uniform() < spec.positive_rate;
        const std::string device = devices[rng.below(3)];
        auto emit = [&](std::int64_t from, std::int64_t to) {
            Event ev;
            ev.ts = from + static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(to - from)));
            ev.entity = id;
            ev.action = actions[rng.below(4)];
            ev.amount = ev.action == "purchase" ? format_double(static_cast<double>(uniform_int(rng, 100, 9999)) / 100.0) : "";
            ev.device = rng.uniform() < 0.9 ? device : devices[rng.below(3)];
            ev.session_seconds = uniform_int(rng, 5, 1800);
            events.push_back(std::move(ev));
        };
        const int history = uniform_int(rng, spec.history_min, spec.history_max);
        for (int i = 0; i < history; ++i)
            emit(spec.start_time, window_start);
        const int recent = positive ? uniform_int(rng, spec.positive_recent_min, spec.positive_recent_max)
                                    : uniform_int(rng, spec.negative_recent_min, spec.negative_recent_max);
        for (int i = 0; i < recent; ++i)
            emit(window_start + 1, end);
        const bool train = rng.uniform() < spec.train_fraction;
        labels += std::string(id) + "," + (positive ? "1" : "0") + "," + (train ? "train" : "test") + "\n";
    }
    // pins the log's last timestamp so window anchoring does not depend on sampling
    events.push_back({end, "u000", "login", "", "web", 60});

    std::stable_sort(events.begin(), events.end(), [](const Event& a, const Event& b) { return a.ts < b.ts; });
    std::string csv = "user_id,ts,action,amount,device,session_seconds\n";
    for (const auto& ev : events)
        csv += ev.entity + "," + std::to_string(ev.ts) + "," + ev.action + "," + ev.amount + "," + ev.device + "," +
               std::to_string(ev.session_seconds) + "\n";

    nlohmann::json schema = {
        {"dataset_context", "Activity log of an app's users; the label marks users who churned after the log ends."},
        {"columns",
         {{{"name", "user_id"}, {"dtype", "categorical"}, {"description", "user identifier"}},
          {{"name", "ts"}, {"dtype", "timestamp"}, {"description", "event time, epoch seconds"}},
          {{"name", "action"}, {"dtype", "categorical"}, {"description", "login, view, click or purchase"}},
          {{"name", "amount"}, {"dtype", "float"}, {"description", "purchase amount, empty for other actions"}},
          {{"name", "device"}, {"dtype", "categorical"}, {"description", "device family"}},
          {{"name", "session_seconds"}, {"dtype", "int"}, {"description", "session length in seconds"}}}},
        {"entity_id_column", "user_id"},
        {"timestamp_column", "ts"},
        {"baseline_feature_columns", {"device"}},
    };

    GeneratedFiles files{dir / "events.csv", dir / "labels.csv", dir / "schema.json"};
    write_file_atomic(files.events, csv);
    write_file_atomic(files.labels, labels);
    write_file_atomic(files.schema, schema.dump(2) + "\n");
    return files;
}

std::string planted_feature_program(const PlantedChurnSpec& spec)
{
    return "feature recent_events = count() window last " + std::to_string(spec.final_window_days) + " days\n";
}

} // namespace featevo::synth
