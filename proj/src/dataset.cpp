// SPDX-License-Identifier: Apache-2.0
#include "featevo/dataset.hpp"

#include "featevo/random.hpp"
#include "featevo/util.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <set>

namespace featevo::data
{

using nlohmann::json;

std::string to_string(DType dtype)
{
    switch (dtype)
    {
    case DType::Int: return "int";
    case DType::Float: return "float";
    case DType::Categorical: return "categorical";
    case DType::Timestamp: return "timestamp";
    case DType::Text: return "text";
    }
    return "?";
}

DType dtype_from_string(const std::string& text)
{
    if (text == "int")
        return DType::Int;
    if (text == "float")
        return DType::Float;
    if (text == "categorical")
        return DType::Categorical;
    if (text == "timestamp")
        return DType::Timestamp;
    if (text == "text")
        return DType::Text;
    throw SchemaError("unknown dtype '" + text + "'");
}

int DataSchema::find(const std::string& name) const
{
    for (std::size_t i = 0; i < columns.size(); ++i)
        if (columns[i].name == name)
            return static_cast<int>(i);
    return -1;
}

void DataSchema::validate() const
{
    std::set<std::string> seen;
    for (const auto& c : columns)
    {
        if (c.name.empty())
            throw SchemaError("column with empty name");
        if (!seen.insert(c.name).second)
            throw SchemaError("duplicate column name '" + c.name + "'");
    }
    if (find(entity_id_column) < 0)
        throw SchemaError("entity_id_column '" + entity_id_column + "' is not a declared column");
    int ts = find(timestamp_column);
    if (ts < 0)
        throw SchemaError("timestamp_column '" + timestamp_column + "' is not a declared column");
    if (columns[static_cast<std::size_t>(ts)].dtype != DType::Timestamp)
        throw SchemaError("timestamp_column '" + timestamp_column + "' must have dtype timestamp");
    for (const auto& b : baseline_feature_columns)
    {
        int idx = find(b);
        if (idx < 0)
            throw SchemaError("baseline column '" + b + "' is not a declared column");
        auto d = columns[static_cast<std::size_t>(idx)].dtype;
        if (d != DType::Int && d != DType::Float && d != DType::Categorical)
            throw SchemaError("baseline column '" + b + "' must be numeric or categorical");
    }
}

std::string DataSchema::render() const
{
    std::string out;
    if (!dataset_context.empty())
        out += "Context: " + dataset_context + "\n";
    out += "Entity id column: " + entity_id_column + "\n";
    out += "Timestamp column: " + timestamp_column + "\n";
    out += "Columns:\n";
    for (const auto& c : columns)
    {
        out += "  - " + c.name + " (" + to_string(c.dtype) + ")";
        if (!c.description.empty())
            out += ": " + c.description;
        out += "\n";
    }
    if (!baseline_feature_columns.empty())
        out += "Baseline features: " + join(baseline_feature_columns, ", ") + "\n";
    return out;
}

DataSchema schema_from_json(const json& doc)
{
    DataSchema s;
    try
    {
        s.dataset_context = doc.value("dataset_context", "");
        for (const auto& c : doc.at("columns"))
        {
            ColumnSpec spec;
            spec.name = c.at("name").get<std::string>();
            spec.dtype = dtype_from_string(c.at("dtype").get<std::string>());
            spec.description = c.value("description", "");
            s.columns.push_back(std::move(spec));
        }
        s.entity_id_column = doc.at("entity_id_column").get<std::string>();
        s.timestamp_column = doc.at("timestamp_column").get<std::string>();
        if (doc.contains("baseline_feature_columns"))
            s.baseline_feature_columns = doc.at("baseline_feature_columns").get<std::vector<std::string>>();
    }
    catch (const json::exception& e)
    {
        throw SchemaError(std::string("malformed schema document: ") + e.what());
    }
    s.validate();
    return s;
}

json schema_to_json(const DataSchema& schema)
{
    json cols = json::array();
    for (const auto& c : schema.columns)
        cols.push_back({{"name", c.name}, {"dtype", to_string(c.dtype)}, {"description", c.description}});
    return {
        {"dataset_context", schema.dataset_context},
        {"columns", cols},
        {"entity_id_column", schema.entity_id_column},
        {"timestamp_column", schema.timestamp_column},
        {"baseline_feature_columns", schema.baseline_feature_columns},
    };
}

namespace
{

// Howard Hinnant's days_from_civil.
std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d)
{
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const auto yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

bool read_digits(std::string_view s, std::size_t& pos, std::size_t count, int& out)
{
    if (pos + count > s.size())
        return false;
    int v = 0;
    for (std::size_t i = 0; i < count; ++i)
    {
        char c = s[pos + i];
        if (c < '0' || c > '9')
            return false;
        v = v * 10 + (c - '0');
    }
    pos += count;
    out = v;
    return true;
}

std::string_view trim(std::string_view s)
{
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t'))
        s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t'))
        s.remove_suffix(1);
    return s;
}

} // namespace

std::optional<std::int64_t> parse_timestamp(std::string_view text)
{
    text = trim(text);
    if (text.empty())
        return std::nullopt;

    // Integer epoch seconds.
    {
        std::int64_t v = 0;
        auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
        if (ec == std::errc() && p == text.data() + text.size())
            return v;
    }

    std::size_t pos = 0;
    int year = 0, month = 0, day = 0;
    if (!read_digits(text, pos, 4, year) || pos >= text.size() || text[pos++] != '-')
        return std::nullopt;
    if (!read_digits(text, pos, 2, month) || pos >= text.size() || text[pos++] != '-')
        return std::nullopt;
    if (!read_digits(text, pos, 2, day))
        return std::nullopt;
    if (month < 1 || month > 12 || day < 1 || day > 31)
        return std::nullopt;
    std::int64_t seconds = days_from_civil(year, static_cast<unsigned>(month), static_cast<unsigned>(day)) * 86400;
    if (pos == text.size())
        return seconds;

    if (text[pos] != 'T' && text[pos] != ' ')
        return std::nullopt;
    ++pos;
    int hh = 0, mm = 0, ss = 0;
    if (!read_digits(text, pos, 2, hh) || pos >= text.size() || text[pos++] != ':')
        return std::nullopt;
    if (!read_digits(text, pos, 2, mm))
        return std::nullopt;
    if (pos < text.size() && text[pos] == ':')
    {
        ++pos;
        if (!read_digits(text, pos, 2, ss))
            return std::nullopt;
        if (pos < text.size() && (text[pos] == '.' || text[pos] == ','))
        {
            ++pos;
            std::size_t start = pos;
            while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9')
                ++pos;
            if (pos == start)
                return std::nullopt;
        }
    }
    if (hh > 23 || mm > 59 || ss > 60)
        return std::nullopt;
    seconds += hh * 3600 + mm * 60 + ss;

    if (pos == text.size())
        return seconds;
    if (text[pos] == 'Z' || text[pos] == 'z')
        return pos + 1 == text.size() ? std::optional<std::int64_t>(seconds) : std::nullopt;
    if (text[pos] == '+' || text[pos] == '-')
    {
        int sign = text[pos] == '+' ? 1 : -1;
        ++pos;
        int oh = 0, om = 0;
        if (!read_digits(text, pos, 2, oh))
            return std::nullopt;
        if (pos < text.size() && text[pos] == ':')
            ++pos;
        if (pos < text.size() && !read_digits(text, pos, 2, om))
            return std::nullopt;
        if (pos != text.size())
            return std::nullopt;
        return seconds - sign * (oh * 3600 + om * 60);
    }
    return std::nullopt;
}

bool LabelSet::has_split_tags() const
{
    return !entries.empty() && entries.begin()->second.split.has_value();
}

namespace
{
const std::vector<std::size_t> kNoRows;
}

Dataset::Dataset(DataSchema schema, EventLog events, LabelSet labels)
    : schema_(std::move(schema)), events_(std::move(events)), labels_(std::move(labels))
{
    for (std::size_t r = 0; r < events_.size(); ++r)
        rows_by_entity_[events_.entity[r]].push_back(r);
    max_timestamp_ = events_.timestamp.empty() ? 0 : *std::max_element(events_.timestamp.begin(), events_.timestamp.end());
    category_counts_.resize(schema_.columns.size());
    for (std::size_t c = 0; c < schema_.columns.size(); ++c)
    {
        if (!is_string(schema_.columns[c].dtype))
            continue;
        const auto& col = events_.columns[c];
        for (std::size_t r = 0; r < events_.size(); ++r)
            if (!col.null[r])
                ++category_counts_[c][col.str[r]];
    }
}

const std::vector<std::size_t>& Dataset::entity_rows(const std::string& entity_id) const
{
    auto it = rows_by_entity_.find(entity_id);
    return it == rows_by_entity_.end() ? kNoRows : it->second;
}

std::vector<std::string> Dataset::labeled_ids() const
{
    std::vector<std::string> ids;
    ids.reserve(labels_.entries.size());
    for (const auto& [id, entry] : labels_.entries)
        ids.push_back(id);
    return ids;
}

std::size_t Dataset::category_count(std::size_t column, const std::string& value) const
{
    const auto& counts = category_counts_.at(column);
    auto it = counts.find(value);
    return it == counts.end() ? 0 : it->second;
}

std::string Dataset::serialize() const
{
    json rows = json::array();
    for (std::size_t r = 0; r < events_.size(); ++r)
    {
        json row = json::array();
        row.push_back(events_.row_index[r]);
        for (std::size_t c = 0; c < schema_.columns.size(); ++c)
        {
            const auto& col = events_.columns[c];
            if (col.null[r])
                row.push_back(nullptr);
            else if (is_string(schema_.columns[c].dtype))
                row.push_back(col.str[r]);
            else
                row.push_back(col.num[r]);
        }
        rows.push_back(std::move(row));
    }
    json labels = json::object();
    for (const auto& [id, e] : labels_.entries)
    {
        json entry = {{"label", e.label}};
        if (e.split)
            entry["split"] = *e.split == Split::Train ? "train" : "test";
        labels[id] = entry;
    }
    json doc = {{"schema", schema_to_json(schema_)}, {"rows", rows}, {"labels", labels}};
    return doc.dump();
}

namespace
{

double parse_number_cell(std::string_view cell, DType dtype, std::size_t line, const std::string& column)
{
    auto fail = [&] {
        throw ParseError("row " + std::to_string(line) + ", column '" + column + "': cannot parse '" + std::string(cell) +
                             "' as " + to_string(dtype),
                         line, column);
    };
    if (dtype == DType::Timestamp)
    {
        auto ts = parse_timestamp(cell);
        if (!ts)
            fail();
        return static_cast<double>(*ts);
    }
    if (dtype == DType::Int)
    {
        std::int64_t v = 0;
        auto [p, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
        if (ec != std::errc() || p != cell.data() + cell.size())
            fail();
        return static_cast<double>(v);
    }
    double v = 0;
    auto [p, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (ec != std::errc() || p != cell.data() + cell.size() || !std::isfinite(v))
        fail();
    return v;
}

} // namespace

Dataset dataset_from_text(const std::string& events_csv, const std::string& labels_csv, const DataSchema& schema)
{
    schema.validate();
    auto records = parse_csv(events_csv);
    if (records.empty())
        throw SchemaError("events file has no header row");

    const auto& header = records.front().fields;
    std::vector<int> col_of_field(header.size(), -1);
    std::set<std::string> header_seen;
    for (std::size_t i = 0; i < header.size(); ++i)
    {
        std::string name(trim(header[i]));
        if (!header_seen.insert(name).second)
            throw SchemaError("duplicate header column '" + name + "'");
        int idx = schema.find(name);
        if (idx < 0)
            throw SchemaError("events column '" + name + "' is not declared in the schema");
        col_of_field[i] = idx;
    }
    for (const auto& c : schema.columns)
        if (!header_seen.count(c.name))
            throw SchemaError("declared column '" + c.name + "' missing from events header");

    const auto n_cols = schema.columns.size();
    const auto entity_col = static_cast<std::size_t>(schema.find(schema.entity_id_column));
    const auto ts_col = static_cast<std::size_t>(schema.find(schema.timestamp_column));

    EventLog log;
    log.columns.resize(n_cols);
    std::vector<std::size_t> field_of_col(n_cols);
    for (std::size_t i = 0; i < header.size(); ++i)
        field_of_col[static_cast<std::size_t>(col_of_field[i])] = i;

    std::size_t row_index = 0;
    for (std::size_t r = 1; r < records.size(); ++r)
    {
        const auto& rec = records[r];
        if (rec.fields.size() == 1 && rec.fields[0].empty())
            continue;
        if (rec.fields.size() != header.size())
            throw ParseError("row " + std::to_string(rec.line) + ": expected " + std::to_string(header.size()) +
                                 " fields, found " + std::to_string(rec.fields.size()),
                             rec.line, "");
        for (std::size_t c = 0; c < n_cols; ++c)
        {
            const auto& spec = schema.columns[c];
            std::string_view cell = rec.fields[field_of_col[c]];
            auto& col = log.columns[c];
            bool is_null = trim(cell).empty();
            if (is_null && (c == entity_col || c == ts_col))
                throw ParseError("row " + std::to_string(rec.line) + ", column '" + spec.name + "': missing required value",
                                 rec.line, spec.name);
            col.null.push_back(is_null ? 1 : 0);
            if (is_string(spec.dtype))
            {
                col.str.emplace_back(is_null ? std::string() : std::string(cell));
                col.num.push_back(0.0);
            }
            else
            {
                col.num.push_back(is_null ? 0.0 : parse_number_cell(trim(cell), spec.dtype, rec.line, spec.name));
                col.str.emplace_back();
            }
        }
        log.entity.emplace_back(trim(rec.fields[field_of_col[entity_col]]));
        log.timestamp.push_back(static_cast<std::int64_t>(log.columns[ts_col].num.back()));
        log.row_index.push_back(row_index++);
    }
    if (log.size() == 0)
        throw SchemaError("events file has no data rows");

    // Stable order by (timestamp, row_index).
    std::vector<std::size_t> order(log.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (log.timestamp[a] != log.timestamp[b])
            return log.timestamp[a] < log.timestamp[b];
        return log.row_index[a] < log.row_index[b];
    });
    EventLog sorted;
    sorted.columns.resize(n_cols);
    for (auto i : order)
    {
        sorted.entity.push_back(log.entity[i]);
        sorted.timestamp.push_back(log.timestamp[i]);
        sorted.row_index.push_back(log.row_index[i]);
        for (std::size_t c = 0; c < n_cols; ++c)
        {
            sorted.columns[c].num.push_back(log.columns[c].num[i]);
            sorted.columns[c].str.push_back(log.columns[c].str[i]);
            sorted.columns[c].null.push_back(log.columns[c].null[i]);
        }
    }

    // Labels.
    auto label_records = parse_csv(labels_csv);
    if (label_records.empty())
        throw SchemaError("labels file has no header row");
    const auto& lh = label_records.front().fields;
    if (lh.size() < 2 || lh.size() > 3 || trim(lh[0]) != "entity_id" || trim(lh[1]) != "label" ||
        (lh.size() == 3 && trim(lh[2]) != "split"))
        throw SchemaError("labels header must be entity_id,label[,split]");
    std::set<std::string> known_entities(sorted.entity.begin(), sorted.entity.end());
    LabelSet labels;
    std::size_t tagged = 0;
    for (std::size_t r = 1; r < label_records.size(); ++r)
    {
        const auto& rec = label_records[r];
        if (rec.fields.size() == 1 && rec.fields[0].empty())
            continue;
        if (rec.fields.size() != lh.size())
            throw ParseError("labels row " + std::to_string(rec.line) + ": wrong field count", rec.line, "");
        std::string id(trim(rec.fields[0]));
        if (id.empty())
            throw ParseError("labels row " + std::to_string(rec.line) + ": empty entity_id", rec.line, "entity_id");
        auto lab = trim(rec.fields[1]);
        if (lab != "0" && lab != "1")
            throw ParseError("labels row " + std::to_string(rec.line) + ", column 'label': expected 0 or 1, got '" +
                                 std::string(lab) + "'",
                             rec.line, "label");
        LabelEntry entry;
        entry.label = lab == "1" ? 1 : 0;
        if (lh.size() == 3)
        {
            auto sp = trim(rec.fields[2]);
            if (sp == "train")
                entry.split = Split::Train;
            else if (sp == "test")
                entry.split = Split::Test;
            else if (!sp.empty())
                throw ParseError("labels row " + std::to_string(rec.line) + ", column 'split': expected train or test",
                                 rec.line, "split");
            if (entry.split)
                ++tagged;
        }
        if (!known_entities.count(id))
            throw SchemaError("labeled entity '" + id + "' has no events");
        if (!labels.entries.emplace(id, entry).second)
            throw SchemaError("duplicate label for entity '" + id + "'");
    }
    if (tagged != 0 && tagged != labels.entries.size())
        throw SchemaError("split column must be filled for every labeled entity or for none");

    return Dataset(schema, std::move(sorted), std::move(labels));
}

Dataset load_dataset(const std::filesystem::path& events_path,
                     const std::filesystem::path& labels_path,
                     const std::filesystem::path& schema_path)
{
    auto read_input = [](const std::filesystem::path& path) {
        try
        {
            return read_file(path);
        }
        catch (const IoError& e)
        {
            throw DatasetIoError(e.what());
        }
    };
    auto schema_text = read_input(schema_path);
    json doc;
    try
    {
        doc = json::parse(schema_text);
    }
    catch (const json::exception& e)
    {
        throw SchemaError("schema is not valid JSON: " + std::string(e.what()));
    }
    auto schema = schema_from_json(doc);
    return dataset_from_text(read_input(events_path), read_input(labels_path), schema);
}

EntitySplit split_entities(const Dataset& dataset, const SplitSpec& spec)
{
    EntitySplit out;
    auto ids = dataset.labeled_ids();
    if (spec.mode == SplitSpec::Mode::FromLabels)
    {
        if (!dataset.labels().has_split_tags())
            throw DegenerateSplitError("from_labels split requested but labels carry no split column");
        for (const auto& id : ids)
        {
            if (*dataset.labels().entries.at(id).split == Split::Train)
                out.train.push_back(id);
            else
                out.test.push_back(id);
        }
    }
    else
    {
        if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0))
            throw DegenerateSplitError("train_fraction must lie in (0,1)");
        if (ids.size() < 4)
            throw DegenerateSplitError("random split needs at least 4 labeled entities");
        Rng rng(spec.seed);
        // Fisher-Yates on the sorted id list.
        for (std::size_t i = ids.size(); i > 1; --i)
        {
            auto j = static_cast<std::size_t>(rng.below(i));
            std::swap(ids[i - 1], ids[j]);
        }
        auto n_train = static_cast<std::size_t>(std::floor(spec.train_fraction * static_cast<double>(ids.size()) + 1e-9));
        out.train.assign(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n_train));
        out.test.assign(ids.begin() + static_cast<std::ptrdiff_t>(n_train), ids.end());
        std::sort(out.train.begin(), out.train.end());
        std::sort(out.test.begin(), out.test.end());
    }

    auto both_classes = [&](const std::vector<std::string>& side) {
        bool pos = false, neg = false;
        for (const auto& id : side)
            (dataset.label(id) ? pos : neg) = true;
        return pos && neg;
    };
    if (!both_classes(out.train))
        throw DegenerateSplitError("training side lacks one of the classes");
    if (!both_classes(out.test))
        throw DegenerateSplitError("test side lacks one of the classes");
    return out;
}

FeatureTable baseline_matrix(const Dataset& dataset, const std::vector<std::string>& ids)
{
    const auto& schema = dataset.schema();
    FeatureTable table(ids, schema.baseline_feature_columns);
    const auto& ev = dataset.events();
    const double n_events = static_cast<double>(ev.size());
    for (std::size_t c = 0; c < schema.baseline_feature_columns.size(); ++c)
    {
        auto col = static_cast<std::size_t>(schema.find(schema.baseline_feature_columns[c]));
        bool categorical = is_string(schema.columns[col].dtype);
        const auto& data = ev.columns[col];
        for (std::size_t r = 0; r < ids.size(); ++r)
        {
            double value = 0.0;
            for (auto row : dataset.entity_rows(ids[r]))
            {
                if (data.null[row])
                    continue;
                value = categorical ? static_cast<double>(dataset.category_count(col, data.str[row])) / n_events
                                    : data.num[row];
                break;
            }
            table.at(r, c) = value;
        }
    }
    return table;
}

} // namespace featevo::data
