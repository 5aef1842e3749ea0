// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "featevo/error.hpp"
#include "featevo/feature_table.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

namespace featevo::data
{

class SchemaError : public Error
{
public:
    using Error::Error;
};

/// An events, labels or schema file that cannot be read.
class DatasetIoError : public IoError
{
public:
    using IoError::IoError;
};

/// Cell coercion failure; `what()` names the row and column.
class ParseError : public Error
{
public:
    ParseError(const std::string& message, std::size_t line, std::string column)
        : Error(message), line_(line), column_(std::move(column))
    {
    }
    std::size_t line() const { return line_; }
    const std::string& column() const { return column_; }

private:
    std::size_t line_;
    std::string column_;
};

class DegenerateSplitError : public Error
{
public:
    using Error::Error;
};

enum class DType
{
    Int,
    Float,
    Categorical,
    Timestamp,
    Text,
};

std::string to_string(DType dtype);
DType dtype_from_string(const std::string& text);

inline bool is_numeric(DType d) { return d == DType::Int || d == DType::Float || d == DType::Timestamp; }
inline bool is_string(DType d) { return d == DType::Categorical || d == DType::Text; }

struct ColumnSpec
{
    std::string name;
    DType dtype = DType::Float;
    std::string description;
};

struct DataSchema
{
    std::string dataset_context;
    std::vector<ColumnSpec> columns;
    std::string entity_id_column;
    std::string timestamp_column;
    std::vector<std::string> baseline_feature_columns;

    /// Index into `columns`, or -1.
    int find(const std::string& name) const;

    /// Throws SchemaError on any invariant violation.
    void validate() const;

    /// Human-readable rendering used inside agent prompts.
    std::string render() const;
};

DataSchema schema_from_json(const nlohmann::json& doc);
nlohmann::json schema_to_json(const DataSchema& schema);

/// Parses an integer epoch-seconds value or an ISO-8601 date / date-time.
std::optional<std::int64_t> parse_timestamp(std::string_view text);

/// Column-major storage. Numeric and timestamp columns live in `num`,
/// categorical and text columns in `str`; `null` flags missing cells.
struct ColumnData
{
    std::vector<double> num;
    std::vector<std::string> str;
    std::vector<std::uint8_t> null;
};

/// Event rows sorted by (timestamp, row_index).
struct EventLog
{
    std::vector<std::string> entity;
    std::vector<std::int64_t> timestamp;
    std::vector<std::size_t> row_index;
    std::vector<ColumnData> columns; // parallel to DataSchema::columns

    std::size_t size() const { return entity.size(); }
};

enum class Split
{
    Train,
    Test,
};

struct LabelEntry
{
    int label = 0;
    std::optional<Split> split;
};

struct LabelSet
{
    std::map<std::string, LabelEntry> entries;

    bool has_split_tags() const;
};

/// Immutable after load.
class Dataset
{
public:
    Dataset(DataSchema schema, EventLog events, LabelSet labels);

    const DataSchema& schema() const { return schema_; }
    const EventLog& events() const { return events_; }
    const LabelSet& labels() const { return labels_; }

    /// Sorted row positions of an entity's events; empty when unknown.
    const std::vector<std::size_t>& entity_rows(const std::string& entity_id) const;

    /// Labeled entities in ascending id order.
    std::vector<std::string> labeled_ids() const;

    int label(const std::string& entity_id) const { return labels_.entries.at(entity_id).label; }

    std::int64_t max_timestamp() const { return max_timestamp_; }

    /// Global count of a categorical value across all events.
    std::size_t category_count(std::size_t column, const std::string& value) const;

    /// Canonical JSON text of the whole dataset.
    std::string serialize() const;

private:
    DataSchema schema_;
    EventLog events_;
    LabelSet labels_;
    std::unordered_map<std::string, std::vector<std::size_t>> rows_by_entity_;
    std::vector<std::unordered_map<std::string, std::size_t>> category_counts_;
    std::int64_t max_timestamp_ = 0;
};

Dataset load_dataset(const std::filesystem::path& events_path,
                     const std::filesystem::path& labels_path,
                     const std::filesystem::path& schema_path);

/// Builds a dataset from in-memory CSV text; used by load_dataset.
Dataset dataset_from_text(const std::string& events_csv, const std::string& labels_csv, const DataSchema& schema);

struct SplitSpec
{
    enum class Mode
    {
        FromLabels,
        Random,
    };
    Mode mode = Mode::FromLabels;
    double train_fraction = 0.7;
    std::uint64_t seed = 0;
};

struct EntitySplit
{
    std::vector<std::string> train;
    std::vector<std::string> test;
};

EntitySplit split_entities(const Dataset& dataset, const SplitSpec& spec);

/// Untransformed per-entity features: numeric baseline columns take the
/// entity's earliest non-null value, categorical ones the global frequency
/// of the entity's earliest category.
FeatureTable baseline_matrix(const Dataset& dataset, const std::vector<std::string>& ids);

} // namespace featevo::data
