// SPDX-License-Identifier: Apache-2.0
#include "featevo/feature_table.hpp"

#include "featevo/util.hpp"

#include <stdexcept>
#include <unordered_map>

namespace featevo
{

FeatureTable::FeatureTable(std::vector<std::string> entity_ids, std::vector<std::string> columns)
    : entity_ids_(std::move(entity_ids)), columns_(std::move(columns)), values_(entity_ids_.size() * columns_.size(), 0.0)
{
}

std::size_t FeatureTable::find_row(const std::string& entity_id) const
{
    for (std::size_t i = 0; i < entity_ids_.size(); ++i)
        if (entity_ids_[i] == entity_id)
            return i;
    return entity_ids_.size();
}

FeatureTable FeatureTable::select_rows(const std::vector<std::string>& ids) const
{
    std::unordered_map<std::string, std::size_t> pos;
    pos.reserve(entity_ids_.size());
    for (std::size_t i = 0; i < entity_ids_.size(); ++i)
        pos.emplace(entity_ids_[i], i);

    FeatureTable out(ids, columns_);
    for (std::size_t r = 0; r < ids.size(); ++r)
    {
        auto it = pos.find(ids[r]);
        if (it == pos.end())
            throw std::out_of_range("entity not in feature table: " + ids[r]);
        for (std::size_t c = 0; c < columns_.size(); ++c)
            out.at(r, c) = at(it->second, c);
    }
    return out;
}

FeatureTable FeatureTable::concat(const FeatureTable& right) const
{
    if (right.entity_ids_ != entity_ids_)
        throw std::invalid_argument("concat: entity order differs");
    auto names = columns_;
    names.insert(names.end(), right.columns_.begin(), right.columns_.end());
    FeatureTable out(entity_ids_, std::move(names));
    for (std::size_t r = 0; r < rows(); ++r)
    {
        for (std::size_t c = 0; c < cols(); ++c)
            out.at(r, c) = at(r, c);
        for (std::size_t c = 0; c < right.cols(); ++c)
            out.at(r, cols() + c) = right.at(r, c);
    }
    return out;
}

void FeatureTable::add_column(std::string name, const std::vector<double>& values)
{
    if (values.size() != rows())
        throw std::invalid_argument("add_column: length mismatch");
    const std::size_t old_cols = columns_.size();
    std::vector<double> next(rows() * (old_cols + 1));
    for (std::size_t r = 0; r < rows(); ++r)
    {
        for (std::size_t c = 0; c < old_cols; ++c)
            next[r * (old_cols + 1) + c] = values_[r * old_cols + c];
        next[r * (old_cols + 1) + old_cols] = values[r];
    }
    values_ = std::move(next);
    columns_.push_back(std::move(name));
}

std::string FeatureTable::to_csv() const
{
    std::string out = "entity_id";
    for (const auto& c : columns_)
        out += "," + csv_escape(c);
    out += "\n";
    for (std::size_t r = 0; r < rows(); ++r)
    {
        out += csv_escape(entity_ids_[r]);
        for (std::size_t c = 0; c < cols(); ++c)
            out += "," + format_double(at(r, c));
        out += "\n";
    }
    return out;
}

} // namespace featevo
