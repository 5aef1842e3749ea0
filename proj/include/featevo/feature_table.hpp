// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace featevo
{

/// Dense row-major table of finite reals, one row per entity.
class FeatureTable
{
public:
    FeatureTable() = default;
    FeatureTable(std::vector<std::string> entity_ids, std::vector<std::string> columns);

    std::size_t rows() const { return entity_ids_.size(); }
    std::size_t cols() const { return columns_.size(); }

    const std::vector<std::string>& entity_ids() const { return entity_ids_; }
    const std::vector<std::string>& columns() const { return columns_; }

    double& at(std::size_t row, std::size_t col) { return values_[row * columns_.size() + col]; }
    double at(std::size_t row, std::size_t col) const { return values_[row * columns_.size() + col]; }

    std::span<const double> row(std::size_t r) const
    {
        return {values_.data() + r * columns_.size(), columns_.size()};
    }

    /// Row position of an entity, or rows() when absent.
    std::size_t find_row(const std::string& entity_id) const;

    /// Rows for `ids` in that order; throws std::out_of_range for unknown ids.
    FeatureTable select_rows(const std::vector<std::string>& ids) const;

    /// Column-wise concatenation; both tables must list the same entities in the same order.
    FeatureTable concat(const FeatureTable& right) const;

    void add_column(std::string name, const std::vector<double>& values);

    std::string to_csv() const;

    bool operator==(const FeatureTable&) const = default;

private:
    std::vector<std::string> entity_ids_;
    std::vector<std::string> columns_;
    std::vector<double> values_;
};

} // namespace featevo
