// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "featevo/dataset.hpp"
#include "featevo/error.hpp"
#include "featevo/feature_table.hpp"
#include "featevo/identifier.hpp"

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace featevo::dsl
{

class ParseError : public Error
{
public:
    ParseError(std::size_t line, std::size_t column, std::vector<std::string> expected, const std::string& found,
               const std::string& detail = {});

    std::size_t line() const { return line_; }
    std::size_t column() const { return column_; }
    const std::vector<std::string>& expected() const { return expected_; }

private:
    std::size_t line_;
    std::size_t column_;
    std::vector<std::string> expected_;
};

class TypecheckError : public Error
{
public:
    TypecheckError(std::string definition, const std::string& reason)
        : Error("feature '" + definition + "': " + reason), definition_(std::move(definition))
    {
    }
    const std::string& definition() const { return definition_; }

private:
    std::string definition_;
};

class ExecutionError : public Error
{
public:
    ExecutionError(std::string definition, const std::string& reason)
        : Error("feature '" + definition + "': " + reason), definition_(std::move(definition))
    {
    }
    const std::string& definition() const { return definition_; }

private:
    std::string definition_;
};

enum class NodeKind
{
    Number,
    String,
    Ref, // column inside aggregates, earlier feature inside derived definitions
    Neg,
    Add,
    Sub,
    Mul,
    Div,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    In, // args[0] is the subject, args[1..] the literal list
    IsNull,
    IsNotNull,
    And,
    Or,
    Not,
    Hour,      // text names a timestamp column
    DayOfWeek, // text names a timestamp column; Monday = 0
};

/// Expression tree node with value semantics.
struct Expr
{
    NodeKind kind = NodeKind::Number;
    double number = 0.0;
    std::string text;
    std::vector<Expr> args;

    bool operator==(const Expr&) const = default;

    static Expr num(double v) { return Expr{NodeKind::Number, v, {}, {}}; }
    static Expr str(std::string s) { return Expr{NodeKind::String, 0.0, std::move(s), {}}; }
    static Expr ref(std::string name) { return Expr{NodeKind::Ref, 0.0, std::move(name), {}}; }
    static Expr unary(NodeKind k, Expr a) { return Expr{k, 0.0, {}, {std::move(a)}}; }
    static Expr binary(NodeKind k, Expr a, Expr b) { return Expr{k, 0.0, {}, {std::move(a), std::move(b)}}; }
};

enum class Aggregate
{
    Count,
    Sum,
    Mean,
    Min,
    Max,
    Std,
    NUnique,
    First,
    Last,
};

std::string_view to_string(Aggregate agg);

struct Window
{
    enum class Unit
    {
        Hours,
        Days,
    };
    bool all = true;
    std::int64_t amount = 0;
    Unit unit = Unit::Days;

    std::int64_t seconds() const { return amount * (unit == Unit::Hours ? 3600 : 86400); }
    bool operator==(const Window&) const = default;
};

struct AggSpec
{
    Aggregate agg = Aggregate::Count;
    std::optional<Expr> arg;
    std::optional<Expr> filter;
    Window window;

    bool operator==(const AggSpec&) const = default;
};

struct FeatureDef
{
    std::string name;
    std::variant<AggSpec, Expr> body;

    bool is_aggregate() const { return std::holds_alternative<AggSpec>(body); }
    bool operator==(const FeatureDef&) const = default;
};

struct Program
{
    std::vector<FeatureDef> defs;

    std::vector<std::string> names() const;
    bool operator==(const Program&) const = default;
};

Program parse(std::string_view text);

/// Column existence, dtype compatibility, definition ordering and name uniqueness.
void typecheck(const Program& program, const data::DataSchema& schema);

std::string pretty_print(const Program& program);
std::string pretty_print(const FeatureDef& def);
std::string pretty_print(const Expr& expr);

struct ExecOptions
{
    std::size_t workers = 1;
    /// Anchor windows at each entity's last event instead of the log's last event.
    bool per_entity_anchor = false;
    std::optional<std::chrono::milliseconds> time_budget;
};

/// One row per id, one column per definition, in definition order.
FeatureTable execute(const Program& program, const data::Dataset& dataset, const std::vector<std::string>& ids,
                     const ExecOptions& options = {});

/// Grammar and semantics summary handed to the code agent.
std::string grammar_reference();

} // namespace featevo::dsl
