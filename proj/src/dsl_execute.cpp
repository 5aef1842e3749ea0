// SPDX-License-Identifier: Apache-2.0
#include "featevo/dsl.hpp"

#include "featevo/util.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <set>
#include <string_view>
#include <thread>
#include <unordered_set>

namespace featevo::dsl
{

namespace
{

/// Expression with column references resolved to schema positions.
struct Node
{
    NodeKind kind = NodeKind::Number;
    double number = 0.0;
    std::string_view text;
    int column = -1; // Ref / Hour / DayOfWeek inside aggregates; feature slot inside derived
    std::vector<Node> args;
};

struct Value
{
    enum class Kind
    {
        Null,
        Num,
        Str,
        Bool,
    };
    Kind kind = Kind::Null;
    double num = 0.0;
    std::string_view str;
    bool truth = false;

    static Value null() { return {}; }
    static Value of(double v) { return {Kind::Num, v, {}, false}; }
    static Value of_str(std::string_view s) { return {Kind::Str, 0.0, s, false}; }
    static Value of_bool(bool b) { return {Kind::Bool, 0.0, {}, b}; }
};

Node compile(const Expr& e, const data::DataSchema& schema, const std::vector<std::string>* feature_names)
{
    Node n;
    n.kind = e.kind;
    n.number = e.number;
    n.text = e.text;
    if (e.kind == NodeKind::Ref || e.kind == NodeKind::Hour || e.kind == NodeKind::DayOfWeek)
    {
        if (feature_names)
        {
            auto it = std::find(feature_names->begin(), feature_names->end(), e.text);
            n.column = static_cast<int>(it - feature_names->begin());
        }
        else
        {
            n.column = schema.find(e.text);
        }
    }
    for (const auto& a : e.args)
        n.args.push_back(compile(a, schema, feature_names));
    return n;
}

double safe_div(double a, double b) { return b == 0.0 ? 0.0 : a / b; }

std::int64_t floor_div(std::int64_t a, std::int64_t b)
{
    std::int64_t q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0)))
        --q;
    return q;
}

class RowEvaluator
{
public:
    RowEvaluator(const data::Dataset& dataset) : ds_(dataset) {}

    Value eval(const Node& n, std::size_t row) const
    {
        switch (n.kind)
        {
        case NodeKind::Number: return Value::of(n.number);
        case NodeKind::String: return Value::of_str(n.text);
        case NodeKind::Ref:
        {
            const auto c = static_cast<std::size_t>(n.column);
            const auto& col = ds_.events().columns[c];
            if (col.null[row])
                return Value::null();
            if (data::is_string(ds_.schema().columns[c].dtype))
                return Value::of_str(col.str[row]);
            return Value::of(col.num[row]);
        }
        case NodeKind::Hour:
        case NodeKind::DayOfWeek:
        {
            const auto& col = ds_.events().columns[static_cast<std::size_t>(n.column)];
            if (col.null[row])
                return Value::null();
            auto t = static_cast<std::int64_t>(col.num[row]);
            auto day = floor_div(t, 86400);
            if (n.kind == NodeKind::Hour)
                return Value::of(static_cast<double>((t - day * 86400) / 3600));
            // 1970-01-01 was a Thursday (Monday = 0)
            return Value::of(static_cast<double>(((day + 3) % 7 + 7) % 7));
        }
        case NodeKind::Neg:
        {
            auto v = eval(n.args[0], row);
            return v.kind == Value::Kind::Num ? Value::of(-v.num) : Value::null();
        }
        case NodeKind::Add:
        case NodeKind::Sub:
        case NodeKind::Mul:
        case NodeKind::Div:
        {
            auto a = eval(n.args[0], row);
            auto b = eval(n.args[1], row);
            if (a.kind != Value::Kind::Num || b.kind != Value::Kind::Num)
                return Value::null();
            switch (n.kind)
            {
            case NodeKind::Add: return Value::of(a.num + b.num);
            case NodeKind::Sub: return Value::of(a.num - b.num);
            case NodeKind::Mul: return Value::of(a.num * b.num);
            default: return Value::of(safe_div(a.num, b.num));
            }
        }
        case NodeKind::Eq:
        case NodeKind::Ne:
        case NodeKind::Lt:
        case NodeKind::Le:
        case NodeKind::Gt:
        case NodeKind::Ge:
        {
            auto a = eval(n.args[0], row);
            auto b = eval(n.args[1], row);
            if (a.kind == Value::Kind::Null || b.kind == Value::Kind::Null)
                return Value::of_bool(false);
            int cmp = 0;
            if (a.kind == Value::Kind::Str)
                cmp = a.str.compare(b.str) < 0 ? -1 : (a.str == b.str ? 0 : 1);
            else
                cmp = a.num < b.num ? -1 : (a.num == b.num ? 0 : 1);
            switch (n.kind)
            {
            case NodeKind::Eq: return Value::of_bool(cmp == 0);
            case NodeKind::Ne: return Value::of_bool(cmp != 0);
            case NodeKind::Lt: return Value::of_bool(cmp < 0);
            case NodeKind::Le: return Value::of_bool(cmp <= 0);
            case NodeKind::Gt: return Value::of_bool(cmp > 0);
            default: return Value::of_bool(cmp >= 0);
            }
        }
        case NodeKind::In:
        {
            auto s = eval(n.args[0], row);
            if (s.kind == Value::Kind::Null)
                return Value::of_bool(false);
            for (std::size_t i = 1; i < n.args.size(); ++i)
            {
                const auto& lit = n.args[i];
                if (s.kind == Value::Kind::Str ? (lit.kind == NodeKind::String && lit.text == s.str)
                                               : (lit.kind == NodeKind::Number && lit.number == s.num))
                    return Value::of_bool(true);
            }
            return Value::of_bool(false);
        }
        case NodeKind::IsNull: return Value::of_bool(eval(n.args[0], row).kind == Value::Kind::Null);
        case NodeKind::IsNotNull: return Value::of_bool(eval(n.args[0], row).kind != Value::Kind::Null);
        case NodeKind::And: return Value::of_bool(eval(n.args[0], row).truth && eval(n.args[1], row).truth);
        case NodeKind::Or: return Value::of_bool(eval(n.args[0], row).truth || eval(n.args[1], row).truth);
        case NodeKind::Not: return Value::of_bool(!eval(n.args[0], row).truth);
        }
        return Value::null();
    }

private:
    const data::Dataset& ds_;
};

double eval_derived(const Node& n, const std::vector<double>& features)
{
    switch (n.kind)
    {
    case NodeKind::Number: return n.number;
    case NodeKind::Ref: return features[static_cast<std::size_t>(n.column)];
    case NodeKind::Neg: return -eval_derived(n.args[0], features);
    case NodeKind::Add: return eval_derived(n.args[0], features) + eval_derived(n.args[1], features);
    case NodeKind::Sub: return eval_derived(n.args[0], features) - eval_derived(n.args[1], features);
    case NodeKind::Mul: return eval_derived(n.args[0], features) * eval_derived(n.args[1], features);
    case NodeKind::Div: return safe_div(eval_derived(n.args[0], features), eval_derived(n.args[1], features));
    default: return 0.0;
    }
}

struct CompiledDef
{
    const FeatureDef* def = nullptr;
    const AggSpec* agg = nullptr;
    std::optional<Node> arg;
    std::optional<Node> filter;
    Node derived;
    bool string_arg = false;
};

class Executor
{
public:
    Executor(const Program& program, const data::Dataset& dataset, const ExecOptions& options)
        : program_(program), ds_(dataset), options_(options), rows_(dataset)
    {
        auto names = program.names();
        for (const auto& def : program.defs)
        {
            CompiledDef c;
            c.def = &def;
            if (const auto* agg = std::get_if<AggSpec>(&def.body))
            {
                c.agg = agg;
                if (agg->arg)
                {
                    c.arg = compile(*agg->arg, dataset.schema(), nullptr);
                    c.string_arg = c.arg->kind == NodeKind::Ref &&
                                   data::is_string(dataset.schema().columns[static_cast<std::size_t>(c.arg->column)].dtype);
                }
                if (agg->filter)
                    c.filter = compile(*agg->filter, dataset.schema(), nullptr);
            }
            else
            {
                c.derived = compile(std::get<Expr>(def.body), dataset.schema(), &names);
            }
            defs_.push_back(std::move(c));
        }
        start_ = std::chrono::steady_clock::now();
    }

    void run_entity(const std::string& entity, std::span<double> out) const
    {
        check_budget();
        const auto& rows = ds_.entity_rows(entity);
        std::int64_t anchor = ds_.max_timestamp();
        if (options_.per_entity_anchor && !rows.empty())
            anchor = ds_.events().timestamp[rows.back()];

        std::vector<double> values(defs_.size(), 0.0);
        for (std::size_t d = 0; d < defs_.size(); ++d)
        {
            const auto& c = defs_[d];
            double v = c.agg ? aggregate(c, rows, anchor) : eval_derived(c.derived, values);
            if (!std::isfinite(v))
                throw ExecutionError(c.def->name, "result is not finite for entity '" + entity + "'");
            values[d] = v;
        }
        std::copy(values.begin(), values.end(), out.begin());
    }

private:
    void check_budget() const
    {
        if (!options_.time_budget)
            return;
        auto elapsed = std::chrono::steady_clock::now() - start_;
        if (elapsed > *options_.time_budget)
            throw TimeoutError("feature program exceeded its time budget of " +
                               std::to_string(options_.time_budget->count()) + " ms");
    }

    double aggregate(const CompiledDef& c, const std::vector<std::size_t>& rows, std::int64_t anchor) const
    {
        const auto& spec = *c.agg;
        const auto& ts = ds_.events().timestamp;
        std::int64_t lower = spec.window.all ? 0 : anchor - spec.window.seconds();

        std::size_t count = 0;
        double sum = 0.0;
        double lo = 0.0, hi = 0.0;
        Value first, last;
        std::vector<double> nums;           // std
        std::set<double> distinct_nums;     // nunique
        std::unordered_set<std::string_view> distinct_strs;

        for (auto row : rows)
        {
            if (!spec.window.all && !(ts[row] > lower))
                continue;
            if (c.filter && !rows_.eval(*c.filter, row).truth)
                continue;
            Value v;
            if (c.arg)
            {
                v = rows_.eval(*c.arg, row);
                if (v.kind == Value::Kind::Null)
                    continue;
            }
            if (count == 0)
                first = v;
            last = v;
            ++count;
            if (v.kind == Value::Kind::Num)
            {
                sum += v.num;
                lo = count == 1 ? v.num : std::min(lo, v.num);
                hi = count == 1 ? v.num : std::max(hi, v.num);
                if (spec.agg == Aggregate::Std)
                    nums.push_back(v.num);
                if (spec.agg == Aggregate::NUnique)
                    distinct_nums.insert(v.num == 0.0 ? 0.0 : v.num);
            }
            else if (v.kind == Value::Kind::Str && spec.agg == Aggregate::NUnique)
            {
                distinct_strs.insert(v.str);
            }
        }

        if (count == 0)
            return 0.0;
        switch (spec.agg)
        {
        case Aggregate::Count: return static_cast<double>(count);
        case Aggregate::Sum: return sum;
        case Aggregate::Mean: return sum / static_cast<double>(count);
        case Aggregate::Min: return lo;
        case Aggregate::Max: return hi;
        case Aggregate::Std:
        {
            if (count == 1)
                return 0.0;
            const double mean = sum / static_cast<double>(count);
            double ss = 0.0;
            for (double x : nums)
                ss += (x - mean) * (x - mean);
            return std::sqrt(ss / static_cast<double>(count));
        }
        case Aggregate::NUnique:
            return static_cast<double>(c.string_arg ? distinct_strs.size() : distinct_nums.size());
        case Aggregate::First:
        case Aggregate::Last:
        {
            const auto& v = spec.agg == Aggregate::First ? first : last;
            if (c.string_arg)
                return static_cast<double>(ds_.category_count(static_cast<std::size_t>(c.arg->column), std::string(v.str))) /
                       static_cast<double>(ds_.events().size());
            return v.num;
        }
        }
        return 0.0;
    }

    const Program& program_;
    const data::Dataset& ds_;
    const ExecOptions& options_;
    RowEvaluator rows_;
    std::vector<CompiledDef> defs_;
    std::chrono::steady_clock::time_point start_;
};

} // namespace

FeatureTable execute(const Program& program, const data::Dataset& dataset, const std::vector<std::string>& ids,
                     const ExecOptions& options)
{
    typecheck(program, dataset.schema());
    Executor exec(program, dataset, options);
    FeatureTable table(ids, program.names());
    const std::size_t width = program.defs.size();
    std::vector<double> buffer(ids.size() * width, 0.0);

    auto run_range = [&](std::size_t begin, std::size_t end) {
        for (std::size_t r = begin; r < end; ++r)
            exec.run_entity(ids[r], std::span<double>(buffer.data() + r * width, width));
    };

    const std::size_t workers = std::max<std::size_t>(1, std::min(options.workers, ids.size()));
    if (workers == 1)
    {
        run_range(0, ids.size());
    }
    else
    {
        std::vector<std::exception_ptr> errors(workers);
        std::vector<std::thread> threads;
        const std::size_t chunk = (ids.size() + workers - 1) / workers;
        for (std::size_t w = 0; w < workers; ++w)
        {
            const std::size_t begin = std::min(ids.size(), w * chunk);
            const std::size_t end = std::min(ids.size(), begin + chunk);
            threads.emplace_back([&, w, begin, end] {
                try
                {
                    run_range(begin, end);
                }
                catch (...)
                {
                    errors[w] = std::current_exception();
                }
            });
        }
        for (auto& t : threads)
            t.join();
        // first failing partition wins, matching the serial order
        for (auto& e : errors)
            if (e)
                std::rethrow_exception(e);
    }

    for (std::size_t r = 0; r < ids.size(); ++r)
        for (std::size_t c = 0; c < width; ++c)
            table.at(r, c) = buffer[r * width + c];
    return table;
}

std::string grammar_reference()
{
    return R"grammar(Feature programs are lists of definitions, one value per entity each.

  program    := definition+
  definition := "feature" NAME "=" (aggregate | derived)
  aggregate  := AGG "(" [expr] ")" ["where" condition] ["window" ("all" | "last" INT ("hours" | "days"))]
  derived    := arithmetic over earlier feature names and numbers: + - * / and parentheses
  AGG        := count | sum | mean | min | max | std | nunique | first | last
  NAME       := [a-z_][a-z0-9_]*   (keywords are reserved)
  comments   := "#" to end of line

Expressions inside aggregates may use column names, numbers, "double quoted" strings,
+ - * /, comparisons = != < <= > >=, x in [v1, v2, ...], x is null, x is not null,
and / or / not, hour(ts_column) (0-23, UTC) and dayofweek(ts_column) (Monday = 0).

Semantics, per entity, over that entity's events in time order:
  1. window: "last N hours|days" keeps events with t > t_max - N*unit, where t_max is the
     latest timestamp in the whole log; "all" (the default) keeps every event.
  2. where: keeps events whose condition holds; comparisons involving nulls are false.
  3. the argument is evaluated per event and nulls are dropped, then aggregated.
count() counts events; count(x) counts non-null x. sum/mean/min/max/std need numbers;
std is the population standard deviation. nunique/first/last accept any column;
first/last of a text column yield that value's share of all events.
With no events left every aggregate is 0. Division by zero yields 0.

Example:
  feature n_events = count()
  feature recent_clicks = count() where action = "click" window last 7 days
  feature mean_amount = mean(amount) where amount is not null
  feature click_share = recent_clicks / (n_events + 1)
)grammar";
}

} // namespace featevo::dsl
