// SPDX-License-Identifier: Apache-2.0
#include "featevo/dsl.hpp"

#include <map>
#include <set>

namespace featevo::dsl
{

namespace
{

enum class Type
{
    Num,
    Str,
    Bool,
};

std::string_view type_name(Type t)
{
    switch (t)
    {
    case Type::Num: return "number";
    case Type::Str: return "string";
    case Type::Bool: return "condition";
    }
    return "?";
}

class Checker
{
public:
    Checker(const data::DataSchema& schema, std::string def) : schema_(schema), def_(std::move(def)) {}

    [[noreturn]] void fail(const std::string& reason) const { throw TypecheckError(def_, reason); }

    Type value(const Expr& e) const
    {
        switch (e.kind)
        {
        case NodeKind::Number: return Type::Num;
        case NodeKind::String: return Type::Str;
        case NodeKind::Ref:
        {
            int idx = schema_.find(e.text);
            if (idx < 0)
                fail("unknown column '" + e.text + "'");
            return data::is_string(schema_.columns[static_cast<std::size_t>(idx)].dtype) ? Type::Str : Type::Num;
        }
        case NodeKind::Hour:
        case NodeKind::DayOfWeek:
        {
            int idx = schema_.find(e.text);
            if (idx < 0)
                fail("unknown column '" + e.text + "'");
            if (schema_.columns[static_cast<std::size_t>(idx)].dtype != data::DType::Timestamp)
                fail(std::string(e.kind == NodeKind::Hour ? "hour" : "dayofweek") + "() needs a timestamp column, '" +
                     e.text + "' is " + data::to_string(schema_.columns[static_cast<std::size_t>(idx)].dtype));
            return Type::Num;
        }
        case NodeKind::Neg:
            expect(e.args[0], Type::Num, "operand of unary '-'");
            return Type::Num;
        case NodeKind::Add:
        case NodeKind::Sub:
        case NodeKind::Mul:
        case NodeKind::Div:
            expect(e.args[0], Type::Num, "arithmetic operand");
            expect(e.args[1], Type::Num, "arithmetic operand");
            return Type::Num;
        case NodeKind::Eq:
        case NodeKind::Ne:
        {
            Type l = value(e.args[0]);
            Type r = value(e.args[1]);
            if (l == Type::Bool || r == Type::Bool || l != r)
                fail("cannot compare " + std::string(type_name(l)) + " with " + std::string(type_name(r)));
            return Type::Bool;
        }
        case NodeKind::Lt:
        case NodeKind::Le:
        case NodeKind::Gt:
        case NodeKind::Ge:
            expect(e.args[0], Type::Num, "ordered comparison operand");
            expect(e.args[1], Type::Num, "ordered comparison operand");
            return Type::Bool;
        case NodeKind::In:
        {
            Type subject = value(e.args[0]);
            if (subject == Type::Bool)
                fail("'in' needs a value on its left");
            for (std::size_t i = 1; i < e.args.size(); ++i)
                if (value(e.args[i]) != subject)
                    fail("'in' list mixes " + std::string(type_name(subject)) + " and " +
                         std::string(type_name(value(e.args[i]))));
            return Type::Bool;
        }
        case NodeKind::IsNull:
        case NodeKind::IsNotNull:
            if (value(e.args[0]) == Type::Bool)
                fail("null test needs a value");
            return Type::Bool;
        case NodeKind::And:
        case NodeKind::Or:
            expect(e.args[0], Type::Bool, "boolean operand");
            expect(e.args[1], Type::Bool, "boolean operand");
            return Type::Bool;
        case NodeKind::Not:
            expect(e.args[0], Type::Bool, "operand of 'not'");
            return Type::Bool;
        }
        fail("unsupported expression");
    }

    void expect(const Expr& e, Type want, const std::string& what) const
    {
        Type got = value(e);
        if (got != want)
            fail(what + " must be a " + std::string(type_name(want)) + ", got a " + std::string(type_name(got)));
    }

    void aggregate(const AggSpec& spec) const
    {
        if (spec.filter)
            expect(*spec.filter, Type::Bool, "where clause");
        if (!spec.arg)
        {
            if (spec.agg != Aggregate::Count)
                fail(std::string(to_string(spec.agg)) + " requires an argument");
            return;
        }
        Type t = value(*spec.arg);
        if (t == Type::Bool)
            fail(std::string(to_string(spec.agg)) + " argument must be a value, not a condition");
        switch (spec.agg)
        {
        case Aggregate::Count: return;
        case Aggregate::NUnique:
        case Aggregate::First:
        case Aggregate::Last:
            if (t == Type::Str && spec.arg->kind != NodeKind::Ref)
                fail(std::string(to_string(spec.agg)) + " over strings takes a bare column");
            return;
        default:
            if (t != Type::Num)
                fail(std::string(to_string(spec.agg)) + " needs a numeric argument");
        }
    }

    void derived(const Expr& e, std::size_t self, const std::map<std::string, std::size_t>& positions) const
    {
        switch (e.kind)
        {
        case NodeKind::Number: return;
        case NodeKind::Ref:
        {
            auto it = positions.find(e.text);
            if (it == positions.end())
                fail("unknown feature '" + e.text + "'");
            if (it->second >= self)
                fail("refers to '" + e.text + "', which is not defined before it");
            return;
        }
        case NodeKind::Neg:
        case NodeKind::Add:
        case NodeKind::Sub:
        case NodeKind::Mul:
        case NodeKind::Div:
            for (const auto& a : e.args)
                derived(a, self, positions);
            return;
        default:
            fail("derived features combine earlier features and numbers with + - * /");
        }
    }

private:
    const data::DataSchema& schema_;
    std::string def_;
};

} // namespace

void typecheck(const Program& program, const data::DataSchema& schema)
{
    if (program.defs.empty())
        throw TypecheckError("", "program has no definitions");
    std::map<std::string, std::size_t> first_position;
    for (std::size_t i = 0; i < program.defs.size(); ++i)
    {
        const auto& name = program.defs[i].name;
        if (!is_valid_identifier(name))
            throw TypecheckError(name, "invalid feature name");
        if (!first_position.emplace(name, i).second)
            throw TypecheckError(name, "duplicate feature name");
    }
    for (std::size_t i = 0; i < program.defs.size(); ++i)
    {
        const auto& def = program.defs[i];
        Checker check(schema, def.name);
        if (const auto* agg = std::get_if<AggSpec>(&def.body))
            check.aggregate(*agg);
        else
            check.derived(std::get<Expr>(def.body), i, first_position);
    }
}

} // namespace featevo::dsl
