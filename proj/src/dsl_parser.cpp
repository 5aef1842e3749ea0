// SPDX-License-Identifier: Apache-2.0
#include "featevo/dsl.hpp"

#include "featevo/util.hpp"

#include <charconv>
#include <cmath>

namespace featevo::dsl
{

namespace
{

std::string describe_expected(const std::vector<std::string>& expected)
{
    if (expected.size() == 1)
        return expected.front();
    return "one of {" + join(expected, ", ") + "}";
}

} // namespace

ParseError::ParseError(std::size_t line, std::size_t column, std::vector<std::string> expected,
                       const std::string& found, const std::string& detail)
    : Error("line " + std::to_string(line) + ", column " + std::to_string(column) + ": expected " +
            describe_expected(expected) + ", found " + found + (detail.empty() ? "" : " (" + detail + ")")),
      line_(line), column_(column), expected_(std::move(expected))
{
}

std::string_view to_string(Aggregate agg)
{
    switch (agg)
    {
    case Aggregate::Count: return "count";
    case Aggregate::Sum: return "sum";
    case Aggregate::Mean: return "mean";
    case Aggregate::Min: return "min";
    case Aggregate::Max: return "max";
    case Aggregate::Std: return "std";
    case Aggregate::NUnique: return "nunique";
    case Aggregate::First: return "first";
    case Aggregate::Last: return "last";
    }
    return "?";
}

std::vector<std::string> Program::names() const
{
    std::vector<std::string> out;
    out.reserve(defs.size());
    for (const auto& d : defs)
        out.push_back(d.name);
    return out;
}

namespace
{

std::optional<Aggregate> aggregate_from(std::string_view word)
{
    static constexpr Aggregate all[] = {Aggregate::Count, Aggregate::Sum,     Aggregate::Mean,
                                        Aggregate::Min,   Aggregate::Max,     Aggregate::Std,
                                        Aggregate::NUnique, Aggregate::First, Aggregate::Last};
    for (auto a : all)
        if (to_string(a) == word)
            return a;
    return std::nullopt;
}

enum class Tok
{
    Ident,
    Number,
    String,
    Symbol,
    End,
};

struct Token
{
    Tok kind = Tok::End;
    std::string text; // identifier, symbol, raw number, or decoded string
    double number = 0.0;
    bool integral = false;
    std::size_t line = 1;
    std::size_t column = 1;
};

std::string describe(const Token& t)
{
    switch (t.kind)
    {
    case Tok::End: return "end of input";
    case Tok::String: return "string literal";
    default: return "'" + t.text + "'";
    }
}

class Lexer
{
public:
    explicit Lexer(std::string_view src) : src_(src) {}

    std::vector<Token> run()
    {
        std::vector<Token> out;
        for (;;)
        {
            skip_space();
            Token t;
            t.line = line_;
            t.column = col_;
            if (pos_ >= src_.size())
            {
                out.push_back(t);
                return out;
            }
            char c = src_[pos_];
            if ((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_')
            {
                t.kind = Tok::Ident;
                while (pos_ < src_.size() && is_word(src_[pos_]))
                    t.text.push_back(take());
            }
            else if (c >= '0' && c <= '9')
            {
                lex_number(t);
            }
            else if (c == '"')
            {
                lex_string(t);
            }
            else
            {
                t.kind = Tok::Symbol;
                static constexpr std::string_view two[] = {"!=", "<=", ">="};
                bool matched = false;
                for (auto s : two)
                {
                    if (src_.substr(pos_, 2) == s)
                    {
                        t.text = std::string(s);
                        take();
                        take();
                        matched = true;
                        break;
                    }
                }
                if (!matched)
                {
                    if (std::string_view("=<>+-*/()[],").find(c) == std::string_view::npos)
                        throw ParseError(t.line, t.column, {"token"}, "'" + std::string(1, c) + "'",
                                         "unexpected character");
                    t.text = std::string(1, take());
                }
            }
            out.push_back(std::move(t));
        }
    }

private:
    static bool is_word(char c)
    {
        return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_';
    }

    char take()
    {
        char c = src_[pos_++];
        if (c == '\n')
        {
            ++line_;
            col_ = 1;
        }
        else
        {
            ++col_;
        }
        return c;
    }

    void skip_space()
    {
        while (pos_ < src_.size())
        {
            char c = src_[pos_];
            if (c == ' ' || c == '\t' || c == '\r' || c == '\n')
                take();
            else if (c == '#')
                while (pos_ < src_.size() && src_[pos_] != '\n')
                    take();
            else
                break;
        }
    }

    void lex_number(Token& t)
    {
        t.kind = Tok::Number;
        t.integral = true;
        auto digits = [&] {
            while (pos_ < src_.size() && src_[pos_] >= '0' && src_[pos_] <= '9')
                t.text.push_back(take());
        };
        digits();
        if (pos_ + 1 < src_.size() && src_[pos_] == '.' && src_[pos_ + 1] >= '0' && src_[pos_ + 1] <= '9')
        {
            t.integral = false;
            t.text.push_back(take());
            digits();
        }
        if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E'))
        {
            std::size_t save = pos_;
            std::size_t look = pos_ + 1;
            if (look < src_.size() && (src_[look] == '+' || src_[look] == '-'))
                ++look;
            if (look < src_.size() && src_[look] >= '0' && src_[look] <= '9')
            {
                t.integral = false;
                while (pos_ < look)
                    t.text.push_back(take());
                digits();
            }
            else
            {
                pos_ = save;
            }
        }
        auto [p, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), t.number);
        if (ec != std::errc() || !std::isfinite(t.number))
            throw ParseError(t.line, t.column, {"number"}, "'" + t.text + "'", "number out of range");
    }

    void lex_string(Token& t)
    {
        t.kind = Tok::String;
        take();
        for (;;)
        {
            if (pos_ >= src_.size() || src_[pos_] == '\n')
                throw ParseError(t.line, t.column, {"'\"'"}, "end of line", "unterminated string literal");
            char c = take();
            if (c == '"')
                return;
            if (c == '\\')
            {
                if (pos_ >= src_.size())
                    continue;
                char e = take();
                switch (e)
                {
                case 'n': t.text.push_back('\n'); break;
                case 't': t.text.push_back('\t'); break;
                case '"': t.text.push_back('"'); break;
                case '\\': t.text.push_back('\\'); break;
                default:
                    throw ParseError(line_, col_ - 1, {"escape sequence"}, "'\\" + std::string(1, e) + "'");
                }
                continue;
            }
            t.text.push_back(c);
        }
    }

    std::string_view src_;
    std::size_t pos_ = 0;
    std::size_t line_ = 1;
    std::size_t col_ = 1;
};

class Parser
{
public:
    explicit Parser(std::vector<Token> tokens) : toks_(std::move(tokens)) {}

    Program program()
    {
        Program p;
        do
            p.defs.push_back(definition());
        while (peek().kind != Tok::End);
        return p;
    }

private:
    const Token& peek(std::size_t ahead = 0) const
    {
        auto i = std::min(pos_ + ahead, toks_.size() - 1);
        return toks_[i];
    }

    Token next() { return toks_[std::min(pos_++, toks_.size() - 1)]; }

    bool is_word(std::string_view w, std::size_t ahead = 0) const
    {
        const auto& t = peek(ahead);
        return t.kind == Tok::Ident && t.text == w;
    }

    bool is_sym(std::string_view s, std::size_t ahead = 0) const
    {
        const auto& t = peek(ahead);
        return t.kind == Tok::Symbol && t.text == s;
    }

    [[noreturn]] void fail(std::vector<std::string> expected, const std::string& detail = {}) const
    {
        const auto& t = peek();
        throw ParseError(t.line, t.column, std::move(expected), describe(t), detail);
    }

    void expect_word(std::string_view w)
    {
        if (!is_word(w))
            fail({"'" + std::string(w) + "'"});
        next();
    }

    void expect_sym(std::string_view s, std::vector<std::string> also = {})
    {
        if (!is_sym(s))
        {
            also.insert(also.begin(), "'" + std::string(s) + "'");
            fail(std::move(also));
        }
        next();
    }

    std::string identifier(const char* what)
    {
        const auto& t = peek();
        if (t.kind != Tok::Ident || !is_valid_identifier(t.text))
            fail({what}, t.kind == Tok::Ident && is_keyword(t.text) ? "'" + t.text + "' is reserved" : "");
        return next().text;
    }

    FeatureDef definition()
    {
        expect_word("feature");
        FeatureDef def;
        def.name = identifier("feature name");
        expect_sym("=");
        auto agg = peek().kind == Tok::Ident ? aggregate_from(peek().text) : std::nullopt;
        if (agg && is_sym("(", 1))
            def.body = aggregate(*agg);
        else
            def.body = derived_sum();
        if (peek().kind != Tok::End && !is_word("feature"))
            fail({"'feature'", "end of input"});
        return def;
    }

    AggSpec aggregate(Aggregate agg)
    {
        AggSpec spec;
        spec.agg = agg;
        next();
        next(); // '('
        if (is_sym(")"))
        {
            if (agg != Aggregate::Count)
                fail({"expression"}, std::string(to_string(agg)) + " requires an argument");
        }
        else
        {
            spec.arg = expression();
        }
        expect_sym(")", {"operator"});
        if (is_word("where"))
        {
            next();
            spec.filter = expression();
        }
        if (is_word("window"))
        {
            next();
            if (is_word("all"))
            {
                next();
            }
            else if (is_word("last"))
            {
                next();
                const auto& t = peek();
                if (t.kind != Tok::Number || !t.integral || t.number < 1 || t.number > 1e12)
                    fail({"positive integer"});
                spec.window.all = false;
                spec.window.amount = static_cast<std::int64_t>(next().number);
                if (is_word("hours"))
                    spec.window.unit = Window::Unit::Hours;
                else if (is_word("days"))
                    spec.window.unit = Window::Unit::Days;
                else
                    fail({"'hours'", "'days'"});
                next();
            }
            else
            {
                fail({"'all'", "'last'"});
            }
        }
        return spec;
    }

    // Full expression grammar used inside aggregates.
    Expr expression() { return disjunction(); }

    Expr disjunction()
    {
        Expr left = conjunction();
        while (is_word("or"))
        {
            next();
            left = Expr::binary(NodeKind::Or, std::move(left), conjunction());
        }
        return left;
    }

    Expr conjunction()
    {
        Expr left = negation();
        while (is_word("and"))
        {
            next();
            left = Expr::binary(NodeKind::And, std::move(left), negation());
        }
        return left;
    }

    Expr negation()
    {
        if (is_word("not"))
        {
            next();
            return Expr::unary(NodeKind::Not, negation());
        }
        return predicate();
    }

    Expr predicate()
    {
        Expr left = sum(false);
        static constexpr std::pair<std::string_view, NodeKind> cmp[] = {
            {"=", NodeKind::Eq}, {"!=", NodeKind::Ne}, {"<", NodeKind::Lt},
            {"<=", NodeKind::Le}, {">", NodeKind::Gt}, {">=", NodeKind::Ge},
        };
        for (auto [sym, kind] : cmp)
        {
            if (is_sym(sym))
            {
                next();
                return Expr::binary(kind, std::move(left), sum(false));
            }
        }
        if (is_word("in"))
        {
            next();
            Expr node{NodeKind::In, 0.0, {}, {std::move(left)}};
            expect_sym("[");
            node.args.push_back(literal());
            while (is_sym(","))
            {
                next();
                node.args.push_back(literal());
            }
            expect_sym("]", {"','"});
            return node;
        }
        if (is_word("is"))
        {
            next();
            bool negated = false;
            if (is_word("not"))
            {
                next();
                negated = true;
            }
            expect_word("null");
            return Expr::unary(negated ? NodeKind::IsNotNull : NodeKind::IsNull, std::move(left));
        }
        return left;
    }

    Expr literal()
    {
        const auto& t = peek();
        if (t.kind == Tok::String)
            return Expr::str(next().text);
        bool neg = false;
        if (is_sym("-"))
        {
            next();
            neg = true;
        }
        if (peek().kind != Tok::Number)
            fail(neg ? std::vector<std::string>{"number"} : std::vector<std::string>{"number", "string literal"});
        double v = next().number;
        return Expr::num(neg ? -v : v);
    }

    Expr sum(bool derived)
    {
        Expr left = product(derived);
        while (is_sym("+") || is_sym("-"))
        {
            auto kind = next().text == "+" ? NodeKind::Add : NodeKind::Sub;
            left = Expr::binary(kind, std::move(left), product(derived));
        }
        return left;
    }

    Expr product(bool derived)
    {
        Expr left = unary(derived);
        while (is_sym("*") || is_sym("/"))
        {
            auto kind = next().text == "*" ? NodeKind::Mul : NodeKind::Div;
            left = Expr::binary(kind, std::move(left), unary(derived));
        }
        return left;
    }

    Expr unary(bool derived)
    {
        if (is_sym("-"))
        {
            next();
            Expr operand = unary(derived);
            // negated literals fold so printing and parsing agree
            if (operand.kind == NodeKind::Number)
                return Expr::num(-operand.number);
            return Expr::unary(NodeKind::Neg, std::move(operand));
        }
        return primary(derived);
    }

    Expr primary(bool derived)
    {
        const auto& t = peek();
        if (t.kind == Tok::Number)
            return Expr::num(next().number);
        if (is_sym("("))
        {
            next();
            Expr inner = derived ? sum(true) : expression();
            expect_sym(")", {"operator"});
            return inner;
        }
        if (!derived && t.kind == Tok::String)
            return Expr::str(next().text);
        if (!derived && (is_word("hour") || is_word("dayofweek")) && is_sym("(", 1))
        {
            auto kind = next().text == "hour" ? NodeKind::Hour : NodeKind::DayOfWeek;
            next();
            Expr node{kind, 0.0, identifier("column name"), {}};
            expect_sym(")");
            return node;
        }
        if (t.kind == Tok::Ident && is_valid_identifier(t.text))
            return Expr::ref(next().text);
        if (derived)
            fail({"feature name", "number", "'('"},
                 t.kind == Tok::Ident && is_keyword(t.text) ? "'" + t.text + "' is reserved" : "");
        fail({"column name", "number", "string literal", "'('", "'hour'", "'dayofweek'"},
             t.kind == Tok::Ident && is_keyword(t.text) ? "'" + t.text + "' is reserved" : "");
    }

    Expr derived_sum() { return sum(true); }

    std::vector<Token> toks_;
    std::size_t pos_ = 0;
};

int precedence(const Expr& e)
{
    switch (e.kind)
    {
    case NodeKind::Or: return 1;
    case NodeKind::And: return 2;
    case NodeKind::Not: return 3;
    case NodeKind::Eq:
    case NodeKind::Ne:
    case NodeKind::Lt:
    case NodeKind::Le:
    case NodeKind::Gt:
    case NodeKind::Ge:
    case NodeKind::In:
    case NodeKind::IsNull:
    case NodeKind::IsNotNull: return 4;
    case NodeKind::Add:
    case NodeKind::Sub: return 5;
    case NodeKind::Mul:
    case NodeKind::Div: return 6;
    case NodeKind::Neg: return 7;
    case NodeKind::Number: return e.number < 0 || std::signbit(e.number) ? 7 : 8;
    default: return 8;
    }
}

std::string quote(const std::string& s)
{
    std::string out = "\"";
    for (char c : s)
    {
        switch (c)
        {
        case '"': out += "\\\""; break;
        case '\\': out += "\\\\"; break;
        case '\n': out += "\\n"; break;
        case '\t': out += "\\t"; break;
        default: out.push_back(c);
        }
    }
    return out + "\"";
}

std::string print(const Expr& e);

std::string wrap(const Expr& e, bool parens)
{
    return parens ? "(" + print(e) + ")" : print(e);
}

std::string_view symbol(NodeKind k)
{
    switch (k)
    {
    case NodeKind::Add: return "+";
    case NodeKind::Sub: return "-";
    case NodeKind::Mul: return "*";
    case NodeKind::Div: return "/";
    case NodeKind::Eq: return "=";
    case NodeKind::Ne: return "!=";
    case NodeKind::Lt: return "<";
    case NodeKind::Le: return "<=";
    case NodeKind::Gt: return ">";
    case NodeKind::Ge: return ">=";
    case NodeKind::And: return "and";
    case NodeKind::Or: return "or";
    default: return "?";
    }
}

std::string print(const Expr& e)
{
    const int p = precedence(e);
    switch (e.kind)
    {
    case NodeKind::Number: return format_double(e.number);
    case NodeKind::String: return quote(e.text);
    case NodeKind::Ref: return e.text;
    case NodeKind::Hour: return "hour(" + e.text + ")";
    case NodeKind::DayOfWeek: return "dayofweek(" + e.text + ")";
    case NodeKind::Neg: return "-" + wrap(e.args[0], precedence(e.args[0]) < 7);
    case NodeKind::Not: return "not " + wrap(e.args[0], precedence(e.args[0]) < 3);
    case NodeKind::IsNull: return wrap(e.args[0], precedence(e.args[0]) < 5) + " is null";
    case NodeKind::IsNotNull: return wrap(e.args[0], precedence(e.args[0]) < 5) + " is not null";
    case NodeKind::In:
    {
        std::string out = wrap(e.args[0], precedence(e.args[0]) < 5) + " in [";
        for (std::size_t i = 1; i < e.args.size(); ++i)
        {
            if (i > 1)
                out += ", ";
            out += print(e.args[i]);
        }
        return out + "]";
    }
    case NodeKind::Eq:
    case NodeKind::Ne:
    case NodeKind::Lt:
    case NodeKind::Le:
    case NodeKind::Gt:
    case NodeKind::Ge:
        return wrap(e.args[0], precedence(e.args[0]) < 5) + " " + std::string(symbol(e.kind)) + " " +
               wrap(e.args[1], precedence(e.args[1]) < 5);
    default:
        // left-associative binary operators
        return wrap(e.args[0], precedence(e.args[0]) < p) + " " + std::string(symbol(e.kind)) + " " +
               wrap(e.args[1], precedence(e.args[1]) <= p);
    }
}

} // namespace

Program parse(std::string_view text)
{
    return Parser(Lexer(text).run()).program();
}

std::string pretty_print(const Expr& expr)
{
    return print(expr);
}

std::string pretty_print(const FeatureDef& def)
{
    std::string out = "feature " + def.name + " = ";
    if (const auto* agg = std::get_if<AggSpec>(&def.body))
    {
        out += std::string(to_string(agg->agg)) + "(";
        if (agg->arg)
            out += print(*agg->arg);
        out += ")";
        if (agg->filter)
            out += " where " + print(*agg->filter);
        if (!agg->window.all)
            out += " window last " + std::to_string(agg->window.amount) +
                   (agg->window.unit == Window::Unit::Hours ? " hours" : " days");
    }
    else
    {
        out += print(std::get<Expr>(def.body));
    }
    return out;
}

std::string pretty_print(const Program& program)
{
    std::string out;
    for (const auto& def : program.defs)
        out += pretty_print(def) + "\n";
    return out;
}

} // namespace featevo::dsl
