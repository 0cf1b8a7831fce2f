#pragma once

#include <cctype>
#include <charconv>
#include <cstdint>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "pacr/dsl/ast.hpp"

namespace pacr::dsl {

class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& msg, int line, int column)
        : std::runtime_error(std::to_string(line) + ":" + std::to_string(column) + ": " + msg),
          line_(line),
          column_(column) {}

    int line() const { return line_; }
    int column() const { return column_; }

private:
    int line_;
    int column_;
};

namespace detail {

enum class Tok {
    End,
    Ident,
    Int,
    // keywords
    Fn, Decl, Let, In, If, Then, Else, Fold, From, To, With, Do, EndKw, And, Or, Not, True, False,
    // punctuation
    LParen, RParen, LBracket, RBracket, Comma, Dot, Assign,
    Plus, Minus, Star, Slash, Percent,
    EqEq, NotEq, Lt, Le, Gt, Ge,
};

struct Token {
    Tok kind = Tok::End;
    std::string_view text;
    int line = 1;
    int column = 1;
};

inline Tok keyword_kind(std::string_view w) {
    static constexpr std::pair<std::string_view, Tok> kTable[] = {
        {"fn", Tok::Fn},     {"decl", Tok::Decl}, {"let", Tok::Let},   {"in", Tok::In},
        {"if", Tok::If},     {"then", Tok::Then}, {"else", Tok::Else}, {"fold", Tok::Fold},
        {"from", Tok::From}, {"to", Tok::To},     {"with", Tok::With}, {"do", Tok::Do},
        {"end", Tok::EndKw}, {"and", Tok::And},   {"or", Tok::Or},     {"not", Tok::Not},
        {"true", Tok::True}, {"false", Tok::False},
    };
    for (const auto& [k, t] : kTable) {
        if (k == w) return t;
    }
    return Tok::Ident;
}

inline bool is_keyword(std::string_view w) { return keyword_kind(w) != Tok::Ident; }

inline std::vector<Token> tokenize(std::string_view src) {
    std::vector<Token> out;
    int line = 1;
    int col = 1;
    std::size_t i = 0;
    auto advance = [&](std::size_t n) {
        for (std::size_t k = 0; k < n; ++k) {
            if (src[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
            ++i;
        }
    };
    while (i < src.size()) {
        const char c = src[i];
        if (c == '#') {
            while (i < src.size() && src[i] != '\n') advance(1);
            continue;
        }
        if (std::isspace(static_cast<unsigned char>(c))) {
            advance(1);
            continue;
        }
        Token t;
        t.line = line;
        t.column = col;
        const std::size_t start = i;
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t j = i;
            while (j < src.size() && (std::isalnum(static_cast<unsigned char>(src[j])) || src[j] == '_')) ++j;
            t.text = src.substr(start, j - start);
            t.kind = keyword_kind(t.text);
            advance(j - i);
            out.push_back(t);
            continue;
        }
        if (std::isdigit(static_cast<unsigned char>(c))) {
            std::size_t j = i;
            while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
            t.text = src.substr(start, j - start);
            t.kind = Tok::Int;
            advance(j - i);
            out.push_back(t);
            continue;
        }
        auto two = src.substr(i, 2);
        Tok k = Tok::End;
        std::size_t len = 1;
        if (two == "==") { k = Tok::EqEq; len = 2; }
        else if (two == "!=") { k = Tok::NotEq; len = 2; }
        else if (two == "<=") { k = Tok::Le; len = 2; }
        else if (two == ">=") { k = Tok::Ge; len = 2; }
        else {
            switch (c) {
                case '(': k = Tok::LParen; break;
                case ')': k = Tok::RParen; break;
                case '[': k = Tok::LBracket; break;
                case ']': k = Tok::RBracket; break;
                case ',': k = Tok::Comma; break;
                case '.': k = Tok::Dot; break;
                case '=': k = Tok::Assign; break;
                case '+': k = Tok::Plus; break;
                case '-': k = Tok::Minus; break;
                case '*': k = Tok::Star; break;
                case '/': k = Tok::Slash; break;
                case '%': k = Tok::Percent; break;
                case '<': k = Tok::Lt; break;
                case '>': k = Tok::Gt; break;
                default:
                    throw ParseError(std::string("unexpected character '") + c + "'", line, col);
            }
        }
        t.kind = k;
        t.text = src.substr(start, len);
        advance(len);
        out.push_back(t);
    }
    Token end;
    end.kind = Tok::End;
    end.line = line;
    end.column = col;
    out.push_back(end);
    return out;
}

class Parser {
public:
    explicit Parser(std::string_view src) : tokens_(tokenize(src)) {}

    Program program() {
        Program p;
        while (peek().kind != Tok::End) {
            const Token& head = peek();
            if (head.kind != Tok::Fn && head.kind != Tok::Decl) fail("expected 'fn' or 'decl'", head);
            const bool is_decl = head.kind == Tok::Decl;
            next();
            const Token& name_tok = expect(Tok::Ident, "function name");
            std::string name(name_tok.text);
            if (is_builtin(name)) fail("cannot redefine builtin '" + name + "'", name_tok);
            if (p.contains(name)) fail("duplicate function name '" + name + "'", name_tok);
            auto params = param_list();
            if (is_decl) {
                p.declare(FunctionDecl{std::move(name), std::move(params)});
                continue;
            }
            expect(Tok::Assign, "'='");
            auto body = expr();
            check_bound(*body, params, name_tok);
            p.add(FunctionDef{std::move(name), std::move(params), std::move(body)});
        }
        return p;
    }

    ExprPtr closed_expression() {
        auto e = expr();
        if (peek().kind != Tok::End) fail("unexpected trailing input", peek());
        check_bound(*e, {}, tokens_.front());
        return e;
    }

private:
    const Token& peek(std::size_t ahead = 0) const {
        return tokens_[std::min(pos_ + ahead, tokens_.size() - 1)];
    }
    const Token& next() {
        const Token& t = tokens_[pos_];
        if (pos_ + 1 < tokens_.size()) ++pos_;
        return t;
    }
    bool accept(Tok k) {
        if (peek().kind == k) {
            next();
            return true;
        }
        return false;
    }
    const Token& expect(Tok k, const char* what) {
        if (peek().kind != k) fail(std::string("expected ") + what, peek());
        return next();
    }
    [[noreturn]] static void fail(const std::string& msg, const Token& at) {
        std::string found = at.kind == Tok::End ? "end of input" : "'" + std::string(at.text) + "'";
        throw ParseError(msg + ", found " + found, at.line, at.column);
    }

    std::vector<std::string> param_list() {
        expect(Tok::LParen, "'('");
        std::vector<std::string> params;
        if (!accept(Tok::RParen)) {
            do {
                const Token& p = expect(Tok::Ident, "parameter name");
                std::string name(p.text);
                for (const auto& q : params) {
                    if (q == name) fail("duplicate parameter '" + name + "'", p);
                }
                params.push_back(std::move(name));
            } while (accept(Tok::Comma));
            expect(Tok::RParen, "')'");
        }
        return params;
    }

    ExprPtr expr() {
        const Token& t = peek();
        if (t.kind == Tok::Let) {
            next();
            std::string name(expect(Tok::Ident, "variable name").text);
            expect(Tok::Assign, "'='");
            auto value = expr();
            expect(Tok::In, "'in'");
            auto body = expr();
            return make(Let{std::move(name), std::move(value), std::move(body)});
        }
        if (t.kind == Tok::If) {
            next();
            auto cond = expr();
            expect(Tok::Then, "'then'");
            auto a = expr();
            expect(Tok::Else, "'else'");
            auto b = expr();
            return make(If{std::move(cond), std::move(a), std::move(b)});
        }
        return or_expr();
    }

    ExprPtr or_expr() {
        auto lhs = and_expr();
        while (accept(Tok::Or)) lhs = make(Binary{BinaryOp::Or, lhs, and_expr()});
        return lhs;
    }

    ExprPtr and_expr() {
        auto lhs = not_expr();
        while (accept(Tok::And)) lhs = make(Binary{BinaryOp::And, lhs, not_expr()});
        return lhs;
    }

    ExprPtr not_expr() {
        if (accept(Tok::Not)) return make(Unary{UnaryOp::Not, not_expr()});
        return cmp_expr();
    }

    ExprPtr cmp_expr() {
        auto lhs = add_expr();
        auto op = cmp_op(peek().kind);
        if (!op) return lhs;
        next();
        auto rhs = add_expr();
        if (cmp_op(peek().kind)) fail("comparison operators do not chain", peek());
        return make(Binary{*op, lhs, rhs});
    }

    static std::optional<BinaryOp> cmp_op(Tok k) {
        switch (k) {
            case Tok::EqEq: return BinaryOp::Eq;
            case Tok::NotEq: return BinaryOp::Ne;
            case Tok::Lt: return BinaryOp::Lt;
            case Tok::Le: return BinaryOp::Le;
            case Tok::Gt: return BinaryOp::Gt;
            case Tok::Ge: return BinaryOp::Ge;
            default: return std::nullopt;
        }
    }

    ExprPtr add_expr() {
        auto lhs = mul_expr();
        for (;;) {
            if (accept(Tok::Plus)) lhs = make(Binary{BinaryOp::Add, lhs, mul_expr()});
            else if (accept(Tok::Minus)) lhs = make(Binary{BinaryOp::Sub, lhs, mul_expr()});
            else return lhs;
        }
    }

    ExprPtr mul_expr() {
        auto lhs = unary();
        for (;;) {
            if (accept(Tok::Star)) lhs = make(Binary{BinaryOp::Mul, lhs, unary()});
            else if (accept(Tok::Slash)) lhs = make(Binary{BinaryOp::Div, lhs, unary()});
            else if (accept(Tok::Percent)) lhs = make(Binary{BinaryOp::Mod, lhs, unary()});
            else return lhs;
        }
    }

    ExprPtr unary() {
        if (peek().kind == Tok::Minus) {
            const Token& minus = next();
            if (peek().kind == Tok::Int) {
                // "-<digits>" is a single negative literal (admits INT64_MIN)
                auto v = int_literal(next(), true, minus);
                return postfix(lit(v));
            }
            return make(Unary{UnaryOp::Neg, unary()});
        }
        return postfix(atom());
    }

    static std::int64_t int_literal(const Token& t, bool negative, const Token& anchor) {
        std::string digits = negative ? "-" + std::string(t.text) : std::string(t.text);
        std::int64_t v = 0;
        auto [p, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), v);
        if (ec != std::errc{} || p != digits.data() + digits.size()) fail("integer literal out of range", anchor);
        return v;
    }

    ExprPtr postfix(ExprPtr e) {
        for (;;) {
            if (accept(Tok::LBracket)) {
                auto idx = expr();
                expect(Tok::RBracket, "']'");
                e = make(Index{e, idx});
            } else if (accept(Tok::Dot)) {
                const Token& f = expect(Tok::Int, "tuple field number");
                std::size_t field = 0;
                auto [p, ec] = std::from_chars(f.text.data(), f.text.data() + f.text.size(), field);
                if (ec != std::errc{}) fail("tuple field out of range", f);
                e = make(Project{e, field});
            } else {
                return e;
            }
        }
    }

    ExprPtr atom() {
        const Token& t = peek();
        switch (t.kind) {
            case Tok::Int: next(); return lit(int_literal(t, false, t));
            case Tok::True: next(); return lit_bool(true);
            case Tok::False: next(); return lit_bool(false);
            case Tok::Ident: {
                next();
                std::string name(t.text);
                if (!accept(Tok::LParen)) return var(std::move(name));
                std::vector<ExprPtr> args;
                if (!accept(Tok::RParen)) {
                    do {
                        args.push_back(expr());
                    } while (accept(Tok::Comma));
                    expect(Tok::RParen, "')'");
                }
                return make(Call{std::move(name), std::move(args)});
            }
            case Tok::LParen: {
                next();
                if (accept(Tok::RParen)) return make(MakeTuple{});
                auto first = expr();
                if (accept(Tok::RParen)) return first;
                expect(Tok::Comma, "',' or ')'");
                std::vector<ExprPtr> elems{first};
                while (peek().kind != Tok::RParen) {
                    elems.push_back(expr());
                    if (!accept(Tok::Comma)) break;
                }
                expect(Tok::RParen, "')'");
                return make(MakeTuple{std::move(elems)});
            }
            case Tok::LBracket: {
                next();
                std::vector<ExprPtr> elems;
                if (!accept(Tok::RBracket)) {
                    do {
                        elems.push_back(expr());
                    } while (accept(Tok::Comma));
                    expect(Tok::RBracket, "']'");
                }
                return make(MakeList{std::move(elems)});
            }
            case Tok::Fold: {
                next();
                std::string index(expect(Tok::Ident, "loop variable").text);
                expect(Tok::From, "'from'");
                auto lo = expr();
                expect(Tok::To, "'to'");
                auto hi = expr();
                expect(Tok::With, "'with'");
                std::string acc(expect(Tok::Ident, "accumulator name").text);
                if (acc == index) fail("loop variable and accumulator must differ", peek());
                expect(Tok::Assign, "'='");
                auto init = expr();
                expect(Tok::Do, "'do'");
                auto body = expr();
                expect(Tok::EndKw, "'end'");
                return make(Fold{std::move(index), std::move(lo), std::move(hi), std::move(acc), std::move(init),
                                 std::move(body)});
            }
            default: fail("expected an expression", t);
        }
    }

    // Unbound-variable check. Positions are not tracked on the AST, so the
    // error is anchored at the function name.
    static void check_bound(const Expr& e, const std::vector<std::string>& params, const Token& anchor) {
        std::vector<std::string> scope(params.begin(), params.end());
        check_bound_rec(e, scope, anchor);
    }

    static void check_bound_rec(const Expr& e, std::vector<std::string>& scope, const Token& anchor) {
        auto sub = [&](const ExprPtr& x) { check_bound_rec(*x, scope, anchor); };
        auto scoped = [&](const ExprPtr& x, std::initializer_list<std::string_view> names) {
            for (auto n : names) scope.emplace_back(n);
            check_bound_rec(*x, scope, anchor);
            scope.resize(scope.size() - names.size());
        };
        std::visit(
            [&](const auto& n) {
                using T = std::decay_t<decltype(n)>;
                if constexpr (std::is_same_v<T, Var>) {
                    for (auto it = scope.rbegin(); it != scope.rend(); ++it) {
                        if (*it == n.name) return;
                    }
                    throw ParseError("unbound variable '" + n.name + "' in '" + std::string(anchor.text) + "'",
                                     anchor.line, anchor.column);
                } else if constexpr (std::is_same_v<T, Let>) {
                    sub(n.value);
                    scoped(n.body, {n.name});
                } else if constexpr (std::is_same_v<T, If>) {
                    sub(n.cond);
                    sub(n.then_branch);
                    sub(n.else_branch);
                } else if constexpr (std::is_same_v<T, Unary>) {
                    sub(n.operand);
                } else if constexpr (std::is_same_v<T, Binary>) {
                    sub(n.lhs);
                    sub(n.rhs);
                } else if constexpr (std::is_same_v<T, MakeList> || std::is_same_v<T, MakeTuple>) {
                    for (const auto& x : n.elems) sub(x);
                } else if constexpr (std::is_same_v<T, Index>) {
                    sub(n.base);
                    sub(n.index);
                } else if constexpr (std::is_same_v<T, Project>) {
                    sub(n.base);
                } else if constexpr (std::is_same_v<T, Call>) {
                    for (const auto& x : n.args) sub(x);
                } else if constexpr (std::is_same_v<T, Fold>) {
                    sub(n.lo);
                    sub(n.hi);
                    sub(n.init);
                    scoped(n.body, {n.index_var, n.acc_var});
                }
            },
            e.node);
    }

    std::vector<Token> tokens_;
    std::size_t pos_ = 0;
};

}  // namespace detail

/// Parses a whole `.pacl` source text. Throws ParseError (with line and
/// column) on syntax errors, duplicate names and unbound variables.
inline Program parse_program(std::string_view text) { return detail::Parser(text).program(); }

/// Parses a program that must contain exactly one function definition.
inline FunctionDef parse_function(std::string_view text) {
    auto p = parse_program(text);
    if (p.functions().size() != 1 || !p.declarations().empty()) {
        throw ParseError("expected exactly one function definition", 1, 1);
    }
    return p.functions().begin()->second;
}

/// Parses a closed expression (no free variables), e.g. a literal argument.
inline ExprPtr parse_expression(std::string_view text) { return detail::Parser(text).closed_expression(); }

}  // namespace pacr::dsl
