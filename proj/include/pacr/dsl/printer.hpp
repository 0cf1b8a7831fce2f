#pragma once

#include <string>

#include "pacr/dsl/ast.hpp"

namespace pacr::dsl {

namespace detail {

// Binding strength, loosest first. An operand whose level is below the
// slot's minimum gets parenthesized.
enum Level : int {
    kLetIf = 0,
    kOr = 1,
    kAnd = 2,
    kNot = 3,
    kCmp = 4,
    kAdd = 5,
    kMul = 6,
    kNeg = 7,
    kPostfix = 8,
    kAtom = 9,
};

inline int binary_level(BinaryOp op) {
    switch (op) {
        case BinaryOp::Or: return kOr;
        case BinaryOp::And: return kAnd;
        case BinaryOp::Eq:
        case BinaryOp::Ne:
        case BinaryOp::Lt:
        case BinaryOp::Le:
        case BinaryOp::Gt:
        case BinaryOp::Ge: return kCmp;
        case BinaryOp::Add:
        case BinaryOp::Sub: return kAdd;
        case BinaryOp::Mul:
        case BinaryOp::Div:
        case BinaryOp::Mod: return kMul;
    }
    return kAtom;
}

inline const char* binary_symbol(BinaryOp op) {
    switch (op) {
        case BinaryOp::Add: return "+";
        case BinaryOp::Sub: return "-";
        case BinaryOp::Mul: return "*";
        case BinaryOp::Div: return "/";
        case BinaryOp::Mod: return "%";
        case BinaryOp::Eq: return "==";
        case BinaryOp::Ne: return "!=";
        case BinaryOp::Lt: return "<";
        case BinaryOp::Le: return "<=";
        case BinaryOp::Gt: return ">";
        case BinaryOp::Ge: return ">=";
        case BinaryOp::And: return "and";
        case BinaryOp::Or: return "or";
    }
    return "?";
}

inline int level_of(const Expr& e) {
    return std::visit(
        [](const auto& n) -> int {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, Let> || std::is_same_v<T, If>) return kLetIf;
            else if constexpr (std::is_same_v<T, Binary>) return binary_level(n.op);
            else if constexpr (std::is_same_v<T, Unary>) return n.op == UnaryOp::Not ? kNot : kNeg;
            else if constexpr (std::is_same_v<T, Index> || std::is_same_v<T, Project>) return kPostfix;
            else return kAtom;
        },
        e.node);
}

// True when the printed form begins with a digit; a preceding unary minus
// would otherwise fuse with it into a negative literal.
inline bool starts_with_int(const Expr& e) {
    if (const auto* l = std::get_if<Literal>(&e.node)) return l->value.is_int();
    if (const auto* i = std::get_if<Index>(&e.node)) return starts_with_int(*i->base);
    if (const auto* p = std::get_if<Project>(&e.node)) return starts_with_int(*p->base);
    return false;
}

class Printer {
public:
    std::string out;

    void print(const Expr& e, int min_level) {
        const bool parens = level_of(e) < min_level;
        if (parens) out += '(';
        print_bare(e);
        if (parens) out += ')';
    }

    void print_list(const std::vector<ExprPtr>& xs) {
        for (std::size_t i = 0; i < xs.size(); ++i) {
            if (i) out += ", ";
            print(*xs[i], kLetIf);
        }
    }

    void print_bare(const Expr& e) {
        std::visit(
            [&](const auto& n) {
                using T = std::decay_t<decltype(n)>;
                if constexpr (std::is_same_v<T, Literal>) {
                    append_value(out, n.value);
                } else if constexpr (std::is_same_v<T, Var>) {
                    out += n.name;
                } else if constexpr (std::is_same_v<T, Let>) {
                    out += "let " + n.name + " = ";
                    print(*n.value, kLetIf);
                    out += " in ";
                    print(*n.body, kLetIf);
                } else if constexpr (std::is_same_v<T, If>) {
                    out += "if ";
                    print(*n.cond, kLetIf);
                    out += " then ";
                    print(*n.then_branch, kLetIf);
                    out += " else ";
                    print(*n.else_branch, kLetIf);
                } else if constexpr (std::is_same_v<T, Unary>) {
                    if (n.op == UnaryOp::Not) {
                        out += "not ";
                        print(*n.operand, kNot);
                    } else {
                        out += '-';
                        if (starts_with_int(*n.operand) || level_of(*n.operand) < kNeg) {
                            out += '(';
                            print_bare(*n.operand);
                            out += ')';
                        } else {
                            print_bare(*n.operand);
                        }
                    }
                } else if constexpr (std::is_same_v<T, Binary>) {
                    const int lvl = binary_level(n.op);
                    const bool chainable = lvl != kCmp;
                    print(*n.lhs, chainable ? lvl : lvl + 1);
                    out += ' ';
                    out += binary_symbol(n.op);
                    out += ' ';
                    print(*n.rhs, lvl + 1);
                } else if constexpr (std::is_same_v<T, MakeList>) {
                    out += '[';
                    print_list(n.elems);
                    out += ']';
                } else if constexpr (std::is_same_v<T, MakeTuple>) {
                    out += '(';
                    print_list(n.elems);
                    if (n.elems.size() == 1) out += ',';
                    out += ')';
                } else if constexpr (std::is_same_v<T, Index>) {
                    print(*n.base, kPostfix);
                    out += '[';
                    print(*n.index, kLetIf);
                    out += ']';
                } else if constexpr (std::is_same_v<T, Project>) {
                    print(*n.base, kPostfix);
                    out += '.';
                    out += std::to_string(n.field);
                } else if constexpr (std::is_same_v<T, Call>) {
                    out += n.callee;
                    out += '(';
                    print_list(n.args);
                    out += ')';
                } else if constexpr (std::is_same_v<T, Fold>) {
                    out += "fold " + n.index_var + " from ";
                    print(*n.lo, kLetIf);
                    out += " to ";
                    print(*n.hi, kLetIf);
                    out += " with " + n.acc_var + " = ";
                    print(*n.init, kLetIf);
                    out += " do ";
                    print(*n.body, kLetIf);
                    out += " end";
                }
            },
            e.node);
    }
};

inline std::string join_params(const std::vector<std::string>& params) {
    std::string s;
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (i) s += ", ";
        s += params[i];
    }
    return s;
}

}  // namespace detail

inline std::string print_expr(const Expr& e) {
    detail::Printer p;
    p.print(e, detail::kLetIf);
    return std::move(p.out);
}

inline std::string print_function(const FunctionDef& f) {
    return "fn " + f.name + "(" + detail::join_params(f.params) + ") = " + print_expr(*f.body);
}

/// Canonical text: one line per entry, entries in name order, declarations
/// as `decl name(params)`. Byte-stable for a given AST.
inline std::string print_program(const Program& p) {
    std::map<std::string_view, std::string> lines;
    for (const auto& [name, d] : p.declarations()) {
        lines.emplace(name, "decl " + d.name + "(" + detail::join_params(d.params) + ")");
    }
    for (const auto& [name, f] : p.functions()) lines.emplace(name, print_function(f));
    std::string out;
    for (const auto& [name, line] : lines) {
        out += line;
        out += '\n';
    }
    return out;
}

}  // namespace pacr::dsl
