#pragma once

#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "pacr/dsl/ast.hpp"

namespace pacr::dsl {

/// Collects every call site (callee name and argument count) in `e`.
inline void collect_calls(const Expr& e, std::vector<std::pair<std::string, std::size_t>>& out) {
    auto sub = [&](const ExprPtr& x) { collect_calls(*x, out); };
    std::visit(
        [&](const auto& n) {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, Let>) {
                sub(n.value);
                sub(n.body);
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
                out.emplace_back(n.callee, n.args.size());
                for (const auto& x : n.args) sub(x);
            } else if constexpr (std::is_same_v<T, Fold>) {
                sub(n.lo);
                sub(n.hi);
                sub(n.init);
                sub(n.body);
            }
        },
        e.node);
}

inline std::vector<std::pair<std::string, std::size_t>> calls_in(const FunctionDef& f) {
    std::vector<std::pair<std::string, std::size_t>> out;
    collect_calls(*f.body, out);
    return out;
}

/// Arity lookup for names callable from a function body: builtins, then the
/// program's functions and declarations, then `extra` (names supplied by a
/// caller's context, e.g. helpers still being declared).
inline std::optional<std::size_t> callable_arity(std::string_view name, const Program& p,
                                                 const std::map<std::string, std::size_t, std::less<>>& extra = {}) {
    if (auto a = builtin_arity(name)) return a;
    if (const auto* f = p.find(name)) return f->arity();
    if (const auto* d = p.find_declaration(name)) return d->arity();
    if (auto it = extra.find(name); it != extra.end()) return it->second;
    return std::nullopt;
}

/// Checks that every call site resolves with a matching arity and that the
/// call graph among implemented functions is acyclic. Throws ProgramError
/// naming the first problem found.
inline void validate_program(const Program& p, const std::map<std::string, std::size_t, std::less<>>& extra = {}) {
    for (const auto& [name, f] : p.functions()) {
        for (const auto& [callee, argc] : calls_in(f)) {
            auto arity = callable_arity(callee, p, extra);
            if (!arity) throw ProgramError("'" + name + "' calls undefined function '" + callee + "'");
            if (*arity != argc) {
                throw ProgramError("'" + name + "' calls '" + callee + "' with " + std::to_string(argc) +
                                   " arguments, expected " + std::to_string(*arity));
            }
        }
    }
    // DFS colouring over implemented functions.
    std::map<std::string_view, int> colour;
    std::function<void(const FunctionDef&)> visit = [&](const FunctionDef& f) {
        colour[f.name] = 1;
        for (const auto& [callee, argc] : calls_in(f)) {
            const auto* g = p.find(callee);
            if (!g) continue;
            const int c = colour[g->name];
            if (c == 1) throw ProgramError("recursive call cycle through '" + g->name + "'");
            if (c == 0) visit(*g);
        }
        colour[f.name] = 2;
    };
    for (const auto& [name, f] : p.functions()) {
        if (colour[f.name] == 0) visit(f);
    }
}

}  // namespace pacr::dsl
