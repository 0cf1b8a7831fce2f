#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "pacr/value.hpp"

namespace pacr::dsl {

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

enum class BinaryOp { Add, Sub, Mul, Div, Mod, Eq, Ne, Lt, Le, Gt, Ge, And, Or };
enum class UnaryOp { Neg, Not };

struct Literal {
    Value value;  // int or bool only
};
struct Var {
    std::string name;
};
struct Let {
    std::string name;
    ExprPtr value;
    ExprPtr body;
};
struct If {
    ExprPtr cond;
    ExprPtr then_branch;
    ExprPtr else_branch;
};
struct Unary {
    UnaryOp op;
    ExprPtr operand;
};
struct Binary {
    BinaryOp op;
    ExprPtr lhs;
    ExprPtr rhs;
};
struct MakeList {
    std::vector<ExprPtr> elems;
};
struct MakeTuple {
    std::vector<ExprPtr> elems;
};
struct Index {
    ExprPtr base;
    ExprPtr index;
};
struct Project {
    ExprPtr base;
    std::size_t field;
};
/// Calls either a builtin (len, slice, append, concat, min, max) or a
/// program function.
struct Call {
    std::string callee;
    std::vector<ExprPtr> args;
};
/// `fold i from lo to hi with acc = init do body end`: runs body for
/// i = lo .. hi-1, rebinding acc to each result. The range is the only
/// source of iteration in the language.
struct Fold {
    std::string index_var;
    ExprPtr lo;
    ExprPtr hi;
    std::string acc_var;
    ExprPtr init;
    ExprPtr body;
};

struct Expr {
    using Node = std::variant<Literal, Var, Let, If, Unary, Binary, MakeList, MakeTuple, Index, Project,
                              Call, Fold>;
    Node node;
};

template <typename T>
ExprPtr make(T node) {
    return std::make_shared<const Expr>(Expr{Expr::Node{std::move(node)}});
}

inline ExprPtr lit(std::int64_t v) { return make(Literal{Value(v)}); }
inline ExprPtr lit_bool(bool v) { return make(Literal{Value(v)}); }
inline ExprPtr var(std::string name) { return make(Var{std::move(name)}); }

bool equal(const Expr& a, const Expr& b);

inline bool equal(const ExprPtr& a, const ExprPtr& b) {
    if (a == b) return true;
    if (!a || !b) return false;
    return equal(*a, *b);
}

inline bool equal(const std::vector<ExprPtr>& a, const std::vector<ExprPtr>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (!equal(a[i], b[i])) return false;
    }
    return true;
}

inline bool equal(const Expr& a, const Expr& b) {
    if (a.node.index() != b.node.index()) return false;
    return std::visit(
        [&](const auto& x) -> bool {
            using T = std::decay_t<decltype(x)>;
            const auto& y = std::get<T>(b.node);
            if constexpr (std::is_same_v<T, Literal>) {
                return x.value == y.value;
            } else if constexpr (std::is_same_v<T, Var>) {
                return x.name == y.name;
            } else if constexpr (std::is_same_v<T, Let>) {
                return x.name == y.name && equal(x.value, y.value) && equal(x.body, y.body);
            } else if constexpr (std::is_same_v<T, If>) {
                return equal(x.cond, y.cond) && equal(x.then_branch, y.then_branch) &&
                       equal(x.else_branch, y.else_branch);
            } else if constexpr (std::is_same_v<T, Unary>) {
                return x.op == y.op && equal(x.operand, y.operand);
            } else if constexpr (std::is_same_v<T, Binary>) {
                return x.op == y.op && equal(x.lhs, y.lhs) && equal(x.rhs, y.rhs);
            } else if constexpr (std::is_same_v<T, MakeList> || std::is_same_v<T, MakeTuple>) {
                return equal(x.elems, y.elems);
            } else if constexpr (std::is_same_v<T, Index>) {
                return equal(x.base, y.base) && equal(x.index, y.index);
            } else if constexpr (std::is_same_v<T, Project>) {
                return x.field == y.field && equal(x.base, y.base);
            } else if constexpr (std::is_same_v<T, Call>) {
                return x.callee == y.callee && equal(x.args, y.args);
            } else {
                static_assert(std::is_same_v<T, Fold>);
                return x.index_var == y.index_var && x.acc_var == y.acc_var && equal(x.lo, y.lo) &&
                       equal(x.hi, y.hi) && equal(x.init, y.init) && equal(x.body, y.body);
            }
        },
        a.node);
}

struct FunctionDef {
    std::string name;
    std::vector<std::string> params;
    ExprPtr body;

    std::size_t arity() const { return params.size(); }

    friend bool operator==(const FunctionDef& a, const FunctionDef& b) {
        return a.name == b.name && a.params == b.params && equal(a.body, b.body);
    }
};

/// A function that is declared (callable by name, arity fixed) but has no body.
struct FunctionDecl {
    std::string name;
    std::vector<std::string> params;

    std::size_t arity() const { return params.size(); }
    friend bool operator==(const FunctionDecl&, const FunctionDecl&) = default;
};

class ProgramError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline bool is_builtin(std::string_view name) {
    return name == "len" || name == "slice" || name == "append" || name == "concat" || name == "min" ||
           name == "max";
}

inline std::optional<std::size_t> builtin_arity(std::string_view name) {
    if (name == "len") return 1;
    if (name == "slice") return 3;
    if (name == "append" || name == "concat" || name == "min" || name == "max") return 2;
    return std::nullopt;
}

/// An immutable-by-convention collection of function definitions and
/// declarations, keyed by name. Iteration order (and therefore printing
/// order) is lexicographic by name.
class Program {
public:
    Program() = default;

    void add(FunctionDef fn) {
        check_fresh(fn.name);
        auto name = fn.name;
        functions_.emplace(std::move(name), std::move(fn));
    }
    void declare(FunctionDecl decl) {
        check_fresh(decl.name);
        auto name = decl.name;
        declarations_.emplace(std::move(name), std::move(decl));
    }

    /// Inserts or replaces a definition; a declaration of the same name is
    /// dropped (the name becomes implemented).
    void define_or_replace(FunctionDef fn) {
        if (is_builtin(fn.name)) throw ProgramError("cannot define builtin '" + fn.name + "'");
        declarations_.erase(fn.name);
        functions_.insert_or_assign(fn.name, std::move(fn));
    }

    void remove(const std::string& name) {
        functions_.erase(name);
        declarations_.erase(name);
    }

    const FunctionDef* find(std::string_view name) const {
        auto it = functions_.find(name);
        return it == functions_.end() ? nullptr : &it->second;
    }
    const FunctionDecl* find_declaration(std::string_view name) const {
        auto it = declarations_.find(name);
        return it == declarations_.end() ? nullptr : &it->second;
    }
    bool contains(std::string_view name) const { return find(name) || find_declaration(name); }

    const FunctionDef& at(std::string_view name) const {
        if (const auto* f = find(name)) return *f;
        throw ProgramError("no function named '" + std::string(name) + "'");
    }

    const std::map<std::string, FunctionDef, std::less<>>& functions() const { return functions_; }
    const std::map<std::string, FunctionDecl, std::less<>>& declarations() const { return declarations_; }
    bool empty() const { return functions_.empty() && declarations_.empty(); }

    friend bool operator==(const Program& a, const Program& b) {
        return a.functions_ == b.functions_ && a.declarations_ == b.declarations_;
    }

private:
    void check_fresh(const std::string& name) const {
        if (is_builtin(name)) throw ProgramError("cannot define builtin '" + name + "'");
        if (contains(name)) throw ProgramError("duplicate function name '" + name + "'");
    }

    std::map<std::string, FunctionDef, std::less<>> functions_;
    std::map<std::string, FunctionDecl, std::less<>> declarations_;
};

}  // namespace pacr::dsl
