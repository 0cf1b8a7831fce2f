#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "pacr/dsl/ast.hpp"

namespace pacr::dsl {

inline constexpr std::uint64_t kDefaultFuel = 1'000'000;

enum class EvalErrorKind {
    FuelExhausted,
    TypeError,
    IndexOutOfRange,
    Overflow,
    DivisionByZero,
    UnimplementedCall,
    UnknownFunction,
    ArityMismatch,
    Recursion,
};

inline const char* kind_name(EvalErrorKind k) {
    switch (k) {
        case EvalErrorKind::FuelExhausted: return "fuel_exhausted";
        case EvalErrorKind::TypeError: return "type_error";
        case EvalErrorKind::IndexOutOfRange: return "index_out_of_range";
        case EvalErrorKind::Overflow: return "overflow";
        case EvalErrorKind::DivisionByZero: return "division_by_zero";
        case EvalErrorKind::UnimplementedCall: return "unimplemented_call";
        case EvalErrorKind::UnknownFunction: return "unknown_function";
        case EvalErrorKind::ArityMismatch: return "arity_mismatch";
        case EvalErrorKind::Recursion: return "recursion";
    }
    return "?";
}

/// Evaluation failure. `call_path` lists the functions on the call stack
/// at the point of failure, outermost first.
class EvalError : public std::runtime_error {
public:
    EvalError(EvalErrorKind kind, const std::string& msg, std::vector<std::string> call_path = {})
        : std::runtime_error(std::string(dsl::kind_name(kind)) + ": " + msg),
          kind_(kind),
          call_path_(std::move(call_path)) {}

    EvalErrorKind kind() const { return kind_; }
    const std::vector<std::string>& call_path() const { return call_path_; }
    /// Innermost function that was executing when the error occurred.
    std::string_view failing_function() const {
        return call_path_.empty() ? std::string_view{} : std::string_view{call_path_.back()};
    }

private:
    EvalErrorKind kind_;
    std::vector<std::string> call_path_;
};

/// Receives every call to a program function (builtins excluded) before
/// the callee's body runs.
class CallObserver {
public:
    virtual ~CallObserver() = default;
    virtual void on_call(std::string_view callee, std::span<const Value> args) = 0;
};

struct EvalOptions {
    std::uint64_t fuel = kDefaultFuel;
    CallObserver* observer = nullptr;
};

/// Tree-walking interpreter. One step of fuel is charged per expression
/// node visited and per list element copied by a builtin, so a run's total
/// work is bounded by the fuel it was given.
class Evaluator {
public:
    Evaluator(const Program& program, EvalOptions options) : program_(program), options_(options) {}

    Value call(std::string_view name, std::span<const Value> args) { return invoke(name, args); }

    Value eval_closed(const Expr& e) { return eval(e); }

    std::uint64_t steps_used() const { return steps_; }

private:
    [[noreturn]] void fail(EvalErrorKind kind, const std::string& msg) const {
        throw EvalError(kind, msg, stack_);
    }

    void charge(std::uint64_t n = 1) {
        if (options_.fuel - steps_ < n) {
            steps_ = options_.fuel;
            fail(EvalErrorKind::FuelExhausted, "step budget of " + std::to_string(options_.fuel) + " exhausted");
        }
        steps_ += n;
    }

    Value invoke(std::string_view name, std::span<const Value> args) {
        const FunctionDef* fn = program_.find(name);
        if (!fn) {
            if (const auto* decl = program_.find_declaration(name)) {
                fail(EvalErrorKind::UnimplementedCall, "'" + decl->name + "' is declared but not implemented");
            }
            fail(EvalErrorKind::UnknownFunction, "no function named '" + std::string(name) + "'");
        }
        if (fn->arity() != args.size()) {
            fail(EvalErrorKind::ArityMismatch, "'" + fn->name + "' expects " + std::to_string(fn->arity()) +
                                                   " arguments, got " + std::to_string(args.size()));
        }
        for (const auto& frame : stack_) {
            if (frame == fn->name) fail(EvalErrorKind::Recursion, "recursive call to '" + fn->name + "'");
        }
        if (options_.observer) options_.observer->on_call(fn->name, args);
        stack_.push_back(fn->name);
        const std::size_t saved = env_.size();
        for (std::size_t i = 0; i < args.size(); ++i) env_.emplace_back(&fn->params[i], args[i]);
        // Calls start a fresh lexical scope: only the callee's parameters are visible.
        const std::size_t saved_base = base_;
        base_ = saved;
        Value result = eval(*fn->body);
        base_ = saved_base;
        env_.resize(saved);
        stack_.pop_back();
        return result;
    }

    const Value& lookup(const std::string& name) const {
        for (std::size_t i = env_.size(); i-- > base_;) {
            if (*env_[i].first == name) return env_[i].second;
        }
        fail(EvalErrorKind::TypeError, "unbound variable '" + name + "'");
    }

    std::int64_t want_int(const Value& v, const char* where) const {
        if (!v.is_int()) fail(EvalErrorKind::TypeError, std::string(where) + " expects int, got " + kind_name(v.kind()));
        return v.as_int();
    }
    bool want_bool(const Value& v, const char* where) const {
        if (!v.is_bool()) {
            fail(EvalErrorKind::TypeError, std::string(where) + " expects bool, got " + kind_name(v.kind()));
        }
        return v.as_bool();
    }
    const std::vector<Value>& want_list(const Value& v, const char* where) const {
        if (!v.is_list()) {
            fail(EvalErrorKind::TypeError, std::string(where) + " expects list, got " + kind_name(v.kind()));
        }
        return v.items();
    }

    Value arith(BinaryOp op, std::int64_t a, std::int64_t b) const {
        std::int64_t r = 0;
        switch (op) {
            case BinaryOp::Add:
                if (__builtin_add_overflow(a, b, &r)) fail(EvalErrorKind::Overflow, "integer overflow in +");
                return r;
            case BinaryOp::Sub:
                if (__builtin_sub_overflow(a, b, &r)) fail(EvalErrorKind::Overflow, "integer overflow in -");
                return r;
            case BinaryOp::Mul:
                if (__builtin_mul_overflow(a, b, &r)) fail(EvalErrorKind::Overflow, "integer overflow in *");
                return r;
            case BinaryOp::Div:
            case BinaryOp::Mod:
                if (b == 0) fail(EvalErrorKind::DivisionByZero, "division by zero");
                if (a == INT64_MIN && b == -1) fail(EvalErrorKind::Overflow, "integer overflow in division");
                return op == BinaryOp::Div ? a / b : a % b;
            default: break;
        }
        return std::int64_t{0};
    }

    Value eval(const Expr& e) {
        charge();
        return std::visit([&](const auto& n) { return eval_node(n); }, e.node);
    }

    Value eval_node(const Literal& n) { return n.value; }
    Value eval_node(const Var& n) { return lookup(n.name); }

    Value eval_node(const Let& n) {
        Value v = eval(*n.value);
        env_.emplace_back(&n.name, std::move(v));
        Value r = eval(*n.body);
        env_.pop_back();
        return r;
    }

    Value eval_node(const If& n) {
        return want_bool(eval(*n.cond), "if") ? eval(*n.then_branch) : eval(*n.else_branch);
    }

    Value eval_node(const Unary& n) {
        Value v = eval(*n.operand);
        if (n.op == UnaryOp::Not) return !want_bool(v, "not");
        const auto x = want_int(v, "unary -");
        if (x == INT64_MIN) fail(EvalErrorKind::Overflow, "integer overflow in unary -");
        return -x;
    }

    Value eval_node(const Binary& n) {
        if (n.op == BinaryOp::And || n.op == BinaryOp::Or) {
            const bool lhs = want_bool(eval(*n.lhs), n.op == BinaryOp::And ? "and" : "or");
            if (n.op == BinaryOp::And && !lhs) return false;
            if (n.op == BinaryOp::Or && lhs) return true;
            return want_bool(eval(*n.rhs), n.op == BinaryOp::And ? "and" : "or");
        }
        Value a = eval(*n.lhs);
        Value b = eval(*n.rhs);
        switch (n.op) {
            case BinaryOp::Eq: return a == b;
            case BinaryOp::Ne: return a != b;
            case BinaryOp::Lt:
            case BinaryOp::Le:
            case BinaryOp::Gt:
            case BinaryOp::Ge: {
                const auto x = want_int(a, "comparison");
                const auto y = want_int(b, "comparison");
                if (n.op == BinaryOp::Lt) return x < y;
                if (n.op == BinaryOp::Le) return x <= y;
                if (n.op == BinaryOp::Gt) return x > y;
                return x >= y;
            }
            default: return arith(n.op, want_int(a, "arithmetic"), want_int(b, "arithmetic"));
        }
    }

    std::vector<Value> eval_all(const std::vector<ExprPtr>& xs) {
        std::vector<Value> out;
        out.reserve(xs.size());
        for (const auto& x : xs) out.push_back(eval(*x));
        return out;
    }

    Value eval_node(const MakeList& n) { return Value::list(eval_all(n.elems)); }
    Value eval_node(const MakeTuple& n) { return Value::tuple(eval_all(n.elems)); }

    Value eval_node(const Index& n) {
        Value base = eval(*n.base);
        const auto i = want_int(eval(*n.index), "index");
        const auto& xs = want_list(base, "index");
        if (i < 0 || static_cast<std::uint64_t>(i) >= xs.size()) {
            fail(EvalErrorKind::IndexOutOfRange,
                 "index " + std::to_string(i) + " out of range for list of length " + std::to_string(xs.size()));
        }
        return xs[static_cast<std::size_t>(i)];
    }

    Value eval_node(const Project& n) {
        Value base = eval(*n.base);
        if (!base.is_tuple()) fail(EvalErrorKind::TypeError, std::string("projection expects tuple, got ") + kind_name(base.kind()));
        if (n.field >= base.items().size()) {
            fail(EvalErrorKind::IndexOutOfRange, "field ." + std::to_string(n.field) + " out of range for " +
                                                     std::to_string(base.items().size()) + "-tuple");
        }
        return base.items()[n.field];
    }

    Value eval_node(const Call& n) {
        std::vector<Value> args = eval_all(n.args);
        if (auto arity = builtin_arity(n.callee)) {
            if (*arity != args.size()) {
                fail(EvalErrorKind::ArityMismatch, "builtin '" + n.callee + "' expects " + std::to_string(*arity) +
                                                       " arguments, got " + std::to_string(args.size()));
            }
            return builtin(n.callee, args);
        }
        return invoke(n.callee, args);
    }

    Value builtin(const std::string& name, std::vector<Value>& args) {
        if (name == "len") return static_cast<std::int64_t>(want_list(args[0], "len").size());
        if (name == "min" || name == "max") {
            const auto a = want_int(args[0], name.c_str());
            const auto b = want_int(args[1], name.c_str());
            return name == "min" ? std::min(a, b) : std::max(a, b);
        }
        if (name == "append") {
            want_list(args[0], "append");
            charge(args[0].items().size());
            Value out = std::move(args[0]);
            out.items().push_back(std::move(args[1]));
            return out;
        }
        if (name == "concat") {
            want_list(args[0], "concat");
            want_list(args[1], "concat");
            charge(args[0].items().size() + args[1].items().size());
            Value out = std::move(args[0]);
            auto& ys = args[1].items();
            out.items().insert(out.items().end(), std::make_move_iterator(ys.begin()), std::make_move_iterator(ys.end()));
            return out;
        }
        // slice(xs, lo, hi): elements [lo, hi), both clamped into [0, len]
        const auto& xs = want_list(args[0], "slice");
        const auto n = static_cast<std::int64_t>(xs.size());
        auto lo = std::clamp<std::int64_t>(want_int(args[1], "slice"), 0, n);
        auto hi = std::clamp<std::int64_t>(want_int(args[2], "slice"), 0, n);
        if (hi < lo) hi = lo;
        charge(static_cast<std::uint64_t>(hi - lo));
        return Value::list(std::vector<Value>(xs.begin() + lo, xs.begin() + hi));
    }

    Value eval_node(const Fold& n) {
        const auto lo = want_int(eval(*n.lo), "fold bound");
        const auto hi = want_int(eval(*n.hi), "fold bound");
        Value acc = eval(*n.init);
        for (std::int64_t i = lo; i < hi; ++i) {
            charge();
            env_.emplace_back(&n.index_var, Value(i));
            env_.emplace_back(&n.acc_var, std::move(acc));
            Value next = eval(*n.body);
            env_.resize(env_.size() - 2);
            acc = std::move(next);
        }
        return acc;
    }

    const Program& program_;
    EvalOptions options_;
    std::uint64_t steps_ = 0;
    std::size_t base_ = 0;
    std::vector<std::pair<const std::string*, Value>> env_;
    std::vector<std::string> stack_;
};

/// Applies function `name` of `p` to `args`. Deterministic; throws
/// EvalError on any runtime failure.
inline Value eval_function(const Program& p, std::string_view name, std::span<const Value> args,
                           std::uint64_t fuel = kDefaultFuel, CallObserver* observer = nullptr) {
    if (fuel == 0) throw std::invalid_argument("fuel must be positive");
    Evaluator ev(p, EvalOptions{fuel, observer});
    return ev.call(name, args);
}

inline Value eval_function(const Program& p, std::string_view name, std::initializer_list<Value> args,
                           std::uint64_t fuel = kDefaultFuel) {
    return eval_function(p, name, std::span<const Value>(args.begin(), args.size()), fuel);
}

/// Evaluates a closed expression (no variables in scope). Calls resolve
/// against `p`.
inline Value eval_expression(const Expr& e, const Program& p = {}, std::uint64_t fuel = kDefaultFuel) {
    Evaluator ev(p, EvalOptions{fuel, nullptr});
    return ev.eval_closed(e);
}

}  // namespace pacr::dsl
