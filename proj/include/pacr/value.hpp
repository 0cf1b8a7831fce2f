#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace pacr {

class Value;

struct ListValue {
    std::vector<Value> items;
};

struct TupleValue {
    std::vector<Value> items;
};

enum class ValueKind { Int, Bool, List, Tuple };

inline const char* kind_name(ValueKind k) {
    switch (k) {
        case ValueKind::Int: return "int";
        case ValueKind::Bool: return "bool";
        case ValueKind::List: return "list";
        case ValueKind::Tuple: return "tuple";
    }
    return "?";
}

/// A runtime value of the expression language: a signed 64-bit integer, a
/// boolean, or a finite list/tuple of values. Values are plain trees with
/// structural equality and a total order (kind first, then contents).
class Value {
public:
    using Storage = std::variant<std::int64_t, bool, ListValue, TupleValue>;

    Value() : data_(std::int64_t{0}) {}
    Value(std::int64_t v) : data_(v) {}          // NOLINT(google-explicit-constructor)
    Value(int v) : data_(std::int64_t{v}) {}     // NOLINT(google-explicit-constructor)
    Value(bool v) : data_(v) {}                  // NOLINT(google-explicit-constructor)
    Value(ListValue v) : data_(std::move(v)) {}  // NOLINT(google-explicit-constructor)
    Value(TupleValue v) : data_(std::move(v)) {} // NOLINT(google-explicit-constructor)

    static Value list(std::vector<Value> items = {}) { return Value(ListValue{std::move(items)}); }
    static Value tuple(std::vector<Value> items = {}) { return Value(TupleValue{std::move(items)}); }

    ValueKind kind() const { return static_cast<ValueKind>(data_.index()); }
    bool is_int() const { return kind() == ValueKind::Int; }
    bool is_bool() const { return kind() == ValueKind::Bool; }
    bool is_list() const { return kind() == ValueKind::List; }
    bool is_tuple() const { return kind() == ValueKind::Tuple; }

    std::int64_t as_int() const { return std::get<std::int64_t>(data_); }
    bool as_bool() const { return std::get<bool>(data_); }
    const std::vector<Value>& items() const {
        if (is_list()) return std::get<ListValue>(data_).items;
        return std::get<TupleValue>(data_).items;
    }
    std::vector<Value>& items() {
        if (is_list()) return std::get<ListValue>(data_).items;
        return std::get<TupleValue>(data_).items;
    }

    const Storage& storage() const { return data_; }

    friend std::strong_ordering operator<=>(const Value& a, const Value& b);
    friend bool operator==(const Value& a, const Value& b) { return (a <=> b) == 0; }

private:
    Storage data_;
};

inline std::strong_ordering operator<=>(const Value& a, const Value& b) {
    if (a.kind() != b.kind()) return a.data_.index() <=> b.data_.index();
    switch (a.kind()) {
        case ValueKind::Int: return a.as_int() <=> b.as_int();
        case ValueKind::Bool: return a.as_bool() <=> b.as_bool();
        default: break;
    }
    const auto& xs = a.items();
    const auto& ys = b.items();
    const std::size_t n = std::min(xs.size(), ys.size());
    for (std::size_t i = 0; i < n; ++i) {
        if (auto c = xs[i] <=> ys[i]; c != 0) return c;
    }
    return xs.size() <=> ys.size();
}

/// Renders a value in the literal syntax of the expression language, so
/// the text can be fed back to the parser as a closed expression.
inline void append_value(std::string& out, const Value& v) {
    switch (v.kind()) {
        case ValueKind::Int: out += std::to_string(v.as_int()); return;
        case ValueKind::Bool: out += v.as_bool() ? "true" : "false"; return;
        case ValueKind::List:
        case ValueKind::Tuple: break;
    }
    const bool is_list = v.is_list();
    out += is_list ? '[' : '(';
    const auto& xs = v.items();
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i) out += ", ";
        append_value(out, xs[i]);
    }
    if (!is_list && xs.size() == 1) out += ',';
    out += is_list ? ']' : ')';
}

inline std::string to_string(const Value& v) {
    std::string s;
    append_value(s, v);
    return s;
}

inline Value int_list(std::initializer_list<std::int64_t> xs) {
    std::vector<Value> items;
    items.reserve(xs.size());
    for (auto x : xs) items.emplace_back(x);
    return Value::list(std::move(items));
}

}  // namespace pacr
