#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "pacr/bottomup.hpp"
#include "pacr/dsl.hpp"
#include "pacr/rng.hpp"
#include "pacr/topdown.hpp"

namespace pacr::harness {

/// A target function g with its input distribution. `ground_truth` is the
/// trusted reference (a self-contained function); `ev_for_g` judges
/// (x, y). Sample i of stream s is a pure function of (s, i).
struct TaskSpec {
    std::string name;
    std::string description;
    std::function<Value(std::uint64_t seed, std::uint64_t index)> input_generator;
    dsl::FunctionDef ground_truth;
    dsl::FunctionDef ev_for_g;

    Value sample(std::uint64_t seed, std::uint64_t index) const { return input_generator(seed, index); }

    bottomup::Problem bottom_up_problem() const { return {bottomup::Context{description}, input_generator}; }

    topdown::Problem top_down_problem() const {
        topdown::HelperSpec entry{name, ground_truth.params, ev_for_g, ground_truth};
        return {bottomup::Context{description}, std::move(entry), input_generator};
    }
};

/// Uniform integers in [lo, hi].
inline std::function<Value(std::uint64_t, std::uint64_t)> uniform_ints(std::int64_t lo, std::int64_t hi) {
    return [lo, hi](std::uint64_t seed, std::uint64_t index) {
        Rng rng(derive_seed(seed, index));
        return Value(rng.uniform_int(lo, hi));
    };
}

/// Lists with length uniform in [0, max_len] and elements uniform in [0, max_elem].
inline std::function<Value(std::uint64_t, std::uint64_t)> int_arrays(std::int64_t max_len, std::int64_t max_elem) {
    return [max_len, max_elem](std::uint64_t seed, std::uint64_t index) {
        Rng rng(derive_seed(seed, index));
        const auto n = rng.uniform_int(0, max_len);
        std::vector<Value> xs;
        xs.reserve(static_cast<std::size_t>(n));
        for (std::int64_t i = 0; i < n; ++i) xs.emplace_back(rng.uniform_int(0, max_elem));
        return Value::list(std::move(xs));
    };
}

namespace sources {

// Brute-force insertion sort, the trusted reference for sorting.
inline constexpr const char* kSortReference = R"(
fn sort_ref(arr) =
  fold i from 0 to len(arr) with out = [] do
    let v = arr[i] in
    let p = fold j from 0 to len(out) with c = 0 do if out[j] <= v then c + 1 else c end in
    concat(append(slice(out, 0, p), v), slice(out, p, len(out)))
  end
)";

// y is sorted and is a permutation of arr.
inline constexpr const char* kSortValidator = R"(
fn ev_sort(arr, y) =
  len(y) == len(arr)
  and fold i from 1 to len(y) with ok = true do ok and y[i - 1] <= y[i] end
  and fold i from 0 to len(arr) with ok = true do
        ok and fold j from 0 to len(arr) with c = 0 do if arr[j] == arr[i] then c + 1 else c end
             == fold j from 0 to len(y) with c = 0 do if y[j] == arr[i] then c + 1 else c end
      end
)";

inline constexpr const char* kMergeValidator = R"(
fn ev_merge(left, right, y) =
  let arr = concat(left, right) in
  len(y) == len(arr)
  and fold i from 1 to len(y) with ok = true do ok and y[i - 1] <= y[i] end
  and fold i from 0 to len(arr) with ok = true do
        ok and fold j from 0 to len(arr) with c = 0 do if arr[j] == arr[i] then c + 1 else c end
             == fold j from 0 to len(y) with c = 0 do if y[j] == arr[i] then c + 1 else c end
      end
)";

inline constexpr const char* kMergeReference = R"(
fn merge_ri(left, right) =
  let xs = concat(left, right) in
  fold i from 0 to len(xs) with out = [] do
    let v = xs[i] in
    let p = fold j from 0 to len(out) with c = 0 do if out[j] <= v then c + 1 else c end in
    concat(append(slice(out, 0, p), v), slice(out, p, len(out)))
  end
)";

// Bottom-up merge sort with doubling run width; calls merge on adjacent runs.
inline constexpr const char* kMergeSort = R"(
fn merge_sort(arr) =
  if len(arr) <= 1 then arr else
  let st = fold round from 0 to len(arr) with st = (arr, 1) do
    let a = st.0 in
    let size = st.1 in
    if size < len(a) then
      (fold pass from 0 to len(a) with b = a do
         let start = pass * size * 2 in
         if start < len(a) - size then
           let mid = start + size in
           let stop = min(start + 2 * size, len(a)) in
           concat(concat(slice(b, 0, start), merge(slice(b, start, mid), slice(b, mid, stop))), slice(b, stop, len(b)))
         else b
       end, size * 2)
    else st
  end in
  st.0
)";

// Same loop with the guard `size < len(a) - 1`: stops one round early when
// len(a) - 1 is a power of two, leaving e.g. [3, 1, 2] as [1, 3, 2].
inline constexpr const char* kMergeSortEarlyStop = R"(
fn merge_sort(arr) =
  if len(arr) <= 1 then arr else
  let st = fold round from 0 to len(arr) with st = (arr, 1) do
    let a = st.0 in
    let size = st.1 in
    if size < len(a) - 1 then
      (fold pass from 0 to len(a) with b = a do
         let start = pass * size * 2 in
         if start < len(a) - size then
           let mid = start + size in
           let stop = min(start + 2 * size, len(a)) in
           concat(concat(slice(b, 0, start), merge(slice(b, start, mid), slice(b, mid, stop))), slice(b, stop, len(b)))
         else b
       end, size * 2)
    else st
  end in
  st.0
)";

inline constexpr const char* kMergeSortIdentity = "fn merge_sort(arr) = arr";

inline constexpr const char* kMerge = R"(
fn merge(left, right) =
  let st = fold step from 0 to len(left) + len(right) with st = (0, 0, []) do
    let i = st.0 in
    let j = st.1 in
    if j >= len(right) or (i < len(left) and left[i] <= right[j])
    then (i + 1, j, append(st.2, left[i]))
    else (i, j + 1, append(st.2, right[j]))
  end in
  st.2
)";

inline constexpr const char* kMergeDropsLast = R"(
fn merge(left, right) =
  let st = fold step from 0 to len(left) + len(right) - 1 with st = (0, 0, []) do
    let i = st.0 in
    let j = st.1 in
    if j >= len(right) or (i < len(left) and left[i] <= right[j])
    then (i + 1, j, append(st.2, left[i]))
    else (i, j + 1, append(st.2, right[j]))
  end in
  st.2
)";

inline constexpr const char* kMergeConcat = "fn merge(left, right) = concat(left, right)";

}  // namespace sources

inline dsl::FunctionDef fn(const char* text) { return dsl::parse_function(text); }

/// Sorting arrays of length 0..16 with elements 0..99.
inline TaskSpec merge_sort_task() {
    TaskSpec t;
    t.name = "merge_sort";
    t.description = "Sort a list of integers in ascending order.";
    t.input_generator = int_arrays(16, 99);
    t.ground_truth = topdown::TDNode::as_named(fn(sources::kSortReference), "merge_sort");
    t.ev_for_g = fn(sources::kSortValidator);
    return t;
}

inline topdown::HelperSpec merge_helper_spec() {
    return topdown::HelperSpec{"merge", {"left", "right"}, fn(sources::kMergeValidator), fn(sources::kMergeReference)};
}

/// Offers, per target, a fixed list of proposals in declaration order.
class ScriptedTopDownActor : public topdown::Actor {
public:
    explicit ScriptedTopDownActor(std::map<std::string, std::vector<topdown::TDProposal>> script)
        : script_(std::move(script)) {}

    std::vector<topdown::TDProposal> propose(const topdown::TDNode&, const std::string& target) override {
        auto it = script_.find(target);
        return it == script_.end() ? std::vector<topdown::TDProposal>{} : it->second;
    }

private:
    std::map<std::string, std::vector<topdown::TDProposal>> script_;
};

/// merge_sort first (early-stopping variant, identity, then the correct
/// two-function decomposition), then merge (drops last element, plain
/// concatenation, then a correct merge).
inline ScriptedTopDownActor merge_sort_actor() {
    const auto merge = merge_helper_spec();
    std::map<std::string, std::vector<topdown::TDProposal>> script;
    script["merge_sort"] = {
        {"merge_sort", fn(sources::kMergeSortEarlyStop), {merge}},
        {"merge_sort", fn(sources::kMergeSortIdentity), {}},
        {"merge_sort", fn(sources::kMergeSort), {merge}},
    };
    script["merge"] = {
        {"merge", fn(sources::kMergeDropsLast), {}},
        {"merge", fn(sources::kMergeConcat), {}},
        {"merge", fn(sources::kMerge), {}},
    };
    return ScriptedTopDownActor(std::move(script));
}

/// Absolute value over [-1000, 1000]; implementable with no helpers.
inline TaskSpec abs_task() {
    TaskSpec t;
    t.name = "abs";
    t.description = "Absolute value of an integer.";
    t.input_generator = uniform_ints(-1000, 1000);
    t.ground_truth = fn("fn abs(x) = max(x, -x)");
    t.ev_for_g = fn("fn ev_abs(x, y) = y >= 0 and (y == x or y == -x)");
    return t;
}

inline ScriptedTopDownActor abs_actor() {
    std::map<std::string, std::vector<topdown::TDProposal>> script;
    script["abs"] = {
        {"abs", fn("fn abs(x) = x"), {}},
        {"abs", fn("fn abs(x) = if x < -999 then x else (if x < 0 then -x else x)"), {}},
        {"abs", fn("fn abs(x) = if x < 0 then -x else x"), {}},
    };
    return ScriptedTopDownActor(std::move(script));
}

/// g(x) = 2(x + 1) + 3 over [0, 999]: three unary steps.
inline TaskSpec arith_pipeline_task() {
    TaskSpec t;
    t.name = "arith_pipeline";
    t.description = "Compute 2 * (x + 1) + 3 for an integer x.";
    t.input_generator = uniform_ints(0, 999);
    t.ground_truth = fn("fn arith_pipeline(x) = 2 * (x + 1) + 3");
    t.ev_for_g = fn("fn ev_arith_pipeline(x, y) = y == 2 * (x + 1) + 3");
    return t;
}

/// g(x) = 2(x + 1) over [0, 999]: two unary steps.
inline TaskSpec arith_pair_task() {
    TaskSpec t;
    t.name = "arith_pair";
    t.description = "Compute 2 * (x + 1) for an integer x.";
    t.input_generator = uniform_ints(0, 999);
    t.ground_truth = fn("fn arith_pair(x) = 2 * (x + 1)");
    t.ev_for_g = fn("fn ev_arith_pair(x, y) = y == 2 * (x + 1)");
    return t;
}

/// g(x) = x * x over [0, 999]: not expressible with the enumerative
/// actor's affine steps.
inline TaskSpec square_task() {
    TaskSpec t;
    t.name = "square";
    t.description = "Compute x * x for an integer x.";
    t.input_generator = uniform_ints(0, 999);
    t.ground_truth = fn("fn square(x) = x * x");
    t.ev_for_g = fn("fn ev_square(x, y) = y == x * x");
    return t;
}

/// Enumerates affine steps (add c for c in 1..3, multiply by 2 or 3), each
/// with a correct and a subtly wrong implementation, applied to every
/// existing vertex, plus the sum of any two vertices.
class EnumerativeArithmeticActor : public bottomup::Actor {
public:
    bottomup::ProposalClass propose(const bottomup::BUSearchNode& node) override {
        bottomup::ProposalClass P;
        const std::size_t k = node.graph.size();
        std::vector<std::vector<std::size_t>> unary_parents;
        if (k == 0) unary_parents.push_back({});
        for (std::size_t j = 1; j <= k; ++j) unary_parents.push_back({j});
        for (const auto& parents : unary_parents) {
            for (const auto& op : ops()) {
                P.proposals.push_back({op.correct, parents, op.ev});
                P.proposals.push_back({op.faulty, parents, op.ev});
            }
        }
        for (std::size_t a = 1; a <= k; ++a) {
            for (std::size_t b = a + 1; b <= k; ++b) {
                P.proposals.push_back({fn("fn sum2(a, b) = a + b"), {a, b}, fn("fn ev_sum2(a, b, y) = y == a + b")});
            }
        }
        return P;
    }

    /// Largest class this actor emits for graphs of up to k_max vertices.
    static std::size_t max_class_size(std::size_t k_max) {
        // proposals are only requested below depth k_max
        const std::size_t k = k_max == 0 ? 0 : k_max - 1;
        const std::size_t pairs = k < 2 ? 0 : k * (k - 1) / 2;
        return 2 * ops().size() * std::max<std::size_t>(k, 1) + pairs;
    }

private:
    struct Op {
        dsl::FunctionDef correct;
        dsl::FunctionDef faulty;
        dsl::FunctionDef ev;
    };

    static const std::vector<Op>& ops() {
        static const std::vector<Op> kOps = [] {
            std::vector<Op> v;
            for (int c = 1; c <= 3; ++c) {
                const auto s = std::to_string(c);
                v.push_back({fn(("fn add" + s + "(x) = x + " + s).c_str()),
                             fn(("fn add" + s + "_alt(x) = if x % 7 == 3 then x + " + s + " + 1 else x + " + s).c_str()),
                             fn(("fn ev_add" + s + "(x, y) = y == x + " + s).c_str())});
            }
            for (int c = 2; c <= 3; ++c) {
                const auto s = std::to_string(c);
                v.push_back({fn(("fn mul" + s + "(x) = x * " + s).c_str()),
                             fn(("fn mul" + s + "_alt(x) = if x > 1500 then x * " + s + " - 1 else x * " + s).c_str()),
                             fn(("fn ev_mul" + s + "(x, y) = y == x * " + s).c_str())});
            }
            return v;
        }();
        return kOps;
    }
};

/// Proposes only functions whose validators reject them.
class HopelessActor : public bottomup::Actor {
public:
    bottomup::ProposalClass propose(const bottomup::BUSearchNode& node) override {
        std::vector<std::size_t> parents;
        if (!node.graph.empty()) parents.push_back(node.graph.size());
        return {{{fn("fn off_by_one(x) = x + 2"), parents, fn("fn ev_off_by_one(x, y) = y == x + 1")}}};
    }
};

}  // namespace pacr::harness
