#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>

#include "pacr/dsl.hpp"
#include "pacr/graph.hpp"
#include "pacr/harness/tasks.hpp"
#include "pacr/rng.hpp"

namespace pacr::harness {

/// Stream of a run's seed reserved for held-out evaluation (the critic
/// uses 0 and the decomposition oracle 1).
inline constexpr std::uint64_t kHeldOutStream = 2;

namespace detail {

inline double mismatch_rate(const TaskSpec& task, std::uint64_t n, std::uint64_t seed, std::uint64_t fuel,
                            const std::function<Value(const Value&)>& candidate) {
    if (n == 0) throw std::invalid_argument("estimate_error needs at least one sample");
    dsl::Program truth;
    truth.add(task.ground_truth);
    const auto stream = derive_seed(seed, kHeldOutStream);
    std::uint64_t wrong = 0;
    for (std::uint64_t i = 0; i < n; ++i) {
        const auto x = task.sample(stream, i);
        const auto expected = dsl::eval_function(truth, task.ground_truth.name, {x}, fuel);
        try {
            if (candidate(x) != expected) ++wrong;
        } catch (const dsl::EvalError&) {
            ++wrong;
        } catch (const graph::VertexError&) {
            ++wrong;
        }
    }
    return static_cast<double>(wrong) / static_cast<double>(n);
}

}  // namespace detail

/// Fraction of n held-out samples on which program's `entry` disagrees
/// with the task's ground truth (a failing evaluation counts as a
/// disagreement).
inline double estimate_error(const dsl::Program& program, const std::string& entry, const TaskSpec& task,
                             std::uint64_t n, std::uint64_t seed, std::uint64_t fuel = dsl::kDefaultFuel) {
    return detail::mismatch_rate(task, n, seed, fuel,
                                 [&](const Value& x) { return dsl::eval_function(program, entry, {x}, fuel); });
}

/// Same for a computation graph, comparing its final vertex output.
inline double estimate_error(const graph::ComputationGraph& g, const TaskSpec& task, std::uint64_t n,
                             std::uint64_t seed, std::uint64_t fuel = dsl::kDefaultFuel) {
    if (g.empty()) throw std::invalid_argument("cannot estimate the error of an empty graph");
    return detail::mismatch_rate(task, n, seed, fuel,
                                 [&](const Value& x) { return graph::execute_graph(g, x, fuel).final_output(); });
}

}  // namespace pacr::harness
