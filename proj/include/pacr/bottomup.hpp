#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "pacr/dsl.hpp"
#include "pacr/events.hpp"
#include "pacr/graph.hpp"
#include "pacr/rng.hpp"
#include "pacr/stats.hpp"

namespace pacr::bottomup {

struct Context {
    std::string text;
};

/// One candidate next vertex: the function, its parents J, and an example
/// validator taking (a_1, ..., a_r, y) and answering whether y is a
/// correct output for those arguments.
struct BUProposal {
    dsl::FunctionDef fn;
    std::vector<std::size_t> parents;
    dsl::FunctionDef ev;
};

struct ProposalClass {
    std::vector<BUProposal> proposals;

    std::size_t size() const { return proposals.size(); }
    bool empty() const { return proposals.empty(); }
};

/// Arity the vertex function of a proposal must have.
inline std::size_t expected_arity(const BUProposal& p) { return p.parents.empty() ? 1 : p.parents.size(); }

/// Empty string when `p` is well-formed for a graph of `graph_size`
/// vertices, otherwise a description of the problem.
inline std::string proposal_problem(const BUProposal& p, std::size_t graph_size) {
    if (graph_size == 0 && !p.parents.empty()) return "the first vertex takes no parents";
    if (graph_size > 0 && p.parents.empty()) return "only vertex 1 may be sourceless";
    for (std::size_t k = 0; k < p.parents.size(); ++k) {
        if (p.parents[k] < 1 || p.parents[k] > graph_size) return "parent index out of range";
        for (std::size_t q = 0; q < k; ++q) {
            if (p.parents[q] == p.parents[k]) return "duplicate parent";
        }
    }
    if (p.fn.arity() != expected_arity(p)) return "function arity does not match its parents";
    if (p.ev.arity() != p.fn.arity() + 1) return "validator must take the function's arguments plus the output";
    return {};
}

namespace detail {

// fn and ev bound together with the functions of the graph they extend.
class PreparedProposal {
public:
    PreparedProposal(const BUProposal& p, const graph::ComputationGraph& g) : proposal_(&p), env_(g.program()) {
        env_.define_or_replace(p.fn);
        env_.define_or_replace(p.ev);
    }

    bool holds(const graph::ExecutionTrace& trace, std::uint64_t fuel) const {
        try {
            auto args = graph::gather_inputs(trace, proposal_->parents);
            auto y = dsl::eval_function(env_, proposal_->fn.name, args, fuel);
            args.push_back(std::move(y));
            auto verdict = dsl::eval_function(env_, proposal_->ev.name, args, fuel);
            return verdict.is_bool() && verdict.as_bool();
        } catch (const dsl::EvalError&) {
            return false;
        }
    }

    /// Validator alone, on arguments and an already computed output.
    bool validates(std::vector<Value> args, Value y, std::uint64_t fuel) const {
        try {
            args.push_back(std::move(y));
            auto verdict = dsl::eval_function(env_, proposal_->ev.name, args, fuel);
            return verdict.is_bool() && verdict.as_bool();
        } catch (const dsl::EvalError&) {
            return false;
        }
    }

private:
    const BUProposal* proposal_;
    dsl::Program env_;
};

}  // namespace detail

/// Computes a(x) from the trace, y = fn(a(x)), and returns ev(a(x), y).
/// Any evaluation error (in fn or ev) counts as False.
inline bool ev_holds(const BUProposal& p, const graph::ExecutionTrace& trace,
                     const graph::ComputationGraph& candidate_graph, std::uint64_t fuel = dsl::kDefaultFuel) {
    return detail::PreparedProposal(p, candidate_graph).holds(trace, fuel);
}

/// Executes `g` on each sample, treating a failing execution as a sample on
/// which every proposal's validator fails.
inline std::vector<std::optional<graph::ExecutionTrace>> trace_samples(const graph::ComputationGraph& g,
                                                                       std::span<const Value> samples,
                                                                       std::uint64_t fuel) {
    std::vector<std::optional<graph::ExecutionTrace>> traces;
    traces.reserve(samples.size());
    for (const auto& x : samples) {
        try {
            traces.emplace_back(graph::execute_graph(g, x, fuel));
        } catch (const graph::VertexError&) {
            traces.emplace_back(std::nullopt);
        }
    }
    return traces;
}

/// survivors[i] is true iff proposal i's validator holds on every sample.
inline std::vector<bool> critic_mask(const ProposalClass& P, std::span<const Value> samples,
                                     const graph::ComputationGraph& g, std::uint64_t fuel = dsl::kDefaultFuel) {
    std::vector<bool> keep(P.size(), true);
    if (P.empty()) return keep;
    const auto traces = trace_samples(g, samples, fuel);
    for (std::size_t i = 0; i < P.size(); ++i) {
        const detail::PreparedProposal prepared(P.proposals[i], g);
        for (const auto& t : traces) {
            if (!t || !prepared.holds(*t, fuel)) {
                keep[i] = false;
                break;
            }
        }
    }
    return keep;
}

/// The critic: keeps exactly the proposals with zero validator failures
/// on the shared samples, in their original order.
inline ProposalClass critic_filter(const ProposalClass& P, std::span<const Value> samples,
                                   const graph::ComputationGraph& g, std::uint64_t fuel = dsl::kDefaultFuel) {
    const auto keep = critic_mask(P, samples, g, fuel);
    ProposalClass out;
    for (std::size_t i = 0; i < P.size(); ++i) {
        if (keep[i]) out.proposals.push_back(P.proposals[i]);
    }
    return out;
}

struct BUSearchNode {
    Context context;
    graph::ComputationGraph graph;
    std::size_t depth = 0;
    std::vector<BUProposal> path;  // proposal that created each vertex
};

/// Decides whether a completed graph is a correct decomposition of the
/// target, given the validators along its path.
using DecompositionOracle =
    std::function<bool(const graph::ComputationGraph&, std::span<const BUProposal> path)>;

class Actor {
public:
    virtual ~Actor() = default;
    virtual ProposalClass propose(const BUSearchNode& node) = 0;
    /// Whether the actor believes `node` is a complete decomposition, in
    /// which case the decomposition oracle is consulted.
    virtual bool calls_oracle(const BUSearchNode& node) { return !node.graph.empty(); }
};

/// Oracle that approves a graph iff, on every fresh sample where all the
/// path's validators pass, the final vertex output equals `reference(x)`.
/// `reference` is evaluated inside `reference_program`.
inline DecompositionOracle exact_oracle_from_ground_truth(std::shared_ptr<const dsl::Program> reference_program,
                                                          std::string reference, std::vector<Value> fresh_samples,
                                                          std::uint64_t fuel = dsl::kDefaultFuel) {
    return [program = std::move(reference_program), name = std::move(reference),
            samples = std::move(fresh_samples), fuel](const graph::ComputationGraph& g,
                                                      std::span<const BUProposal> path) {
        if (g.empty() || path.size() != g.size()) return false;
        std::vector<detail::PreparedProposal> prepared;
        prepared.reserve(path.size());
        for (const auto& p : path) prepared.emplace_back(p, g);
        for (const auto& x : samples) {
            graph::ExecutionTrace trace;
            try {
                trace = graph::execute_graph(g, x, fuel);
            } catch (const graph::VertexError&) {
                continue;  // some vertex fails, so its validator cannot pass
            }
            bool all_pass = true;
            for (std::size_t i = 0; i < path.size() && all_pass; ++i) {
                all_pass = prepared[i].validates(trace.vertex_inputs[i], trace.outputs[i], fuel);
            }
            if (!all_pass) continue;
            try {
                std::vector<Value> args{x};
                if (dsl::eval_function(*program, name, args, fuel) != trace.final_output()) return false;
            } catch (const dsl::EvalError&) {
                return false;
            }
        }
        return true;
    };
}

/// Convenience overload for a self-contained reference function.
inline DecompositionOracle exact_oracle_from_ground_truth(const dsl::FunctionDef& reference,
                                                          std::vector<Value> fresh_samples,
                                                          std::uint64_t fuel = dsl::kDefaultFuel) {
    auto p = std::make_shared<dsl::Program>();
    p->add(reference);
    return exact_oracle_from_ground_truth(std::move(p), reference.name, std::move(fresh_samples), fuel);
}

struct Accepted {
    graph::ComputationGraph graph;
    std::vector<BUProposal> path;
    Certificate certificate;
};

struct IDontKnow {
    std::string reason;
};

using BUOutcome = std::variant<Accepted, IDontKnow>;

enum class Strategy { DFS, BFS };

struct SearchLimits {
    std::size_t node_budget = 10'000;
    std::size_t proposal_cap = 200;
    std::uint64_t fuel = dsl::kDefaultFuel;
};

/// A target to approximate: the context handed to the actor and a sampler
/// of i.i.d. inputs, sample `index` being a pure function of (seed, index).
struct Problem {
    Context context;
    std::function<Value(std::uint64_t seed, std::uint64_t index)> draw;
};

struct BURun {
    BUOutcome outcome;
    EventLog events;
    std::uint64_t nodes_visited = 0;
};

inline nlohmann::ordered_json node_label(const graph::ComputationGraph& g) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& v : g.vertices()) {
        nlohmann::ordered_json jv;
        jv["fn"] = v.fn_name;
        jv["parents"] = v.parents;
        arr.push_back(std::move(jv));
    }
    return arr;
}

/// Critic sample stream of a run; the oracle's fresh samples use stream 1.
inline std::vector<Value> draw_samples(const Problem& problem, std::uint64_t seed, std::uint64_t stream,
                                       std::uint64_t count) {
    std::vector<Value> xs;
    xs.reserve(count);
    const auto stream_seed = derive_seed(seed, stream);
    for (std::uint64_t i = 0; i < count; ++i) xs.push_back(problem.draw(stream_seed, i));
    return xs;
}

/// Bottom-up search. One shared sample set of size budget.m is drawn up
/// front; each node's proposal class is filtered by the critic on it and
/// every survivor becomes a child, visited in proposal order (depth-first
/// or breadth-first). Returns Accepted at the first node the oracle
/// approves, IDontKnow when the tree or the node budget is exhausted.
/// Throws ActorProtocolError when the actor breaks its contract.
inline BURun run_bottom_up(const Problem& problem, Actor& actor, const DecompositionOracle& oracle,
                           const stats::PrecisionBudget& budget, Strategy strategy, std::uint64_t seed,
                           const SearchLimits& limits = {}) {
    BURun run;
    const auto samples = draw_samples(problem, seed, 0, budget.m);

    std::deque<BUSearchNode> frontier;
    frontier.push_back(BUSearchNode{problem.context, graph::ComputationGraph{}, 0, {}});
    std::uint64_t next_id = 0;

    while (!frontier.empty()) {
        if (run.nodes_visited >= limits.node_budget) {
            run.events.finished(next_id, "idontknow", "node budget exhausted");
            run.outcome = IDontKnow{"node budget of " + std::to_string(limits.node_budget) + " exhausted"};
            return run;
        }
        BUSearchNode node;
        if (strategy == Strategy::DFS) {
            node = std::move(frontier.back());
            frontier.pop_back();
        } else {
            node = std::move(frontier.front());
            frontier.pop_front();
        }
        const auto id = next_id++;
        ++run.nodes_visited;

        if (!node.graph.empty() && actor.calls_oracle(node)) {
            const bool approved = oracle(node.graph, node.path);
            run.events.oracle_verdict(id, approved);
            if (approved) {
                Certificate cert{budget.epsilon,
                                 budget.delta,
                                 budget.m,
                                 node.graph.size(),
                                 seed,
                                 budget.per_vertex_epsilon,
                                 budget.per_vertex_delta};
                run.events.finished(id, "accepted", "decomposition oracle approved");
                run.outcome = Accepted{node.graph, node.path, cert};
                return run;
            }
        }
        if (node.depth >= budget.k_max) {
            run.events.pruned(id, "depth limit k_max reached");
            continue;
        }

        auto P = actor.propose(node);
        if (P.size() > limits.proposal_cap) {
            throw ActorProtocolError("actor proposed " + std::to_string(P.size()) + " candidates, cap is " +
                                     std::to_string(limits.proposal_cap));
        }
        for (const auto& p : P.proposals) {
            if (auto why = proposal_problem(p, node.graph.size()); !why.empty()) {
                throw ActorProtocolError("malformed proposal '" + p.fn.name + "': " + why);
            }
        }
        const auto keep = critic_mask(P, samples, node.graph, limits.fuel);
        std::vector<BUSearchNode> children;
        for (std::size_t i = 0; i < P.size(); ++i) {
            if (!keep[i]) continue;
            BUSearchNode child;
            child.context = node.context;
            try {
                child.graph = graph::append_vertex(node.graph, P.proposals[i].fn, P.proposals[i].parents);
            } catch (const graph::GraphError& e) {
                throw ActorProtocolError(std::string("proposal cannot extend the graph: ") + e.what());
            }
            child.depth = node.depth + 1;
            child.path = node.path;
            child.path.push_back(P.proposals[i]);
            children.push_back(std::move(child));
        }
        run.events.node_expanded(id, node.depth, node_label(node.graph), P.size(), children.size());
        if (strategy == Strategy::DFS) {
            for (auto it = children.rbegin(); it != children.rend(); ++it) frontier.push_back(std::move(*it));
        } else {
            for (auto& c : children) frontier.push_back(std::move(c));
        }
    }
    run.events.finished(next_id, "idontknow", "search space exhausted");
    run.outcome = IDontKnow{"search space exhausted without an approved decomposition"};
    return run;
}

}  // namespace pacr::bottomup
