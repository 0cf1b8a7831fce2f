#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "pacr/bottomup.hpp"
#include "pacr/dsl.hpp"
#include "pacr/events.hpp"
#include "pacr/rng.hpp"
#include "pacr/stats.hpp"

namespace pacr::topdown {

/// A declared function: its signature, the example validator judging
/// (args..., output) and a trusted (possibly brute-force) reference
/// implementation used until a real body is accepted. Validators and
/// reference implementations may call builtins only.
struct HelperSpec {
    std::string name;
    std::vector<std::string> params;
    dsl::FunctionDef ev;
    dsl::FunctionDef ri;

    std::size_t arity() const { return params.size(); }
};

/// Implementation of `target` (a name in U), possibly introducing helpers.
struct TDProposal {
    std::string target;
    dsl::FunctionDef body;
    std::vector<HelperSpec> new_helpers;
};

class TDError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Search node labelled by the implemented set I and the declared but
/// unimplemented set U. The program holds bodies for I and declarations
/// for U; specs holds the validator and reference implementation of every
/// name ever declared.
class TDNode {
public:
    static TDNode root(HelperSpec entry) {
        check_spec(entry);
        TDNode n;
        n.entry_ = entry.name;
        n.unimplemented_.insert(entry.name);
        n.order_.push_back(entry.name);
        n.program_.declare(dsl::FunctionDecl{entry.name, entry.params});
        n.specs_.emplace(entry.name, std::move(entry));
        return n;
    }

    const std::string& entry() const { return entry_; }
    const std::set<std::string>& implemented() const { return implemented_; }
    const std::set<std::string>& unimplemented() const { return unimplemented_; }
    const dsl::Program& program() const { return program_; }
    const std::map<std::string, HelperSpec>& specs() const { return specs_; }
    const HelperSpec& spec(const std::string& name) const { return specs_.at(name); }
    bool terminal() const { return unimplemented_.empty(); }
    std::size_t function_count() const { return implemented_.size() + unimplemented_.size(); }

    /// FIFO choice: the earliest-declared name still in U.
    std::optional<std::string> next_target() const {
        for (const auto& n : order_) {
            if (unimplemented_.count(n)) return n;
        }
        return std::nullopt;
    }

    /// Program that runs the node: bodies for I, reference implementations
    /// installed under their declared names for U.
    dsl::Program execution_program() const {
        dsl::Program p;
        for (const auto& [name, f] : program_.functions()) p.add(f);
        for (const auto& name : unimplemented_) p.add(as_named(specs_.at(name).ri, name));
        return p;
    }

    nlohmann::ordered_json label() const {
        nlohmann::ordered_json j;
        j["I"] = std::vector<std::string>(implemented_.begin(), implemented_.end());
        j["U"] = std::vector<std::string>(unimplemented_.begin(), unimplemented_.end());
        return j;
    }

    static dsl::FunctionDef as_named(const dsl::FunctionDef& f, const std::string& name) {
        return dsl::FunctionDef{name, f.params, f.body};
    }

private:
    friend TDNode expand_td_node(const TDNode& node, const TDProposal& proposal);

    static void check_spec(const HelperSpec& s) {
        if (s.ri.arity() != s.arity()) throw TDError("reference implementation of '" + s.name + "' has wrong arity");
        if (s.ev.arity() != s.arity() + 1) throw TDError("validator of '" + s.name + "' must take arity+1 arguments");
    }

    std::string entry_;
    std::set<std::string> implemented_;
    std::set<std::string> unimplemented_;
    std::vector<std::string> order_;
    dsl::Program program_;
    std::map<std::string, HelperSpec> specs_;
};

/// Child node: the target moves from U to I with the proposed body; new
/// helpers join U with their validators and reference implementations.
inline TDNode expand_td_node(const TDNode& node, const TDProposal& proposal) {
    const auto& target = proposal.target;
    if (!node.unimplemented_.count(target)) throw TDError("'" + target + "' is not an unimplemented function");
    if (proposal.body.name != target) throw TDError("proposal body is named '" + proposal.body.name + "'");
    if (proposal.body.arity() != node.specs_.at(target).arity()) {
        throw TDError("body of '" + target + "' has the wrong arity");
    }
    std::set<std::string> fresh;
    for (const auto& h : proposal.new_helpers) {
        if (dsl::is_builtin(h.name)) throw TDError("helper name '" + h.name + "' is a builtin");
        if (node.implemented_.count(h.name) || node.unimplemented_.count(h.name) || !fresh.insert(h.name).second) {
            throw TDError("helper name '" + h.name + "' collides with an existing function");
        }
        TDNode::check_spec(h);
    }
    TDNode child = node;
    child.unimplemented_.erase(target);
    child.implemented_.insert(target);
    child.program_.define_or_replace(proposal.body);
    for (const auto& h : proposal.new_helpers) {
        child.unimplemented_.insert(h.name);
        child.order_.push_back(h.name);
        child.program_.declare(dsl::FunctionDecl{h.name, h.params});
        child.specs_.emplace(h.name, h);
    }
    try {
        dsl::validate_program(child.program_);
    } catch (const dsl::ProgramError& e) {
        throw TDError(std::string("expanded program is invalid: ") + e.what());
    }
    return child;
}

/// S(x) per function: the distinct argument tuples of all calls made while
/// running on x, plus raw call counts.
struct CallLog {
    std::map<std::string, std::set<std::vector<Value>>> calls;
    std::map<std::string, std::uint64_t> counts;

    const std::set<std::vector<Value>>& inputs(const std::string& fn) const {
        static const std::set<std::vector<Value>> kNone;
        auto it = calls.find(fn);
        return it == calls.end() ? kNone : it->second;
    }
    std::uint64_t count(const std::string& fn) const {
        auto it = counts.find(fn);
        return it == counts.end() ? 0 : it->second;
    }
    friend bool operator==(const CallLog&, const CallLog&) = default;
};

struct LoggedRun {
    std::optional<Value> output;
    CallLog log;
    std::optional<dsl::EvalError> error;

    /// Function on top of the call stack when the run failed.
    std::optional<std::string> failed_function() const {
        if (!error || error->call_path().empty()) return std::nullopt;
        return std::string(error->failing_function());
    }
};

namespace detail {

class LoggingObserver : public dsl::CallObserver {
public:
    explicit LoggingObserver(CallLog& log) : log_(log) {}
    void on_call(std::string_view callee, std::span<const Value> args) override {
        std::string name(callee);
        log_.calls[name].emplace(args.begin(), args.end());
        ++log_.counts[name];
    }

private:
    CallLog& log_;
};

inline LoggedRun run_logged(const dsl::Program& exec, const std::string& entry, const Value& x, std::uint64_t fuel) {
    LoggedRun r;
    LoggingObserver obs(r.log);
    try {
        std::vector<Value> args{x};
        r.output = dsl::eval_function(exec, entry, args, fuel, &obs);
    } catch (const dsl::EvalError& e) {
        r.error = e;
    }
    return r;
}

}  // namespace detail

/// Runs the node's entry function on x, dispatching calls to names in U to
/// their reference implementations and logging every call.
inline LoggedRun run_with_logging(const TDNode& node, const Value& x, std::uint64_t fuel = dsl::kDefaultFuel) {
    return detail::run_logged(node.execution_program(), node.entry(), x, fuel);
}

namespace detail {

// A proposal's body installed over the node's execution program (helpers
// it introduces run on their reference implementations) and the target's
// validator in a program of its own.
class PreparedTDProposal {
public:
    PreparedTDProposal(const TDNode& node, const TDProposal& p) : target_(p.target) {
        env_ = node.execution_program();
        env_.define_or_replace(p.body);
        for (const auto& h : p.new_helpers) env_.define_or_replace(TDNode::as_named(h.ri, h.name));
        const auto& ev = node.spec(p.target).ev;
        ev_name_ = ev.name;
        ev_env_.add(ev);
    }

    bool holds_on(const std::vector<Value>& s, std::uint64_t fuel) const {
        try {
            auto y = dsl::eval_function(env_, target_, s, fuel);
            auto args = s;
            args.push_back(std::move(y));
            auto v = dsl::eval_function(ev_env_, ev_name_, args, fuel);
            return v.is_bool() && v.as_bool();
        } catch (const dsl::EvalError&) {
            return false;
        }
    }

    bool holds_on_all(const LoggedRun& run, std::uint64_t fuel) const {
        if (auto f = run.failed_function(); f && *f == target_) return false;
        for (const auto& s : run.log.inputs(target_)) {
            if (!holds_on(s, fuel)) return false;
        }
        return true;
    }

private:
    std::string target_;
    dsl::Program env_;
    std::string ev_name_;
    dsl::Program ev_env_;
};

}  // namespace detail

/// Logging runs of `node` over a sample set; shared by every proposal
/// filtered at that node.
inline std::vector<LoggedRun> log_samples(const TDNode& node, std::span<const Value> samples,
                                          std::uint64_t fuel = dsl::kDefaultFuel) {
    const auto exec = node.execution_program();
    std::vector<LoggedRun> runs;
    runs.reserve(samples.size());
    for (const auto& x : samples) runs.push_back(detail::run_logged(exec, node.entry(), x, fuel));
    return runs;
}

inline std::vector<bool> critic_mask_td(std::span<const TDProposal> P, std::span<const LoggedRun> runs,
                                        const TDNode& node, std::uint64_t fuel = dsl::kDefaultFuel) {
    for (const auto& p : P) {
        if (!node.unimplemented().count(p.target)) {
            throw ActorProtocolError("proposal targets '" + p.target + "', which is not in U");
        }
    }
    std::vector<bool> keep(P.size(), true);
    for (std::size_t i = 0; i < P.size(); ++i) {
        const detail::PreparedTDProposal prepared(node, P[i]);
        for (const auto& r : runs) {
            if (!prepared.holds_on_all(r, fuel)) {
                keep[i] = false;
                break;
            }
        }
    }
    return keep;
}

/// The top-down critic: keeps exactly the proposals whose implementation
/// passes the target's validator on every logged call tuple for every
/// sample. A target never called on any sample survives vacuously.
inline std::vector<TDProposal> critic_filter_td(std::span<const TDProposal> P, std::span<const Value> samples,
                                                const TDNode& node, std::uint64_t fuel = dsl::kDefaultFuel) {
    for (const auto& p : P) {
        if (!node.unimplemented().count(p.target)) {
            throw ActorProtocolError("proposal targets '" + p.target + "', which is not in U");
        }
    }
    const auto runs = log_samples(node, samples, fuel);
    const auto keep = critic_mask_td(P, runs, node, fuel);
    std::vector<TDProposal> out;
    for (std::size_t i = 0; i < P.size(); ++i) {
        if (keep[i]) out.push_back(P[i]);
    }
    return out;
}

class Actor {
public:
    virtual ~Actor() = default;
    /// Proposals implementing `target` (a name in node's U).
    virtual std::vector<TDProposal> propose(const TDNode& node, const std::string& target) = 0;
};

struct Problem {
    bottomup::Context context;
    HelperSpec entry;  // g: its validator and trusted reference
    std::function<Value(std::uint64_t seed, std::uint64_t index)> draw;
};

struct Accepted {
    dsl::Program program;
    std::string entry;
    Certificate certificate;
};

using IDontKnow = bottomup::IDontKnow;
using TDOutcome = std::variant<Accepted, IDontKnow>;

struct TDRun {
    TDOutcome outcome;
    EventLog events;
    std::uint64_t nodes_visited = 0;
};

/// Top-down search from {I = {}, U = {g}}. Samples are drawn once and
/// shared by every expansion. Children whose |I| + |U| would exceed k_max
/// are pruned. Accepts at the first node with U empty.
inline TDRun run_top_down(const Problem& problem, Actor& actor, const stats::PrecisionBudget& budget,
                          std::uint64_t seed, const bottomup::SearchLimits& limits = {},
                          bottomup::Strategy strategy = bottomup::Strategy::DFS) {
    TDRun run;
    std::vector<Value> samples;
    samples.reserve(budget.m);
    const auto stream = derive_seed(seed, 0);
    for (std::uint64_t i = 0; i < budget.m; ++i) samples.push_back(problem.draw(stream, i));

    std::deque<TDNode> frontier;
    frontier.push_back(TDNode::root(problem.entry));
    std::uint64_t next_id = 0;

    while (!frontier.empty()) {
        if (run.nodes_visited >= limits.node_budget) {
            run.events.finished(next_id, "idontknow", "node budget exhausted");
            run.outcome = IDontKnow{"node budget of " + std::to_string(limits.node_budget) + " exhausted"};
            return run;
        }
        TDNode node;
        if (strategy == bottomup::Strategy::DFS) {
            node = std::move(frontier.back());
            frontier.pop_back();
        } else {
            node = std::move(frontier.front());
            frontier.pop_front();
        }
        const auto id = next_id++;
        ++run.nodes_visited;

        if (node.terminal()) {
            Certificate cert{budget.epsilon,
                             budget.delta,
                             budget.m,
                             node.implemented().size(),
                             seed,
                             budget.per_vertex_epsilon,
                             budget.per_vertex_delta};
            run.events.finished(id, "accepted", "all declared functions implemented");
            run.outcome = Accepted{node.program(), node.entry(), cert};
            return run;
        }

        const auto target = *node.next_target();
        auto P = actor.propose(node, target);
        if (P.size() > limits.proposal_cap) {
            throw ActorProtocolError("actor proposed " + std::to_string(P.size()) + " candidates, cap is " +
                                     std::to_string(limits.proposal_cap));
        }
        for (const auto& p : P) {
            if (p.target != target) {
                throw ActorProtocolError("proposal targets '" + p.target + "' but '" + target + "' was requested");
            }
        }
        const auto runs = log_samples(node, samples, limits.fuel);
        const auto keep = critic_mask_td(P, runs, node, limits.fuel);
        std::vector<TDNode> children;
        std::size_t survivors = 0;
        for (std::size_t i = 0; i < P.size(); ++i) {
            if (!keep[i]) continue;
            ++survivors;
            TDNode child;
            try {
                child = expand_td_node(node, P[i]);
            } catch (const TDError& e) {
                throw ActorProtocolError(std::string("proposal cannot expand the node: ") + e.what());
            }
            if (child.function_count() > budget.k_max) {
                run.events.pruned(id, "child would exceed k_max functions");
                continue;
            }
            children.push_back(std::move(child));
        }
        run.events.node_expanded(id, node.implemented().size(), node.label(), P.size(), survivors);
        if (strategy == bottomup::Strategy::DFS) {
            for (auto it = children.rbegin(); it != children.rend(); ++it) frontier.push_back(std::move(*it));
        } else {
            for (auto& c : children) frontier.push_back(std::move(c));
        }
    }
    run.events.finished(next_id, "idontknow", "search space exhausted");
    run.outcome = IDontKnow{"search space exhausted without a complete implementation"};
    return run;
}

}  // namespace pacr::topdown
