#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "pacr/dsl.hpp"

namespace pacr::graph {

/// Vertex `index` (1-based) computes `fn_name` applied to the outputs of
/// its parents, in parent-list order. Vertex 1 takes the graph input.
struct Vertex {
    std::size_t index = 0;
    std::string fn_name;
    std::vector<std::size_t> parents;

    friend bool operator==(const Vertex&, const Vertex&) = default;
};

enum class ViolationKind {
    Empty,
    BadIndex,
    SourceHasParents,
    Sourceless,
    ParentNotBefore,
    DuplicateParent,
    UnknownFunction,
    ArityMismatch,
};

struct Violation {
    ViolationKind kind;
    std::size_t vertex;  // 0 when the violation concerns the whole graph
    std::string message;
};

class GraphError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A computation graph under construction: vertices in topological order
/// plus the program that defines every vertex function. Copies share the
/// program; appending never mutates an existing graph.
class ComputationGraph {
public:
    ComputationGraph() : program_(std::make_shared<const dsl::Program>()) {}
    explicit ComputationGraph(dsl::Program program, std::vector<Vertex> vertices = {})
        : program_(std::make_shared<const dsl::Program>(std::move(program))), vertices_(std::move(vertices)) {}
    ComputationGraph(std::shared_ptr<const dsl::Program> program, std::vector<Vertex> vertices)
        : program_(std::move(program)), vertices_(std::move(vertices)) {}

    const dsl::Program& program() const { return *program_; }
    const std::shared_ptr<const dsl::Program>& program_ptr() const { return program_; }
    const std::vector<Vertex>& vertices() const { return vertices_; }
    std::size_t size() const { return vertices_.size(); }
    bool empty() const { return vertices_.empty(); }
    const Vertex& vertex(std::size_t index) const { return vertices_.at(index - 1); }

    friend bool operator==(const ComputationGraph& a, const ComputationGraph& b) {
        return a.vertices_ == b.vertices_ && *a.program_ == *b.program_;
    }

private:
    std::shared_ptr<const dsl::Program> program_;
    std::vector<Vertex> vertices_;
};

/// Returns the first violated structural invariant, or nullopt when the
/// graph is a well-formed computation graph.
inline std::optional<Violation> validate_graph(const ComputationGraph& g) {
    auto bad = [](ViolationKind k, std::size_t v, std::string msg) {
        return Violation{k, v, "vertex " + std::to_string(v) + ": " + std::move(msg)};
    };
    if (g.empty()) return Violation{ViolationKind::Empty, 0, "graph has no vertices"};
    for (std::size_t pos = 0; pos < g.size(); ++pos) {
        const auto& v = g.vertices()[pos];
        const std::size_t i = pos + 1;
        if (v.index != i) return bad(ViolationKind::BadIndex, i, "index field is " + std::to_string(v.index));
        if (i == 1 && !v.parents.empty()) return bad(ViolationKind::SourceHasParents, i, "vertex 1 takes no parents");
        if (i > 1 && v.parents.empty()) {
            return bad(ViolationKind::Sourceless, i, "only vertex 1 may be sourceless");
        }
        for (std::size_t k = 0; k < v.parents.size(); ++k) {
            const auto p = v.parents[k];
            if (p < 1 || p >= i) {
                return bad(ViolationKind::ParentNotBefore, i, "parent " + std::to_string(p) + " not < index");
            }
            for (std::size_t q = 0; q < k; ++q) {
                if (v.parents[q] == p) {
                    return bad(ViolationKind::DuplicateParent, i, "parent " + std::to_string(p) + " listed twice");
                }
            }
        }
        const auto* fn = g.program().find(v.fn_name);
        if (!fn) return bad(ViolationKind::UnknownFunction, i, "no function named '" + v.fn_name + "'");
        const std::size_t want = i == 1 ? 1 : v.parents.size();
        if (fn->arity() != want) {
            return bad(ViolationKind::ArityMismatch, i,
                       "'" + v.fn_name + "' has arity " + std::to_string(fn->arity()) + ", expected " +
                           std::to_string(want));
        }
    }
    return std::nullopt;
}

/// Outputs o_1(x)..o_k(x) and the argument tuple each vertex received.
struct ExecutionTrace {
    Value input;
    std::vector<std::vector<Value>> vertex_inputs;
    std::vector<Value> outputs;

    const Value& output(std::size_t index) const { return outputs.at(index - 1); }
    const Value& final_output() const { return outputs.back(); }
};

/// A vertex function failed; carries the vertex and the evaluator error.
class VertexError : public std::runtime_error {
public:
    VertexError(std::size_t vertex, dsl::EvalError error)
        : std::runtime_error("vertex " + std::to_string(vertex) + ": " + error.what()),
          vertex_(vertex),
          error_(std::move(error)) {}

    std::size_t vertex() const { return vertex_; }
    const dsl::EvalError& error() const { return error_; }

private:
    std::size_t vertex_;
    dsl::EvalError error_;
};

/// Arguments vertex-to-be `parents` would receive, read off a trace. An
/// empty parent list means the vertex is a source and receives (x).
inline std::vector<Value> gather_inputs(const ExecutionTrace& trace, std::span<const std::size_t> parents) {
    if (parents.empty()) return {trace.input};
    std::vector<Value> args;
    args.reserve(parents.size());
    for (auto p : parents) args.push_back(trace.outputs.at(p - 1));
    return args;
}

/// Runs the graph on x. Each vertex gets its own `fuel` budget. Throws
/// GraphError for a malformed graph and VertexError when a vertex fails.
/// An empty graph yields a trace holding only the input.
inline ExecutionTrace execute_graph(const ComputationGraph& g, const Value& x,
                                    std::uint64_t fuel = dsl::kDefaultFuel) {
    ExecutionTrace trace;
    trace.input = x;
    if (g.empty()) return trace;
    if (auto v = validate_graph(g)) throw GraphError(v->message);
    trace.vertex_inputs.reserve(g.size());
    trace.outputs.reserve(g.size());
    for (const auto& v : g.vertices()) {
        auto args = gather_inputs(trace, v.parents);
        try {
            trace.outputs.push_back(dsl::eval_function(g.program(), v.fn_name, args, fuel));
        } catch (const dsl::EvalError& e) {
            throw VertexError(v.index, e);
        }
        trace.vertex_inputs.push_back(std::move(args));
    }
    return trace;
}

/// Returns g with one more vertex computing `fn_name` (already defined in
/// g's program) over `parents`. `g` itself is unchanged.
inline ComputationGraph append_vertex(const ComputationGraph& g, const std::string& fn_name,
                                      std::vector<std::size_t> parents) {
    const std::size_t index = g.size() + 1;
    for (auto p : parents) {
        if (p < 1 || p > g.size()) {
            throw GraphError("parent index " + std::to_string(p) + " outside 1.." + std::to_string(g.size()));
        }
    }
    if (index > 1 && parents.empty()) throw GraphError("only vertex 1 may be sourceless");
    if (index == 1 && !parents.empty()) throw GraphError("vertex 1 takes no parents");
    const auto* fn = g.program().find(fn_name);
    if (!fn) throw GraphError("no function named '" + fn_name + "'");
    const std::size_t want = index == 1 ? 1 : parents.size();
    if (fn->arity() != want) {
        throw GraphError("arity mismatch: '" + fn_name + "' takes " + std::to_string(fn->arity()) + ", expected " +
                         std::to_string(want));
    }
    auto vertices = g.vertices();
    vertices.push_back(Vertex{index, fn_name, std::move(parents)});
    auto out = ComputationGraph(g.program_ptr(), std::move(vertices));
    if (auto v = validate_graph(out)) throw GraphError(v->message);
    return out;
}

/// Like the name-based overload, but first installs `fn` in the program.
/// Re-installing an identical definition is allowed; a different body
/// under an existing name is an error.
inline ComputationGraph append_vertex(const ComputationGraph& g, const dsl::FunctionDef& fn,
                                      std::vector<std::size_t> parents) {
    if (const auto* existing = g.program().find(fn.name)) {
        if (!(*existing == fn)) throw GraphError("function '" + fn.name + "' already defined differently");
        return append_vertex(g, fn.name, std::move(parents));
    }
    auto program = g.program();
    try {
        program.add(fn);
    } catch (const dsl::ProgramError& e) {
        throw GraphError(e.what());
    }
    ComputationGraph widened(std::move(program), g.vertices());
    return append_vertex(widened, fn.name, std::move(parents));
}

/// {"vertices": [{"fn", "parents"}], "program": "<canonical DSL text>"}
inline nlohmann::ordered_json to_json(const ComputationGraph& g) {
    nlohmann::ordered_json vs = nlohmann::ordered_json::array();
    for (const auto& v : g.vertices()) {
        nlohmann::ordered_json jv;
        jv["fn"] = v.fn_name;
        jv["parents"] = v.parents;
        vs.push_back(std::move(jv));
    }
    nlohmann::ordered_json j;
    j["vertices"] = std::move(vs);
    j["program"] = dsl::print_program(g.program());
    return j;
}

inline ComputationGraph graph_from_json(const nlohmann::json& j) {
    auto program = dsl::parse_program(j.at("program").get<std::string>());
    std::vector<Vertex> vertices;
    std::size_t i = 0;
    for (const auto& jv : j.at("vertices")) {
        vertices.push_back(
            Vertex{++i, jv.at("fn").get<std::string>(), jv.at("parents").get<std::vector<std::size_t>>()});
    }
    ComputationGraph g(std::move(program), std::move(vertices));
    if (auto v = validate_graph(g)) throw GraphError(v->message);
    return g;
}

}  // namespace pacr::graph
