#include <catch_amalgamated.hpp>

#include "pacr/bottomup.hpp"
#include "pacr/harness/tasks.hpp"

using namespace pacr;
using namespace pacr::bottomup;
using dsl::parse_function;

namespace {

ProposalClass threshold_class(std::initializer_list<int> ts) {
    ProposalClass P;
    for (int t : ts) {
        const auto s = std::to_string(t);
        P.proposals.push_back({parse_function("fn f" + s + "(x) = if x < " + s + " then x + 1 else x"),
                               {},
                               parse_function("fn ev" + s + "(x, y) = y == x")});
    }
    return P;
}

std::vector<Value> ints(std::initializer_list<std::int64_t> xs) {
    std::vector<Value> out;
    for (auto x : xs) out.emplace_back(x);
    return out;
}

const char* kSorted = R"(
fn ev_sorted(x, y) = fold i from 1 to len(y) with ok = true do ok and y[i - 1] <= y[i] end
)";

stats::PrecisionBudget small_budget(std::size_t class_size, std::size_t k_max) {
    return stats::make_budget(stats::BudgetMode::BottomUp, class_size, 0.1, 0.05, k_max);
}

DecompositionOracle oracle_for(const harness::TaskSpec& task, std::uint64_t seed, std::size_t n = 200) {
    return exact_oracle_from_ground_truth(task.ground_truth, draw_samples(task.bottom_up_problem(), seed, 1, n));
}

}  // namespace

TEST_CASE("ev_holds judges one proposal on one trace", "[bottomup]") {
    const graph::ComputationGraph empty;
    SECTION("sorting stub on an unsorted input") {
        BUProposal p{parse_function("fn stub(x) = x"), {}, parse_function(kSorted)};
        CHECK_FALSE(ev_holds(p, graph::execute_graph(empty, int_list({2, 1})), empty));
        CHECK(ev_holds(p, graph::execute_graph(empty, int_list({1, 2})), empty));
    }
    SECTION("identity against 'equals first input'") {
        BUProposal p{parse_function("fn id(x) = x"), {}, parse_function("fn ev_id(x, y) = y == x")};
        for (const auto& x : {Value(0), int_list({3, 4}), Value(true)}) {
            CHECK(ev_holds(p, graph::execute_graph(empty, x), empty));
        }
    }
    SECTION("an evaluation error is a failure") {
        BUProposal p{parse_function("fn head(x) = x[0]"), {}, parse_function("fn ev_head(x, y) = true")};
        CHECK_FALSE(ev_holds(p, graph::execute_graph(empty, int_list({})), empty));
        BUProposal q{parse_function("fn id(x) = x"), {}, parse_function("fn ev_bad(x, y) = y[0] == 1")};
        CHECK_FALSE(ev_holds(q, graph::execute_graph(empty, Value(1)), empty));
        BUProposal r{parse_function("fn id(x) = x"), {}, parse_function("fn ev_int(x, y) = 1")};
        CHECK_FALSE(ev_holds(r, graph::execute_graph(empty, Value(1)), empty));
    }
    SECTION("proposal over an existing vertex") {
        auto g = graph::append_vertex(empty, parse_function("fn inc(x) = x + 1"), {});
        BUProposal p{parse_function("fn dbl(x) = 2 * x"), {1}, parse_function("fn ev_dbl(a, y) = y == 2 * a")};
        CHECK(ev_holds(p, graph::execute_graph(g, Value(3)), g));
    }
}

TEST_CASE("critic keeps exactly the zero-failure proposals", "[bottomup]") {
    const graph::ComputationGraph empty;
    SECTION("thresholds 0, 5, 20 on samples 7, 12, 50") {
        auto P = threshold_class({0, 5, 20});
        auto samples = ints({7, 12, 50});
        auto kept = critic_filter(P, samples, empty);
        REQUIRE(kept.size() == 2);
        CHECK(kept.proposals[0].fn.name == "f0");
        CHECK(kept.proposals[1].fn.name == "f5");
        CHECK(critic_mask(P, samples, empty) == std::vector<bool>{true, true, false});
    }
    SECTION("empty class") { CHECK(critic_filter(ProposalClass{}, ints({1, 2}), empty).empty()); }
    SECTION("no samples keeps everything") {
        auto P = threshold_class({0, 5, 20});
        CHECK(critic_filter(P, std::vector<Value>{}, empty).size() == 3);
    }
    SECTION("oracle check: survivors are exactly those with no failing sample") {
        Rng rng(7);
        for (int round = 0; round < 50; ++round) {
            std::vector<int> ts;
            for (int i = 0; i < 6; ++i) ts.push_back(static_cast<int>(rng.below(60)));
            ProposalClass P;
            for (int t : ts) P.proposals.push_back(threshold_class({t}).proposals[0]);
            std::vector<Value> samples;
            std::int64_t smallest = 1000;
            for (int i = 0; i < 5; ++i) {
                auto x = rng.uniform_int(0, 99);
                smallest = std::min(smallest, x);
                samples.emplace_back(x);
            }
            auto mask = critic_mask(P, samples, empty);
            for (std::size_t i = 0; i < ts.size(); ++i) CHECK(mask[i] == (smallest >= ts[i]));
        }
    }
}

TEST_CASE("proposal well-formedness", "[bottomup]") {
    auto fn1 = parse_function("fn f(x) = x");
    auto ev1 = parse_function("fn ev(x, y) = true");
    CHECK(proposal_problem({fn1, {}, ev1}, 0).empty());
    CHECK_FALSE(proposal_problem({fn1, {1}, ev1}, 0).empty());
    CHECK_FALSE(proposal_problem({fn1, {}, ev1}, 2).empty());
    CHECK_FALSE(proposal_problem({fn1, {3}, ev1}, 2).empty());
    CHECK_FALSE(proposal_problem({fn1, {1}, parse_function("fn ev(x) = true")}, 2).empty());
    CHECK_FALSE(proposal_problem({parse_function("fn f(a, b) = a"), {1}, ev1}, 2).empty());
    CHECK_FALSE(proposal_problem({parse_function("fn f(a, b) = a"), {1, 1}, parse_function("fn ev(a, b, y) = true")}, 2)
                    .empty());
}

TEST_CASE("exact oracle from ground truth", "[bottomup]") {
    auto task = harness::arith_pair_task();
    auto oracle = oracle_for(task, 3);
    graph::ComputationGraph g;
    std::vector<BUProposal> path;
    auto extend = [&](const char* fn_text, std::vector<std::size_t> parents, const char* ev_text) {
        BUProposal p{parse_function(fn_text), parents, parse_function(ev_text)};
        g = graph::append_vertex(g, p.fn, p.parents);
        path.push_back(p);
    };
    SECTION("correct decomposition approved") {
        extend("fn add1(x) = x + 1", {}, "fn ev_add1(x, y) = y == x + 1");
        CHECK_FALSE(oracle(g, path));
        extend("fn mul2(x) = x * 2", {1}, "fn ev_mul2(x, y) = y == x * 2");
        CHECK(oracle(g, path));
    }
    SECTION("off-by-one graph rejected") {
        extend("fn add1(x) = x + 1", {}, "fn ev_add1(x, y) = y == x + 1");
        extend("fn mul2p(x) = x * 2 + 1", {1}, "fn ev_mul2p(x, y) = y == x * 2 + 1");
        CHECK_FALSE(oracle(g, path));
    }
    SECTION("the reference itself as one vertex") {
        extend("fn arith_pair(x) = 2 * (x + 1)", {}, "fn ev(x, y) = true");
        CHECK(oracle(g, path));
    }
    SECTION("merge-like decomposition of sorting") {
        auto sort_task = harness::merge_sort_task();
        auto sort_oracle = oracle_for(sort_task, 5, 100);
        auto halves = parse_function(
            "fn halves(a) = (slice(a, 0, len(a) / 2), slice(a, len(a) / 2, len(a)))");
        auto sort_ref = sort_task.ground_truth;  // named merge_sort
        auto merge = parse_function(R"(
fn merge_halves(p) =
  let st = fold step from 0 to len(p.0) + len(p.1) with st = (0, 0, []) do
    let i = st.0 in
    let j = st.1 in
    if j >= len(p.1) or (i < len(p.0) and p.0[i] <= p.1[j])
    then (i + 1, j, append(st.2, p.0[i]))
    else (i, j + 1, append(st.2, p.1[j]))
  end in st.2
)");
        auto sort_pair = parse_function(
            "fn sort_pair(p) = (merge_sort(p.0), merge_sort(p.1))");
        dsl::Program prog;
        prog.add(halves);
        prog.add(sort_ref);
        prog.add(sort_pair);
        prog.add(merge);
        graph::ComputationGraph m(prog);
        m = graph::append_vertex(m, "halves", {});
        m = graph::append_vertex(m, "sort_pair", {1});
        m = graph::append_vertex(m, "merge_halves", {2});
        auto t = parse_function("fn ev_any(x, y) = true");
        std::vector<BUProposal> mpath{{halves, {}, t}, {sort_pair, {1}, t}, {merge, {2}, t}};
        CHECK(sort_oracle(m, mpath));
    }
}

TEST_CASE("bottom-up search on the arithmetic pipeline", "[bottomup]") {
    auto task = harness::arith_pipeline_task();
    harness::EnumerativeArithmeticActor actor;
    const std::size_t k_max = 3;
    auto budget = small_budget(harness::EnumerativeArithmeticActor::max_class_size(k_max), k_max);
    auto oracle = oracle_for(task, 11);
    for (auto strategy : {Strategy::DFS, Strategy::BFS}) {
        auto run = run_bottom_up(task.bottom_up_problem(), actor, oracle, budget, strategy, 11);
        REQUIRE(std::holds_alternative<Accepted>(run.outcome));
        const auto& acc = std::get<Accepted>(run.outcome);
        CHECK(acc.graph.size() == 3);
        CHECK(acc.certificate.k == 3);
        CHECK(acc.certificate.m == budget.m);
        for (std::int64_t x : {0, 5, 999}) {
            CHECK(graph::execute_graph(acc.graph, Value(x)).final_output() == Value(2 * (x + 1) + 3));
        }
    }
}

TEST_CASE("bottom-up honest failure", "[bottomup]") {
    SECTION("only EV-failing proposals exhaust the search") {
        auto task = harness::arith_pair_task();
        harness::HopelessActor actor;
        auto run = run_bottom_up(task.bottom_up_problem(), actor, oracle_for(task, 1), small_budget(1, 3),
                                 Strategy::DFS, 1);
        CHECK(std::holds_alternative<IDontKnow>(run.outcome));
    }
    SECTION("k_max = 1 on a two-vertex task") {
        auto task = harness::arith_pair_task();
        harness::EnumerativeArithmeticActor actor;
        auto run = run_bottom_up(task.bottom_up_problem(), actor, oracle_for(task, 2),
                                 small_budget(harness::EnumerativeArithmeticActor::max_class_size(1), 1),
                                 Strategy::DFS, 2);
        REQUIRE(std::holds_alternative<IDontKnow>(run.outcome));
        CHECK(run.nodes_visited > 1);
    }
    SECTION("node budget") {
        auto task = harness::square_task();
        harness::EnumerativeArithmeticActor actor;
        SearchLimits limits;
        limits.node_budget = 25;
        auto run = run_bottom_up(task.bottom_up_problem(), actor, oracle_for(task, 3),
                                 small_budget(harness::EnumerativeArithmeticActor::max_class_size(4), 4),
                                 Strategy::BFS, 3, limits);
        REQUIRE(std::holds_alternative<IDontKnow>(run.outcome));
        CHECK(run.nodes_visited == 25);
        CHECK_THAT(std::get<IDontKnow>(run.outcome).reason, Catch::Matchers::ContainsSubstring("budget"));
    }
}

TEST_CASE("actor contract violations abort the run", "[bottomup]") {
    struct Flood : Actor {
        ProposalClass propose(const BUSearchNode&) override {
            ProposalClass P;
            for (int i = 0; i < 201; ++i) {
                P.proposals.push_back({parse_function("fn f(x) = x"), {}, parse_function("fn ev(x, y) = true")});
            }
            return P;
        }
    };
    struct Malformed : Actor {
        ProposalClass propose(const BUSearchNode&) override {
            return {{{parse_function("fn f(x) = x"), {3}, parse_function("fn ev(x, y) = true")}}};
        }
    };
    auto task = harness::arith_pair_task();
    auto oracle = oracle_for(task, 1);
    Flood flood;
    Malformed malformed;
    CHECK_THROWS_AS(run_bottom_up(task.bottom_up_problem(), flood, oracle, small_budget(200, 2), Strategy::DFS, 1),
                    ActorProtocolError);
    CHECK_THROWS_AS(
        run_bottom_up(task.bottom_up_problem(), malformed, oracle, small_budget(200, 2), Strategy::DFS, 1),
        ActorProtocolError);
}

TEST_CASE("bottom-up runs are reproducible", "[bottomup]") {
    auto task = harness::arith_pipeline_task();
    harness::EnumerativeArithmeticActor actor;
    auto budget = small_budget(harness::EnumerativeArithmeticActor::max_class_size(3), 3);
    auto a = run_bottom_up(task.bottom_up_problem(), actor, oracle_for(task, 9), budget, Strategy::DFS, 9);
    auto b = run_bottom_up(task.bottom_up_problem(), actor, oracle_for(task, 9), budget, Strategy::DFS, 9);
    CHECK(a.events.to_json().dump() == b.events.to_json().dump());
}
