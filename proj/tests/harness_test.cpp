#include <catch_amalgamated.hpp>
#include <chrono>
#include <cmath>
#include <thread>

#include "pacr/harness/estimate.hpp"
#include "pacr/harness/external_actor.hpp"
#include "pacr/harness/report.hpp"
#include "pacr/harness/synthetic.hpp"
#include "pacr/harness/tasks.hpp"

using namespace pacr;
using namespace pacr::harness;

namespace {

// Failure rate of proposal i's validator over n uniform samples.
double empirical_failure(const ThresholdClass& c, std::size_t i, std::uint64_t n, std::uint64_t seed) {
    const graph::ComputationGraph empty;
    const bottomup::detail::PreparedProposal p(c.proposals.proposals[i], empty);
    Rng rng(seed);
    std::uint64_t fails = 0;
    for (std::uint64_t s = 0; s < n; ++s) {
        graph::ExecutionTrace t;
        t.input = Value(static_cast<std::int64_t>(rng.below(c.domain_size)));
        fails += p.holds(t, dsl::kDefaultFuel) ? 0 : 1;
    }
    return static_cast<double>(fails) / static_cast<double>(n);
}

TaskSpec identity_task() {
    TaskSpec t;
    t.name = "ident";
    t.description = "identity over 0..99";
    t.input_generator = uniform_ints(0, 99);
    t.ground_truth = fn("fn ident(x) = x");
    t.ev_for_g = fn("fn ev_ident(x, y) = y == x");
    return t;
}

}  // namespace

TEST_CASE("threshold classes have exact known errors", "[harness]") {
    SECTION("a zero level never fails") {
        std::vector<double> levels{0.0};
        auto c = make_threshold_class(levels, 100);
        REQUIRE(c.proposals.size() == 1);
        CHECK(empirical_failure(c, 0, 2000, 1) == 0.0);
    }
    SECTION("failing points are counted exactly") {
        std::vector<double> levels{0.0, 0.05, 0.2};
        auto c = make_threshold_class(levels, 100);
        REQUIRE(c.proposals.size() == 3);
        const graph::ComputationGraph empty;
        for (std::size_t i = 0; i < 3; ++i) {
            const bottomup::detail::PreparedProposal p(c.proposals.proposals[i], empty);
            int fails = 0;
            for (std::int64_t x = 0; x < 100; ++x) {
                graph::ExecutionTrace t;
                t.input = Value(x);
                fails += p.holds(t, dsl::kDefaultFuel) ? 0 : 1;
            }
            CHECK(fails / 100.0 == Catch::Approx(levels[i]).margin(1e-12));
            CHECK(c.specs[i].true_error == Catch::Approx(levels[i]).margin(1e-12));
        }
    }
    SECTION("Monte Carlo calibration within 3 sigma") {
        std::vector<double> levels{0.2};
        auto c = make_threshold_class(levels, 100);
        const std::uint64_t n = 100000;
        CHECK(std::abs(empirical_failure(c, 0, n, 99) - 0.2) <= stats::three_sigma(0.2, n));
    }
    SECTION("unrepresentable levels are rejected") {
        std::vector<double> levels{0.123};
        CHECK_THROWS_AS(make_threshold_class(levels, 100), std::domain_error);
        std::vector<double> out_of_range{1.5};
        CHECK_THROWS_AS(make_threshold_class(out_of_range, 100), std::domain_error);
    }
    SECTION("spread levels are representable") {
        auto levels = spread_levels(50, 0.3, 1000);
        CHECK(levels.front() == 0.0);
        CHECK(levels.back() == Catch::Approx(0.3));
        CHECK_NOTHROW(make_threshold_class(levels, 1000));
    }
}

TEST_CASE("lemma 1 trials", "[harness]") {
    SECTION("no bad proposals means no bad survivals") {
        std::vector<double> levels{0.0, 0.0, 0.05};
        auto r = run_lemma1_trials(levels, 100, 0.1, 0.05, 200, 1);
        CHECK(r.bad_survival_rate == 0.0);
        CHECK(r.passed());
    }
    SECTION("a proposal with error 0.5 never survives") {
        std::vector<double> levels{0.0, 0.5};
        auto r = run_lemma1_trials(levels, 100, 0.1, 0.05, 2000, 2);
        CHECK(r.m == 37);  // ceil(ln(2 / 0.05) / 0.1)
        std::uint64_t survived = 0;
        for (const auto& t : r.records) survived += t.max_survivor_error > 0.4 ? 1 : 0;
        CHECK(survived == 0);
        CHECK(std::pow(0.5, r.m) < 1e-8);
    }
    SECTION("bad-survival rate respects the bound") {
        auto levels = spread_levels(50, 0.3, 1000);
        auto r = run_lemma1_trials(levels, 1000, 0.1, 0.05, 500, 3);
        CHECK(r.m == stats::sample_complexity_lemma(50, 0.1, 0.05));
        CHECK(r.bad_survival_rate <= r.bound);
        CHECK(r.bound == Catch::Approx(0.05 + 3 * std::sqrt(0.05 * 0.95 / 500)));
    }
    SECTION("zero trials is an error") {
        std::vector<double> levels{0.0};
        CHECK_THROWS(run_lemma1_trials(levels, 100, 0.1, 0.05, 0, 1));
    }
}

TEST_CASE("lemma 2 construction", "[harness]") {
    auto levels = spread_levels(5, 0.3, 500);
    auto setup = make_lemma2_setup(levels, 1000);
    REQUIRE(setup.proposals.size() == 6);
    SECTION("per-proposal failure mass is exactly 2t/N") {
        std::vector<Value> all;
        for (std::int64_t x = 0; x < 1000; ++x) all.emplace_back(x);
        auto runs = topdown::log_samples(setup.node, all);
        for (std::size_t i = 0; i < setup.specs.size(); ++i) {
            std::span<const topdown::TDProposal> one(&setup.proposals[i], 1);
            int fails = 0;
            for (const auto& r : runs) {
                std::span<const topdown::LoggedRun> single(&r, 1);
                fails += topdown::critic_mask_td(one, single, setup.node)[0] ? 0 : 1;
            }
            CHECK(fails / 1000.0 == Catch::Approx(setup.specs[i].true_error).margin(1e-12));
            CHECK(setup.specs[i].true_error == Catch::Approx(levels[i]).margin(1e-12));
        }
    }
    SECTION("the uncalled helper has an empty log") {
        auto r = topdown::run_with_logging(setup.node, Value(3));
        REQUIRE(r.output);
        CHECK(*r.output == Value(2 * 999));
        CHECK(r.log.count("unused") == 0);
        CHECK(r.log.count("h") == 2);
    }
    SECTION("trials keep the control and respect the bound") {
        auto r = run_lemma2_trials(spread_levels(50, 0.3, 500), 1000, 0.1, 0.05, 200, 4);
        CHECK(r.control_always_survived);
        CHECK(r.bad_survival_rate <= r.bound);
    }
}

TEST_CASE("decay experiment", "[harness]") {
    SECTION("k = 10 at eps = 0.1") {
        std::vector<std::uint64_t> ks{10};
        auto rows = run_decay_experiment(0.1, ks, 10000, 5);
        REQUIRE(rows.size() == 1);
        CHECK(rows[0].exact == Catch::Approx(std::pow(0.9, 10)));
        CHECK(std::abs(rows[0].empirical - std::pow(0.9, 10)) <= 0.015);
        CHECK(rows[0].within_tolerance());
    }
    SECTION("k = 50 at eps = 0.1") {
        std::vector<std::uint64_t> ks{50};
        auto rows = run_decay_experiment(0.1, ks, 10000, 6);
        CHECK(std::abs(rows[0].empirical - std::pow(0.9, 50)) <= 0.003);
    }
    SECTION("eps = 0 always succeeds") {
        std::vector<std::uint64_t> ks{1, 7, 100};
        for (const auto& row : run_decay_experiment(0.0, ks, 500, 7)) CHECK(row.empirical == 1.0);
    }
}

TEST_CASE("estimate_error", "[harness]") {
    auto task = identity_task();
    dsl::Program truth;
    truth.add(task.ground_truth);
    CHECK(estimate_error(truth, "ident", task, 1000, 1) == 0.0);

    dsl::Program plus_one;
    plus_one.add(fn("fn ident(x) = x + 1"));
    CHECK(estimate_error(plus_one, "ident", task, 1000, 1) == 1.0);

    dsl::Program broken;
    broken.add(fn("fn ident(x) = if x < 10 then x + 1 else x"));
    CHECK(std::abs(estimate_error(broken, "ident", task, 100000, 2) - 0.1) <= 0.003);

    graph::ComputationGraph g;
    g = graph::append_vertex(g, fn("fn inc(x) = x + 1"), {});
    g = graph::append_vertex(g, fn("fn dec(x) = x - 1"), {1});
    CHECK(estimate_error(g, task, 1000, 3) == 0.0);
    CHECK_THROWS(estimate_error(truth, "ident", task, 0, 1));
}

TEST_CASE("trial reports are reproducible across worker counts", "[harness]") {
    auto levels = spread_levels(50, 0.3, 1000);
    Provenance prov;
    prov.config = {{"experiment", "lemma1"}, {"trials", 300}};
    prov.seed = 77;
    auto one = trial_csv(run_lemma1_trials(levels, 1000, 0.1, 0.05, 300, 77, 1), prov);
    auto four = trial_csv(run_lemma1_trials(levels, 1000, 0.1, 0.05, 300, 77, 4), prov);
    CHECK(one == four);
    CHECK(one.rfind("# tool=pacr", 0) == 0);
    CHECK_THAT(one, Catch::Matchers::ContainsSubstring("# seed=77"));

    std::vector<std::uint64_t> ks{1, 5};
    auto d1 = decay_csv(run_decay_experiment(0.1, ks, 1000, 8, 1), prov);
    auto d3 = decay_csv(run_decay_experiment(0.1, ks, 1000, 8, 3), prov);
    CHECK(d1 == d3);
}

TEST_CASE("external actor responses", "[harness][external]") {
    std::vector<std::string> warnings;
    WarningSink sink = [&](const std::string& w) { warnings.push_back(w); };

    SECTION("bottom-up: valid and invalid proposals") {
        const std::string body = R"({"proposals": [
            {"fn_text": "fn inc(x) = x + 1", "parents": [], "ev_text": "fn ev(x, y) = y == x + 1"},
            {"fn_text": "fn dbl(x) = x * 2", "ev_text": "fn ev(x, y) = y == 2 * x"},
            {"fn_text": "fn neg(x) = -x", "parents": [], "ev_text": "fn ev(x, y) = y == -x"}]})";
        CHECK(parse_bottom_up_response(body, 0, 200, sink).size() == 3);
        CHECK(warnings.empty());

        const std::string with_bad = R"({"proposals": [
            {"fn_text": "fn inc(x) = x + 1", "parents": [], "ev_text": "fn ev(x, y) = y == x + 1"},
            {"fn_text": "fn broken(x) = x +", "parents": [], "ev_text": "fn ev(x, y) = true"},
            {"fn_text": "fn neg(x) = -x", "parents": [], "ev_text": "fn ev(x, y) = y == -x"}]})";
        CHECK(parse_bottom_up_response(with_bad, 0, 200, sink).size() == 2);
        CHECK(warnings.size() == 1);

        CHECK(parse_bottom_up_response(R"({"proposals": []})", 0, 200, sink).empty());
        CHECK_THROWS_AS(parse_bottom_up_response("not json", 0, 200, sink), ActorProtocolError);
        CHECK_THROWS_AS(parse_bottom_up_response(R"({"items": []})", 0, 200, sink), ActorProtocolError);
        CHECK_THROWS_AS(parse_bottom_up_response(body, 0, 2, sink), ActorProtocolError);
    }
    SECTION("bottom-up: structural checks drop proposals") {
        const std::string body = R"({"proposals": [
            {"fn_text": "fn f(x) = x", "parents": [1], "ev_text": "fn ev(x, y) = true"},
            {"fn_text": "fn g(a, b) = a + b", "parents": [1, 2], "ev_text": "fn ev(a, b, y) = true"},
            {"fn_text": "fn h(x) = x", "parents": [], "ev_text": "fn ev(x, y) = true"}]})";
        auto P = parse_bottom_up_response(body, 2, 200, sink);
        CHECK(P.size() == 2);
        CHECK(warnings.size() == 1);
    }
    SECTION("top-down: helpers travel as declarations") {
        auto node = topdown::TDNode::root(merge_sort_task().top_down_problem().entry);
        nlohmann::json resp;
        resp["proposals"] = nlohmann::json::array();
        resp["proposals"].push_back({{"target", "merge_sort"},
                                     {"fn_text", std::string(sources::kMergeSort) + "\ndecl merge(left, right)\n"},
                                     {"ev_text", dsl::print_function(topdown::TDNode::as_named(
                                                     fn(sources::kMergeValidator), "merge"))},
                                     {"ri_text", dsl::print_function(topdown::TDNode::as_named(
                                                     fn(sources::kMergeReference), "merge"))}});
        resp["proposals"].push_back({{"fn_text", sources::kMergeSortIdentity}, {"ev_text", ""}});
        resp["proposals"].push_back({{"fn_text", sources::kMergeSort}, {"ev_text", ""}});  // merge undeclared
        auto P = parse_top_down_response(resp.dump(), node, "merge_sort", 200, sink);
        REQUIRE(P.size() == 2);
        REQUIRE(P[0].new_helpers.size() == 1);
        CHECK(P[0].new_helpers[0].name == "merge");
        CHECK(P[0].new_helpers[0].params == std::vector<std::string>{"left", "right"});
        CHECK(warnings.size() == 1);
        auto child = topdown::expand_td_node(node, P[0]);
        auto r = topdown::run_with_logging(child, int_list({3, 1, 2}));
        REQUIRE(r.output);
        CHECK(*r.output == int_list({1, 2, 3}));
    }
}

TEST_CASE("external actor over HTTP", "[harness][external]") {
    httplib::Server server;
    std::string last_request;
    server.Post("/propose", [&](const httplib::Request& req, httplib::Response& res) {
        last_request = req.body;
        res.set_content(
            R"({"proposals": [{"fn_text": "fn inc(x) = x + 1", "parents": [], "ev_text": "fn ev(x, y) = y == x + 1"}]})",
            "application/json");
    });
    server.Post("/slow", [](const httplib::Request&, httplib::Response& res) {
        std::this_thread::sleep_for(std::chrono::milliseconds(600));
        res.set_content(R"({"proposals": []})", "application/json");
    });
    const int port = server.bind_to_any_port("127.0.0.1");
    REQUIRE(port > 0);
    std::thread worker([&] { server.listen_after_bind(); });
    server.wait_until_ready();
    const auto base = "http://127.0.0.1:" + std::to_string(port);

    SECTION("round trip") {
        ExternalBottomUpActor actor(std::make_unique<HttpTransport>(base + "/propose", 2000), 200);
        bottomup::BUSearchNode node{{"ctx"}, {}, 0, {}};
        auto P = actor.propose(node);
        CHECK(P.size() == 1);
        auto req = nlohmann::json::parse(last_request);
        CHECK(req["mode"] == "bottom_up");
        CHECK(req["context"] == "ctx");
        CHECK(req["proposal_cap"] == 200);
    }
    SECTION("timeout is a protocol error") {
        ExternalBottomUpActor actor(std::make_unique<HttpTransport>(base + "/slow", 100), 200);
        bottomup::BUSearchNode node{{"ctx"}, {}, 0, {}};
        CHECK_THROWS_AS(actor.propose(node), ActorProtocolError);
    }
    SECTION("missing route is a protocol error") {
        ExternalBottomUpActor actor(std::make_unique<HttpTransport>(base + "/nowhere", 2000), 200);
        bottomup::BUSearchNode node{{"ctx"}, {}, 0, {}};
        CHECK_THROWS_AS(actor.propose(node), ActorProtocolError);
    }
    server.stop();
    worker.join();
}
