// Acceptance suite: one line per criterion, nonzero exit if any fails.

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "pacr/pacr.hpp"
#include "support/ast_gen.hpp"

#ifndef PACR_CLI_PATH
#error "PACR_CLI_PATH must point at the pacr executable"
#endif
#ifndef PACR_SOURCE_DIR
#error "PACR_SOURCE_DIR must point at the source tree"
#endif

namespace fs = std::filesystem;
using namespace pacr;

namespace {

struct Verdict {
    bool pass = false;
    std::string detail;
};

struct Criterion {
    int id;
    std::string name;
    double time_limit_s;  // 0 = none
    std::function<Verdict()> check;
};

const fs::path kConfigs = fs::path(PACR_SOURCE_DIR) / "configs";

std::string shell_quote(const std::string& s) {
    std::string out = "'";
    for (char c : s) {
        if (c == '\'') {
            out += "'\\''";
        } else {
            out += c;
        }
    }
    return out + "'";
}

int run_cli(const std::vector<std::string>& args) {
    std::string cmd = shell_quote(PACR_CLI_PATH);
    for (const auto& a : args) cmd += " " + shell_quote(a);
    cmd += " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scratch(const std::string& name) {
    auto dir = fs::temp_directory_path() / ("pacr_acceptance_" + std::to_string(::getpid())) / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string fmt(double v, int prec = 6) {
    std::ostringstream o;
    o.precision(prec);
    o << v;
    return o.str();
}

// 1 -----------------------------------------------------------------------

Verdict sample_complexity_exactness() {
    // direct evaluation of the three bounds, independent of the library
    const auto lemma = static_cast<std::uint64_t>(std::ceil(std::log(100000 / 0.01) / 0.1));
    const auto bu = static_cast<std::uint64_t>(std::ceil(std::log(100.0 * 5 / 0.05) * 2 * 5 / 0.2));
    const auto td = static_cast<std::uint64_t>(std::ceil(std::log(100.0 * 5 / 0.05) * 5 / 0.2));
    const auto a = stats::sample_complexity_lemma(100000, 0.1, 0.01);
    const auto b = stats::sample_complexity_bottomup(100, 5, 0.2, 0.05);
    const auto c = stats::sample_complexity_topdown(100, 5, 0.2, 0.05);
    const bool ok = a == 162 && b == 461 && c == 231 && a == lemma && b == bu && c == td;
    return {ok, "lemma=" + std::to_string(a) + " bottom_up=" + std::to_string(b) + " top_down=" + std::to_string(c) +
                    " (expected 162/461/231)"};
}

// 2 -----------------------------------------------------------------------

Verdict decay_law() {
    const double eps = 0.1;
    const std::uint64_t trials = 10000;
    std::vector<std::uint64_t> ks{1, 5, 10, 50};
    const auto rows = harness::run_decay_experiment(eps, ks, trials, 2024, 4);
    bool ok = true;
    std::string detail;
    for (const auto& r : rows) {
        const double expected = std::pow(1.0 - eps, static_cast<double>(r.k));
        const double tol = 3.0 * std::sqrt(expected * (1.0 - expected) / static_cast<double>(trials));
        const bool row_ok = std::abs(r.empirical - expected) <= tol;
        ok = ok && row_ok;
        detail += "k=" + std::to_string(r.k) + ":" + fmt(r.empirical, 5) + "~" + fmt(expected, 5) +
                  (row_ok ? " " : "! ");
    }
    Rng rng(7);
    int violations = 0;
    for (int i = 0; i < 1000; ++i) {
        std::vector<double> errs(1 + rng.below(60));
        for (auto& e : errs) e = rng.uniform01();
        const auto cs = stats::chain_success(errs);
        double sum = 0.0;
        for (double e : errs) sum += e;
        if (!(cs.exact <= std::exp(-sum) * (1 + 1e-12))) ++violations;
    }
    ok = ok && violations == 0;
    detail += "| exact<=exp(-sum) violations " + std::to_string(violations) + "/1000";
    return {ok, detail};
}

// 3, 4 --------------------------------------------------------------------

Verdict lemma_trials(bool top_down) {
    const double eps = 0.1;
    const double delta = 0.05;
    const std::uint64_t T = 2000;
    const auto levels = harness::spread_levels(50, 0.3, top_down ? 500 : 1000);
    if (levels.front() != 0.0 || std::abs(levels.back() - 0.3) > 1e-12) return {false, "levels do not span [0, 0.3]"};
    const auto r = top_down ? harness::run_lemma2_trials(levels, 1000, eps, delta, T, 31337, 4)
                            : harness::run_lemma1_trials(levels, 1000, eps, delta, T, 4242, 4);
    const double bound = delta + 3.0 * std::sqrt(delta * (1.0 - delta) / static_cast<double>(T));
    const auto m = static_cast<std::uint64_t>(std::ceil(std::log(static_cast<double>(r.class_size) / delta) / eps));
    bool ok = r.bad_survival_rate <= bound && r.m == m && r.trials == T;
    std::string detail = "m=" + std::to_string(r.m) + " |P|=" + std::to_string(r.class_size) +
                         " bad_survival_rate=" + fmt(r.bad_survival_rate) + " bound=" + fmt(bound);
    if (top_down) {
        ok = ok && r.control_always_survived;
        detail += std::string(" uncalled_control_survived=") + (r.control_always_survived ? "all" : "NOT all");
    }
    return {ok, detail};
}

// 5 -----------------------------------------------------------------------

Verdict end_to_end_bottom_up() {
    const auto task = harness::arith_pipeline_task();
    harness::EnumerativeArithmeticActor actor;
    const std::size_t k_max = 3;
    const double eps = 0.1;
    const auto cap = harness::EnumerativeArithmeticActor::max_class_size(k_max);
    if (cap > 200) return {false, "class size bound " + std::to_string(cap) + " exceeds 200"};
    const auto budget = stats::make_budget(stats::BudgetMode::BottomUp, cap, eps, 0.05, k_max);
    const auto problem = task.bottom_up_problem();
    const auto oracle = bottomup::exact_oracle_from_ground_truth(
        task.ground_truth, bottomup::draw_samples(problem, 11, 1, stats::sample_complexity_lemma(1, 0.05, 0.025)));
    const auto run = bottomup::run_bottom_up(problem, actor, oracle, budget, bottomup::Strategy::DFS, 11);
    const auto* acc = std::get_if<bottomup::Accepted>(&run.outcome);
    if (!acc) return {false, "search returned IDontKnow"};
    std::uint64_t largest = 0;
    for (const auto& e : run.events.to_json()) {
        if (e.contains("class_size")) largest = std::max<std::uint64_t>(largest, e["class_size"].get<std::uint64_t>());
    }
    const std::uint64_t n = 10000;
    const double err = harness::estimate_error(acc->graph, task, n, 99);
    const double limit = eps + 3.0 * std::sqrt(eps * (1.0 - eps) / static_cast<double>(n));
    const bool ok = acc->graph.size() == 3 && largest <= 200 && err <= limit;
    return {ok, "accepted k=" + std::to_string(acc->graph.size()) + " largest_class=" + std::to_string(largest) +
                    " held_out_error=" + fmt(err) + " limit=" + fmt(limit)};
}

// 6 -----------------------------------------------------------------------

class CallCounter : public dsl::CallObserver {
public:
    void on_call(std::string_view callee, std::span<const Value>) override {
        if (callee == "merge") ++merges;
    }
    std::uint64_t merges = 0;
};

Verdict end_to_end_top_down() {
    const auto out = scratch("merge_sort");
    const int code = run_cli({"run", "-c", (kConfigs / "merge_sort_topdown.json").string(), "-o", out.string()});
    if (code != 0) return {false, "CLI exit code " + std::to_string(code)};
    const auto cert = nlohmann::json::parse(slurp(out / "certificate.json"));
    const auto k = cert.at("certificate").at("k").get<std::uint64_t>();
    const double eps = cert.at("certificate").at("epsilon").get<double>();
    const auto program = dsl::parse_program(slurp(out / "program.pacl"));
    if (!program.find("merge_sort") || !program.find("merge")) return {false, "program lacks merge_sort or merge"};

    const auto task = harness::merge_sort_task();
    const std::uint64_t n = 1000;
    const auto stream = derive_seed(123456, harness::kHeldOutStream);
    std::uint64_t sorted = 0;
    std::uint64_t long_inputs = 0;
    std::uint64_t long_with_two_merges = 0;
    for (std::uint64_t i = 0; i < n; ++i) {
        const auto x = task.sample(stream, i);
        auto want = x.items();
        std::sort(want.begin(), want.end());
        CallCounter counter;
        try {
            const std::vector<Value> args{x};
            if (dsl::eval_function(program, "merge_sort", args, dsl::kDefaultFuel, &counter) == Value::list(want)) {
                ++sorted;
            }
        } catch (const dsl::EvalError&) {
        }
        if (x.items().size() >= 3) {
            ++long_inputs;
            if (counter.merges >= 2) ++long_with_two_merges;
        }
    }
    const double frac = static_cast<double>(sorted) / static_cast<double>(n);
    const double floor = 1.0 - eps - 3.0 * std::sqrt(eps * (1.0 - eps) / static_cast<double>(n));
    const bool ok = k == 2 && frac >= floor && long_inputs > 0 && long_with_two_merges == long_inputs;
    return {ok, "exit=0 k=" + std::to_string(k) + " sorted=" + fmt(frac) + " floor=" + fmt(floor) +
                    " len>=3 with >=2 merge calls: " + std::to_string(long_with_two_merges) + "/" +
                    std::to_string(long_inputs)};
}

// 7 -----------------------------------------------------------------------

Verdict honest_failure() {
    const int k1 = run_cli({"run", "-c", (kConfigs / "merge_sort_kmax1.json").string(), "-o",
                            scratch("kmax1").string()});
    const int exhausted = run_cli({"run", "-c", (kConfigs / "square_exhaustion.json").string(), "-o",
                                   scratch("square").string()});
    const auto budget_dir = scratch("budget");
    const int budget = run_cli({"run", "-c", (kConfigs / "square_exhaustion.json").string(), "-k", "6",
                                "--node-budget", "40", "-o", budget_dir.string()});
    const auto result = nlohmann::json::parse(slurp(budget_dir / "certificate.json"));
    const bool ok = k1 == 2 && exhausted == 2 && budget == 2 && result.at("outcome") == "idontknow" &&
                    result.at("reason").get<std::string>().find("budget") != std::string::npos;
    return {ok, "k_max=1 merge_sort exit=" + std::to_string(k1) + ", square k_max=2 exit=" + std::to_string(exhausted) +
                    ", node budget 40 exit=" + std::to_string(budget)};
}

// 8 -----------------------------------------------------------------------

Verdict determinism() {
    std::vector<std::string> csvs;
    std::string detail;
    bool ok = true;
    for (const char* experiment : {"lemma1", "lemma2"}) {
        std::vector<std::string> runs;
        int i = 0;
        for (const char* workers : {"1", "4", "1"}) {
            const auto dir = scratch(std::string("det_") + experiment + "_" + std::to_string(i++));
            const int code = run_cli({"validate-bounds", "-c", (kConfigs / (std::string(experiment) + ".json")).string(),
                                      "-w", workers, "-o", dir.string()});
            if (code != 0) return {false, std::string(experiment) + " exit code " + std::to_string(code)};
            runs.push_back(slurp(dir / (std::string(experiment) + ".csv")));
        }
        const bool same = !runs[0].empty() && runs[0] == runs[1] && runs[1] == runs[2];
        ok = ok && same;
        detail += std::string(experiment) + (same ? " identical " : " DIFFERENT ") + "(" +
                  std::to_string(runs[0].size()) + " bytes, workers 1/4/1); ";
    }
    return {ok, detail};
}

// 9 -----------------------------------------------------------------------

Verdict parser_evaluator_suite() {
    testing::AstGenerator gen(777);
    int round_trip_failures = 0;
    for (int i = 0; i < 1000; ++i) {
        auto p = gen.program(1 + static_cast<int>(gen.rng().below(3)), 5);
        const auto text = dsl::print_program(p);
        try {
            const auto back = dsl::parse_program(text);
            if (!(back == p) || dsl::print_program(back) != text) ++round_trip_failures;
        } catch (const dsl::ParseError&) {
            ++round_trip_failures;
        }
    }
    int determinism_failures = 0;
    int monotonicity_failures = 0;
    int completed = 0;
    testing::AstGenerator eval_gen(4242);
    for (int i = 0; i < 1000; ++i) {
        auto p = eval_gen.program(2, 4);
        const auto& main = std::prev(p.functions().end())->second;
        std::vector<Value> args;
        for (std::size_t k = 0; k < main.arity(); ++k) args.push_back(eval_gen.value(2));
        auto run = [&](std::uint64_t fuel) -> std::variant<Value, dsl::EvalErrorKind> {
            try {
                return dsl::eval_function(p, main.name, args, fuel);
            } catch (const dsl::EvalError& e) {
                return e.kind();
            }
        };
        const std::uint64_t fuel = 1 + eval_gen.rng().below(300);
        const auto a = run(fuel);
        if (!(run(fuel) == a)) ++determinism_failures;
        const bool out_of_fuel =
            std::holds_alternative<dsl::EvalErrorKind>(a) && std::get<dsl::EvalErrorKind>(a) == dsl::EvalErrorKind::FuelExhausted;
        if (!out_of_fuel) {
            ++completed;
            if (!(run(fuel * 2 + 5) == a) || !(run(dsl::kDefaultFuel) == a)) ++monotonicity_failures;
        } else if (fuel > 1) {
            const auto less = run(fuel / 2);
            if (!(std::holds_alternative<dsl::EvalErrorKind>(less) &&
                  std::get<dsl::EvalErrorKind>(less) == dsl::EvalErrorKind::FuelExhausted)) {
                ++monotonicity_failures;
            }
        }
    }
    const bool ok = round_trip_failures == 0 && determinism_failures == 0 && monotonicity_failures == 0;
    return {ok, "round-trip failures " + std::to_string(round_trip_failures) + "/1000, nondeterministic " +
                    std::to_string(determinism_failures) + "/1000, fuel-monotonicity failures " +
                    std::to_string(monotonicity_failures) + "/1000 (" + std::to_string(completed) +
                    " finished within fuel)"};
}

}  // namespace

int main() {
    const std::vector<Criterion> criteria{
        {1, "sample-complexity exactness", 1.0, sample_complexity_exactness},
        {2, "decay law", 10.0, decay_law},
        {3, "single-step bad-survival bound", 60.0, [] { return lemma_trials(false); }},
        {4, "helper-level bad-survival bound with vacuous control", 60.0, [] { return lemma_trials(true); }},
        {5, "end-to-end bottom-up arithmetic pipeline", 30.0, end_to_end_bottom_up},
        {6, "end-to-end top-down merge_sort", 30.0, end_to_end_top_down},
        {7, "honest failure exits 2", 5.0, honest_failure},
        {8, "validate-bounds determinism across worker counts", 0.0, determinism},
        {9, "parser round trip, evaluator determinism and fuel monotonicity", 0.0, parser_evaluator_suite},
    };
    int failed = 0;
    for (const auto& c : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = c.check();
        } catch (const std::exception& e) {
            v = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (c.time_limit_s > 0 && secs > c.time_limit_s) {
            v.pass = false;
            v.detail += " [over time limit " + fmt(c.time_limit_s) + " s]";
        }
        failed += v.pass ? 0 : 1;
        std::cout << (v.pass ? "PASS" : "FAIL") << "  criterion " << c.id << ": " << c.name << " | " << v.detail
                  << " | " << fmt(secs, 3) << " s" << std::endl;
    }
    fs::remove_all(fs::temp_directory_path() / ("pacr_acceptance_" + std::to_string(::getpid())));
    std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criteria failed") << std::endl;
    return failed == 0 ? 0 : 1;
}
