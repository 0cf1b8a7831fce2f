#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "pacr/harness/external_actor.hpp"
#include "pacr/pacr.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using namespace pacr;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitUnknown = 2;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

nlohmann::json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open config file '" + path + "'");
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw UsageError("config file '" + path + "' is not valid JSON: " + e.what());
    }
}

template <typename T>
T pick(const std::optional<T>& flag, const nlohmann::json& cfg, const char* key, std::optional<T> fallback = {}) {
    if (flag) return *flag;
    if (cfg.contains(key)) {
        try {
            return cfg.at(key).get<T>();
        } catch (const nlohmann::json::exception&) {
            throw UsageError(std::string("config field '") + key + "' has the wrong type");
        }
    }
    if (fallback) return *fallback;
    throw UsageError(std::string("missing required setting '") + key + "'");
}

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    out << text;
}

std::string comment_header(const harness::Provenance& p) {
    std::ostringstream out;
    out << "# " << kToolName << ' ' << kVersion << '\n';
    out << "# config=" << p.config.dump() << '\n';
    out << "# seed=" << p.seed << '\n';
    return out.str();
}

void check_unit_interval(double v, const char* name) {
    if (!(v > 0.0 && v < 1.0)) throw UsageError(std::string(name) + " must lie in (0, 1)");
}

// ---------------------------------------------------------------- sample-complexity

struct SampleComplexityArgs {
    bool lemma = false;
    bool bottom_up = false;
    bool top_down = false;
    std::uint64_t class_size = 0;
    std::uint64_t k = 1;
    double epsilon = 0.0;
    double delta = 0.0;
};

int cmd_sample_complexity(const SampleComplexityArgs& a) {
    const int modes = int(a.lemma) + int(a.bottom_up) + int(a.top_down);
    if (modes != 1) throw UsageError("choose exactly one of --lemma, --bottom-up, --top-down");
    ordered_json out;
    if (a.lemma) {
        out["m"] = stats::sample_complexity_lemma(a.class_size, a.epsilon, a.delta);
        out["epsilon_hat"] = a.epsilon;
        out["delta_hat"] = a.delta;
    } else if (a.bottom_up) {
        out["m"] = stats::sample_complexity_bottomup(a.class_size, a.k, a.epsilon, a.delta);
        out["epsilon_hat"] = a.epsilon / (2.0 * static_cast<double>(a.k));
        out["delta_hat"] = a.delta / static_cast<double>(a.k);
    } else {
        out["m"] = stats::sample_complexity_topdown(a.class_size, a.k, a.epsilon, a.delta);
        out["epsilon_hat"] = a.epsilon / static_cast<double>(a.k);
        out["delta_hat"] = a.delta / static_cast<double>(a.k);
    }
    std::cout << out.dump() << '\n';
    return kExitOk;
}

// ---------------------------------------------------------------- run

struct RunArgs {
    std::string config;
    std::optional<std::string> task, mode, strategy, actor;
    std::optional<double> epsilon, delta;
    std::optional<std::uint64_t> k_max, seed, proposal_cap, node_budget;
    std::string out_dir = ".";
};

struct ActorChoice {
    std::string kind;  // scripted | enumerative | hopeless | external
    std::string endpoint;
    std::uint64_t timeout_ms = 10'000;

    ordered_json to_json() const {
        if (kind != "external") return kind;
        return ordered_json{{"external", {{"endpoint", endpoint}, {"timeout_ms", timeout_ms}}}};
    }
};

ActorChoice parse_actor(const std::optional<std::string>& flag, const nlohmann::json& cfg) {
    ActorChoice a;
    if (flag) {
        a.kind = *flag;
        if (a.kind == "external") throw UsageError("an external actor needs an endpoint; set it in the config file");
    } else if (!cfg.contains("actor")) {
        throw UsageError("missing required setting 'actor'");
    } else if (const auto& j = cfg.at("actor"); j.is_string()) {
        a.kind = j.get<std::string>();
    } else if (j.is_object() && j.contains("external")) {
        const auto& e = j.at("external");
        a.kind = "external";
        if (!e.contains("endpoint") || !e.at("endpoint").is_string()) throw UsageError("external actor needs an endpoint");
        a.endpoint = e.at("endpoint").get<std::string>();
        if (e.contains("timeout_ms")) a.timeout_ms = e.at("timeout_ms").get<std::uint64_t>();
    } else {
        throw UsageError("'actor' must be \"scripted\", \"enumerative\", \"hopeless\" or {\"external\": {...}}");
    }
    if (a.kind != "scripted" && a.kind != "enumerative" && a.kind != "hopeless" && a.kind != "external") {
        throw UsageError("unknown actor '" + a.kind + "'");
    }
    return a;
}

harness::TaskSpec task_by_name(const std::string& name) {
    if (name == "merge_sort") return harness::merge_sort_task();
    if (name == "abs") return harness::abs_task();
    if (name == "arith_pipeline") return harness::arith_pipeline_task();
    if (name == "arith_pair") return harness::arith_pair_task();
    if (name == "square") return harness::square_task();
    throw UsageError("unknown task '" + name + "' (merge_sort, abs, arith_pipeline, arith_pair, square)");
}

int finish_run(bool accepted, const std::string& reason, const ordered_json& result, const fs::path& out_dir) {
    write_file(out_dir / "certificate.json", result.dump(2) + "\n");
    if (accepted) {
        std::cout << "accepted: certificate written to " << (out_dir / "certificate.json").string() << '\n';
        return kExitOk;
    }
    std::cout << "I don't know: " << reason << '\n';
    return kExitUnknown;
}

int cmd_run(const RunArgs& a) {
    const auto cfg = a.config.empty() ? nlohmann::json::object() : load_json(a.config);
    const auto task_name = pick(a.task, cfg, "task");
    const auto mode = pick(a.mode, cfg, "mode");
    const auto epsilon = pick(a.epsilon, cfg, "epsilon");
    const auto delta = pick(a.delta, cfg, "delta");
    const auto k_max = pick(a.k_max, cfg, "k_max");
    const auto seed = pick(a.seed, cfg, "seed");
    const auto strategy_name = pick(a.strategy, cfg, "strategy", std::optional<std::string>("dfs"));
    bottomup::SearchLimits limits;
    limits.proposal_cap = pick(a.proposal_cap, cfg, "proposal_cap", std::optional<std::uint64_t>(200));
    limits.node_budget = pick(a.node_budget, cfg, "node_budget", std::optional<std::uint64_t>(10'000));
    const auto actor = parse_actor(a.actor, cfg);

    check_unit_interval(epsilon, "epsilon");
    check_unit_interval(delta, "delta");
    if (k_max < 1) throw UsageError("k_max must be at least 1");
    if (mode != "bottom_up" && mode != "top_down") throw UsageError("mode must be bottom_up or top_down");
    if (strategy_name != "dfs" && strategy_name != "bfs") throw UsageError("strategy must be dfs or bfs");
    const auto strategy = strategy_name == "dfs" ? bottomup::Strategy::DFS : bottomup::Strategy::BFS;
    const auto task = task_by_name(task_name);

    harness::Provenance prov;
    prov.seed = seed;
    prov.config = {{"task", task_name},
                   {"mode", mode},
                   {"epsilon", epsilon},
                   {"delta", delta},
                   {"k_max", k_max},
                   {"seed", seed},
                   {"strategy", strategy_name},
                   {"proposal_cap", limits.proposal_cap},
                   {"node_budget", limits.node_budget},
                   {"actor", actor.to_json()}};

    const fs::path out_dir(a.out_dir);
    fs::create_directories(out_dir);
    auto result = prov.to_json();

    if (mode == "bottom_up") {
        std::unique_ptr<bottomup::Actor> bu;
        std::size_t class_size = limits.proposal_cap;
        if (actor.kind == "enumerative") {
            bu = std::make_unique<harness::EnumerativeArithmeticActor>();
            class_size = harness::EnumerativeArithmeticActor::max_class_size(k_max);
        } else if (actor.kind == "hopeless") {
            bu = std::make_unique<harness::HopelessActor>();
            class_size = 1;
        } else if (actor.kind == "external") {
            bu = std::make_unique<harness::ExternalBottomUpActor>(
                std::make_unique<harness::HttpTransport>(actor.endpoint, actor.timeout_ms), limits.proposal_cap);
        } else {
            throw UsageError("actor '" + actor.kind + "' cannot drive bottom-up search");
        }
        const auto budget = stats::make_budget(stats::BudgetMode::BottomUp, std::max<std::size_t>(class_size, 1),
                                               epsilon, delta, k_max);
        const auto problem = task.bottom_up_problem();
        const auto fresh = stats::sample_complexity_lemma(1, epsilon / 2.0, delta / 2.0);
        const auto oracle =
            bottomup::exact_oracle_from_ground_truth(task.ground_truth, bottomup::draw_samples(problem, seed, 1, fresh));
        const auto run = bottomup::run_bottom_up(problem, *bu, oracle, budget, strategy, seed, limits);

        auto events = prov.to_json();
        events["events"] = run.events.to_json();
        write_file(out_dir / "events.json", events.dump(2) + "\n");
        result["nodes_visited"] = run.nodes_visited;
        if (const auto* acc = std::get_if<bottomup::Accepted>(&run.outcome)) {
            result["outcome"] = "accepted";
            result["certificate"] = acc->certificate.to_json();
            result["graph"] = graph::to_json(acc->graph);
            write_file(out_dir / "graph.json", graph::to_json(acc->graph).dump(2) + "\n");
            return finish_run(true, {}, result, out_dir);
        }
        const auto& why = std::get<bottomup::IDontKnow>(run.outcome).reason;
        result["outcome"] = "idontknow";
        result["reason"] = why;
        return finish_run(false, why, result, out_dir);
    }

    std::unique_ptr<topdown::Actor> td;
    std::size_t class_size = limits.proposal_cap;
    if (actor.kind == "scripted") {
        if (task_name == "merge_sort") {
            td = std::make_unique<harness::ScriptedTopDownActor>(harness::merge_sort_actor());
        } else if (task_name == "abs") {
            td = std::make_unique<harness::ScriptedTopDownActor>(harness::abs_actor());
        } else {
            throw UsageError("no scripted top-down actor for task '" + task_name + "'");
        }
        class_size = 3;
    } else if (actor.kind == "external") {
        td = std::make_unique<harness::ExternalTopDownActor>(
            std::make_unique<harness::HttpTransport>(actor.endpoint, actor.timeout_ms), task.description,
            limits.proposal_cap);
    } else {
        throw UsageError("actor '" + actor.kind + "' cannot drive top-down search");
    }
    const auto budget = stats::make_budget(stats::BudgetMode::TopDown, class_size, epsilon, delta, k_max);
    const auto run = topdown::run_top_down(task.top_down_problem(), *td, budget, seed, limits, strategy);

    auto events = prov.to_json();
    events["events"] = run.events.to_json();
    write_file(out_dir / "events.json", events.dump(2) + "\n");
    result["nodes_visited"] = run.nodes_visited;
    if (const auto* acc = std::get_if<topdown::Accepted>(&run.outcome)) {
        result["outcome"] = "accepted";
        result["certificate"] = acc->certificate.to_json();
        result["entry"] = acc->entry;
        result["program_file"] = "program.pacl";
        write_file(out_dir / "program.pacl", comment_header(prov) + dsl::print_program(acc->program));
        return finish_run(true, {}, result, out_dir);
    }
    const auto& why = std::get<topdown::IDontKnow>(run.outcome).reason;
    result["outcome"] = "idontknow";
    result["reason"] = why;
    return finish_run(false, why, result, out_dir);
}

// ---------------------------------------------------------------- validate-bounds

struct BoundsArgs {
    std::string config;
    std::optional<std::string> experiment;
    std::optional<double> epsilon, delta;
    std::optional<std::uint64_t> trials, seed;
    std::size_t workers = std::max(1u, std::thread::hardware_concurrency());
    std::string out_dir = ".";
};

std::uint64_t positive_trials(std::uint64_t t) {
    if (t == 0) throw UsageError("trials must be positive");
    return t;
}

int cmd_validate_bounds(const BoundsArgs& a) {
    const auto cfg = a.config.empty() ? nlohmann::json::object() : load_json(a.config);
    const auto experiment = pick(a.experiment, cfg, "experiment");
    const auto trials = positive_trials(pick(a.trials, cfg, "trials"));
    const auto seed = pick(a.seed, cfg, "seed");
    const fs::path out_dir(a.out_dir);
    fs::create_directories(out_dir);

    harness::Provenance prov;
    prov.seed = seed;
    std::string csv;
    ordered_json summary;
    bool passed = false;

    if (experiment == "decay") {
        const auto epsilon = pick(a.epsilon, cfg, "epsilon");
        const auto ks = pick<std::vector<std::uint64_t>>({}, cfg, "k_values",
                                                         std::vector<std::uint64_t>{1, 5, 10, 50});
        if (!(epsilon >= 0.0 && epsilon < 1.0)) throw UsageError("epsilon must lie in [0, 1)");
        prov.config = {{"experiment", experiment}, {"epsilon", epsilon}, {"k_values", ks},
                       {"trials", trials},         {"seed", seed}};
        const auto rows = harness::run_decay_experiment(epsilon, ks, trials, seed, a.workers);
        csv = harness::decay_csv(rows, prov);
        summary = harness::decay_summary(rows, epsilon, prov);
        passed = summary["passed"].get<bool>();
        for (const auto& r : rows) {
            std::cout << "k=" << r.k << " empirical=" << r.empirical << " exact=" << r.exact
                      << " approx=" << r.approx << " tolerance=" << r.tolerance
                      << (r.within_tolerance() ? " ok" : " OUT") << '\n';
        }
    } else if (experiment == "lemma1" || experiment == "lemma2") {
        const auto epsilon = pick(a.epsilon, cfg, "epsilon");
        const auto delta = pick(a.delta, cfg, "delta");
        check_unit_interval(epsilon, "epsilon");
        check_unit_interval(delta, "delta");
        const auto levels_cfg = cfg.contains("levels") ? cfg.at("levels") : nlohmann::json::object();
        const auto count = levels_cfg.value("count", std::uint64_t{50});
        const auto max_level = levels_cfg.value("max", 0.3);
        const auto domain = levels_cfg.value("domain", std::int64_t{1000});
        if (count == 0) throw UsageError("levels.count must be positive");
        // lemma2 levels are multiples of 2/N (two failing calls per threshold step).
        const auto grid = experiment == "lemma1" ? domain : domain / 2;
        const auto levels = harness::spread_levels(count, max_level, grid);
        prov.config = {{"experiment", experiment},
                       {"epsilon", epsilon},
                       {"delta", delta},
                       {"levels", {{"count", count}, {"max", max_level}, {"domain", domain}}},
                       {"trials", trials},
                       {"seed", seed}};
        const auto report = experiment == "lemma1"
                                ? harness::run_lemma1_trials(levels, domain, epsilon, delta, trials, seed, a.workers)
                                : harness::run_lemma2_trials(levels, domain, epsilon, delta, trials, seed, a.workers);
        csv = harness::trial_csv(report, prov);
        summary = harness::trial_summary(report, prov);
        passed = report.passed();
        std::cout << experiment << ": m=" << report.m << " bad_survival_rate=" << report.bad_survival_rate
                  << " bound=" << report.bound;
        if (report.has_control) std::cout << " control_always_survived=" << report.control_always_survived;
        std::cout << (passed ? " PASS" : " FAIL") << '\n';
    } else {
        throw UsageError("unknown experiment '" + experiment + "' (lemma1, lemma2, decay)");
    }
    write_file(out_dir / (experiment + ".csv"), csv);
    write_file(out_dir / (experiment + ".json"), summary.dump(2) + "\n");
    return passed ? kExitOk : kExitError;
}

// ---------------------------------------------------------------- chain-decay

struct DecayArgs {
    double epsilon = 0.1;
    std::vector<std::uint64_t> ks{1, 5, 10, 50};
    std::uint64_t trials = 10'000;
    std::uint64_t seed = 1;
    std::size_t workers = std::max(1u, std::thread::hardware_concurrency());
    std::string csv_path;
};

int cmd_chain_decay(const DecayArgs& a) {
    positive_trials(a.trials);
    if (!(a.epsilon >= 0.0 && a.epsilon < 1.0)) throw UsageError("epsilon must lie in [0, 1)");
    harness::Provenance prov;
    prov.seed = a.seed;
    prov.config = {{"experiment", "decay"}, {"epsilon", a.epsilon}, {"k_values", a.ks},
                   {"trials", a.trials},    {"seed", a.seed}};
    const auto rows = harness::run_decay_experiment(a.epsilon, a.ks, a.trials, a.seed, a.workers);
    const auto csv = harness::decay_csv(rows, prov);
    if (a.csv_path.empty()) {
        std::cout << csv;
    } else {
        write_file(a.csv_path, csv);
    }
    const bool ok = std::all_of(rows.begin(), rows.end(), [](const auto& r) { return r.within_tolerance(); });
    return ok ? kExitOk : kExitError;
}

// ---------------------------------------------------------------- eval

struct EvalArgs {
    std::string file;
    std::string function;
    std::vector<std::string> args;
    std::uint64_t fuel = dsl::kDefaultFuel;
};

int cmd_eval(const EvalArgs& a) {
    std::ifstream in(a.file);
    if (!in) throw UsageError("cannot open '" + a.file + "'");
    std::stringstream text;
    text << in.rdbuf();
    const auto program = dsl::parse_program(text.str());
    dsl::validate_program(program);
    std::vector<Value> values;
    for (const auto& s : a.args) values.push_back(dsl::eval_expression(*dsl::parse_expression(s)));
    std::cout << to_string(dsl::eval_function(program, a.function, values, a.fuel)) << '\n';
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"PAC-certified reasoning engine: search, critic and bound validation"};
    app.set_version_flag("--version", std::string(kToolName) + " " + kVersion);
    app.require_subcommand(1);

    SampleComplexityArgs sc;
    auto* sc_cmd = app.add_subcommand("sample-complexity", "Samples needed for a PAC certificate");
    sc_cmd->add_flag("--lemma", sc.lemma, "Single-step bound ceil(ln(|P|/delta)/epsilon)");
    sc_cmd->add_flag("--bottom-up", sc.bottom_up, "Whole-graph bound for bottom-up search");
    sc_cmd->add_flag("--top-down", sc.top_down, "Whole-program bound for top-down search");
    sc_cmd->add_option("-P,--class-size", sc.class_size, "Proposal class size |P|")->required();
    sc_cmd->add_option("-k,--k-max", sc.k, "Maximum number of vertices or functions")->default_val(1);
    sc_cmd->add_option("-e,--epsilon", sc.epsilon, "Target error")->required();
    sc_cmd->add_option("-d,--delta", sc.delta, "Failure probability")->required();

    RunArgs run;
    auto* run_cmd = app.add_subcommand("run", "Search for a certified decomposition of a bundled task");
    run_cmd->add_option("-c,--config", run.config, "Experiment config JSON");
    run_cmd->add_option("--task", run.task, "merge_sort | abs | arith_pipeline | arith_pair | square");
    run_cmd->add_option("--mode", run.mode, "bottom_up | top_down");
    run_cmd->add_option("-e,--epsilon", run.epsilon, "Target error");
    run_cmd->add_option("-d,--delta", run.delta, "Failure probability");
    run_cmd->add_option("-k,--k-max", run.k_max, "Maximum number of vertices or functions");
    run_cmd->add_option("-s,--seed", run.seed, "Master seed");
    run_cmd->add_option("--strategy", run.strategy, "dfs | bfs");
    run_cmd->add_option("--actor", run.actor, "scripted | enumerative | hopeless (external needs a config file)");
    run_cmd->add_option("--proposal-cap", run.proposal_cap, "Largest class an actor may return");
    run_cmd->add_option("--node-budget", run.node_budget, "Search nodes visited before giving up");
    run_cmd->add_option("-o,--out", run.out_dir, "Output directory")->default_val(".");

    BoundsArgs bounds;
    auto* bounds_cmd = app.add_subcommand("validate-bounds", "Monte Carlo check of the sampling bounds");
    bounds_cmd->add_option("-c,--config", bounds.config, "Experiment config JSON");
    bounds_cmd->add_option("--experiment", bounds.experiment, "lemma1 | lemma2 | decay");
    bounds_cmd->add_option("-e,--epsilon", bounds.epsilon, "Target error (per step for decay)");
    bounds_cmd->add_option("-d,--delta", bounds.delta, "Failure probability");
    bounds_cmd->add_option("-t,--trials", bounds.trials, "Number of trials");
    bounds_cmd->add_option("-s,--seed", bounds.seed, "Master seed");
    bounds_cmd->add_option("-w,--workers", bounds.workers, "Worker threads (does not affect results)");
    bounds_cmd->add_option("-o,--out", bounds.out_dir, "Output directory")->default_val(".");

    DecayArgs decay;
    auto* decay_cmd = app.add_subcommand("chain-decay", "Simulate success of a chain of independent steps");
    decay_cmd->add_option("-e,--epsilon", decay.epsilon, "Per-step failure probability")->default_val(0.1);
    decay_cmd->add_option("-k,--k", decay.ks, "Chain lengths")->delimiter(',')->default_str("1,5,10,50");
    decay_cmd->add_option("-t,--trials", decay.trials, "Trials per chain length")->default_val(10000);
    decay_cmd->add_option("-s,--seed", decay.seed, "Master seed")->default_val(1);
    decay_cmd->add_option("-w,--workers", decay.workers, "Worker threads (does not affect results)");
    decay_cmd->add_option("--csv", decay.csv_path, "Write the table here instead of stdout");

    EvalArgs ev;
    auto* eval_cmd = app.add_subcommand("eval", "Evaluate a function from a .pacl file on literal arguments");
    eval_cmd->add_option("file", ev.file, "Program file")->required();
    eval_cmd->add_option("function", ev.function, "Function name")->required();
    eval_cmd->allow_extras();
    eval_cmd->footer("Arguments after the function name are DSL literals, e.g. '[3, 1, 2]' or '(1, true)'.");
    eval_cmd->add_option("--fuel", ev.fuel, "Evaluation step budget")->default_val(dsl::kDefaultFuel);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitError;
    }

    try {
        if (*sc_cmd) return cmd_sample_complexity(sc);
        if (*run_cmd) return cmd_run(run);
        if (*bounds_cmd) return cmd_validate_bounds(bounds);
        if (*decay_cmd) return cmd_chain_decay(decay);
        if (*eval_cmd) {
            ev.args = eval_cmd->remaining();
            return cmd_eval(ev);
        }
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
    } catch (const ActorProtocolError& e) {
        std::cerr << "actor protocol error: " << e.what() << '\n';
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
    }
    return kExitError;
}
