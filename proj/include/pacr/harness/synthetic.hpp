#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "pacr/bottomup.hpp"
#include "pacr/harness/parallel.hpp"
#include "pacr/rng.hpp"
#include "pacr/stats.hpp"
#include "pacr/topdown.hpp"

namespace pacr::harness {

/// A proposal whose validator fails on exactly the inputs below
/// `threshold` of a uniform domain 0..domain_size-1 (for the top-down
/// construction: on inputs whose mirrored call falls below it too).
struct SyntheticProposalSpec {
    double true_error = 0.0;
    std::int64_t threshold = 0;
};

struct ThresholdClass {
    bottomup::ProposalClass proposals;
    std::vector<SyntheticProposalSpec> specs;
    std::int64_t domain_size = 0;
};

namespace detail {

inline std::int64_t representable_count(double level, std::int64_t units) {
    if (!(level >= 0.0 && level <= 1.0)) throw std::domain_error("error level must lie in [0, 1]");
    const double scaled = level * static_cast<double>(units);
    const double r = std::round(scaled);
    if (std::abs(scaled - r) > 1e-9 * std::max(1.0, scaled)) {
        throw std::domain_error("error level " + std::to_string(level) + " is not a multiple of 1/" +
                                std::to_string(units));
    }
    return static_cast<std::int64_t>(r);
}

}  // namespace detail

/// One vertex-1 proposal per level: `f_i(x) = if x < t then x + 1 else x`
/// checked by `y == x`, so under x ~ Uniform{0..N-1} its failure
/// probability is exactly t/N = levels[i].
inline ThresholdClass make_threshold_class(std::span<const double> levels, std::int64_t domain_size) {
    if (domain_size < 1) throw std::domain_error("domain size must be positive");
    ThresholdClass c;
    c.domain_size = domain_size;
    for (std::size_t i = 0; i < levels.size(); ++i) {
        const auto t = detail::representable_count(levels[i], domain_size);
        const auto id = std::to_string(i);
        c.proposals.proposals.push_back(
            {dsl::parse_function("fn f_" + id + "(x) = if x < " + std::to_string(t) + " then x + 1 else x"),
             {},
             dsl::parse_function("fn ev_" + id + "(x, y) = y == x")});
        c.specs.push_back({static_cast<double>(t) / static_cast<double>(domain_size), t});
    }
    return c;
}

/// Levels i * step for i = 0..count-1, where step = max_level/(count-1)
/// rounded to the grid 1/units, so every level is representable.
inline std::vector<double> spread_levels(std::size_t count, double max_level, std::int64_t units) {
    std::vector<double> out;
    for (std::size_t i = 0; i < count; ++i) {
        const double raw = count == 1 ? 0.0 : max_level * static_cast<double>(i) / static_cast<double>(count - 1);
        out.push_back(std::round(raw * static_cast<double>(units)) / static_cast<double>(units));
    }
    return out;
}

struct TrialRecord {
    std::uint64_t trial = 0;
    std::uint64_t seed = 0;
    std::uint64_t survivors = 0;
    double max_survivor_error = 0.0;
    bool bad_survival = false;
    bool control_survived = false;
};

struct TrialReport {
    std::string experiment;
    double epsilon = 0.0;
    double delta = 0.0;
    std::uint64_t m = 0;
    std::uint64_t class_size = 0;
    std::uint64_t trials = 0;
    std::uint64_t master_seed = 0;
    std::vector<TrialRecord> records;  // sorted by trial index
    double bad_survival_rate = 0.0;
    double bound = 0.0;  // delta + 3 sigma
    bool has_control = false;
    bool control_always_survived = false;

    bool passed() const { return bad_survival_rate <= bound && (!has_control || control_always_survived); }
};

namespace detail {

inline void finish_report(TrialReport& r) {
    std::uint64_t bad = 0;
    bool control = true;
    for (const auto& t : r.records) {
        bad += t.bad_survival ? 1 : 0;
        control = control && t.control_survived;
    }
    r.bad_survival_rate = r.trials ? static_cast<double>(bad) / static_cast<double>(r.trials) : 0.0;
    r.bound = r.delta + stats::three_sigma(r.delta, r.trials);
    r.control_always_survived = r.has_control && control;
}

inline std::vector<Value> uniform_samples(std::uint64_t seed, std::uint64_t m, std::int64_t domain_size) {
    Rng rng(seed);
    std::vector<Value> xs;
    xs.reserve(m);
    for (std::uint64_t i = 0; i < m; ++i) xs.emplace_back(static_cast<std::int64_t>(rng.below(domain_size)));
    return xs;
}

}  // namespace detail

/// T independent trials of the bottom-up critic on a threshold class: each
/// draws m = ceil(ln(|P|/delta)/epsilon) fresh samples and records whether
/// any proposal with true error > epsilon survived.
inline TrialReport run_lemma1_trials(std::span<const double> levels, std::int64_t domain_size, double epsilon,
                                     double delta, std::uint64_t trials, std::uint64_t seed,
                                     std::size_t workers = 1) {
    if (trials == 0) throw std::invalid_argument("trials must be positive");
    const auto cls = make_threshold_class(levels, domain_size);
    TrialReport r;
    r.experiment = "lemma1";
    r.epsilon = epsilon;
    r.delta = delta;
    r.class_size = cls.proposals.size();
    r.m = stats::sample_complexity_lemma(std::max<std::uint64_t>(r.class_size, 1), epsilon, delta);
    r.trials = trials;
    r.master_seed = seed;
    r.records.resize(trials);
    const graph::ComputationGraph empty;
    parallel_for(trials, workers, [&](std::size_t t) {
        TrialRecord rec;
        rec.trial = t;
        rec.seed = derive_seed(seed, t);
        const auto samples = detail::uniform_samples(rec.seed, r.m, domain_size);
        const auto keep = bottomup::critic_mask(cls.proposals, samples, empty);
        for (std::size_t i = 0; i < keep.size(); ++i) {
            if (!keep[i]) continue;
            ++rec.survivors;
            rec.max_survivor_error = std::max(rec.max_survivor_error, cls.specs[i].true_error);
            if (cls.specs[i].true_error > epsilon) rec.bad_survival = true;
        }
        r.records[t] = rec;
    });
    detail::finish_report(r);
    return r;
}

/// Top-down construction with a known per-input failure probability:
/// g(x) = h(x) + h(N - 1 - x) is implemented, h and an uncalled helper
/// `unused` are in U. Proposal i for h doubles its argument except below
/// threshold t_i, so it fails on x iff x < t_i or x > N - 1 - t_i, a mass
/// of 2 t_i / N. The control proposal for `unused` is wrong everywhere
/// but is never called.
struct Lemma2Setup {
    topdown::TDNode node;
    std::vector<topdown::TDProposal> proposals;  // h proposals, then the control
    std::vector<SyntheticProposalSpec> specs;    // for the h proposals
    std::int64_t domain_size = 0;
};

inline Lemma2Setup make_lemma2_setup(std::span<const double> levels, std::int64_t domain_size) {
    if (domain_size < 2 || domain_size % 2 != 0) throw std::domain_error("domain size must be even and >= 2");
    Lemma2Setup s;
    s.domain_size = domain_size;
    using dsl::parse_function;
    const auto n1 = std::to_string(domain_size - 1);
    topdown::HelperSpec g{"g", {"x"}, parse_function("fn ev_g(x, y) = y == 2 * " + n1),
                          parse_function("fn g_ri(x) = 2 * " + n1)};
    auto root = topdown::TDNode::root(g);
    topdown::HelperSpec h{"h", {"v"}, parse_function("fn ev_h(v, y) = y == 2 * v"),
                          parse_function("fn h_ri(v) = 2 * v")};
    topdown::HelperSpec unused{"unused", {"v"}, parse_function("fn ev_unused(v, y) = y == v"),
                               parse_function("fn unused_ri(v) = v")};
    s.node = topdown::expand_td_node(
        root, {"g", parse_function("fn g(x) = h(x) + h(" + n1 + " - x)"), {h, unused}});
    for (std::size_t i = 0; i < levels.size(); ++i) {
        // failure mass 2t/N, so t = level * N / 2
        const auto t = detail::representable_count(levels[i], domain_size / 2);
        s.proposals.push_back(
            {"h", parse_function("fn h(v) = if v < " + std::to_string(t) + " then 2 * v + 1 else 2 * v"), {}});
        s.specs.push_back({2.0 * static_cast<double>(t) / static_cast<double>(domain_size), t});
    }
    s.proposals.push_back({"unused", parse_function("fn unused(v) = v + 1"), {}});
    return s;
}

/// Helper-level analogue of run_lemma1_trials on the make_lemma2_setup node.
/// Each trial also records whether the uncalled control survived.
inline TrialReport run_lemma2_trials(std::span<const double> levels, std::int64_t domain_size, double epsilon,
                                     double delta, std::uint64_t trials, std::uint64_t seed,
                                     std::size_t workers = 1) {
    if (trials == 0) throw std::invalid_argument("trials must be positive");
    const auto setup = make_lemma2_setup(levels, domain_size);
    TrialReport r;
    r.experiment = "lemma2";
    r.epsilon = epsilon;
    r.delta = delta;
    r.class_size = setup.proposals.size();
    r.m = stats::sample_complexity_lemma(r.class_size, epsilon, delta);
    r.trials = trials;
    r.master_seed = seed;
    r.has_control = true;
    r.records.resize(trials);
    parallel_for(trials, workers, [&](std::size_t t) {
        TrialRecord rec;
        rec.trial = t;
        rec.seed = derive_seed(seed, t);
        const auto samples = detail::uniform_samples(rec.seed, r.m, domain_size);
        const auto runs = topdown::log_samples(setup.node, samples);
        const auto keep = topdown::critic_mask_td(setup.proposals, runs, setup.node);
        for (std::size_t i = 0; i < setup.specs.size(); ++i) {
            if (!keep[i]) continue;
            ++rec.survivors;
            rec.max_survivor_error = std::max(rec.max_survivor_error, setup.specs[i].true_error);
            if (setup.specs[i].true_error > epsilon) rec.bad_survival = true;
        }
        rec.control_survived = keep.back();
        r.records[t] = rec;
    });
    detail::finish_report(r);
    return r;
}

struct DecayRow {
    std::uint64_t k = 0;
    std::uint64_t trials = 0;
    std::uint64_t successes = 0;
    double empirical = 0.0;
    double exact = 0.0;
    double approx = 0.0;
    double tolerance = 0.0;  // 3 binomial sigma around exact

    bool within_tolerance() const { return std::abs(empirical - exact) <= tolerance + 1e-12; }
};

/// Simulates chains of k steps, each failing independently with
/// probability epsilon_per_step, and compares the empirical success rate
/// with (1 - eps)^k and exp(-k eps).
inline std::vector<DecayRow> run_decay_experiment(double epsilon_per_step, std::span<const std::uint64_t> k_values,
                                                  std::uint64_t trials, std::uint64_t seed,
                                                  std::size_t workers = 1) {
    if (trials == 0) throw std::invalid_argument("trials must be positive");
    if (!(epsilon_per_step >= 0.0 && epsilon_per_step < 1.0)) throw std::domain_error("step error must lie in [0, 1)");
    std::vector<DecayRow> rows;
    for (auto k : k_values) {
        std::vector<char> ok(trials, 0);
        const auto k_seed = derive_seed(seed, k);
        parallel_for(trials, workers, [&](std::size_t t) {
            Rng rng(derive_seed(k_seed, t));
            bool success = true;
            for (std::uint64_t step = 0; step < k; ++step) {
                if (rng.bernoulli(epsilon_per_step)) success = false;
            }
            ok[t] = success ? 1 : 0;
        });
        DecayRow row;
        row.k = k;
        row.trials = trials;
        for (char c : ok) row.successes += static_cast<std::uint64_t>(c);
        row.empirical = static_cast<double>(row.successes) / static_cast<double>(trials);
        const std::vector<double> errs(k, epsilon_per_step);
        const auto cs = stats::chain_success(errs);
        row.exact = cs.exact;
        row.approx = cs.approx;
        row.tolerance = stats::three_sigma(cs.exact, trials);
        rows.push_back(row);
    }
    return rows;
}

}  // namespace pacr::harness
