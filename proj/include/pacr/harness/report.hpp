#pragma once

#include <cstdint>
#include <cstdio>
#include <span>
#include <sstream>
#include <string>

#include "json.hpp"

#include "pacr/harness/synthetic.hpp"
#include "pacr/version.hpp"

namespace pacr::harness {

/// Stamped into every artifact: which tool wrote it, under which
/// effective configuration and master seed.
struct Provenance {
    nlohmann::ordered_json config = nlohmann::ordered_json::object();
    std::uint64_t seed = 0;

    nlohmann::ordered_json to_json() const {
        nlohmann::ordered_json j;
        j["tool"] = kToolName;
        j["version"] = kVersion;
        j["config"] = config;
        j["seed"] = seed;
        return j;
    }
};

namespace detail {

inline std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

inline void csv_header(std::ostringstream& out, const Provenance& p) {
    out << "# tool=" << kToolName << ' ' << kVersion << '\n';
    out << "# config=" << p.config.dump() << '\n';
    out << "# seed=" << p.seed << '\n';
}

}  // namespace detail

/// One row per trial, in trial order.
inline std::string trial_csv(const TrialReport& r, const Provenance& p) {
    std::ostringstream out;
    detail::csv_header(out, p);
    out << "trial,seed,m,survivors,max_survivor_error,bad_survival";
    if (r.has_control) out << ",control_survived";
    out << '\n';
    for (const auto& t : r.records) {
        out << t.trial << ',' << t.seed << ',' << r.m << ',' << t.survivors << ',' << detail::fmt(t.max_survivor_error)
            << ',' << (t.bad_survival ? 1 : 0);
        if (r.has_control) out << ',' << (t.control_survived ? 1 : 0);
        out << '\n';
    }
    return out.str();
}

inline nlohmann::ordered_json trial_summary(const TrialReport& r, const Provenance& p) {
    auto j = p.to_json();
    j["experiment"] = r.experiment;
    j["epsilon"] = r.epsilon;
    j["delta"] = r.delta;
    j["class_size"] = r.class_size;
    j["m"] = r.m;
    j["trials"] = r.trials;
    std::uint64_t bad = 0;
    for (const auto& t : r.records) bad += t.bad_survival ? 1 : 0;
    j["bad_survivals"] = bad;
    j["bad_survival_rate"] = r.bad_survival_rate;
    j["bound"] = r.bound;
    if (r.has_control) j["control_always_survived"] = r.control_always_survived;
    j["passed"] = r.passed();
    return j;
}

inline std::string decay_csv(std::span<const DecayRow> rows, const Provenance& p) {
    std::ostringstream out;
    detail::csv_header(out, p);
    out << "k,trials,successes,empirical,exact,approx,tolerance,within_tolerance\n";
    for (const auto& r : rows) {
        out << r.k << ',' << r.trials << ',' << r.successes << ',' << detail::fmt(r.empirical) << ','
            << detail::fmt(r.exact) << ',' << detail::fmt(r.approx) << ',' << detail::fmt(r.tolerance) << ','
            << (r.within_tolerance() ? 1 : 0) << '\n';
    }
    return out.str();
}

inline nlohmann::ordered_json decay_summary(std::span<const DecayRow> rows, double epsilon_per_step,
                                            const Provenance& p) {
    auto j = p.to_json();
    j["experiment"] = "decay";
    j["epsilon_per_step"] = epsilon_per_step;
    nlohmann::ordered_json table = nlohmann::ordered_json::array();
    bool ok = true;
    for (const auto& r : rows) {
        table.push_back({{"k", r.k},
                         {"empirical", r.empirical},
                         {"exact", r.exact},
                         {"approx", r.approx},
                         {"tolerance", r.tolerance},
                         {"within_tolerance", r.within_tolerance()}});
        ok = ok && r.within_tolerance() && r.exact <= r.approx + 1e-15;
    }
    j["rows"] = std::move(table);
    j["passed"] = ok;
    return j;
}

}  // namespace pacr::harness
