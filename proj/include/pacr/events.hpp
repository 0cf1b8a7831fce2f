#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

namespace pacr {

/// Certificate attached to an accepted result.
struct Certificate {
    double epsilon = 0.0;
    double delta = 0.0;
    std::uint64_t m = 0;
    std::uint64_t k = 0;
    std::uint64_t seed = 0;
    double per_step_epsilon = 0.0;
    double per_step_delta = 0.0;

    nlohmann::ordered_json to_json() const {
        nlohmann::ordered_json j;
        j["epsilon"] = epsilon;
        j["delta"] = delta;
        j["m"] = m;
        j["k"] = k;
        j["seed"] = seed;
        j["epsilon_hat"] = per_step_epsilon;
        j["delta_hat"] = per_step_delta;
        return j;
    }
};

/// Append-only transcript of a search run. Both engines share the schema:
/// every event has "event" and "node"; node labels are engine specific
/// (a vertex list bottom-up, sorted I/U name lists top-down).
class EventLog {
public:
    void node_expanded(std::uint64_t node, std::uint64_t depth, nlohmann::ordered_json label,
                       std::uint64_t class_size, std::uint64_t survivors) {
        nlohmann::ordered_json e;
        e["event"] = "expand";
        e["node"] = node;
        e["depth"] = depth;
        e["label"] = std::move(label);
        e["class_size"] = class_size;
        e["survivors"] = survivors;
        events_.push_back(std::move(e));
    }

    void oracle_verdict(std::uint64_t node, bool approved) {
        nlohmann::ordered_json e;
        e["event"] = "oracle";
        e["node"] = node;
        e["approved"] = approved;
        events_.push_back(std::move(e));
    }

    void pruned(std::uint64_t node, const std::string& reason) {
        nlohmann::ordered_json e;
        e["event"] = "prune";
        e["node"] = node;
        e["reason"] = reason;
        events_.push_back(std::move(e));
    }

    void finished(std::uint64_t node, const std::string& outcome, const std::string& detail) {
        nlohmann::ordered_json e;
        e["event"] = "outcome";
        e["node"] = node;
        e["outcome"] = outcome;
        e["detail"] = detail;
        events_.push_back(std::move(e));
    }

    const std::vector<nlohmann::ordered_json>& events() const { return events_; }

    nlohmann::ordered_json to_json() const {
        nlohmann::ordered_json arr = nlohmann::ordered_json::array();
        for (const auto& e : events_) arr.push_back(e);
        return arr;
    }

private:
    std::vector<nlohmann::ordered_json> events_;
};

/// Raised when an actor breaks its contract (oversized class, malformed
/// proposal, unreachable target). Distinct from an honest "I don't know".
class ActorProtocolError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace pacr
