#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "httplib.h"
#include "json.hpp"

#include "pacr/bottomup.hpp"
#include "pacr/dsl.hpp"
#include "pacr/events.hpp"
#include "pacr/topdown.hpp"

namespace pacr::harness {

/// Delivers one request body and returns the response body. Failures to
/// get an answer (timeouts, refused connections, non-200 replies) throw
/// ActorProtocolError.
class Transport {
public:
    virtual ~Transport() = default;
    virtual std::string post(const std::string& body) = 0;
};

class HttpTransport : public Transport {
public:
    /// endpoint like "http://127.0.0.1:8080/propose"
    HttpTransport(const std::string& endpoint, std::uint64_t timeout_ms) : timeout_ms_(timeout_ms) {
        const auto scheme = endpoint.find("://");
        if (scheme == std::string::npos) throw std::invalid_argument("endpoint must include a scheme: " + endpoint);
        const auto slash = endpoint.find('/', scheme + 3);
        base_ = endpoint.substr(0, slash);
        path_ = slash == std::string::npos ? "/" : endpoint.substr(slash);
    }

    std::string post(const std::string& body) override {
        httplib::Client client(base_);
        const auto t = std::chrono::milliseconds(timeout_ms_);
        client.set_connection_timeout(t);
        client.set_read_timeout(t);
        client.set_write_timeout(t);
        auto res = client.Post(path_, body, "application/json");
        if (!res) throw ActorProtocolError("external actor unreachable: " + httplib::to_string(res.error()));
        if (res->status != 200) {
            throw ActorProtocolError("external actor answered HTTP " + std::to_string(res->status));
        }
        return res->body;
    }

private:
    std::string base_;
    std::string path_;
    std::uint64_t timeout_ms_;
};

using WarningSink = std::function<void(const std::string&)>;

inline WarningSink stderr_warnings() {
    return [](const std::string& w) { std::cerr << "warning: " << w << '\n'; };
}

namespace detail {

inline nlohmann::json parse_envelope(const std::string& body, std::size_t cap) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(body);
    } catch (const nlohmann::json::parse_error& e) {
        throw ActorProtocolError(std::string("malformed actor response: ") + e.what());
    }
    if (!j.is_object() || !j.contains("proposals") || !j["proposals"].is_array()) {
        throw ActorProtocolError("malformed actor response: expected {\"proposals\": [...]}");
    }
    if (j["proposals"].size() > cap) {
        throw ActorProtocolError("actor proposed " + std::to_string(j["proposals"].size()) + " candidates, cap is " +
                                 std::to_string(cap));
    }
    return j;
}

inline const std::string& text_field(const nlohmann::json& item, const char* key) {
    if (!item.is_object() || !item.contains(key) || !item[key].is_string()) {
        throw std::invalid_argument(std::string("missing string field '") + key + "'");
    }
    return item[key].get_ref<const std::string&>();
}

inline const dsl::FunctionDef& single_function(const dsl::Program& p, const char* what) {
    if (p.functions().size() != 1) throw std::invalid_argument(std::string(what) + " must define exactly one function");
    return p.functions().begin()->second;
}

}  // namespace detail

/// Parses a bottom-up response. Each proposal needs fn_text (one
/// function), parents (1-based vertex indices) and ev_text (one function
/// of arity + 1). Unusable proposals are reported to `warn` and dropped.
inline bottomup::ProposalClass parse_bottom_up_response(const std::string& body, std::size_t graph_size,
                                                        std::size_t cap, const WarningSink& warn) {
    const auto j = detail::parse_envelope(body, cap);
    bottomup::ProposalClass P;
    std::size_t index = 0;
    for (const auto& item : j["proposals"]) {
        try {
            bottomup::BUProposal p;
            p.fn = dsl::parse_function(detail::text_field(item, "fn_text"));
            p.ev = dsl::parse_function(detail::text_field(item, "ev_text"));
            if (item.contains("parents")) p.parents = item["parents"].get<std::vector<std::size_t>>();
            if (auto why = bottomup::proposal_problem(p, graph_size); !why.empty()) throw std::invalid_argument(why);
            P.proposals.push_back(std::move(p));
        } catch (const std::exception& e) {
            warn("dropping proposal " + std::to_string(index) + ": " + e.what());
        }
        ++index;
    }
    return P;
}

/// Parses a top-down response for `target`. fn_text holds the target's
/// body plus a `decl` line for every helper it introduces; ev_text and
/// ri_text hold, for each such helper, a validator and a reference
/// implementation named after the helper.
inline std::vector<topdown::TDProposal> parse_top_down_response(const std::string& body, const topdown::TDNode& node,
                                                                const std::string& target, std::size_t cap,
                                                                const WarningSink& warn) {
    const auto j = detail::parse_envelope(body, cap);
    std::vector<topdown::TDProposal> out;
    std::size_t index = 0;
    for (const auto& item : j["proposals"]) {
        try {
            if (item.contains("target") && item["target"] != target) {
                throw std::invalid_argument("targets a function other than '" + target + "'");
            }
            const auto prog = dsl::parse_program(detail::text_field(item, "fn_text"));
            topdown::TDProposal p;
            p.target = target;
            p.body = detail::single_function(prog, "fn_text");
            if (p.body.name != target) throw std::invalid_argument("fn_text defines '" + p.body.name + "'");
            if (!prog.declarations().empty()) {
                const auto evs = dsl::parse_program(detail::text_field(item, "ev_text"));
                const auto ris = dsl::parse_program(detail::text_field(item, "ri_text"));
                for (const auto& [name, decl] : prog.declarations()) {
                    const auto* ev = evs.find(name);
                    const auto* ri = ris.find(name);
                    if (!ev || !ri) throw std::invalid_argument("helper '" + name + "' lacks a validator or reference");
                    p.new_helpers.push_back(
                        {name, decl.params, topdown::TDNode::as_named(*ev, "ev_" + name), *ri});
                }
            }
            (void)topdown::expand_td_node(node, p);  // arity, collisions, call resolution
            out.push_back(std::move(p));
        } catch (const std::exception& e) {
            warn("dropping proposal " + std::to_string(index) + ": " + e.what());
        }
        ++index;
    }
    return out;
}

class ExternalBottomUpActor : public bottomup::Actor {
public:
    ExternalBottomUpActor(std::unique_ptr<Transport> transport, std::size_t proposal_cap,
                          WarningSink warn = stderr_warnings())
        : transport_(std::move(transport)), cap_(proposal_cap), warn_(std::move(warn)) {}

    static nlohmann::ordered_json request(const bottomup::BUSearchNode& node, std::size_t cap) {
        nlohmann::ordered_json r;
        r["context"] = node.context.text;
        r["mode"] = "bottom_up";
        r["node_state"] = {{"depth", node.depth}, {"graph", graph::to_json(node.graph)}};
        r["proposal_cap"] = cap;
        return r;
    }

    bottomup::ProposalClass propose(const bottomup::BUSearchNode& node) override {
        const auto body = transport_->post(request(node, cap_).dump());
        return parse_bottom_up_response(body, node.graph.size(), cap_, warn_);
    }

private:
    std::unique_ptr<Transport> transport_;
    std::size_t cap_;
    WarningSink warn_;
};

class ExternalTopDownActor : public topdown::Actor {
public:
    ExternalTopDownActor(std::unique_ptr<Transport> transport, std::string context, std::size_t proposal_cap,
                         WarningSink warn = stderr_warnings())
        : transport_(std::move(transport)), context_(std::move(context)), cap_(proposal_cap), warn_(std::move(warn)) {}

    static nlohmann::ordered_json request(const topdown::TDNode& node, const std::string& target,
                                          const std::string& context, std::size_t cap) {
        nlohmann::ordered_json r;
        r["context"] = context;
        r["mode"] = "top_down";
        auto state = node.label();
        state["target"] = target;
        state["program"] = dsl::print_program(node.program());
        r["node_state"] = std::move(state);
        r["proposal_cap"] = cap;
        return r;
    }

    std::vector<topdown::TDProposal> propose(const topdown::TDNode& node, const std::string& target) override {
        const auto body = transport_->post(request(node, target, context_, cap_).dump());
        return parse_top_down_response(body, node, target, cap_, warn_);
    }

private:
    std::unique_ptr<Transport> transport_;
    std::string context_;
    std::size_t cap_;
    WarningSink warn_;
};

}  // namespace pacr::harness
