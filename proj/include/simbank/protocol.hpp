#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "simbank/engine.hpp"
#include "simbank/interventions.hpp"
#include "simbank/policies.hpp"

namespace simbank {

using json = nlohmann::json;

inline constexpr int kProtocolVersion = 1;

namespace detail {

inline json event_to_json(const Event& ev) {
    json j;
    j["activity"] = to_string(ev.activity);
    j["branch"] = to_string(ev.branch);
    j["start"] = ev.start;
    j["end"] = ev.end;
    j["event_cost"] = ev.cost;
    j["cost"] = ev.cum_cost;
    j["amount"] = ev.amount;
    j["est_quality"] = ev.est_quality;
    j["unc_quality"] = ev.unc_quality;
    j["interest_rate"] = ev.interest_rate ? json(*ev.interest_rate) : json(nullptr);
    j["discount_factor"] = ev.discount_factor ? json(*ev.discount_factor) : json(nullptr);
    return j;
}

inline json events_to_json(const std::vector<Event>& events) {
    json arr = json::array();
    for (const auto& ev : events) arr.push_back(event_to_json(ev));
    return arr;
}

}  // namespace detail

// One client's protocol state machine: hello negotiates the active
// interventions, reset starts a case, act answers pending decisions. Pure
// string-to-string logic; the TCP server only does line framing around it.
class ProtocolSession {
public:
    ProtocolSession(std::uint64_t default_seed, const SimConfig& cfg)
        : cfg_(&cfg), default_seed_(default_seed) {}

    // Handles one newline-delimited message; always returns exactly one
    // response line (without the trailing newline). Malformed input yields an
    // error response and leaves the session untouched.
    std::string handle_line(const std::string& line) { return handle(line).dump(); }

    json handle(const std::string& line) {
        json msg = json::parse(line, nullptr, false);
        if (msg.is_discarded() || !msg.is_object()) {
            return error_reply("malformed json: expected one object per line");
        }
        const auto op_it = msg.find("op");
        if (op_it == msg.end() || !op_it->is_string()) {
            return error_reply("missing field: op");
        }
        const std::string op = op_it->get<std::string>();
        try {
            if (op == "hello") return handle_hello(msg);
            if (op == "reset") return handle_reset(msg);
            if (op == "act") return handle_act(msg);
            if (op == "close") {
                closed_ = true;
                json j;
                j["type"] = "ready";
                j["closing"] = true;
                return j;
            }
            return error_reply("unknown op: " + op);
        } catch (const std::exception& e) {
            return error_reply(e.what());
        }
    }

    bool closed() const { return closed_; }

private:
    json error_reply(std::string message, const std::vector<ActionId>* allowed = nullptr) const {
        json j;
        j["type"] = "error";
        j["message"] = std::move(message);
        if (allowed) {
            json arr = json::array();
            for (const auto a : *allowed) arr.push_back(action_label(a));
            j["allowed"] = arr;
        }
        return j;
    }

    json handle_hello(const json& msg) {
        const auto it = msg.find("interventions");
        if (it == msg.end() || !it->is_array() || it->empty()) {
            return error_reply("hello requires a nonempty interventions array");
        }
        InterventionSequence seq;
        std::string csv;
        for (const auto& name : *it) {
            if (!name.is_string()) return error_reply("interventions must be strings");
            if (!csv.empty()) csv += ',';
            csv += name.get<std::string>();
        }
        seq = parse_interventions(csv);
        double delta = 1.0;
        if (const auto d = msg.find("delta"); d != msg.end()) {
            if (!d->is_number()) return error_reply("delta must be a number");
            delta = d->get<double>();
            if (!(delta >= 0.0 && delta <= 1.0)) return error_reply("delta outside [0,1]");
        }
        active_ = std::move(seq);
        nonactive_delta_ = delta;
        session_.reset();

        json j;
        j["type"] = "ready";
        j["protocol"] = kProtocolVersion;
        json names = json::array();
        for (const auto k : active_) names.push_back(to_string(k));
        j["interventions"] = names;
        j["delta"] = nonactive_delta_;
        j["seed"] = default_seed_;
        return j;
    }

    json handle_reset(const json& msg) {
        if (active_.empty()) return error_reply("hello required before reset");
        const auto it = msg.find("case_nr");
        if (it == msg.end() || !it->is_number_integer()) {
            return error_reply("reset requires an integer case_nr");
        }
        const auto case_nr = it->get<std::int64_t>();
        if (case_nr < 0) return error_reply("case_nr must be nonnegative");
        std::uint64_t seed = default_seed_;
        if (const auto s = msg.find("case_seed"); s != msg.end()) {
            if (!s->is_number_unsigned() && !s->is_number_integer()) {
                return error_reply("case_seed must be an integer");
            }
            seed = s->get<std::uint64_t>();
        }
        case_nr_ = case_nr;
        session_.emplace(case_nr, active_, StreamProvider(seed), *cfg_,
                         PolicyRegime::mixed(nonactive_delta_));
        return session_reply();
    }

    json handle_act(const json& msg) {
        if (!session_) return error_reply("reset required before act");
        if (session_->done()) return error_reply("no pending decision; reset to start a new case");
        const auto it = msg.find("action");
        if (it == msg.end() || !it->is_string()) return error_reply("act requires an action string");
        const auto& point = session_->pending();
        const auto action = parse_action(it->get<std::string>());
        if (!action || std::find(point.allowed.begin(), point.allowed.end(), *action) ==
                           point.allowed.end()) {
            return error_reply("action not allowed here: " + it->get<std::string>(), &point.allowed);
        }
        session_->step(*action);
        return session_reply();
    }

    json session_reply() {
        if (!session_->done()) {
            const auto& point = session_->pending();
            json j;
            j["type"] = "decision";
            j["case_nr"] = case_nr_;
            j["intervention"] = to_string(point.kind);
            j["point_index"] = point.point_index;
            json allowed = json::array();
            for (const auto a : point.allowed) allowed.push_back(action_label(a));
            j["allowed"] = allowed;
            j["prefix"] = detail::events_to_json(session_->state().events);
            return j;
        }
        const auto& res = session_->result();
        json j;
        j["type"] = "done";
        j["case_nr"] = case_nr_;
        j["profit"] = res.profit;
        j["accepted"] = res.accepted;
        j["canceled"] = res.canceled;
        j["events"] = detail::events_to_json(res.final_state.events);
        return j;
    }

    const SimConfig* cfg_;
    std::uint64_t default_seed_;
    InterventionSequence active_;
    double nonactive_delta_ = 1.0;
    std::optional<Session> session_;
    std::int64_t case_nr_ = -1;
    bool closed_ = false;
};

}  // namespace simbank
