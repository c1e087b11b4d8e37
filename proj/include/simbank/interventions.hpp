#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "simbank/process.hpp"

namespace simbank {

enum class InterventionKind : int {
    choose_procedure = 0,
    set_interest_rate,
    time_contact_hq,
};

inline constexpr std::size_t kInterventionCount = 3;

inline constexpr std::array<const char*, kInterventionCount> kInterventionNames = {
    "choose_procedure", "set_interest_rate", "time_contact_hq"};

inline const char* to_string(InterventionKind k) {
    const auto i = static_cast<std::size_t>(k);
    if (i >= kInterventionCount) throw std::invalid_argument("unknown intervention");
    return kInterventionNames[i];
}

inline InterventionKind intervention_from_string(std::string_view name) {
    for (std::size_t i = 0; i < kInterventionCount; ++i) {
        if (name == kInterventionNames[i]) return static_cast<InterventionKind>(i);
    }
    throw std::invalid_argument("unknown intervention: " + std::string(name));
}

// Global action vocabulary across all interventions. Per-intervention action
// sets list these in canonical order; ties in argmax-style rules resolve to
// the earlier entry.
enum class ActionId : int {
    standard = 0,
    priority,
    rate_007,
    rate_008,
    rate_009,
    contact,
    wait,
};

inline constexpr std::size_t kActionCount = 7;

inline constexpr std::array<const char*, kActionCount> kActionLabels = {
    "standard", "priority", "0.07", "0.08", "0.09", "contact", "wait"};

inline const char* action_label(ActionId a) {
    const auto i = static_cast<std::size_t>(a);
    if (i >= kActionCount) throw std::invalid_argument("unknown action");
    return kActionLabels[i];
}

inline std::optional<ActionId> parse_action(std::string_view label) {
    for (std::size_t i = 0; i < kActionCount; ++i) {
        if (label == kActionLabels[i]) return static_cast<ActionId>(i);
    }
    return std::nullopt;
}

inline InterventionKind action_intervention(ActionId a) {
    switch (a) {
        case ActionId::standard:
        case ActionId::priority: return InterventionKind::choose_procedure;
        case ActionId::rate_007:
        case ActionId::rate_008:
        case ActionId::rate_009: return InterventionKind::set_interest_rate;
        case ActionId::contact:
        case ActionId::wait: return InterventionKind::time_contact_hq;
    }
    throw std::invalid_argument("unknown action");
}

inline double rate_value(ActionId a) {
    switch (a) {
        case ActionId::rate_007: return kInterestRates[0];
        case ActionId::rate_008: return kInterestRates[1];
        case ActionId::rate_009: return kInterestRates[2];
        default: throw std::invalid_argument("action carries no interest rate");
    }
}

inline Procedure procedure_value(ActionId a) {
    switch (a) {
        case ActionId::standard: return Procedure::standard;
        case ActionId::priority: return Procedure::priority;
        default: throw std::invalid_argument("action carries no procedure");
    }
}

struct InterventionSpec {
    InterventionKind kind;
    std::vector<ActionId> actions;  // canonical order
    int width;
    int depth;
    const char* point_rule;
};

inline const InterventionSpec& intervention_spec(InterventionKind k) {
    static const std::array<InterventionSpec, kInterventionCount> table = {{
        {InterventionKind::choose_procedure,
         {ActionId::standard, ActionId::priority},
         2,
         1,
         "once, directly after initiate_application"},
        {InterventionKind::set_interest_rate,
         {ActionId::rate_007, ActionId::rate_008, ActionId::rate_009},
         3,
         1,
         "once, at calculate_offer"},
        {InterventionKind::time_contact_hq,
         {ActionId::contact, ActionId::wait},
         2,
         4,
         "after choose_procedure and after each realized call; standard procedure only"},
    }};
    return table[static_cast<std::size_t>(k)];
}

// A concrete pending (or upcoming) decision in a running case.
struct DecisionPoint {
    InterventionKind kind = InterventionKind::choose_procedure;
    int point_index = 0;  // time_contact_hq: 0 = after choose_procedure, j = after call j
    std::size_t position = kUnknownPosition;  // events preceding the decision
    std::vector<ActionId> allowed;

    static constexpr std::size_t kUnknownPosition = std::numeric_limits<std::size_t>::max();
};

// Ordered interventions active in an experiment; duplicates are invalid and
// the order must follow process position (choose_procedure first,
// set_interest_rate last).
using InterventionSequence = std::vector<InterventionKind>;

inline void validate_sequence(const InterventionSequence& seq) {
    int last = -1;
    for (const auto k : seq) {
        int pos = 0;
        switch (k) {
            case InterventionKind::choose_procedure: pos = 0; break;
            case InterventionKind::time_contact_hq: pos = 1; break;
            case InterventionKind::set_interest_rate: pos = 2; break;
        }
        if (pos <= last) throw std::invalid_argument("intervention sequence out of process order or duplicated");
        last = pos;
    }
}

inline bool sequence_contains(const InterventionSequence& seq, InterventionKind k) {
    return std::find(seq.begin(), seq.end(), k) != seq.end();
}

inline InterventionSequence parse_interventions(std::string_view csv) {
    InterventionSequence seq;
    std::size_t pos = 0;
    while (pos <= csv.size()) {
        const auto comma = csv.find(',', pos);
        const auto part = csv.substr(pos, comma == std::string_view::npos ? csv.size() - pos : comma - pos);
        if (!part.empty()) seq.push_back(intervention_from_string(part));
        if (comma == std::string_view::npos) break;
        pos = comma + 1;
    }
    std::sort(seq.begin(), seq.end(), [](InterventionKind a, InterventionKind b) {
        auto pos_of = [](InterventionKind k) {
            switch (k) {
                case InterventionKind::choose_procedure: return 0;
                case InterventionKind::time_contact_hq: return 1;
                case InterventionKind::set_interest_rate: return 2;
            }
            return 3;
        };
        return pos_of(a) < pos_of(b);
    });
    validate_sequence(seq);
    return seq;
}

inline std::string interventions_to_string(const InterventionSequence& seq) {
    std::string out;
    for (const auto k : seq) {
        if (!out.empty()) out += ',';
        out += to_string(k);
    }
    return out;
}

namespace detail {

inline DecisionPoint make_point(InterventionKind kind, int point_index, std::size_t position) {
    DecisionPoint p;
    p.kind = kind;
    p.point_index = point_index;
    p.position = position;
    p.allowed = intervention_spec(kind).actions;
    return p;
}

}  // namespace detail

// Decision points of the active interventions still reachable from `state`.
// The first entry (when its position equals state.events.size()) is the
// currently pending decision; later entries are upcoming candidates whose
// positions are not yet known.
inline std::vector<DecisionPoint> decision_points(const CaseState& state,
                                                  const InterventionSequence& active) {
    std::vector<DecisionPoint> out;
    if (state.terminal) return out;

    if (sequence_contains(active, InterventionKind::choose_procedure) && !state.procedure) {
        out.push_back(detail::make_point(InterventionKind::choose_procedure, 0, state.events.size()));
    }
    if (sequence_contains(active, InterventionKind::time_contact_hq) && state.procedure &&
        *state.procedure == Procedure::standard && !state.hq_contacted && !block_finished(state)) {
        const int first = state.calls_made + (state.hq_point_waived ? 1 : 0);
        for (int p = first; p <= state.planned_calls && p <= kMaxCalls; ++p) {
            const auto position = (p == state.calls_made && !state.hq_point_waived)
                                      ? state.events.size()
                                      : DecisionPoint::kUnknownPosition;
            out.push_back(detail::make_point(InterventionKind::time_contact_hq, p, position));
        }
    }
    if (sequence_contains(active, InterventionKind::set_interest_rate) && !state.interest_rate) {
        const bool pending_now = !state.events.empty() &&
                                 state.last_activity() == ActivityKind::validate_application;
        out.push_back(detail::make_point(InterventionKind::set_interest_rate, 0,
                                         pending_now ? state.events.size()
                                                     : DecisionPoint::kUnknownPosition));
    }
    return out;
}

}  // namespace simbank
