#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "simbank/config.hpp"
#include "simbank/random.hpp"

namespace simbank {

enum class ActivityKind : int {
    initiate_application = 0,
    choose_procedure,
    call_customer,
    contact_hq,
    validate_application,
    calculate_offer,
    receive_acceptance,
    receive_refusal,
    cancel_application,
};

inline constexpr std::size_t kActivityCount = 9;

inline constexpr std::array<const char*, kActivityCount> kActivityNames = {
    "initiate_application", "choose_procedure", "call_customer",
    "contact_hq",           "validate_application", "calculate_offer",
    "receive_acceptance",   "receive_refusal",  "cancel_application"};

inline const char* to_string(ActivityKind a) {
    const auto i = static_cast<std::size_t>(a);
    if (i >= kActivityCount) throw std::invalid_argument("unknown activity");
    return kActivityNames[i];
}

inline ActivityKind activity_from_string(std::string_view name) {
    for (std::size_t i = 0; i < kActivityCount; ++i) {
        if (name == kActivityNames[i]) return static_cast<ActivityKind>(i);
    }
    throw std::invalid_argument("unknown activity: " + std::string(name));
}

enum class Procedure : int { standard = 0, priority = 1 };

inline const char* to_string(Procedure p) {
    return p == Procedure::standard ? "standard" : "priority";
}

// Which timeline an event lives on. Branch A is the customer-contact loop,
// branch B the single optional HQ contact running concurrently with it.
enum class BranchTag : int { main_path = 0, branch_a = 1, branch_b = 2 };

inline const char* to_string(BranchTag b) {
    switch (b) {
        case BranchTag::main_path: return "main";
        case BranchTag::branch_a: return "A";
        case BranchTag::branch_b: return "B";
    }
    throw std::invalid_argument("unknown branch tag");
}

enum class OutcomeKind : int { none = 0, accepted, refused, canceled };

// Hidden client; `quality` is never visible to policies.
struct ClientProfile {
    double amount = 0.0;
    double quality = 0.0;
    double unc_quality_0 = 0.0;
};

// One executed activity plus the observable attribute snapshot taken at its
// completion.
struct Event {
    ActivityKind activity = ActivityKind::initiate_application;
    double start = 0.0;  // days since case start
    double end = 0.0;
    double cost = 0.0;  // this event's own cost
    BranchTag branch = BranchTag::main_path;

    double cum_cost = 0.0;
    double amount = 0.0;
    double est_quality = 0.0;
    double unc_quality = 0.0;
    std::optional<double> interest_rate;
    std::optional<double> discount_factor;
};

struct CaseState {
    std::int64_t case_nr = 0;
    double clock = 0.0;  // max event end so far, days
    std::vector<Event> events;
    double cost = 0.0;  // cumulative EUR
    double amount = 0.0;
    double est_quality = 0.0;
    double unc_quality = 0.0;
    std::optional<double> interest_rate;
    std::optional<double> discount_factor;
    ClientProfile profile;
    std::optional<Procedure> procedure;
    bool hq_contacted = false;
    int calls_made = 0;
    bool terminal = false;

    // Environment bookkeeping (not part of the observable schema).
    int planned_calls = 0;       // realized loop length, drawn on entering the standard block
    bool hq_point_waived = false;  // the timing point at the current loop position was declined
    double branch_a_time = 0.0;  // branch-A / main-path frontier
    double branch_b_end = 0.0;   // HQ contact end, 0 when absent
    OutcomeKind outcome = OutcomeKind::none;

    ActivityKind last_activity() const {
        if (events.empty()) throw std::logic_error("case has no events");
        return events.back().activity;
    }
};

struct CaseResult {
    double profit = 0.0;
    bool accepted = false;
    bool canceled = false;
    double total_cost = 0.0;
    double elapsed = 0.0;
    CaseState final_state;
};

// Inputs for activities that carry a decision payload.
struct ActivityInput {
    std::optional<Procedure> procedure;  // choose_procedure
    std::optional<double> interest_rate;  // calculate_offer
};

namespace detail {

// Stable per-activity occurrence slots for the "duration" stream, so a
// duration draw addresses the same noise in every counterfactual branch.
inline std::uint32_t duration_slot(ActivityKind kind, int call_index = 0) {
    switch (kind) {
        case ActivityKind::initiate_application: return 0;
        case ActivityKind::choose_procedure: return 1;
        case ActivityKind::call_customer: return 1 + static_cast<std::uint32_t>(call_index);  // calls 1..3 -> 2..4
        case ActivityKind::contact_hq: return 5;
        case ActivityKind::validate_application: return 6;
        case ActivityKind::calculate_offer: return 7;
        case ActivityKind::cancel_application: return 8;
        default: return 9;
    }
}

inline double clip01(double x) { return std::clamp(x, 0.0, 1.0); }

inline void append_event(CaseState& st, ActivityKind kind, double start, double duration,
                         double cost, BranchTag branch) {
    Event ev;
    ev.activity = kind;
    ev.start = start;
    ev.end = start + duration;
    ev.cost = cost;
    ev.branch = branch;
    st.cost += cost;
    st.clock = std::max(st.clock, ev.end);
    ev.cum_cost = st.cost;
    ev.amount = st.amount;
    ev.est_quality = st.est_quality;
    ev.unc_quality = st.unc_quality;
    ev.interest_rate = st.interest_rate;
    ev.discount_factor = st.discount_factor;
    st.events.push_back(ev);
}

}  // namespace detail

// True when the standard parallel block has run its course: all planned calls
// made and the HQ question settled one way or the other.
inline bool block_finished(const CaseState& st) {
    return st.calls_made >= st.planned_calls && (st.hq_contacted || st.hq_point_waived);
}

// Environment rule: a finished standard block cancels when the client was
// never worth an HQ contact or the final estimate is too low.
inline bool cancel_condition(const CaseState& st, const SimConfig& cfg) {
    return !st.hq_contacted || st.est_quality < cfg.cancel_est_threshold;
}

inline CaseState init_case(std::int64_t case_nr, const StreamProvider& streams, const SimConfig& cfg) {
    if (case_nr < 0) throw std::invalid_argument("case_nr must be nonnegative");
    CaseState st;
    st.case_nr = case_nr;

    const StreamKey init_key{case_nr, StreamPurpose::case_init, 0};
    st.profile.amount = std::clamp(streams.lognormal(init_key, cfg.amount_log_mean, cfg.amount_log_sd, 0),
                                   cfg.amount_min, cfg.amount_max);
    st.profile.quality = streams.beta_int({case_nr, StreamPurpose::case_init, 1},
                                          cfg.quality_beta_a, cfg.quality_beta_b);
    st.profile.unc_quality_0 = streams.uniform_range({case_nr, StreamPurpose::case_init, 2},
                                                     cfg.unc0_min, cfg.unc0_max);

    st.amount = st.profile.amount;
    st.unc_quality = st.profile.unc_quality_0;
    st.est_quality = detail::clip01(st.profile.quality +
                                    streams.normal({case_nr, StreamPurpose::case_init, 3},
                                                   0.0, st.unc_quality));

    const double dur = streams.uniform_range({case_nr, StreamPurpose::duration,
                                              detail::duration_slot(ActivityKind::initiate_application)},
                                             cfg.initiate_dur_min, cfg.initiate_dur_max);
    detail::append_event(st, ActivityKind::initiate_application, 0.0, dur, cfg.initiate_cost,
                         BranchTag::main_path);
    st.branch_a_time = st.events.back().end;
    return st;
}

// Activities enabled by the control flow from this state.
inline std::vector<ActivityKind> legal_next(const CaseState& st, const SimConfig& cfg) {
    if (st.terminal) throw std::logic_error("case already terminal");
    const ActivityKind last = st.last_activity();

    if (last == ActivityKind::initiate_application) return {ActivityKind::choose_procedure};
    if (last == ActivityKind::validate_application) return {ActivityKind::calculate_offer};
    if (last == ActivityKind::calculate_offer) {
        return {ActivityKind::receive_acceptance, ActivityKind::receive_refusal};
    }

    if (!st.procedure) throw std::logic_error("inconsistent state: no procedure after choose");
    if (*st.procedure == Procedure::priority) return {ActivityKind::validate_application};

    if (!block_finished(st)) {
        std::vector<ActivityKind> out;
        if (st.calls_made < st.planned_calls) out.push_back(ActivityKind::call_customer);
        if (!st.hq_contacted && !st.hq_point_waived) {
            out.push_back(ActivityKind::contact_hq);
            // Declining the final timing point means no contact ever happens,
            // which cancels the case.
            if (st.calls_made >= st.planned_calls) out.push_back(ActivityKind::cancel_application);
        }
        return out;
    }
    if (cancel_condition(st, cfg)) return {ActivityKind::cancel_application};
    return {ActivityKind::validate_application};
}

// Applies one activity: samples duration and cost, advances the affected
// timeline and updates the observable attributes. Activities carrying a
// decision (choose_procedure, calculate_offer) take it via `input`.
inline CaseState apply_activity(const CaseState& state, ActivityKind kind,
                                const StreamProvider& streams, const SimConfig& cfg,
                                const ActivityInput& input = {}) {
    const auto legal = legal_next(state, cfg);
    if (std::find(legal.begin(), legal.end(), kind) == legal.end()) {
        throw std::logic_error("activity not enabled");
    }

    CaseState st = state;
    const std::int64_t nr = st.case_nr;

    switch (kind) {
        case ActivityKind::choose_procedure: {
            if (!input.procedure) throw std::invalid_argument("choose_procedure needs a procedure");
            st.procedure = *input.procedure;
            const bool priority = *st.procedure == Procedure::priority;
            const double cost = cfg.choose_cost + (priority ? cfg.priority_surcharge : 0.0);
            detail::append_event(st, kind, st.branch_a_time, cfg.choose_dur, cost, BranchTag::main_path);
            st.branch_a_time = st.events.back().end;
            if (!priority) {
                const std::vector<double> probs(cfg.call_count_probs.begin(), cfg.call_count_probs.end());
                st.planned_calls = 1 + static_cast<int>(streams.categorical(
                                           {nr, StreamPurpose::loop_count, 0}, probs));
                st.hq_point_waived = false;
            }
            break;
        }
        case ActivityKind::call_customer: {
            const int call_index = st.calls_made + 1;
            const double dur = streams.uniform_range(
                {nr, StreamPurpose::duration, detail::duration_slot(kind, call_index)},
                cfg.call_dur_min, cfg.call_dur_max);
            st.calls_made = call_index;
            st.hq_point_waived = false;  // a fresh timing point opens after this call
            st.unc_quality = detail::clip01(st.unc_quality * cfg.call_unc_decay);
            st.est_quality = detail::clip01(st.profile.quality +
                                            streams.normal({nr, StreamPurpose::call_redraw,
                                                            static_cast<std::uint32_t>(call_index)},
                                                           0.0, st.unc_quality));
            detail::append_event(st, kind, st.branch_a_time, dur, cfg.call_cost, BranchTag::branch_a);
            st.branch_a_time = st.events.back().end;
            break;
        }
        case ActivityKind::contact_hq: {
            const double dur = streams.uniform_range(
                {nr, StreamPurpose::duration, detail::duration_slot(kind)}, cfg.hq_dur_min, cfg.hq_dur_max);
            const double cost = cfg.hq_cost_base + cfg.hq_cost_slope * st.unc_quality;
            st.hq_contacted = true;
            // Branch B starts at the chosen timing point's branch-A timestamp
            // and may overlap later calls.
            detail::append_event(st, kind, st.branch_a_time, dur, cost, BranchTag::branch_b);
            st.branch_b_end = st.events.back().end;
            break;
        }
        case ActivityKind::validate_application: {
            const double start = std::max(st.branch_a_time, st.branch_b_end);
            const double dur = streams.uniform_range(
                {nr, StreamPurpose::duration, detail::duration_slot(kind)},
                cfg.validate_dur_min, cfg.validate_dur_max);
            detail::append_event(st, kind, start, dur, cfg.validate_cost, BranchTag::main_path);
            st.branch_a_time = st.events.back().end;
            break;
        }
        case ActivityKind::calculate_offer: {
            if (!input.interest_rate) throw std::invalid_argument("calculate_offer needs an interest rate");
            st.interest_rate = *input.interest_rate;
            st.discount_factor = cfg.discount_base + cfg.discount_est_coef * (1.0 - st.est_quality) +
                                 cfg.discount_unc_coef * st.unc_quality;
            detail::append_event(st, kind, st.branch_a_time, cfg.offer_dur, cfg.offer_cost,
                                 BranchTag::main_path);
            st.branch_a_time = st.events.back().end;
            break;
        }
        case ActivityKind::receive_acceptance:
        case ActivityKind::receive_refusal: {
            detail::append_event(st, kind, st.branch_a_time, 0.0, 0.0, BranchTag::main_path);
            st.terminal = true;
            st.outcome = kind == ActivityKind::receive_acceptance ? OutcomeKind::accepted
                                                                  : OutcomeKind::refused;
            break;
        }
        case ActivityKind::cancel_application: {
            const double start = std::max(st.branch_a_time, st.branch_b_end);
            detail::append_event(st, kind, start, cfg.cancel_dur, cfg.cancel_cost, BranchTag::main_path);
            st.branch_a_time = st.events.back().end;
            st.terminal = true;
            st.outcome = OutcomeKind::canceled;
            break;
        }
        default:
            throw std::logic_error("activity not enabled");
    }
    return st;
}

// P(client accepts the offer), decreasing in rate, elapsed time and amount.
inline double acceptance_probability(double interest_rate, double elapsed_days, double amount,
                                     const SimConfig& cfg) {
    const double z = cfg.accept_base - cfg.accept_rate_coef * (interest_rate - cfg.accept_rate_ref) -
                     cfg.accept_time_coef * elapsed_days - cfg.accept_amount_coef * (amount / 1000.0);
    return 1.0 / (1.0 + std::exp(-z));
}

// Client response after the offer. Drawn from the dedicated client-decision
// stream, so the draw is shared by every counterfactual branch that reaches
// an offer; branches differ only through (rate, elapsed, amount).
inline bool client_decision(const CaseState& st, const StreamProvider& streams, const SimConfig& cfg) {
    if (!st.interest_rate) throw std::logic_error("client_decision requires an interest rate");
    const double p = acceptance_probability(*st.interest_rate, st.clock, st.amount, cfg);
    return streams.bernoulli({st.case_nr, StreamPurpose::client_decision, 0}, p);
}

inline CaseResult compute_outcome(const CaseState& st, const SimConfig& cfg) {
    if (!st.terminal) throw std::logic_error("case not terminal");
    CaseResult res;
    res.final_state = st;
    res.total_cost = st.cost;
    res.elapsed = st.clock;
    res.accepted = st.outcome == OutcomeKind::accepted;
    res.canceled = st.outcome == OutcomeKind::canceled;
    if (res.accepted) {
        const double q = st.profile.quality;
        const double rate = *st.interest_rate;
        const double margin = rate * (cfg.quality_income_base + q) -
                              cfg.quality_loss_coef * (1.0 - q) * (1.0 - q);
        const double gross = st.amount * cfg.interest_years * margin;
        const double discount = std::pow(1.0 + *st.discount_factor, st.clock / 365.0);
        res.profit = gross / discount - st.cost;
    } else {
        res.profit = -st.cost;
    }
    return res;
}

}  // namespace simbank
