#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include "simbank/interventions.hpp"
#include "simbank/process.hpp"
#include "simbank/random.hpp"

namespace simbank {

enum class RegimeVariant : int { bank = 0, random_rct, mixed, external };

// Data-gathering regime. mixed(delta) draws once per case: with probability
// delta the case follows the bank policy, otherwise every decision of that
// case is uniform-random (RCT).
struct PolicyRegime {
    RegimeVariant variant = RegimeVariant::bank;
    double delta = 1.0;

    static PolicyRegime bank() { return {RegimeVariant::bank, 1.0}; }
    static PolicyRegime random_rct() { return {RegimeVariant::random_rct, 0.0}; }
    static PolicyRegime mixed(double delta) {
        if (!(delta >= 0.0 && delta <= 1.0)) throw std::invalid_argument("delta outside [0,1]");
        return {RegimeVariant::mixed, delta};
    }
    static PolicyRegime external() { return {RegimeVariant::external, 1.0}; }
};

enum class RegimeTag : int { bank = 0, rct = 1 };

inline const char* to_string(RegimeTag t) { return t == RegimeTag::bank ? "bank" : "rct"; }

struct PolicyDecision {
    DecisionPoint point;
    ActionId action = ActionId::standard;
    RegimeTag tag = RegimeTag::bank;
};

namespace detail {

// Occurrence slot in the policy-noise stream per decision position. Stable
// across counterfactual branches.
inline std::uint32_t decision_noise_slot(const DecisionPoint& point) {
    switch (point.kind) {
        case InterventionKind::choose_procedure: return 0;
        case InterventionKind::time_contact_hq: return 1 + static_cast<std::uint32_t>(point.point_index);
        case InterventionKind::set_interest_rate: return 5;
    }
    throw std::invalid_argument("unknown intervention");
}

}  // namespace detail

// The bank's deterministic rule. Reads only observable attributes; the hidden
// quality never enters.
inline ActionId bank_action(const CaseState& state, const DecisionPoint& point, const SimConfig& cfg) {
    switch (point.kind) {
        case InterventionKind::choose_procedure:
            // Fast-track only confident, modest, decent-looking applications.
            return (state.unc_quality < cfg.bank_priority_unc_max &&
                    state.amount < cfg.bank_priority_amount_max &&
                    state.est_quality >= cfg.bank_priority_est_min)
                       ? ActionId::priority
                       : ActionId::standard;
        case InterventionKind::set_interest_rate:
            if (state.est_quality >= cfg.bank_rate_low_est) return ActionId::rate_007;
            if (state.est_quality >= cfg.bank_rate_mid_est) return ActionId::rate_008;
            return ActionId::rate_009;
        case InterventionKind::time_contact_hq:
            // Contact at the first post-call point where the estimate clears
            // the bar; never contact before the first call.
            return (point.point_index >= 1 && state.est_quality >= cfg.bank_hq_est_min)
                       ? ActionId::contact
                       : ActionId::wait;
    }
    throw std::invalid_argument("unknown intervention");
}

// Per-case regime resolution for mixed(delta). Stateless draw: every decision
// of one case sees the same tag.
inline RegimeTag case_regime(std::int64_t case_nr, const PolicyRegime& regime,
                             const StreamProvider& streams) {
    switch (regime.variant) {
        case RegimeVariant::bank: return RegimeTag::bank;
        case RegimeVariant::random_rct: return RegimeTag::rct;
        case RegimeVariant::mixed:
            return streams.bernoulli({case_nr, StreamPurpose::regime, 0}, regime.delta)
                       ? RegimeTag::bank
                       : RegimeTag::rct;
        case RegimeVariant::external:
            throw std::logic_error("external action required");
    }
    throw std::invalid_argument("unknown regime");
}

inline PolicyDecision select_action(const CaseState& state, const DecisionPoint& point,
                                    const PolicyRegime& regime, const StreamProvider& streams,
                                    const SimConfig& cfg) {
    PolicyDecision dec;
    dec.point = point;
    dec.tag = case_regime(state.case_nr, regime, streams);
    if (dec.tag == RegimeTag::bank) {
        dec.action = bank_action(state, point, cfg);
    } else {
        const auto idx = streams.uniform_int(
            {state.case_nr, StreamPurpose::policy_noise, detail::decision_noise_slot(point)},
            static_cast<std::uint32_t>(point.allowed.size()));
        dec.action = point.allowed[idx];
    }
    return dec;
}

}  // namespace simbank
