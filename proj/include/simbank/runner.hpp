#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <stdexcept>

#include "simbank/interventions.hpp"
#include "simbank/policies.hpp"
#include "simbank/process.hpp"

namespace simbank {

// Drives one case through the control flow, pausing at every structural
// decision point (procedure choice, each HQ timing point, rate choice).
// Copyable by value, which is what counterfactual enumeration forks on.
class CaseRunner {
public:
    CaseRunner(std::int64_t case_nr, const StreamProvider& streams, const SimConfig& cfg)
        : cfg_(&cfg), streams_(streams) {
        st_ = init_case(case_nr, streams_, *cfg_);
        phase_ = Phase::need_procedure;
        advance();
    }

    bool done() const { return st_.terminal; }

    const DecisionPoint& pending() const {
        if (!pending_) throw std::logic_error("no pending decision");
        return *pending_;
    }

    const CaseState& state() const { return st_; }

    void resume(ActionId action) {
        if (!pending_) throw std::logic_error("case already terminal");
        const auto& allowed = pending_->allowed;
        if (std::find(allowed.begin(), allowed.end(), action) == allowed.end()) {
            throw std::invalid_argument("illegal action");
        }
        switch (pending_->kind) {
            case InterventionKind::choose_procedure: {
                ActivityInput in;
                in.procedure = procedure_value(action);
                st_ = apply_activity(st_, ActivityKind::choose_procedure, streams_, *cfg_, in);
                if (*st_.procedure == Procedure::priority) {
                    st_ = apply_activity(st_, ActivityKind::validate_application, streams_, *cfg_);
                    phase_ = Phase::need_rate;
                } else {
                    phase_ = Phase::block;
                }
                break;
            }
            case InterventionKind::time_contact_hq: {
                if (action == ActionId::contact) {
                    st_ = apply_activity(st_, ActivityKind::contact_hq, streams_, *cfg_);
                } else {
                    st_.hq_point_waived = true;
                }
                phase_ = Phase::block;
                break;
            }
            case InterventionKind::set_interest_rate: {
                ActivityInput in;
                in.interest_rate = rate_value(action);
                st_ = apply_activity(st_, ActivityKind::calculate_offer, streams_, *cfg_, in);
                phase_ = Phase::finish;
                break;
            }
        }
        pending_.reset();
        advance();
    }

    CaseResult result() const {
        if (!st_.terminal) throw std::logic_error("case not terminal");
        return compute_outcome(st_, *cfg_);
    }

private:
    enum class Phase { need_procedure, block, exit_checks, need_rate, finish, done };

    void advance() {
        while (true) {
            switch (phase_) {
                case Phase::need_procedure:
                    pending_ = detail::make_point(InterventionKind::choose_procedure, 0, st_.events.size());
                    return;
                case Phase::block:
                    if (!st_.hq_contacted && !st_.hq_point_waived) {
                        pending_ = detail::make_point(InterventionKind::time_contact_hq,
                                                      st_.calls_made, st_.events.size());
                        return;
                    }
                    if (st_.calls_made < st_.planned_calls) {
                        st_ = apply_activity(st_, ActivityKind::call_customer, streams_, *cfg_);
                        continue;
                    }
                    phase_ = Phase::exit_checks;
                    continue;
                case Phase::exit_checks:
                    if (cancel_condition(st_, *cfg_)) {
                        st_ = apply_activity(st_, ActivityKind::cancel_application, streams_, *cfg_);
                        phase_ = Phase::done;
                        return;
                    }
                    st_ = apply_activity(st_, ActivityKind::validate_application, streams_, *cfg_);
                    phase_ = Phase::need_rate;
                    continue;
                case Phase::need_rate:
                    pending_ = detail::make_point(InterventionKind::set_interest_rate, 0, st_.events.size());
                    return;
                case Phase::finish: {
                    const bool accepted = client_decision(st_, streams_, *cfg_);
                    st_ = apply_activity(st_, accepted ? ActivityKind::receive_acceptance
                                                       : ActivityKind::receive_refusal,
                                         streams_, *cfg_);
                    phase_ = Phase::done;
                    return;
                }
                case Phase::done:
                    return;
            }
        }
    }

    const SimConfig* cfg_;
    StreamProvider streams_;
    CaseState st_;
    Phase phase_ = Phase::done;
    std::optional<DecisionPoint> pending_;
};

}  // namespace simbank
