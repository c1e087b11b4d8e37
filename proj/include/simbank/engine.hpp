#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "simbank/interventions.hpp"
#include "simbank/policies.hpp"
#include "simbank/process.hpp"
#include "simbank/runner.hpp"

namespace simbank {

// Case-number namespaces. Training logs live at the bottom; evaluation,
// validation and side datasets use disjoint ranges so a fixed seed yields
// stable, reusable test cases.
inline constexpr std::int64_t kTestCaseBase = 1'000'000'000;
inline constexpr std::int64_t kValidationCaseBase = 2'000'000'000;
inline constexpr std::int64_t kAuxCaseBase = 3'000'000'000;

// Answers a pending decision point during a simulated case.
using Decider = std::function<PolicyDecision(const CaseState&, const DecisionPoint&)>;

// Optional per-case instrumentation (training-sample collection, audits).
struct CaseObserver {
    std::function<void(const CaseState&, const DecisionPoint&, const PolicyDecision&)> on_decision;
};

// Runs one case to the end, letting `decide` answer every structural
// decision point.
inline CaseResult run_case(std::int64_t case_nr, const StreamProvider& streams, const SimConfig& cfg,
                           const Decider& decide, const CaseObserver* observer = nullptr) {
    CaseRunner runner(case_nr, streams, cfg);
    while (!runner.done()) {
        const auto& point = runner.pending();
        const PolicyDecision dec = decide(runner.state(), point);
        if (observer && observer->on_decision) observer->on_decision(runner.state(), point, dec);
        runner.resume(dec.action);
    }
    return runner.result();
}

// Decider used by offline generation and baseline evaluation: decision points
// of `active` interventions follow `regime`, everything else follows the bank
// policy.
inline Decider make_regime_decider(const InterventionSequence& active, const PolicyRegime& regime,
                                   const StreamProvider& streams, const SimConfig& cfg) {
    return [active, regime, &streams, &cfg](const CaseState& st, const DecisionPoint& point) {
        if (sequence_contains(active, point.kind)) {
            return select_action(st, point, regime, streams, cfg);
        }
        return select_action(st, point, PolicyRegime::bank(), streams, cfg);
    };
}

inline CaseResult simulate_case(std::int64_t case_nr, const InterventionSequence& active,
                                const PolicyRegime& regime, const StreamProvider& streams,
                                const SimConfig& cfg, const CaseObserver* observer = nullptr) {
    if (regime.variant == RegimeVariant::external) throw std::logic_error("external action required");
    return run_case(case_nr, streams, cfg, make_regime_decider(active, regime, streams, cfg), observer);
}

// ---------------------------------------------------------------------------
// Event logs
// ---------------------------------------------------------------------------

struct LogMeta {
    std::uint64_t seed = 0;
    double delta = 0.0;
    InterventionSequence active;
    std::int64_t base_case_nr = 0;
    std::int64_t n_cases = 0;
};

struct CaseTrace {
    std::int64_t case_nr = 0;
    RegimeTag regime = RegimeTag::bank;
    double hidden_quality = 0.0;
    std::vector<Event> events;
    double profit = 0.0;
    bool accepted = false;
    bool canceled = false;
};

struct EventLog {
    LogMeta meta;
    std::vector<CaseTrace> cases;
};

inline EventLog generate_log(std::int64_t n_cases, double delta, const InterventionSequence& active,
                             std::uint64_t seed, std::int64_t base_case_nr, const SimConfig& cfg) {
    if (n_cases < 1) throw std::invalid_argument("n_cases must be >= 1");
    validate_sequence(active);
    const StreamProvider streams(seed);
    const auto regime = PolicyRegime::mixed(delta);

    EventLog log;
    log.meta = {seed, delta, active, base_case_nr, n_cases};
    log.cases.reserve(static_cast<std::size_t>(n_cases));
    for (std::int64_t i = 0; i < n_cases; ++i) {
        const std::int64_t nr = base_case_nr + i;
        const CaseResult res = simulate_case(nr, active, regime, streams, cfg);
        CaseTrace trace;
        trace.case_nr = nr;
        trace.regime = case_regime(nr, regime, streams);
        trace.hidden_quality = res.final_state.profile.quality;
        trace.events = res.final_state.events;
        trace.profit = res.profit;
        trace.accepted = res.accepted;
        trace.canceled = res.canceled;
        log.cases.push_back(std::move(trace));
    }
    return log;
}

// ---------------------------------------------------------------------------
// Online sessions
// ---------------------------------------------------------------------------

// A stepped case: simulation halts at each decision point of the active
// interventions and waits for step(); decision points of other interventions
// are answered internally by `nonactive_regime` (bank by default).
class Session {
public:
    Session(std::int64_t case_nr, InterventionSequence active, const StreamProvider& streams,
            const SimConfig& cfg, PolicyRegime nonactive_regime = PolicyRegime::bank())
        : cfg_(&cfg),
          streams_(streams),
          active_(std::move(active)),
          nonactive_regime_(nonactive_regime),
          runner_(case_nr, streams_, cfg) {
        validate_sequence(active_);
        advance_to_active();
    }

    bool done() const { return runner_.done(); }

    const DecisionPoint& pending() const {
        if (runner_.done()) throw std::logic_error("session already terminal");
        return runner_.pending();
    }

    const CaseState& state() const { return runner_.state(); }

    void step(ActionId action) {
        if (runner_.done()) throw std::logic_error("session already terminal");
        runner_.resume(action);  // throws "illegal action" on bad input
        advance_to_active();
    }

    const CaseResult& result() const {
        if (!result_) throw std::logic_error("session not terminal");
        return *result_;
    }

private:
    void advance_to_active() {
        while (!runner_.done() && !sequence_contains(active_, runner_.pending().kind)) {
            const auto dec =
                select_action(runner_.state(), runner_.pending(), nonactive_regime_, streams_, *cfg_);
            runner_.resume(dec.action);
        }
        if (runner_.done()) result_ = runner_.result();
    }

    const SimConfig* cfg_;
    StreamProvider streams_;
    InterventionSequence active_;
    PolicyRegime nonactive_regime_;
    CaseRunner runner_;
    std::optional<CaseResult> result_;
};

inline Session open_session(std::int64_t case_nr, const InterventionSequence& active,
                            std::uint64_t seed, const SimConfig& cfg,
                            PolicyRegime nonactive_regime = PolicyRegime::bank()) {
    return Session(case_nr, active, StreamProvider(seed), cfg, nonactive_regime);
}

// ---------------------------------------------------------------------------
// Counterfactual enumeration
// ---------------------------------------------------------------------------

struct BranchAction {
    InterventionKind kind;
    int point_index;
    ActionId action;
};

// One complete assignment of actions to the decision points of the active
// interventions. For time_contact_hq an all-wait assignment is the "never"
// branch.
struct Branch {
    std::vector<BranchAction> actions;

    std::string label() const {
        std::string out;
        bool hq_contacted = false;
        bool hq_seen = false;
        for (const auto& a : actions) {
            if (a.kind == InterventionKind::time_contact_hq) {
                hq_seen = true;
                if (a.action == ActionId::contact) {
                    if (!out.empty()) out += ';';
                    out += "time_contact_hq=contact@" + std::to_string(a.point_index);
                    hq_contacted = true;
                }
                continue;
            }
            if (!out.empty()) out += ';';
            out += std::string(to_string(a.kind)) + "=" + action_label(a.action);
        }
        if (hq_seen && !hq_contacted) {
            if (!out.empty()) out += ';';
            out += "time_contact_hq=never";
        }
        return out.empty() ? "(no decisions)" : out;
    }
};

struct BranchOutcome {
    Branch branch;
    CaseResult result;
};

namespace detail {

inline void enumerate_branches(CaseRunner runner, const InterventionSequence& active,
                               const StreamProvider& streams, const SimConfig& cfg,
                               Branch& prefix, std::vector<BranchOutcome>& out) {
    while (!runner.done()) {
        const DecisionPoint point = runner.pending();
        if (sequence_contains(active, point.kind)) {
            for (std::size_t i = 0; i < point.allowed.size(); ++i) {
                const ActionId a = point.allowed[i];
                prefix.actions.push_back({point.kind, point.point_index, a});
                if (i + 1 == point.allowed.size()) {
                    runner.resume(a);
                    enumerate_branches(std::move(runner), active, streams, cfg, prefix, out);
                    prefix.actions.pop_back();
                    return;
                }
                CaseRunner fork = runner;
                fork.resume(a);
                enumerate_branches(std::move(fork), active, streams, cfg, prefix, out);
                prefix.actions.pop_back();
            }
            return;
        }
        const auto dec = select_action(runner.state(), point, PolicyRegime::bank(), streams, cfg);
        runner.resume(dec.action);
    }
    out.push_back({prefix, runner.result()});
}

}  // namespace detail

// The true outcome of every branch, all sharing the same keyed noise. The
// enumeration order is depth-first with actions in canonical order, so branch
// indices are stable.
inline std::vector<BranchOutcome> evaluate_counterfactuals(std::int64_t case_nr,
                                                           const InterventionSequence& active,
                                                           const StreamProvider& streams,
                                                           const SimConfig& cfg) {
    if (active.empty()) throw std::invalid_argument("active interventions must be nonempty");
    validate_sequence(active);
    std::vector<BranchOutcome> out;
    Branch prefix;
    detail::enumerate_branches(CaseRunner(case_nr, streams, cfg), active, streams, cfg, prefix, out);
    return out;
}

inline std::vector<Branch> counterfactual_branches(std::int64_t case_nr,
                                                   const InterventionSequence& active,
                                                   const StreamProvider& streams,
                                                   const SimConfig& cfg) {
    const auto outcomes = evaluate_counterfactuals(case_nr, active, streams, cfg);
    std::vector<Branch> branches;
    branches.reserve(outcomes.size());
    for (const auto& o : outcomes) branches.push_back(o.branch);
    return branches;
}

struct OracleChoice {
    std::size_t branch_index = 0;
    Branch branch;
    double profit = 0.0;
};

// Best branch by profit; ties resolve to the lowest branch index.
inline OracleChoice oracle_policy(std::int64_t case_nr, const InterventionSequence& active,
                                  const StreamProvider& streams, const SimConfig& cfg) {
    const auto outcomes = evaluate_counterfactuals(case_nr, active, streams, cfg);
    std::size_t best = 0;
    for (std::size_t i = 1; i < outcomes.size(); ++i) {
        if (outcomes[i].result.profit > outcomes[best].result.profit) best = i;
    }
    return {best, outcomes[best].branch, outcomes[best].result.profit};
}

}  // namespace simbank
