#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <type_traits>
#include <utility>
#include <vector>

namespace simbank {

// Interest rates offered by the set_interest_rate intervention. Fixed action
// set, not configuration.
inline constexpr std::array<double, 3> kInterestRates = {0.07, 0.08, 0.09};

// Maximum number of customer calls in the standard procedure's loop.
inline constexpr int kMaxCalls = 3;

// Every tunable constant of the environment, the bank policy and the
// built-in learners. Defaults below are the reference parameterization used
// by the test suites; all values can be overridden via a key=value config
// file (see load_config).
struct SimConfig {
    // -- client profile draws -------------------------------------------------
    double amount_log_mean = std::log(20000.0);
    double amount_log_sd = 0.5;
    double amount_min = 5000.0;
    double amount_max = 150000.0;
    int quality_beta_a = 2;
    int quality_beta_b = 2;
    double unc0_min = 0.1;
    double unc0_max = 0.5;

    // -- customer-contact loop ------------------------------------------------
    std::array<double, 3> call_count_probs = {0.3, 0.4, 0.3};  // P(1), P(2), P(3) calls
    double call_unc_decay = 0.6;   // unc_quality multiplier per completed call
    double call_cost = 50.0;
    double call_dur_min = 1.0;
    double call_dur_max = 3.0;

    // -- other activity costs and durations (EUR, days) ------------------------
    double initiate_cost = 10.0;
    double initiate_dur_min = 0.1;
    double initiate_dur_max = 0.5;
    double choose_cost = 5.0;
    double choose_dur = 0.1;
    double priority_surcharge = 250.0;  // added to choose_procedure under priority
    double validate_cost = 25.0;
    double validate_dur_min = 1.0;
    double validate_dur_max = 2.0;
    double offer_cost = 10.0;
    double offer_dur = 0.2;
    double cancel_cost = 10.0;
    double cancel_dur = 0.1;
    double hq_dur_min = 2.0;
    double hq_dur_max = 4.0;
    double hq_cost_base = 100.0;   // HQ contact costs base + slope * unc_quality
    double hq_cost_slope = 400.0;

    // -- environment rules ----------------------------------------------------
    // Standard cases cancel after the final call when est_quality drops below
    // this, or when no HQ contact was made at any timing point.
    double cancel_est_threshold = 0.3;

    // -- client acceptance ----------------------------------------------------
    // P(accept) = sigmoid(base - rate_coef*(r - rate_ref) - time_coef*t_days
    //                     - amount_coef*amount/1000)
    double accept_base = 5.9;
    double accept_rate_coef = 110.0;
    double accept_rate_ref = 0.05;
    double accept_time_coef = 0.10;
    double accept_amount_coef = 0.03;

    // -- pricing ----------------------------------------------------------
    // Discount rate recorded at calculate_offer:
    //   d = discount_base + discount_est_coef*(1-est) + discount_unc_coef*unc
    double discount_base = 0.03;
    double discount_est_coef = 0.05;
    double discount_unc_coef = 0.10;
    // Accepted-loan profit before costs:
    //   amount * interest_years * (r*(income_base + q) - loss_coef*(1-q)^2)
    // discounted by (1+d)^(t/365). Low-quality loans lose money, so canceling
    // them has value.
    double interest_years = 5.0;
    double quality_income_base = 0.5;
    double quality_loss_coef = 0.16;

    // -- bank policy ------------------------------------------------------
    double bank_priority_unc_max = 0.25;        // priority iff unc < this ...
    double bank_priority_amount_max = 30000.0;  // ... and amount < this ...
    double bank_priority_est_min = 0.45;        // ... and est >= this
    double bank_rate_low_est = 0.7;             // est >= this -> 0.07
    double bank_rate_mid_est = 0.4;             // est >= this -> 0.08, else 0.09
    double bank_hq_est_min = 0.5;               // contact at first post-call point with est >= this

    // -- learner defaults ---------------------------------------------------
    double ridge_lambda = 1.0;
    int tau_grid_size = 21;
    int kmeans_k = 20;
    int kmeans_max_iters = 100;
    int aux_cases = 10000;  // size of the side dataset used to fit k-means
    double q_alpha = 0.1;
    double q_eps_start = 0.3;
    double q_eps_end = 0.05;
    double q_gamma = 1.0;
    double q_reward_scale = 1000.0;  // terminal reward = profit / scale
    double q_illegal_penalty = -10.0;
};

namespace detail {

struct ConfigField {
    const char* name;
    std::function<double(const SimConfig&)> get;
    std::function<void(SimConfig&, double)> set;
};

inline const std::vector<ConfigField>& config_fields() {
    static const std::vector<ConfigField> fields = [] {
        std::vector<ConfigField> f;
        auto add = [&f](const char* name, auto member) {
            f.push_back({name,
                         [member](const SimConfig& c) { return static_cast<double>(c.*member); },
                         [member](SimConfig& c, double v) {
                             using T = std::decay_t<decltype(std::declval<SimConfig>().*member)>;
                             c.*member = static_cast<T>(v);
                         }});
        };
        add("amount.log_mean", &SimConfig::amount_log_mean);
        add("amount.log_sd", &SimConfig::amount_log_sd);
        add("amount.min", &SimConfig::amount_min);
        add("amount.max", &SimConfig::amount_max);
        add("quality.beta_a", &SimConfig::quality_beta_a);
        add("quality.beta_b", &SimConfig::quality_beta_b);
        add("unc0.min", &SimConfig::unc0_min);
        add("unc0.max", &SimConfig::unc0_max);
        add("calls.unc_decay", &SimConfig::call_unc_decay);
        add("calls.cost", &SimConfig::call_cost);
        add("calls.dur_min", &SimConfig::call_dur_min);
        add("calls.dur_max", &SimConfig::call_dur_max);
        add("initiate.cost", &SimConfig::initiate_cost);
        add("initiate.dur_min", &SimConfig::initiate_dur_min);
        add("initiate.dur_max", &SimConfig::initiate_dur_max);
        add("choose.cost", &SimConfig::choose_cost);
        add("choose.dur", &SimConfig::choose_dur);
        add("choose.priority_surcharge", &SimConfig::priority_surcharge);
        add("validate.cost", &SimConfig::validate_cost);
        add("validate.dur_min", &SimConfig::validate_dur_min);
        add("validate.dur_max", &SimConfig::validate_dur_max);
        add("offer.cost", &SimConfig::offer_cost);
        add("offer.dur", &SimConfig::offer_dur);
        add("cancel.cost", &SimConfig::cancel_cost);
        add("cancel.dur", &SimConfig::cancel_dur);
        add("hq.dur_min", &SimConfig::hq_dur_min);
        add("hq.dur_max", &SimConfig::hq_dur_max);
        add("hq.cost_base", &SimConfig::hq_cost_base);
        add("hq.cost_slope", &SimConfig::hq_cost_slope);
        add("cancel.est_threshold", &SimConfig::cancel_est_threshold);
        add("accept.base", &SimConfig::accept_base);
        add("accept.rate_coef", &SimConfig::accept_rate_coef);
        add("accept.rate_ref", &SimConfig::accept_rate_ref);
        add("accept.time_coef", &SimConfig::accept_time_coef);
        add("accept.amount_coef", &SimConfig::accept_amount_coef);
        add("pricing.discount_base", &SimConfig::discount_base);
        add("pricing.discount_est_coef", &SimConfig::discount_est_coef);
        add("pricing.discount_unc_coef", &SimConfig::discount_unc_coef);
        add("pricing.interest_years", &SimConfig::interest_years);
        add("pricing.income_base", &SimConfig::quality_income_base);
        add("pricing.loss_coef", &SimConfig::quality_loss_coef);
        add("bank.priority_unc_max", &SimConfig::bank_priority_unc_max);
        add("bank.priority_amount_max", &SimConfig::bank_priority_amount_max);
        add("bank.priority_est_min", &SimConfig::bank_priority_est_min);
        add("bank.rate_low_est", &SimConfig::bank_rate_low_est);
        add("bank.rate_mid_est", &SimConfig::bank_rate_mid_est);
        add("bank.hq_est_min", &SimConfig::bank_hq_est_min);
        add("learner.ridge_lambda", &SimConfig::ridge_lambda);
        add("learner.tau_grid_size", &SimConfig::tau_grid_size);
        add("learner.kmeans_k", &SimConfig::kmeans_k);
        add("learner.kmeans_max_iters", &SimConfig::kmeans_max_iters);
        add("learner.aux_cases", &SimConfig::aux_cases);
        add("learner.q_alpha", &SimConfig::q_alpha);
        add("learner.q_eps_start", &SimConfig::q_eps_start);
        add("learner.q_eps_end", &SimConfig::q_eps_end);
        add("learner.q_gamma", &SimConfig::q_gamma);
        add("learner.q_reward_scale", &SimConfig::q_reward_scale);
        add("learner.q_illegal_penalty", &SimConfig::q_illegal_penalty);
        return f;
    }();
    return fields;
}

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

}  // namespace detail

// Applies "key = value" lines to a config. Lines starting with '#' and blank
// lines are ignored. The special key "calls.count_probs" takes three
// comma-separated weights. Unknown keys are an error.
inline void apply_config_line(SimConfig& cfg, std::string_view line) {
    const auto stripped = detail::trim(line);
    if (stripped.empty() || stripped.front() == '#') return;
    const auto eq = stripped.find('=');
    if (eq == std::string_view::npos) throw std::invalid_argument("config line missing '=': " + std::string(line));
    const auto key = detail::trim(stripped.substr(0, eq));
    const auto value = detail::trim(stripped.substr(eq + 1));
    if (key == "calls.count_probs") {
        std::array<double, 3> probs{};
        std::stringstream ss{std::string(value)};
        std::string part;
        for (auto& p : probs) {
            if (!std::getline(ss, part, ',')) throw std::invalid_argument("calls.count_probs needs 3 values");
            p = std::stod(part);
        }
        cfg.call_count_probs = probs;
        return;
    }
    for (const auto& field : detail::config_fields()) {
        if (key == field.name) {
            field.set(cfg, std::stod(std::string(value)));
            return;
        }
    }
    throw std::invalid_argument("unknown config key: " + std::string(key));
}

inline SimConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    SimConfig cfg;
    std::string line;
    while (std::getline(in, line)) apply_config_line(cfg, line);
    return cfg;
}

inline void save_config(const SimConfig& cfg, std::ostream& out) {
    out << "# simbank configuration\n";
    out << "calls.count_probs = " << cfg.call_count_probs[0] << ',' << cfg.call_count_probs[1]
        << ',' << cfg.call_count_probs[2] << '\n';
    for (const auto& field : detail::config_fields()) {
        out << field.name << " = " << field.get(cfg) << '\n';
    }
}

}  // namespace simbank
