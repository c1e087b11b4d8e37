// Command-line front end: offline log generation, benchmark evaluation,
// confounding sweeps, counterfactual inspection and the NDJSON session
// server.

#include <algorithm>
#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "simbank/simbank.hpp"

namespace {

std::uint64_t default_seed() {
    if (const char* env = std::getenv("SIMBANK_SEED")) {
        try {
            return std::stoull(env);
        } catch (const std::exception&) {
            std::cerr << "warning: ignoring non-numeric SIMBANK_SEED\n";
        }
    }
    return 1;
}

simbank::SimConfig load_cfg(const std::string& path) {
    return path.empty() ? simbank::SimConfig{} : simbank::load_config(path);
}

std::vector<double> parse_delta_list(const std::string& csv) {
    std::vector<double> out;
    std::stringstream ss(csv);
    std::string part;
    while (std::getline(ss, part, ',')) {
        if (!part.empty()) out.push_back(std::stod(part));
    }
    if (out.empty()) throw CLI::ValidationError("--delta-list", "needs at least one value");
    return out;
}

void print_report(const simbank::GainReport& report) {
    std::printf("policy=%s interventions=%s delta=%.4g n_test=%d reps=%d\n", report.policy.c_str(),
                simbank::interventions_to_string(report.active).c_str(), report.delta_train,
                report.n_test, report.n_reps);
    std::printf("  rep gains:");
    for (const double g : report.rep_gains) std::printf(" %+.4f", g);
    std::printf("\n  mean gain %+.4f   stdev %.4f\n", report.mean_gain, report.stdev);
}

volatile std::sig_atomic_t g_stop = 0;

void handle_signal(int) { g_stop = 1; }

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"simbank: seed-deterministic loan-process simulator and policy benchmark"};
    app.require_subcommand(1);

    std::string config_path;
    app.add_option("--config", config_path, "key=value config file overriding the defaults");

    // -- generate ---------------------------------------------------------
    auto* generate = app.add_subcommand("generate", "write an event log as CSV");
    std::int64_t gen_cases = 0;
    double gen_delta = 0.0;
    std::uint64_t gen_seed = default_seed();
    std::string gen_interventions;
    std::string gen_out;
    std::int64_t gen_base = 0;
    bool gen_hidden = false;
    generate->add_option("--cases", gen_cases, "number of cases")->required();
    generate->add_option("--delta", gen_delta, "fraction of cases following the bank policy")
        ->check(CLI::Range(0.0, 1.0));
    generate->add_option("--seed", gen_seed, "global seed (default: SIMBANK_SEED or 1)");
    generate->add_option("--interventions", gen_interventions,
                         "comma-separated interventions randomized under the delta mixture "
                         "(default: none, i.e. pure bank policy)");
    generate->add_option("--out", gen_out, "output CSV path")->required();
    generate->add_option("--base-case", gen_base, "first case_nr");
    generate->add_flag("--include-hidden", gen_hidden, "append the hidden quality column");

    // -- evaluate ---------------------------------------------------------
    auto* evaluate = app.add_subcommand("evaluate", "run one policy and report its gain");
    std::string eval_policy;
    std::string eval_interventions;
    simbank::ExperimentSpec eval_spec;
    eval_spec.seed = default_seed();
    std::string eval_dump;
    evaluate->add_option("--policy", eval_policy, "bank | random | oracle | s-learner | kmeans-q")
        ->required();
    evaluate->add_option("--interventions", eval_interventions, "active interventions")->required();
    evaluate->add_option("--delta", eval_spec.delta_train, "training-log confounding level")
        ->check(CLI::Range(0.0, 1.0));
    evaluate->add_option("--reps", eval_spec.n_reps, "repetitions");
    evaluate->add_option("--seed", eval_spec.seed, "experiment seed");
    evaluate->add_option("--train-cases", eval_spec.n_train, "training cases per repetition");
    evaluate->add_option("--val-cases", eval_spec.n_val, "validation cases");
    evaluate->add_option("--test-cases", eval_spec.n_test, "test cases");
    evaluate->add_option("--dump-profits", eval_dump,
                         "write per-case test profits (policy, first repetition) to this path");

    // -- benchmark --------------------------------------------------------
    auto* benchmark = app.add_subcommand("benchmark", "gain table across interventions and policies");
    simbank::ExperimentSpec bench_spec;
    bench_spec.seed = default_seed();
    benchmark->add_option("--reps", bench_spec.n_reps, "repetitions");
    benchmark->add_option("--seed", bench_spec.seed, "experiment seed");
    benchmark->add_option("--train-cases", bench_spec.n_train, "training cases per repetition");
    benchmark->add_option("--val-cases", bench_spec.n_val, "validation cases");
    benchmark->add_option("--test-cases", bench_spec.n_test, "test cases");
    benchmark->add_option("--delta", bench_spec.delta_train, "training-log confounding level")
        ->check(CLI::Range(0.0, 1.0));

    // -- sweep ------------------------------------------------------------
    auto* sweep = app.add_subcommand("sweep", "gain across confounding levels");
    std::string sweep_deltas;
    std::string sweep_interventions;
    std::string sweep_policy = "s-learner";
    std::string sweep_plot_out;
    simbank::ExperimentSpec sweep_spec;
    sweep_spec.seed = default_seed();
    sweep->add_option("--delta-list", sweep_deltas, "comma-separated confounding levels")->required();
    sweep->add_option("--interventions", sweep_interventions, "active interventions")->required();
    sweep->add_option("--policy", sweep_policy, "policy to sweep (default s-learner)");
    sweep->add_option("--plot-out", sweep_plot_out, "write delta,mean,ci_low,ci_high rows here");
    sweep->add_option("--reps", sweep_spec.n_reps, "repetitions");
    sweep->add_option("--seed", sweep_spec.seed, "experiment seed");
    sweep->add_option("--train-cases", sweep_spec.n_train, "training cases per repetition");
    sweep->add_option("--val-cases", sweep_spec.n_val, "validation cases");
    sweep->add_option("--test-cases", sweep_spec.n_test, "test cases");

    // -- serve ------------------------------------------------------------
    auto* serve = app.add_subcommand("serve", "NDJSON-over-TCP session server");
    int serve_port = 0;
    std::uint64_t serve_seed = default_seed();
    serve->add_option("--port", serve_port, "TCP port (0 = ephemeral)")->required();
    serve->add_option("--seed", serve_seed, "default seed for sessions");

    // -- counterfactuals --------------------------------------------------
    auto* cf = app.add_subcommand("counterfactuals", "print every branch outcome of one case");
    std::int64_t cf_case = 0;
    std::string cf_interventions;
    std::uint64_t cf_seed = default_seed();
    cf->add_option("--case", cf_case, "case number")->required();
    cf->add_option("--interventions", cf_interventions, "active interventions")->required();
    cf->add_option("--seed", cf_seed, "global seed");

    CLI11_PARSE(app, argc, argv);

    try {
        const simbank::SimConfig cfg = load_cfg(config_path);

        if (*generate) {
            const auto active = simbank::parse_interventions(gen_interventions);
            const auto log = simbank::generate_log(gen_cases, gen_delta, active, gen_seed, gen_base, cfg);
            simbank::export_csv(log, gen_out, gen_hidden);
            std::printf("wrote %s: %lld cases, delta=%.4g, seed=%llu\n", gen_out.c_str(),
                        static_cast<long long>(gen_cases), gen_delta,
                        static_cast<unsigned long long>(gen_seed));
            return 0;
        }

        if (*evaluate) {
            const auto active = simbank::parse_interventions(eval_interventions);
            const auto policy = simbank::parse_policy(eval_policy);
            const auto report = simbank::run_experiment(policy, active, eval_spec, cfg);
            print_report(report);
            if (!eval_dump.empty()) {
                const auto profits = simbank::policy_test_profits(policy, active, eval_spec, cfg, 0);
                std::ofstream out(eval_dump);
                if (!out) throw std::runtime_error("cannot open " + eval_dump);
                out << "case_nr,profit\n";
                for (std::size_t i = 0; i < profits.size(); ++i) {
                    out << (simbank::kTestCaseBase + static_cast<std::int64_t>(i)) << ',' << profits[i]
                        << '\n';
                }
            }
            return 0;
        }

        if (*benchmark) {
            using simbank::InterventionKind;
            const std::vector<simbank::InterventionSequence> columns = {
                {InterventionKind::choose_procedure},
                {InterventionKind::set_interest_rate},
                {InterventionKind::time_contact_hq}};
            const std::vector<simbank::PolicyName> rows = {
                simbank::PolicyName::random_policy, simbank::PolicyName::bank,
                simbank::PolicyName::s_learner, simbank::PolicyName::kmeans_q,
                simbank::PolicyName::oracle};
            std::printf("%-12s", "approach");
            for (const auto& col : columns) {
                std::printf(" | %-24s", simbank::to_string(col[0]));
            }
            std::printf("\n%-12s", "");
            for (std::size_t i = 0; i < columns.size(); ++i) std::printf(" | %-11s %-12s", "gain", "stdev");
            std::printf("\n");
            for (const auto policy : rows) {
                std::printf("%-12s", simbank::to_string(policy));
                for (const auto& col : columns) {
                    const auto report = simbank::run_experiment(policy, col, bench_spec, cfg);
                    std::printf(" | %+-11.3f %-12.3f", report.mean_gain, report.stdev);
                }
                std::printf("\n");
                std::fflush(stdout);
            }
            return 0;
        }

        if (*sweep) {
            const auto active = simbank::parse_interventions(sweep_interventions);
            const auto policy = simbank::parse_policy(sweep_policy);
            const auto deltas = parse_delta_list(sweep_deltas);
            const auto reports = simbank::delta_sweep(policy, active, deltas, sweep_spec, cfg);
            std::printf("%-8s %-10s %-10s %-10s %-10s\n", "delta", "gain", "stdev", "ci_low", "ci_high");
            std::vector<std::string> plot_rows;
            for (const auto& report : reports) {
                const double hw = simbank::ci_halfwidth(report);
                std::printf("%-8.4g %+-10.4f %-10.4f %+-10.4f %+-10.4f\n", report.delta_train,
                            report.mean_gain, report.stdev, report.mean_gain - hw,
                            report.mean_gain + hw);
                char buf[160];
                std::snprintf(buf, sizeof(buf), "%.6g,%.6f,%.6f,%.6f", report.delta_train,
                              report.mean_gain, report.mean_gain - hw, report.mean_gain + hw);
                plot_rows.emplace_back(buf);
            }
            if (!sweep_plot_out.empty()) {
                std::ofstream out(sweep_plot_out);
                if (!out) throw std::runtime_error("cannot open " + sweep_plot_out);
                out << "delta,mean_gain,ci_low,ci_high\n";
                for (const auto& row : plot_rows) out << row << '\n';
            }
            return 0;
        }

        if (*serve) {
            simbank::ProtocolServer server(cfg, serve_seed);
            const int port = server.start(serve_port);
            std::printf("listening on 127.0.0.1:%d (seed %llu); Ctrl-C to stop\n", port,
                        static_cast<unsigned long long>(serve_seed));
            std::fflush(stdout);
            std::signal(SIGINT, handle_signal);
            std::signal(SIGTERM, handle_signal);
            while (!g_stop) pause();
            server.stop();
            return 0;
        }

        if (*cf) {
            const auto active = simbank::parse_interventions(cf_interventions);
            if (active.empty()) throw std::runtime_error("--interventions must name at least one");
            const simbank::StreamProvider streams(cf_seed);
            const auto outcomes = simbank::evaluate_counterfactuals(cf_case, active, streams, cfg);
            std::printf("case %lld, seed %llu: %zu branches\n", static_cast<long long>(cf_case),
                        static_cast<unsigned long long>(cf_seed), outcomes.size());
            std::printf("%-4s %-52s %-12s %-9s %-9s %-8s\n", "idx", "branch", "profit", "accepted",
                        "canceled", "days");
            for (std::size_t i = 0; i < outcomes.size(); ++i) {
                const auto& o = outcomes[i];
                std::printf("%-4zu %-52s %-+12.2f %-9s %-9s %-8.2f\n", i, o.branch.label().c_str(),
                            o.result.profit, o.result.accepted ? "yes" : "no",
                            o.result.canceled ? "yes" : "no", o.result.elapsed);
            }
            const auto best = simbank::oracle_policy(cf_case, active, streams, cfg);
            std::printf("oracle: branch %zu (%s), profit %+.2f\n", best.branch_index,
                        best.branch.label().c_str(), best.profit);
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
