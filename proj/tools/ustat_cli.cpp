// Command-line driver: simulate, bound, verify-variance, verify-slln,
// check-propositions, certify-profile.
//
// Exit status: 0 all checks pass, 1 a checked inequality failed, 2 bad
// configuration or arguments.

#include "ustat/config.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

namespace fs = std::filesystem;
using namespace ustat;

namespace {

constexpr int kOk = 0;
constexpr int kViolation = 1;
constexpr int kConfigError = 2;

struct Options {
    std::string config;
    std::string out = ".";
    std::optional<std::uint64_t> seed;
    std::uint64_t budget = kDefaultEnumerationBudget;
    unsigned jobs = 1;
};

std::ofstream open_output(const Options& o, const std::string& name) {
    fs::create_directories(o.out);
    const fs::path path = fs::path(o.out) / name;
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot write " + path.string());
    return f;
}

RunConfig load(const Options& o) {
    if (o.config.empty()) throw ConfigError("--config is required");
    RunConfig rc = load_config(o.config, o.budget);
    if (o.seed) rc.experiment.master_seed = *o.seed;
    rc.experiment.jobs = o.jobs;
    return rc;
}

void print_notes(const std::vector<std::string>& notes) {
    for (const auto& n : notes) std::cout << "note: " << n << '\n';
}

void dump_worst(const BoundReport& r) {
    std::cerr << "violation: " << report_to_json(r).dump() << '\n';
}

int cmd_simulate(const Options& o) {
    const RunConfig rc = load(o);
    const auto& e = rc.experiment;
    const Trajectory t = simulate(e.chain, e.mu, rc.simulate_n, mix(e.master_seed, 0));
    auto f = open_output(o, "trajectory.csv");
    f << "t,state,value\n";
    for (std::size_t i = 0; i < t.size(); ++i)
        f << i + 1 << ',' << t.states[i] << ',' << format_number(e.chain.values()[t.states[i]]) << '\n';
    std::cout << "simulate: n=" << t.size() << " seed=" << t.seed << " -> " << (fs::path(o.out) / "trajectory.csv").string()
              << '\n';
    return kOk;
}

int emit_bound_rows(const Options& o, const VarianceExperiment& ve, const ExperimentConfig& e, bool variance_csv) {
    print_notes(ve.notes);
    if (variance_csv) {
        auto f = open_output(o, "variance.csv");
        write_variance_csv(f, ve.rows);
    }
    {
        auto f = open_output(o, "bounds.csv");
        write_bounds_csv(f, ve.rows);
    }
    json report{{"kernel", e.kernel_name},
                {"degeneracy", ve.degeneracy},
                {"mean", ve.mean},
                {"m_mu_v", ve.m_mu_v},
                {"master_seed", e.master_seed},
                {"notes", ve.notes},
                {"rows", json::array()}};
    for (const auto& r : ve.rows) report["rows"].push_back(report_to_json(r));
    auto f = open_output(o, variance_csv ? "variance.json" : "bounds.json");
    f << report.dump(2) << '\n';

    int status = kOk;
    for (const auto& r : ve.rows) {
        std::cout << r.bound_name << " n=" << r.n << " bound=" << format_number(r.bound);
        if (r.estimate)
            std::cout << " l2=" << format_number(*r.estimate) << " stderr=" << format_number(r.std_error)
                      << " margin=" << format_number(*r.margin) << (r.pass ? " PASS" : " FAIL");
        std::cout << '\n';
        if (!r.pass) {
            dump_worst(r);
            status = kViolation;
        }
    }
    return status;
}

int cmd_bound(const Options& o) {
    const RunConfig rc = load(o);
    const auto ve = run_variance_experiment(rc.experiment, L2Source::exact_only);
    return emit_bound_rows(o, ve, rc.experiment, false);
}

int cmd_verify_variance(const Options& o) {
    const RunConfig rc = load(o);
    const auto ve = run_variance_experiment(rc.experiment, L2Source::automatic);
    return emit_bound_rows(o, ve, rc.experiment, true);
}

int cmd_verify_slln(const Options& o) {
    const RunConfig rc = load(o);
    const auto s = run_slln_experiment(rc.experiment);
    auto f = open_output(o, "slln.csv");
    write_slln_csv(f, s);
    const auto& last = s.rows.back();
    const bool decreasing = s.error_decreases();
    std::cout << "slln: target=" << format_number(s.target) << " n=" << last.n << " u_n=" << format_number(last.u_n)
              << " abs_error=" << format_number(last.abs_error) << " seed=" << s.seed
              << " moment_condition=checked error_decreases=" << (decreasing ? "yes" : "no") << '\n';
    return kOk;
}

int cmd_check_propositions(const Options& o) {
    RunConfig rc = load(o);
    auto& e = rc.experiment;
    const auto& ps = rc.propositions;
    const Distribution pi = stationary(e.chain);
    TabulatedKernel h = e.h;
    if (canonical_residual(h, pi) > kDegeneracyEps) {
        h = canonical_part(h, pi);
        rc.notes.push_back("kernel replaced by its canonical part under pi");
    }
    ProofContext ctx(e.chain, e.mu, e.resolved_profile());
    const auto sweep = sweep_propositions(ctx, h, ps.n_max, ps.p_values);
    const auto lemma6 = sweep_lemma6(ps.lemma6_instances, ps.lemma6_points, ps.p_values, mix(e.master_seed, 1));

    std::vector<CheckSummary> all{sweep.vanishing, sweep.prop5, sweep.prop7_bound1};
    all.insert(all.end(), sweep.prop7_bound2.begin(), sweep.prop7_bound2.end());
    all.insert(all.end(), lemma6.begin(), lemma6.end());
    for (std::size_t m = 1; m <= 2; ++m) all.push_back(sweep_tuple_counts(ps.count_n_max, m, e.budget));

    print_notes(rc.notes);
    json report{{"m_mu_v", ctx.m_mu_v()},
                {"provenance", to_string(ctx.profile().provenance())},
                {"n_max", ps.n_max},
                {"notes", rc.notes},
                {"checks", json::object()}};
    int status = kOk;
    for (const auto& c : all) {
        report["checks"][c.name] = summary_to_json(c);
        std::cout << c.name << ": instances=" << c.instances << " violations=" << c.violations
                  << " max_ratio=" << format_number(c.max_ratio) << (c.passed() ? " PASS" : " FAIL") << '\n';
        if (!c.passed()) {
            std::cerr << "violation: " << summary_to_json(c).dump() << '\n';
            status = kViolation;
        }
    }
    auto f = open_output(o, "propositions.json");
    f << report.dump(2) << '\n';
    return status;
}

int cmd_certify_profile(const Options& o) {
    const RunConfig rc = load(o);
    const auto& e = rc.experiment;
    const ErgodicityProfile p = certify_rho(e.chain, e.v_or_one(), e.k_max);
    json j = profile_to_json(p);
    j["m_mu_v"] = m_sup(e.mu, p, e.chain);
    auto f = open_output(o, "profile.json");
    f << j.dump(2) << '\n';
    const auto& rho = std::get<ExplicitRho>(p.rho_spec());
    std::cout << "certify-profile: k_max=" << e.k_max << " rho(1)=" << format_number(p.rho(1))
              << " rho(k_max)=" << format_number(rho.table.back()) << " tail_factor=" << format_number(rho.tail_factor)
              << " tail_block=" << rho.tail_block << " M=" << format_number(j["m_mu_v"].get<double>()) << '\n';
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"U-statistics of Markov chains: L2 bounds, exact checks and simulation"};
    Options o;
    bool emit_schema = false;
    app.add_flag("--emit-schema", emit_schema, "print the configuration JSON schema and exit");
    app.add_option("--config", o.config, "configuration JSON file");
    app.add_option("--out", o.out, "output directory")->capture_default_str();
    app.add_option("--seed", o.seed, "master seed, overrides the config");
    app.add_option("--budget", o.budget, "enumeration cap")->capture_default_str();
    app.add_option("--jobs", o.jobs, "worker threads; results do not depend on it")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();

    struct Sub {
        const char* name;
        const char* help;
        int (*run)(const Options&);
    };
    const Sub subs[] = {
        {"simulate", "simulate one trajectory", cmd_simulate},
        {"bound", "evaluate the requested bounds on the n-grid", cmd_bound},
        {"verify-variance", "compare L2 norms with the bounds", cmd_verify_variance},
        {"verify-slln", "strong-law convergence along one trajectory", cmd_verify_slln},
        {"check-propositions", "exhaustive exact checks of the tuple inequalities", cmd_check_propositions},
        {"certify-profile", "certify rho(k) from the transition matrix", cmd_certify_profile},
    };
    std::vector<CLI::App*> commands;
    for (const auto& s : subs) commands.push_back(app.add_subcommand(s.name, s.help)->fallthrough());

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfigError;
    }
    if (emit_schema) {
        std::cout << config_schema();
        return kOk;
    }
    try {
        for (std::size_t i = 0; i < commands.size(); ++i)
            if (commands[i]->parsed()) return subs[i].run(o);
        std::cerr << "error: a subcommand is required\n" << app.help();
        return kConfigError;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kConfigError;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kConfigError;
    }
}
