// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any fail.

#include "support.hpp"
#include "ustat/config.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <unistd.h>

using namespace ustat;
using ustat::testing::random_chain;
using ustat::testing::random_symmetric;
using ustat::testing::random_v;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string config_path(const std::string& name) { return std::string(USTAT_CONFIG_DIR) + "/" + name; }

std::string num(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", x);
    return buf;
}

// Criteria 1 and 2 share the random grid.
struct HoeffdingCase {
    FiniteKernel chain;
    Distribution pi;
    TabulatedKernel h;
    Trajectory path;
};

std::vector<HoeffdingCase> hoeffding_grid() {
    Rng rng(mix(1001, 0));
    std::vector<HoeffdingCase> cases;
    for (int i = 0; i < 50; ++i) {
        FiniteKernel chain = random_chain(5, rng);
        Distribution pi = stationary(chain);
        const std::size_t m = 2 + rng() % 2;
        const std::size_t n = 10 + rng() % 21;
        TabulatedKernel h = random_symmetric(5, m, rng);
        Trajectory path = simulate(chain, Distribution::uniform(5), n, rng());
        cases.push_back({std::move(chain), std::move(pi), std::move(h), std::move(path)});
    }
    return cases;
}

Outcome criterion1() {
    double worst = 0.0;
    for (const auto& c : hoeffding_grid()) {
        const double u = u_statistic(c.path, c.h);
        worst = std::max(worst, verify_hoeffding(c.path, c.h, c.pi) / (1.0 + std::abs(u)));
    }
    return {worst <= 1e-10, "50 configurations, max |U - sum_c C(m,c) U_c| / (1+|U|) = " + num(worst)};
}

Outcome criterion2() {
    double worst = 0.0;
    std::size_t checked = 0;
    for (const auto& c : hoeffding_grid())
        for (std::size_t order = 1; order <= c.h.degree(); ++order) {
            worst = std::max(worst, hoeffding_project(c.h, c.pi, order).canonical_residual());
            ++checked;
        }
    return {worst <= 1e-10, std::to_string(checked) + " projections, max last-argument integral = " + num(worst)};
}

struct PropositionRun {
    std::vector<PropositionSweep> sweeps;
};

const PropositionRun& proposition_run() {
    static const PropositionRun run = [] {
        PropositionRun r;
        Rng rng(mix(1003, 0));
        const double p_values[] = {0.5, 1.0};
        for (int i = 0; i < 3; ++i) {
            FiniteKernel chain = random_chain(3, rng);
            const Distribution pi = stationary(chain);
            const TabulatedKernel h = canonical_part(random_symmetric(3, 2, rng), pi);
            // V = 1 on the first chain, random weights on the others.
            std::vector<double> v = i == 0 ? std::vector<double>(3, 1.0) : random_v(3, rng);
            const Distribution mu = random_distribution(3, rng);
            ErgodicityProfile profile = certify_rho(chain, v, 200);
            ProofContext ctx(chain, mu, profile);
            r.sweeps.push_back(sweep_propositions(ctx, h, 8, p_values));
        }
        return r;
    }();
    return run;
}

std::string summary_text(const CheckSummary& c) {
    return c.name + ": " + std::to_string(c.instances) + " instances, " + std::to_string(c.violations) +
           " violations, max ratio " + num(c.max_ratio);
}

Outcome criterion3() {
    bool ok = true;
    std::uint64_t instances = 0;
    double worst = 0.0;
    for (const auto& s : proposition_run().sweeps) {
        ok = ok && s.vanishing.passed();
        instances += s.vanishing.instances;
        worst = std::max(worst, s.vanishing.max_ratio);
    }
    return {ok, std::to_string(instances) + " (tuple, sigma) pairs on 3 chains, max |tilted E f_sigma| = " + num(worst)};
}

Outcome criterion4() {
    bool ok = true;
    for (const auto& s : proposition_run().sweeps) ok = ok && s.prop5.passed();
    double worst = 0.0;
    for (const auto& s : proposition_run().sweeps) worst = std::max(worst, s.prop5.max_ratio);
    return {ok, "3 chains, exhaustive i_4 <= 8; worst TV/bound ratio " + num(worst)};
}

Outcome criterion5() {
    bool ok = true;
    double worst1 = 0.0;
    double worst2 = 0.0;
    std::uint64_t violations = 0;
    for (const auto& s : proposition_run().sweeps) {
        ok = ok && s.prop7_bound1.passed();
        violations += s.prop7_bound1.violations;
        worst1 = std::max(worst1, s.prop7_bound1.max_ratio);
        for (const auto& b : s.prop7_bound2) {
            ok = ok && b.passed();
            violations += b.violations;
            worst2 = std::max(worst2, b.max_ratio);
        }
    }
    return {ok, std::to_string(violations) + " violations; max ratio bounded form " + num(worst1) +
                    ", moment form (p = 0.5, 1) " + num(worst2)};
}

Outcome criterion6() {
    const double p_values[] = {0.5, 1.0, 2.0};
    const auto sweeps = sweep_lemma6(1000, 10, p_values, mix(1006, 0));
    bool ok = true;
    std::uint64_t instances = 0;
    double worst = 0.0;
    for (const auto& s : sweeps) {
        ok = ok && s.passed();
        instances += s.instances;
        worst = std::max(worst, s.max_ratio);
    }
    return {ok && instances == 1000, std::to_string(instances) + " instances, max lhs/rhs = " + num(worst)};
}

Outcome criterion7() {
    const RunConfig rc = load_config(config_path("theorem1_exact.json"));
    const auto ve = run_variance_experiment(rc.experiment);
    bool ok = ve.rows.size() == 11;
    double worst = 0.0;
    for (const auto& r : ve.rows) {
        ok = ok && r.pass && r.provenance.rfind("exact", 0) == 0;
        worst = std::max(worst, *r.estimate / r.bound);
    }
    return {ok && worst < 0.2, "n = 2..12, max exact_l2 / theorem1_bound = " + num(worst)};
}

double loglog_slope(const std::vector<BoundReport>& rows) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double k = static_cast<double>(rows.size());
    for (const auto& r : rows) {
        const double x = std::log(static_cast<double>(r.n));
        const double y = std::log(*r.estimate);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    return (k * sxy - sx * sy) / (k * sxx - sx * sx);
}

std::string margins(const std::vector<BoundReport>& rows) {
    std::string s;
    for (const auto& r : rows) s += (s.empty() ? "" : ", ") + std::to_string(r.n) + ":" + num(*r.estimate + 3 * r.std_error) + "/" + num(r.bound);
    return s;
}

Outcome criterion8() {
    const RunConfig rc = load_config(config_path("theorem1_statistical.json"));
    const auto ve = run_variance_experiment(rc.experiment);
    const double slope = loglog_slope(ve.rows);
    const bool ok = ve.rows.size() == 4 && ve.passed() && slope >= -1.2 && slope <= -0.8;
    return {ok, "R = 2000, (point+3se)/bound at n " + margins(ve.rows) + "; log-log slope " + num(slope)};
}

Outcome criterion9() {
    const RunConfig rc = load_config(config_path("corollary2_two_state.json"));
    const auto ve = run_variance_experiment(rc.experiment);
    const bool ok = ve.degeneracy == 1 && ve.rows.size() == 4 && ve.passed();
    return {ok, "d = " + std::to_string(ve.degeneracy) + ", centred L2 vs corollary2 at n " + margins(ve.rows)};
}

Outcome criterion10() {
    const RunConfig rc = load_config(config_path("corollary3_two_state.json"));
    const auto ve = run_variance_experiment(rc.experiment);
    std::size_t exact = 0;
    std::size_t simulated = 0;
    double worst = 0.0;
    for (const auto& r : ve.rows) {
        (r.provenance.rfind("exact", 0) == 0 ? exact : simulated) += 1;
        worst = std::max(worst, (*r.estimate + 3 * r.std_error) / r.bound);
    }
    const bool ok = exact == 11 && simulated == 4 && ve.passed();
    return {ok, "p = 1, " + std::to_string(exact) + " exact and " + std::to_string(simulated) +
                    " simulated points, max (L2 + 3se)/bound = " + num(worst)};
}

Outcome criterion11() {
    std::size_t violations = 0;
    std::size_t checks = 0;
    double worst = 0.0;
    for (std::size_t m = 1; m <= 3; ++m) {
        const double rhos[] = {0.2, 0.5, 0.8, 0.9, std::exp(-static_cast<double>(m))};
        for (double rho : rhos) {
            const double bound = geometric_sum_bound(rho, m);
            CompensatedSum partial;
            double power = 1.0;
            for (std::size_t k = 0; k <= 10000; ++k) {
                partial.add(std::pow(static_cast<double>(k + 1), static_cast<double>(m)) * power);
                power *= rho;
                ++checks;
                worst = std::max(worst, partial.value() / bound);
                if (partial.value() > bound) ++violations;
            }
        }
    }
    return {violations == 0, std::to_string(checks) + " partial sums, max partial/bound = " + num(worst)};
}

Outcome criterion12() {
    bool ok = true;
    std::string detail;
    for (std::size_t m = 1; m <= 2; ++m) {
        const CheckSummary c = sweep_tuple_counts(10, m);
        ok = ok && c.passed();
        detail += (detail.empty() ? "" : "; ") + summary_text(c);
    }
    return {ok, detail + "; bucket totals match binom(n+2m-1, 2m)"};
}

Outcome criterion13() {
    const RunConfig rc = load_config(config_path("slln_pm1.json"));
    const auto s = run_slln_experiment(rc.experiment);
    const auto& last = s.rows.back();
    const bool ok = last.n == 100000 && last.abs_error < 0.01 && s.error_decreases() && std::abs(s.target - 0.04) < 1e-12;
    return {ok, "target " + num(s.target) + ", |U_n - target| at n = " + std::to_string(last.n) + ": " +
                    num(last.abs_error) + ", late errors below early errors: " + (s.error_decreases() ? "yes" : "no")};
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

Outcome criterion14() {
    const fs::path root = fs::temp_directory_path() / ("ustat_acceptance_" + std::to_string(::getpid()));
    fs::create_directories(root);
    struct Job {
        std::string cmd;
        std::string config;
        std::string csv;
    };
    const Job jobs[] = {{"verify-variance", "theorem1_statistical.json", "variance.csv"},
                        {"verify-slln", "slln_pm1.json", "slln.csv"}};
    bool ok = true;
    std::string detail;
    for (const auto& job : jobs) {
        std::string outputs[2];
        const unsigned workers[2] = {1, 4};
        for (int w = 0; w < 2; ++w) {
            const fs::path dir = root / (job.cmd + "_j" + std::to_string(workers[w]));
            const std::string line = std::string(USTAT_CLI_PATH) + " " + job.cmd + " --config " +
                                     config_path(job.config) + " --out " + dir.string() + " --jobs " +
                                     std::to_string(workers[w]) + " > /dev/null";
            const int status = std::system(line.c_str());
            ok = ok && status == 0;
            outputs[w] = slurp(dir / job.csv);
        }
        const bool same = !outputs[0].empty() && outputs[0] == outputs[1];
        ok = ok && same;
        detail += (detail.empty() ? "" : "; ") + job.csv + (same ? " identical" : " DIFFERS") + " for --jobs 1 vs 4";
    }
    fs::remove_all(root);
    return {ok, detail};
}

}  // namespace

int main() {
    const std::pair<const char*, std::function<Outcome()>> criteria[] = {
        {"Hoeffding decomposition identity", criterion1},
        {"canonicity of Hoeffding projections", criterion2},
        {"tilted-law cross moments vanish", criterion3},
        {"TV distance to the tilted law", criterion4},
        {"cross-moment bounds (bounded and moment forms)", criterion5},
        {"weighted TV moment inequality", criterion6},
        {"canonical L2 bound, exact regime", criterion7},
        {"canonical L2 bound, simulated regime", criterion8},
        {"degenerate-kernel L2 bound", criterion9},
        {"moment-envelope L2 bound", criterion10},
        {"geometric mixing-sum closed form", criterion11},
        {"tuple counting bound", criterion12},
        {"strong law along one trajectory", criterion13},
        {"determinism across worker counts", criterion14},
    };
    int failures = 0;
    int index = 0;
    for (const auto& [name, run] : criteria) {
        ++index;
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (!o.pass) ++failures;
        std::printf("criterion %2d %s %s: %s (%.1f s)\n", index, o.pass ? "PASS" : "FAIL", name, o.detail.c_str(), secs);
        std::fflush(stdout);
    }
    std::printf("%d of %d criteria passed\n", index - failures, index);
    return failures == 0 ? 0 : 1;
}
