// montecarlo.hpp
//
// Exact and simulated L2 norms of U-statistics, the variance-bound
// comparison driver and the strong-law convergence run.
//
// Replicate r always uses the generator seeded with mix(master_seed, r) and
// results are reduced in replicate order, so the output does not depend on
// the number of worker threads.
#pragma once

#include "bounds.hpp"
#include "error.hpp"
#include "kernel.hpp"
#include "markov.hpp"
#include "proof_checks.hpp"
#include "random.hpp"
#include "ustatistic.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace ustat {

struct L2Estimate {
    double point = 0.0;
    double std_error = 0.0;
    std::size_t replicates = 0;
};

// ---------------------------------------------------------------------------
// Exact L2
// ---------------------------------------------------------------------------

/// sqrt(E_mu[U_{n,m}(h)^2]) summed over all pairs of index m-subsets, each
/// pair evaluated under the exact joint law of its merged index set.
inline double exact_l2(const Distribution& mu, const FiniteKernel& kernel, const TabulatedKernel& h, std::size_t n,
                       std::uint64_t budget = 1'000'000'000) {
    const std::size_t m = h.degree();
    const std::size_t s = kernel.size();
    if (mu.size() != s || h.states() != s) throw DimensionMismatch("exact_l2: sizes differ");
    if (n < m) throw DegreeTooLarge("exact_l2 requires n >= m");
    const double subsets = binomial(n, m);
    const double cost = subsets * (subsets + 1.0) / 2.0 * static_cast<double>(checked_power(s, std::min(2 * m, n)));
    if (cost > static_cast<double>(budget)) throw BudgetExceeded("exact_l2 cost exceeds budget");

    std::vector<std::vector<std::size_t>> combos;
    std::vector<std::size_t> times(n);
    for (std::size_t i = 0; i < n; ++i) times[i] = i + 1;
    for_each_combination(std::span<const std::size_t>(times), m, [&](std::span<const std::size_t> c) {
        combos.emplace_back(c.begin(), c.end());
    });

    PowerCache powers(kernel);
    const auto table = h.table();
    std::vector<std::size_t> merged;
    std::vector<std::size_t> pos_a(m), pos_b(m);
    std::vector<std::uint32_t> y;
    CompensatedSum total;
    for (std::size_t a = 0; a < combos.size(); ++a) {
        for (std::size_t b = a; b < combos.size(); ++b) {
            merged.clear();
            std::set_union(combos[a].begin(), combos[a].end(), combos[b].begin(), combos[b].end(),
                           std::back_inserter(merged));
            for (std::size_t j = 0; j < m; ++j) {
                pos_a[j] = static_cast<std::size_t>(std::lower_bound(merged.begin(), merged.end(), combos[a][j]) - merged.begin());
                pos_b[j] = static_cast<std::size_t>(std::lower_bound(merged.begin(), merged.end(), combos[b][j]) - merged.begin());
            }
            const JointLaw law = joint_law(mu, powers, merged);
            const auto t = law.tensor();
            y.resize(merged.size());
            CompensatedSum pair;
            for (std::size_t flat = 0; flat < t.size(); ++flat) {
                if (t[flat] == 0.0) continue;
                std::size_t rem = flat;
                for (std::size_t j = merged.size(); j-- > 0;) {
                    y[j] = static_cast<std::uint32_t>(rem % s);
                    rem /= s;
                }
                std::size_t fa = 0, fb = 0;
                for (std::size_t j = 0; j < m; ++j) {
                    fa = fa * s + y[pos_a[j]];
                    fb = fb * s + y[pos_b[j]];
                }
                pair.add(t[flat] * table[fa] * table[fb]);
            }
            total.add(a == b ? pair.value() : 2.0 * pair.value());
        }
    }
    const double second_moment = std::max(0.0, total.value()) / (subsets * subsets);
    return std::sqrt(second_moment);
}

// ---------------------------------------------------------------------------
// Monte Carlo L2
// ---------------------------------------------------------------------------

/// Runs body(r) for r in [0, count) on `jobs` threads, contiguous blocks.
template <class Body>
void parallel_for(std::size_t count, unsigned jobs, Body&& body) {
    jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(std::max<std::size_t>(count, 1))));
    if (jobs == 1) {
        for (std::size_t r = 0; r < count; ++r) body(r);
        return;
    }
    std::vector<std::thread> workers;
    workers.reserve(jobs);
    const std::size_t block = (count + jobs - 1) / jobs;
    for (unsigned w = 0; w < jobs; ++w) {
        const std::size_t lo = w * block;
        const std::size_t hi = std::min(count, lo + block);
        if (lo >= hi) break;
        workers.emplace_back([lo, hi, &body] {
            for (std::size_t r = lo; r < hi; ++r) body(r);
        });
    }
    for (auto& t : workers) t.join();
}

/// Replicated values of U_{n,m}(h) - center.
inline std::vector<double> replicate_ustats(const FiniteKernel& kernel, const Distribution& mu,
                                            const TabulatedKernel& h, double center, std::size_t n,
                                            std::size_t replicates, std::uint64_t master_seed, unsigned jobs = 1,
                                            std::uint64_t budget = kDefaultEnumerationBudget) {
    check_enumeration(n, h.degree(), budget);
    const ChainSampler sampler(kernel);
    const CategoricalSampler initial(mu.weights());
    std::vector<double> out(replicates);
    parallel_for(replicates, jobs, [&](std::size_t r) {
        Rng rng(mix(master_seed, r));
        std::vector<std::uint32_t> path(n);
        sampler.run(initial, rng, path);
        out[r] = u_statistic(std::span<const std::uint32_t>(path), h, budget) - center;
    });
    return out;
}

/// point = sqrt(mean U_r^2); std_error by the delta method from the sample
/// variance of U_r^2.
inline L2Estimate l2_from_samples(std::span<const double> u) {
    require(u.size() >= 2, "L2 estimate needs at least 2 replicates");
    const double r = static_cast<double>(u.size());
    CompensatedSum sum;
    for (double x : u) sum.add(x * x);
    const double mean_sq = sum.value() / r;
    CompensatedSum dev;
    for (double x : u) dev.add((x * x - mean_sq) * (x * x - mean_sq));
    const double var_sq = dev.value() / (r - 1.0);
    L2Estimate e;
    e.replicates = u.size();
    e.point = std::sqrt(mean_sq);
    e.std_error = e.point > 0.0 ? std::sqrt(var_sq / r) / (2.0 * e.point) : 0.0;
    return e;
}

inline L2Estimate estimate_l2(const FiniteKernel& kernel, const Distribution& mu, const TabulatedKernel& h,
                              double center, std::size_t n, std::size_t replicates, std::uint64_t master_seed,
                              unsigned jobs = 1, std::uint64_t budget = kDefaultEnumerationBudget) {
    require(replicates >= 2, "estimate_l2 needs R >= 2");
    const auto u = replicate_ustats(kernel, mu, h, center, n, replicates, master_seed, jobs, budget);
    return l2_from_samples(u);
}

// ---------------------------------------------------------------------------
// Experiments
// ---------------------------------------------------------------------------

enum class BoundKind { theorem1, corollary2, corollary3 };

inline const char* to_string(BoundKind k) {
    switch (k) {
        case BoundKind::theorem1: return "theorem1";
        case BoundKind::corollary2: return "corollary2";
        case BoundKind::corollary3: return "corollary3";
    }
    return "?";
}

struct BoundRequest {
    BoundKind kind = BoundKind::theorem1;
    std::optional<double> p;
};

struct SllnSettings {
    std::size_t n_max = 100'000;
    /// Empty: dyadic checkpoints 2^k >= m plus n_max.
    std::vector<std::size_t> checkpoints;
    double delta = 1.0;
};

struct ExperimentConfig {
    ExperimentConfig(FiniteKernel chain_, Distribution mu_, TabulatedKernel h_, std::vector<double> v_ = {})
        : chain(std::move(chain_)), v(std::move(v_)), mu(std::move(mu_)), h(std::move(h_)) {}

    FiniteKernel chain;
    std::vector<double> v;
    Distribution mu;
    TabulatedKernel h;
    std::string kernel_name = "table";
    std::vector<std::size_t> n_grid;
    std::size_t replicates = 2000;
    std::uint64_t master_seed = 0;
    std::vector<BoundRequest> bounds;
    SllnSettings slln;
    /// Declared profile; certified from the chain when absent.
    std::optional<ErgodicityProfile> profile;
    std::size_t k_max = 200;
    /// Grid points n <= exact_max_n use exact_l2 instead of simulation.
    std::size_t exact_max_n = 0;
    unsigned jobs = 1;
    std::uint64_t budget = kDefaultEnumerationBudget;

    void validate() const {
        require(replicates >= 2, "replicates must be >= 2");
        require(std::is_sorted(n_grid.begin(), n_grid.end()) &&
                    std::adjacent_find(n_grid.begin(), n_grid.end()) == n_grid.end(),
                "n-grid must be strictly increasing");
        for (auto n : n_grid) require(n >= h.degree(), "every n in the grid must be >= m");
        require(slln.delta > 0.0, "slln.delta must be > 0");
        if (mu.size() != chain.size() || h.states() != chain.size() || (!v.empty() && v.size() != chain.size()))
            throw DimensionMismatch("chain, mu, V and kernel table sizes differ");
        for (const auto& b : bounds)
            if (b.kind == BoundKind::corollary3 && !(b.p && *b.p > 0.0))
                throw PNotPositive("corollary3 requires p > 0");
    }

    std::vector<double> v_or_one() const { return v.empty() ? std::vector<double>(chain.size(), 1.0) : v; }

    ErgodicityProfile resolved_profile() const {
        if (profile) return *profile;
        return certify_rho(chain, v_or_one(), k_max);
    }
};

struct VarianceExperiment {
    std::vector<BoundReport> rows;
    std::vector<std::string> notes;
    std::size_t degeneracy = 0;
    double mean = 0.0;
    double m_mu_v = 0.0;

    bool passed() const {
        return std::all_of(rows.begin(), rows.end(), [](const BoundReport& r) { return r.pass; });
    }
};

/// Where the L2 value compared with each bound comes from.
enum class L2Source {
    /// exact_l2 for n <= exact_max_n, simulation otherwise
    automatic,
    /// exact_l2 for n <= exact_max_n, no comparison otherwise
    exact_only,
};

inline VarianceExperiment run_variance_experiment(const ExperimentConfig& cfg,
                                                  L2Source l2_source = L2Source::automatic) {
    cfg.validate();
    const std::size_t m = cfg.h.degree();
    const Distribution pi = stationary(cfg.chain);
    const ErgodicityProfile profile = cfg.resolved_profile();
    const DegeneracyResult deg = degeneracy(cfg.h, pi);
    const bool canonical = deg.order >= m;
    // Canonical kernels are compared as is; otherwise the centred statistic
    // U - pi^m h is the bounded quantity.
    const double center = canonical ? 0.0 : deg.mean;

    VarianceExperiment out;
    if (profile.provenance() == Provenance::declared)
        if (auto c = declared_profile_conflict(cfg.chain, profile))
            out.notes.push_back("declared rho(" + std::to_string(c->k) + ") = " + format_number(c->declared) +
                                " is below the exact Dirac-pair ratio " + format_number(c->exact_lower) +
                                " of this chain; the bounds are not valid for it");
    out.degeneracy = deg.order;
    out.mean = deg.mean;
    out.m_mu_v = m_sup(cfg.mu, profile, cfg.chain);
    const double sup = cfg.h.sup();

    std::vector<BoundRequest> requests;
    for (const auto& b : cfg.bounds) {
        if (!canonical && b.kind == BoundKind::theorem1) {
            out.notes.push_back("theorem1 needs a canonical kernel (d = " + std::to_string(deg.order) +
                                "); routed to corollary2");
            if (std::none_of(cfg.bounds.begin(), cfg.bounds.end(),
                             [](const BoundRequest& r) { return r.kind == BoundKind::corollary2; }) &&
                std::none_of(requests.begin(), requests.end(),
                             [](const BoundRequest& r) { return r.kind == BoundKind::corollary2; }))
                requests.push_back({BoundKind::corollary2, std::nullopt});
            continue;
        }
        if (!canonical && b.kind == BoundKind::corollary3) {
            out.notes.push_back("corollary3 is unsupported for d-degenerate kernels with d < m; skipped");
            continue;
        }
        requests.push_back(b);
    }

    const TabulatedKernel centered = cfg.h.shifted(center);
    for (std::size_t n : cfg.n_grid) {
        std::optional<L2Estimate> est;
        std::string source;
        if (n <= cfg.exact_max_n) {
            est = L2Estimate{exact_l2(cfg.mu, cfg.chain, centered, n), 0.0, 0};
            source = "exact";
        } else if (l2_source == L2Source::exact_only) {
            source = "none";
        } else {
            est = estimate_l2(cfg.chain, cfg.mu, cfg.h, center, n, cfg.replicates, cfg.master_seed, cfg.jobs,
                              cfg.budget);
            source = "monte-carlo";
        }
        for (const auto& req : requests) {
            BoundInputs in{profile, n, m, out.m_mu_v, sup, std::nullopt, 0.0, std::nullopt, deg.order};
            double value = 0.0;
            switch (req.kind) {
                case BoundKind::theorem1: value = theorem1_bound(in); break;
                case BoundKind::corollary2: value = corollary2_bound(in); break;
                case BoundKind::corollary3: {
                    in.p = req.p;
                    in.q = 2.0 * (*req.p + 1.0);
                    in.bq = b_q(cfg.h, profile, in.q);
                    value = corollary3_bound(in);
                    break;
                }
            }
            BoundReport row;
            row.n = n;
            row.m = m;
            row.bound_name = to_string(req.kind);
            if (req.p) row.bound_name += "(p=" + format_number(*req.p) + ")";
            row.bound = value;
            if (est) {
                row.estimate = est->point;
                row.std_error = est->std_error;
                row.margin = value - (est->point + 3.0 * est->std_error);
                row.pass = *row.margin >= 0.0;
            }
            row.provenance = source + "/" + to_string(profile.provenance());
            row.inputs_hash = fnv1a_hex(row.bound_name + "|" + std::to_string(n) + "|" + std::to_string(m) + "|" +
                                        format_number(out.m_mu_v) + "|" + format_number(sup) + "|" +
                                        std::to_string(deg.order) + "|" + format_number(profile.rho(0)));
            out.rows.push_back(std::move(row));
        }
    }
    return out;
}

struct SllnRow {
    std::size_t n = 0;
    double u_n = 0.0;
    double target = 0.0;
    double abs_error = 0.0;
};

struct SllnExperiment {
    std::vector<SllnRow> rows;
    double target = 0.0;
    std::uint64_t seed = 0;
    /// log-moment condition with exponent delta; automatic on finite spaces.
    bool moment_condition_checked = true;

    /// Max error over the last three checkpoints is below the max over the first three.
    bool error_decreases() const {
        if (rows.size() < 6) return false;
        auto max_err = [](auto first, auto last) {
            double m = 0.0;
            for (auto it = first; it != last; ++it) m = std::max(m, it->abs_error);
            return m;
        };
        return max_err(rows.end() - 3, rows.end()) < max_err(rows.begin(), rows.begin() + 3);
    }
};

inline std::vector<std::size_t> dyadic_checkpoints(std::size_t m, std::size_t n_max) {
    std::vector<std::size_t> cps;
    for (std::size_t n = 1; n <= n_max; n *= 2)
        if (n >= m) cps.push_back(n);
    if (cps.empty() || cps.back() != n_max) cps.push_back(n_max);
    return cps;
}

/// One path of length n_max from mu (seed mix(master_seed, 0)); U_n(h) is
/// updated incrementally and reported at each checkpoint together with the
/// exact limit pi^m h.
inline SllnExperiment run_slln_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    const std::size_t m = cfg.h.degree();
    require(cfg.slln.n_max >= m, "slln.n_max must be >= m");
    const Distribution pi = stationary(cfg.chain);
    if (checked_power(cfg.chain.size(), m - 1) * cfg.slln.n_max > cfg.budget * 100)
        throw BudgetExceeded("SLLN run: S^(m-1) * n_max exceeds budget");

    auto cps = cfg.slln.checkpoints.empty() ? dyadic_checkpoints(m, cfg.slln.n_max) : cfg.slln.checkpoints;
    require(std::is_sorted(cps.begin(), cps.end()), "checkpoints must be increasing");
    require(!cps.empty() && cps.front() >= m && cps.back() <= cfg.slln.n_max, "checkpoints must lie in [m, n_max]");

    SllnExperiment out;
    out.target = ProjectedKernel(cfg.h, pi, 0).scalar();
    out.seed = mix(cfg.master_seed, 0);
    Rng rng(out.seed);
    const ChainSampler sampler(cfg.chain);
    const CategoricalSampler initial(cfg.mu.weights());
    std::vector<std::uint32_t> path(cfg.slln.n_max);
    sampler.run(initial, rng, path);

    IncrementalUStatistic acc(cfg.h);
    std::size_t next = 0;
    for (std::size_t i = 0; i < path.size() && next < cps.size(); ++i) {
        acc.push(path[i]);
        while (next < cps.size() && cps[next] == i + 1) {
            const double u = acc.value();
            out.rows.push_back({i + 1, u, out.target, std::abs(u - out.target)});
            ++next;
        }
    }
    return out;
}

}  // namespace ustat
