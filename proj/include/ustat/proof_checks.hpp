// proof_checks.hpp
//
// Exact finite-space checks of the inequalities behind the L2 bounds:
// gap indices of ordered index tuples, joint laws of (Y_{k_1}, ..., Y_{k_l}),
// the tilted laws in which the coordinate at the largest gap is replaced by
// an independent pi draw, and the resulting inequalities.
//
// Conventions: tuple entries are 1-based time indices, Y_0 ~ mu, so
// Y_k ~ mu P^k. Gap indices use i_0 = 1.
#pragma once

#include "bounds.hpp"
#include "error.hpp"
#include "kernel.hpp"
#include "markov.hpp"
#include "random.hpp"
#include "ustatistic.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ustat {

/// Non-decreasing 2m-tuple (i_1 <= ... <= i_{2m}) of 1-based time indices.
class OrderedTuple {
public:
    explicit OrderedTuple(std::vector<std::size_t> indices) : idx_(std::move(indices)) {
        require(!idx_.empty() && idx_.size() % 2 == 0, "ordered tuple needs an even, positive length");
        require(idx_.front() >= 1, "tuple indices start at 1");
        require(std::is_sorted(idx_.begin(), idx_.end()), "tuple indices must be non-decreasing");
    }

    std::size_t size() const noexcept { return idx_.size(); }
    std::size_t half() const noexcept { return idx_.size() / 2; }
    std::size_t operator[](std::size_t i) const { return idx_[i]; }
    std::span<const std::size_t> indices() const noexcept { return idx_; }

private:
    std::vector<std::size_t> idx_;
};

struct GapIndices {
    /// j_l = min(i_{2l-1} - i_{2l-2}, i_{2l} - i_{2l-1}), l = 1..m.
    std::vector<std::size_t> j;
    std::size_t j_star = 0;
    /// Smallest l (1-based) attaining j_star.
    std::size_t ell_star = 1;
};

inline GapIndices j_indices(const OrderedTuple& tuple) {
    GapIndices g;
    const std::size_t m = tuple.half();
    g.j.resize(m);
    for (std::size_t l = 1; l <= m; ++l) {
        const std::size_t prev = l == 1 ? 1 : tuple[2 * l - 3];
        const std::size_t a = tuple[2 * l - 2];
        const std::size_t b = tuple[2 * l - 1];
        g.j[l - 1] = std::min(a - prev, b - a);
    }
    g.j_star = *std::max_element(g.j.begin(), g.j.end());
    g.ell_star = static_cast<std::size_t>(std::find(g.j.begin(), g.j.end(), g.j_star) - g.j.begin()) + 1;
    return g;
}

// ---------------------------------------------------------------------------
// Joint laws
// ---------------------------------------------------------------------------

/// Probability tensor on S^arity, row-major with the first coordinate most
/// significant.
class JointLaw {
public:
    JointLaw(std::size_t states, std::size_t arity, std::vector<double> tensor)
        : s_(states), arity_(arity), t_(std::move(tensor)) {
        if (checked_power(s_, arity_) != t_.size()) throw DimensionMismatch("joint law tensor size");
    }

    /// The law of the empty tuple.
    static JointLaw unit(std::size_t states) { return JointLaw(states, 0, {1.0}); }

    static JointLaw from(const Distribution& d) {
        return JointLaw(d.size(), 1, std::vector<double>(d.weights().begin(), d.weights().end()));
    }

    std::size_t states() const noexcept { return s_; }
    std::size_t arity() const noexcept { return arity_; }
    std::span<const double> tensor() const noexcept { return t_; }

    double total_mass() const {
        CompensatedSum s;
        for (double x : t_) s.add(x);
        return s.value();
    }

    /// Integrates out the last coordinate.
    JointLaw drop_last() const {
        require(arity_ >= 1, "cannot marginalise the empty law");
        std::vector<double> out(t_.size() / s_, 0.0);
        for (std::size_t flat = 0; flat < out.size(); ++flat)
            for (std::size_t y = 0; y < s_; ++y) out[flat] += t_[flat * s_ + y];
        return JointLaw(s_, arity_ - 1, std::move(out));
    }

    /// Law of coordinate `pos` (0-based).
    std::vector<double> marginal(std::size_t pos) const {
        require(pos < arity_, "marginal position out of range");
        std::vector<double> out(s_, 0.0);
        const std::size_t stride = checked_power(s_, arity_ - 1 - pos);
        for (std::size_t flat = 0; flat < t_.size(); ++flat) out[(flat / stride) % s_] += t_[flat];
        return out;
    }

    friend JointLaw outer(const JointLaw& a, const JointLaw& b) {
        if (a.s_ != b.s_) throw DimensionMismatch("outer: state spaces differ");
        std::vector<double> out(a.t_.size() * b.t_.size());
        for (std::size_t i = 0; i < a.t_.size(); ++i)
            for (std::size_t j = 0; j < b.t_.size(); ++j) out[i * b.t_.size() + j] = a.t_[i] * b.t_[j];
        return JointLaw(a.s_, a.arity_ + b.arity_, std::move(out));
    }

    /// L1 distance of the two tensors (total variation, range [0, 2]).
    friend double tv_distance(const JointLaw& a, const JointLaw& b) {
        if (a.s_ != b.s_ || a.arity_ != b.arity_) throw DimensionMismatch("tv_distance: law shapes differ");
        CompensatedSum s;
        for (std::size_t i = 0; i < a.t_.size(); ++i) s.add(std::abs(a.t_[i] - b.t_[i]));
        return s.value();
    }

private:
    std::size_t s_;
    std::size_t arity_;
    std::vector<double> t_;
};

/// Law of (Y_{k_1}, ..., Y_{k_l}) with Y_0 ~ mu and 0 <= k_1 <= ... <= k_l,
/// built by chaining P^{k_i - k_{i-1}}.
inline JointLaw joint_law(const Distribution& mu, PowerCache& powers, std::span<const std::size_t> ks,
                          std::uint64_t budget = kDefaultTableBudget) {
    const std::size_t s = mu.size();
    if (ks.empty()) return JointLaw::unit(s);
    require(std::is_sorted(ks.begin(), ks.end()), "joint_law: indices must be non-decreasing");
    if (checked_power(s, ks.size()) > budget) throw BudgetExceeded("joint law tensor exceeds budget");
    const Eigen::MatrixXd& first = powers.power(ks[0]);
    if (static_cast<std::size_t>(first.rows()) != s) throw DimensionMismatch("joint_law: mu/kernel sizes");
    std::vector<double> t(s, 0.0);
    for (std::size_t x = 0; x < s; ++x)
        for (std::size_t y = 0; y < s; ++y)
            t[y] += mu[x] * first(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(y));
    for (std::size_t i = 1; i < ks.size(); ++i) {
        const Eigen::MatrixXd& step = powers.power(ks[i] - ks[i - 1]);
        std::vector<double> next(t.size() * s);
        for (std::size_t flat = 0; flat < t.size(); ++flat) {
            const auto prev = static_cast<Eigen::Index>(flat % s);
            for (std::size_t y = 0; y < s; ++y) next[flat * s + y] = t[flat] * step(prev, static_cast<Eigen::Index>(y));
        }
        t = std::move(next);
    }
    return JointLaw(s, ks.size(), std::move(t));
}

inline JointLaw joint_law(const Distribution& mu, const FiniteKernel& kernel, std::span<const std::size_t> ks,
                          std::uint64_t budget = kDefaultTableBudget) {
    PowerCache powers(kernel);
    return joint_law(mu, powers, ks, budget);
}

/// Tilted law for tuple I with l = ell_star:
///   l = 1:  pi(dy_1) (x) P_mu^{i_2..i_2m}
///   l > 1:  P_mu^{i_1..i_{2l-2}} (x) pi(dy_{2l-1}) (x) P_mu^{i_{2l}..i_{2m}}
/// The first case is the second with an empty prefix.
inline JointLaw tilde_law(const Distribution& mu, PowerCache& powers, const Distribution& pi,
                          const OrderedTuple& tuple, std::uint64_t budget = kDefaultTableBudget) {
    if (checked_power(mu.size(), tuple.size()) > budget) throw BudgetExceeded("tilde law exceeds budget");
    const std::size_t l = j_indices(tuple).ell_star;
    const auto idx = tuple.indices();
    const JointLaw prefix = joint_law(mu, powers, idx.subspan(0, 2 * l - 2), budget);
    const JointLaw suffix = joint_law(mu, powers, idx.subspan(2 * l - 1), budget);
    return outer(outer(prefix, JointLaw::from(pi)), suffix);
}

inline JointLaw tilde_law(const Distribution& mu, const FiniteKernel& kernel, const Distribution& pi,
                          const OrderedTuple& tuple, std::uint64_t budget = kDefaultTableBudget) {
    PowerCache powers(kernel);
    return tilde_law(mu, powers, pi, tuple, budget);
}

/// E_law[h(y_{sigma(1..m)}) h(y_{sigma(m+1..2m)})], sigma given 0-based.
inline double f_sigma_expectation(const JointLaw& law, const TabulatedKernel& h, std::span<const std::size_t> sigma) {
    const std::size_t m = h.degree();
    if (law.arity() != 2 * m) throw DimensionMismatch("f_sigma: law arity must be 2m");
    if (sigma.size() != 2 * m) throw DimensionMismatch("f_sigma: sigma must permute 2m positions");
    if (law.states() != h.states()) throw DimensionMismatch("f_sigma: state spaces differ");
    std::vector<std::size_t> sorted(sigma.begin(), sigma.end());
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < sorted.size(); ++i) require(sorted[i] == i, "sigma must be a permutation");

    const std::size_t s = law.states();
    const auto t = law.tensor();
    std::vector<std::uint32_t> y(2 * m);
    std::vector<std::uint32_t> a(m);
    std::vector<std::uint32_t> b(m);
    CompensatedSum acc;
    for (std::size_t flat = 0; flat < t.size(); ++flat) {
        if (t[flat] == 0.0) continue;
        std::size_t rem = flat;
        for (std::size_t j = 2 * m; j-- > 0;) {
            y[j] = static_cast<std::uint32_t>(rem % s);
            rem /= s;
        }
        for (std::size_t j = 0; j < m; ++j) {
            a[j] = y[sigma[j]];
            b[j] = y[sigma[m + j]];
        }
        acc.add(t[flat] * h(a) * h(b));
    }
    return acc.value();
}

/// max over prefixes |sum_y pi(y) h(prefix, y)|.
inline double canonical_residual(const TabulatedKernel& h, const Distribution& pi) {
    if (pi.size() != h.states()) throw DimensionMismatch("canonical_residual: sizes");
    const std::size_t s = h.states();
    const auto t = h.table();
    double worst = 0.0;
    for (std::size_t prefix = 0; prefix < t.size() / s; ++prefix) {
        double acc = 0.0;
        for (std::size_t y = 0; y < s; ++y) acc += pi[y] * t[prefix * s + y];
        worst = std::max(worst, std::abs(acc));
    }
    return worst;
}

// ---------------------------------------------------------------------------
// Inequalities
// ---------------------------------------------------------------------------

/// Chain, initial law and certified profile with the derived quantities the
/// checks share (pi, M(mu,V), cached powers of P).
class ProofContext {
public:
    ProofContext(FiniteKernel kernel, Distribution mu, ErgodicityProfile profile)
        : kernel_(std::move(kernel)),
          mu_(std::move(mu)),
          profile_(std::move(profile)),
          pi_(stationary(kernel_)),
          m_mu_v_(m_sup(mu_, profile_, kernel_)),
          powers_(kernel_) {}

    const FiniteKernel& kernel() const noexcept { return kernel_; }
    const Distribution& mu() const noexcept { return mu_; }
    const Distribution& pi() const noexcept { return pi_; }
    const ErgodicityProfile& profile() const noexcept { return profile_; }
    double m_mu_v() const noexcept { return m_mu_v_; }
    PowerCache& powers() noexcept { return powers_; }

    JointLaw law(const OrderedTuple& t) { return joint_law(mu_, powers_, t.indices()); }
    JointLaw tilde(const OrderedTuple& t) { return tilde_law(mu_, powers_, pi_, t); }

private:
    FiniteKernel kernel_;
    Distribution mu_;
    ErgodicityProfile profile_;
    Distribution pi_;
    double m_mu_v_;
    PowerCache powers_;
};

struct InequalityValues {
    double lhs = 0.0;
    double bound = 0.0;
};

/// ||P_mu^I - P~_mu^I||_TV against 4 rho(j_star) M(mu, V).
inline InequalityValues verify_prop5(ProofContext& ctx, const OrderedTuple& tuple) {
    const double tv = tv_distance(ctx.law(tuple), ctx.tilde(tuple));
    return {tv, 4.0 * ctx.profile().rho(j_indices(tuple).j_star) * ctx.m_mu_v()};
}

inline InequalityValues verify_prop5(const Distribution& mu, const FiniteKernel& kernel,
                                     const ErgodicityProfile& profile, const OrderedTuple& tuple) {
    ProofContext ctx(kernel, mu, profile);
    return verify_prop5(ctx, tuple);
}

/// |xi(f) - xi'(f)| against C(p) [xi|f|^{1+p} + xi'|f|^{1+p}]^{1/(p+1)} TV^{p/(p+1)}.
inline InequalityValues verify_lemma6(const Distribution& xi, const Distribution& xi2, std::span<const double> f,
                                      double p) {
    if (!(p > 0.0)) throw PNotPositive("lemma 6 check needs p > 0");
    if (xi.size() != xi2.size() || xi.size() != f.size()) throw DimensionMismatch("lemma 6: sizes differ");
    CompensatedSum diff;
    CompensatedSum moments;
    for (std::size_t i = 0; i < f.size(); ++i) {
        diff.add((xi[i] - xi2[i]) * f[i]);
        moments.add((xi[i] + xi2[i]) * std::pow(std::abs(f[i]), 1.0 + p));
    }
    const double tv = tv_distance(xi, xi2);
    const double rhs = lemma_constant(p) * std::pow(moments.value(), 1.0 / (p + 1.0)) * std::pow(tv, p / (p + 1.0));
    return {std::abs(diff.value()), rhs};
}

struct Prop7Values {
    double lhs = 0.0;
    /// 4 M rho(j_star) ||h||_inf^2
    double bound1 = 0.0;
    /// m^2 D^2 rho(j_star)^{p/(p+1)}, when p is given.
    std::optional<double> bound2;
};

inline Prop7Values verify_prop7(ProofContext& ctx, const TabulatedKernel& h, const OrderedTuple& tuple,
                                std::span<const std::size_t> sigma, std::optional<double> p = std::nullopt) {
    const std::size_t m = h.degree();
    if (tuple.half() != m) throw DimensionMismatch("prop 7: tuple length must be 2m");
    if (canonical_residual(h, ctx.pi()) > kDegeneracyEps) throw NotCanonical("prop 7 needs a pi-canonical kernel");
    const double rho = ctx.profile().rho(j_indices(tuple).j_star);
    Prop7Values out;
    out.lhs = std::abs(f_sigma_expectation(ctx.law(tuple), h, sigma));
    const double sup = h.sup();
    out.bound1 = 4.0 * ctx.m_mu_v() * rho * sup * sup;
    if (p) {
        const double q = 2.0 * (*p + 1.0);
        const double d = d_constant(*p, ctx.m_mu_v(), b_q(h, ctx.profile(), q));
        out.bound2 = static_cast<double>(m * m) * d * d * std::pow(rho, *p / (*p + 1.0));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Tuple enumeration and counting
// ---------------------------------------------------------------------------

/// Visits every non-decreasing tuple of `length` entries in [1, n],
/// lexicographically.
template <class Visit>
void for_each_ordered_tuple(std::size_t n, std::size_t length, Visit&& visit) {
    if (n == 0 || length == 0) return;
    std::vector<std::size_t> t(length, 1);
    while (true) {
        visit(std::span<const std::size_t>(t));
        std::size_t j = length;
        while (j-- > 0) {
            if (t[j] < n) break;
            if (j == 0) return;
        }
        ++t[j];
        for (std::size_t k = j + 1; k < length; ++k) t[k] = t[j];
    }
}

/// Histogram of j_star over all ordered 2m-tuples in [1, n]; entry k is
/// |I^k_{m,n}|.
inline std::vector<std::uint64_t> tuple_histogram(std::size_t n, std::size_t m,
                                                  std::uint64_t budget = kDefaultEnumerationBudget) {
    require(m >= 1 && n >= 1, "tuple_histogram needs n, m >= 1");
    if (binomial(n + 2 * m - 1, 2 * m) > static_cast<double>(budget))
        throw BudgetExceeded("too many ordered tuples to enumerate");
    std::vector<std::uint64_t> hist(n + 1, 0);
    for_each_ordered_tuple(n, 2 * m, [&](std::span<const std::size_t> t) {
        ++hist[j_indices(OrderedTuple({t.begin(), t.end()})).j_star];
    });
    return hist;
}

/// |I^k_{m,n}|: ordered 2m-tuples in [1, n] with j_star = k.
inline std::uint64_t count_tuples(std::size_t n, std::size_t m, std::size_t k,
                                  std::uint64_t budget = kDefaultEnumerationBudget) {
    if (k > n) return 0;
    return tuple_histogram(n, m, budget)[k];
}

/// 2^m n^m (k+1)^m
inline double tuple_count_bound(std::size_t n, std::size_t m, std::size_t k) {
    return std::pow(2.0 * static_cast<double>(n) * static_cast<double>(k + 1), static_cast<double>(m));
}

// ---------------------------------------------------------------------------
// Exhaustive sweeps
// ---------------------------------------------------------------------------

struct CheckSummary {
    std::string name;
    std::uint64_t instances = 0;
    std::uint64_t violations = 0;
    /// Largest lhs/bound (for the vanishing identity: largest |value|).
    double max_ratio = 0.0;
    std::vector<std::size_t> worst_case_tuple;
    std::vector<std::size_t> worst_case_sigma;

    void record(double ratio, bool violated, std::span<const std::size_t> tuple,
                std::span<const std::size_t> sigma = {}) {
        ++instances;
        if (violated) ++violations;
        if (ratio > max_ratio || instances == 1) {
            max_ratio = ratio;
            worst_case_tuple.assign(tuple.begin(), tuple.end());
            worst_case_sigma.assign(sigma.begin(), sigma.end());
        }
    }
    bool passed() const noexcept { return violations == 0; }
};

/// lhs / bound with 0/0 = 0 and x/0 = inf.
inline double safe_ratio(double lhs, double bound) {
    if (bound > 0.0) return lhs / bound;
    return lhs > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
}

inline std::vector<std::vector<std::size_t>> all_permutations(std::size_t size) {
    std::vector<std::size_t> p(size);
    std::iota(p.begin(), p.end(), std::size_t{0});
    std::vector<std::vector<std::size_t>> out;
    do out.push_back(p);
    while (std::next_permutation(p.begin(), p.end()));
    return out;
}

struct PropositionSweep {
    CheckSummary vanishing;  // tilted-law expectation of f_sigma
    CheckSummary prop5;
    CheckSummary prop7_bound1;
    std::vector<CheckSummary> prop7_bound2;  // one per p
};

/// Every ordered 2m-tuple with i_{2m} <= n_max and every sigma in S_{2m}.
inline PropositionSweep sweep_propositions(ProofContext& ctx, const TabulatedKernel& h, std::size_t n_max,
                                           std::span<const double> p_values, double vanish_tol = 1e-11,
                                           double rel_slack = 1e-12) {
    const std::size_t m = h.degree();
    PropositionSweep out;
    out.vanishing.name = "tilted_expectation_vanishes";
    out.prop5.name = "prop5_tv_bound";
    out.prop7_bound1.name = "prop7_bounded";
    for (double p : p_values) {
        CheckSummary c;
        c.name = "prop7_moment_p" + format_number(p);
        out.prop7_bound2.push_back(c);
    }
    const auto sigmas = all_permutations(2 * m);
    std::vector<double> d2;
    for (double p : p_values) {
        const double d = d_constant(p, ctx.m_mu_v(), b_q(h, ctx.profile(), 2.0 * (p + 1.0)));
        d2.push_back(d * d);
    }
    if (canonical_residual(h, ctx.pi()) > kDegeneracyEps) throw NotCanonical("sweep needs a pi-canonical kernel");
    const double sup = h.sup();

    for_each_ordered_tuple(n_max, 2 * m, [&](std::span<const std::size_t> idx) {
        const OrderedTuple tuple({idx.begin(), idx.end()});
        const double rho = ctx.profile().rho(j_indices(tuple).j_star);
        const JointLaw law = ctx.law(tuple);
        const JointLaw tilde = ctx.tilde(tuple);

        const double tv = tv_distance(law, tilde);
        const double b5 = 4.0 * rho * ctx.m_mu_v();
        out.prop5.record(safe_ratio(tv, b5), tv > b5 * (1.0 + rel_slack) + 1e-13, idx);

        const double b7 = 4.0 * ctx.m_mu_v() * rho * sup * sup;
        for (const auto& sigma : sigmas) {
            const double vanish = std::abs(f_sigma_expectation(tilde, h, sigma));
            out.vanishing.record(vanish, vanish > vanish_tol, idx, sigma);
            const double lhs = std::abs(f_sigma_expectation(law, h, sigma));
            out.prop7_bound1.record(safe_ratio(lhs, b7), lhs > b7 * (1.0 + rel_slack) + vanish_tol, idx, sigma);
            for (std::size_t i = 0; i < p_values.size(); ++i) {
                const double p = p_values[i];
                const double b = static_cast<double>(m * m) * d2[i] * std::pow(rho, p / (p + 1.0));
                out.prop7_bound2[i].record(safe_ratio(lhs, b), lhs > b * (1.0 + rel_slack) + vanish_tol, idx, sigma);
            }
        }
    });
    return out;
}

/// Random Dirichlet(1) law on `size` points.
inline Distribution random_distribution(std::size_t size, Rng& rng) {
    std::vector<double> w(size);
    for (auto& x : w) x = -std::log1p(-uniform01(rng));
    return Distribution::normalized(std::move(w));
}

/// Randomized (xi, xi', f, p) instances. Every third pair is a small
/// perturbation of xi to exercise the TV -> 0 regime; f mixes bounded and
/// heavy values.
inline std::vector<CheckSummary> sweep_lemma6(std::size_t instances, std::size_t points,
                                              std::span<const double> p_values, std::uint64_t seed) {
    require(points >= 1, "lemma 6 sweep needs at least one point");
    std::vector<CheckSummary> out;
    for (double p : p_values) {
        if (!(p > 0.0)) throw PNotPositive("lemma 6 check needs p > 0");
        CheckSummary c;
        c.name = "lemma6_p" + format_number(p);
        out.push_back(c);
    }
    if (p_values.empty()) return out;
    Rng rng(seed);
    std::vector<double> f(points);
    for (std::size_t t = 0; t < instances; ++t) {
        const Distribution xi = random_distribution(points, rng);
        Distribution xi2 = random_distribution(points, rng);
        if (t % 3 == 2) {
            const double eps = std::pow(10.0, -1.0 - 6.0 * uniform01(rng));
            std::vector<double> w(points);
            for (std::size_t i = 0; i < points; ++i) w[i] = (1.0 - eps) * xi[i] + eps * xi2[i];
            xi2 = Distribution::normalized(std::move(w));
        }
        for (auto& x : f) {
            const double scale = uniform01(rng) < 0.2 ? 100.0 : 1.0;
            x = scale * (2.0 * uniform01(rng) - 1.0);
        }
        const std::size_t which = t % p_values.size();
        const auto v = verify_lemma6(xi, xi2, f, p_values[which]);
        const std::size_t tag[1] = {t};
        out[which].record(safe_ratio(v.lhs, v.bound), v.lhs > v.bound * (1.0 + 1e-12) + 1e-15, tag);
    }
    return out;
}

/// |I^k_{m,n}| <= 2^m n^m (k+1)^m for every n <= n_max and k, and the
/// buckets add up to binom(n + 2m - 1, 2m). The tuple records (n, k).
inline CheckSummary sweep_tuple_counts(std::size_t n_max, std::size_t m,
                                       std::uint64_t budget = kDefaultEnumerationBudget) {
    CheckSummary c;
    c.name = "tuple_count_m" + std::to_string(m);
    for (std::size_t n = 1; n <= n_max; ++n) {
        const auto hist = tuple_histogram(n, m, budget);
        std::uint64_t total = 0;
        for (std::size_t k = 0; k < hist.size(); ++k) {
            total += hist[k];
            const double bound = tuple_count_bound(n, m, k);
            const std::size_t tag[2] = {n, k};
            c.record(safe_ratio(static_cast<double>(hist[k]), bound), static_cast<double>(hist[k]) > bound, tag);
        }
        const std::size_t tag[2] = {n, n + 1};
        const bool mismatch = static_cast<double>(total) != binomial(n + 2 * m - 1, 2 * m);
        if (mismatch) {
            ++c.violations;
            c.worst_case_tuple.assign(tag, tag + 2);
        }
    }
    return c;
}

}  // namespace ustat
