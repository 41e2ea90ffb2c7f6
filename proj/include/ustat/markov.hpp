// markov.hpp
//
// Finite-state Markov kernels: exact distribution evolution, stationary
// laws, total variation distance, certified ergodicity profiles and seeded
// path simulation. Sampler-backed chains on general state spaces are
// supported for simulation only; their ergodicity profile is declared by the
// user and cannot be certified.
//
// Total variation convention used throughout:
//     ||mu - nu||_TV = sup_{|f| <= 1} |mu(f) - nu(f)| = sum_x |mu(x) - nu(x)|
// so the distance lives in [0, 2].
#pragma once

#include "error.hpp"
#include "random.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace ustat {

inline constexpr double kStochasticTol = 1e-12;

// ---------------------------------------------------------------------------
// Distribution
// ---------------------------------------------------------------------------

/// Probability vector on a finite state space {0, ..., S-1}.
class Distribution {
public:
    Distribution() = default;

    explicit Distribution(std::vector<double> weights) : w_(std::move(weights)) {
        require(!w_.empty(), "distribution must have at least one state");
        double total = 0.0;
        for (double x : w_) {
            require(std::isfinite(x) && x >= 0.0, "distribution weights must be finite and >= 0");
            total += x;
        }
        require(std::abs(total - 1.0) <= kStochasticTol,
                "distribution weights must sum to 1 (got " + std::to_string(total) + ")");
    }

    static Distribution dirac(std::size_t size, std::size_t at) {
        require(at < size, "dirac location out of range");
        std::vector<double> w(size, 0.0);
        w[at] = 1.0;
        return Distribution(std::move(w));
    }

    static Distribution uniform(std::size_t size) {
        require(size >= 1, "uniform distribution needs at least one state");
        return Distribution(std::vector<double>(size, 1.0 / static_cast<double>(size)));
    }

    /// Rescales nonnegative weights to sum to one.
    static Distribution normalized(std::vector<double> weights) {
        double total = 0.0;
        for (double& x : weights) {
            require(std::isfinite(x), "weights must be finite");
            if (x < 0.0) x = 0.0;
            total += x;
        }
        require(total > 0.0, "weights must have positive mass");
        for (double& x : weights) x /= total;
        return Distribution(std::move(weights));
    }

    std::size_t size() const noexcept { return w_.size(); }
    double operator[](std::size_t i) const { return w_[i]; }
    std::span<const double> weights() const noexcept { return w_; }

    /// mu(f) for a function given by its values on the states.
    double expect(std::span<const double> f) const {
        if (f.size() != w_.size()) throw DimensionMismatch("function/distribution size");
        double s = 0.0;
        for (std::size_t i = 0; i < w_.size(); ++i) s += w_[i] * f[i];
        return s;
    }

private:
    std::vector<double> w_;
};

inline double tv_distance(const Distribution& mu, const Distribution& nu) {
    if (mu.size() != nu.size()) throw DimensionMismatch("tv_distance: sizes differ");
    double s = 0.0;
    for (std::size_t i = 0; i < mu.size(); ++i) s += std::abs(mu[i] - nu[i]);
    return s;
}

// ---------------------------------------------------------------------------
// FiniteKernel
// ---------------------------------------------------------------------------

/// Row-stochastic transition matrix on S labelled states. Each state carries
/// a real-valued embedding used when statistics are evaluated on the path.
class FiniteKernel {
public:
    FiniteKernel(std::vector<double> state_values, Eigen::MatrixXd matrix,
                 std::vector<std::string> labels = {})
        : values_(std::move(state_values)), p_(std::move(matrix)), labels_(std::move(labels)) {
        const auto s = values_.size();
        require(s >= 1, "kernel needs at least one state");
        if (static_cast<std::size_t>(p_.rows()) != s || static_cast<std::size_t>(p_.cols()) != s)
            throw DimensionMismatch("transition matrix must be S x S with S = number of states");
        if (labels_.empty()) {
            labels_.reserve(s);
            for (std::size_t i = 0; i < s; ++i) labels_.push_back(std::to_string(i));
        }
        require(labels_.size() == s, "one label per state");
        for (std::size_t i = 0; i < s; ++i) {
            require(std::isfinite(values_[i]), "state values must be finite");
            double row = 0.0;
            for (std::size_t j = 0; j < s; ++j) {
                const double x = p_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
                require(std::isfinite(x) && x >= 0.0, "transition probabilities must be >= 0");
                row += x;
            }
            require(std::abs(row - 1.0) <= kStochasticTol,
                    "row " + std::to_string(i) + " does not sum to 1");
        }
    }

    static FiniteKernel two_state(double a, double b, std::vector<double> values = {0.0, 1.0}) {
        Eigen::MatrixXd p(2, 2);
        p << 1.0 - a, a, b, 1.0 - b;
        return FiniteKernel(std::move(values), std::move(p));
    }

    std::size_t size() const noexcept { return values_.size(); }
    const Eigen::MatrixXd& matrix() const noexcept { return p_; }
    double operator()(std::size_t i, std::size_t j) const {
        return p_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }
    std::span<const double> values() const noexcept { return values_; }
    const std::vector<std::string>& labels() const noexcept { return labels_; }

private:
    std::vector<double> values_;
    Eigen::MatrixXd p_;
    std::vector<std::string> labels_;
};

inline Eigen::RowVectorXd as_row(const Distribution& mu) {
    Eigen::RowVectorXd r(static_cast<Eigen::Index>(mu.size()));
    for (std::size_t i = 0; i < mu.size(); ++i) r(static_cast<Eigen::Index>(i)) = mu[i];
    return r;
}

inline Distribution from_row(const Eigen::RowVectorXd& r) {
    std::vector<double> w(static_cast<std::size_t>(r.size()));
    double total = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        w[i] = std::max(0.0, r(static_cast<Eigen::Index>(i)));
        total += w[i];
    }
    // Repeated products drift from unit mass by a few ulps; renormalise.
    for (double& x : w) x /= total;
    return Distribution(std::move(w));
}

/// mu P^k by repeated vector-matrix products.
inline Distribution evolve(const Distribution& mu, const FiniteKernel& kernel, std::size_t k) {
    if (mu.size() != kernel.size()) throw DimensionMismatch("evolve: distribution/kernel size");
    if (k == 0) return mu;
    Eigen::RowVectorXd r = as_row(mu);
    for (std::size_t i = 0; i < k; ++i) r = r * kernel.matrix();
    return from_row(r);
}

/// Caches P^k so that repeated joint-law constructions do not recompute powers.
class PowerCache {
public:
    explicit PowerCache(const FiniteKernel& kernel) : p_(kernel.matrix()) {
        powers_.push_back(Eigen::MatrixXd::Identity(p_.rows(), p_.cols()));
    }

    const Eigen::MatrixXd& power(std::size_t k) {
        while (powers_.size() <= k) powers_.push_back(powers_.back() * p_);
        return powers_[k];
    }

private:
    Eigen::MatrixXd p_;
    std::deque<Eigen::MatrixXd> powers_;  // stable references
};

/// True when some power P^k with k <= S^2 is strictly positive
/// (irreducible and aperiodic). Uses boolean repeated squaring: a primitive
/// matrix has P^k > 0 for every k >= (S-1)^2 + 1, so it suffices to look at
/// the first power of two reaching S^2.
inline bool is_primitive(const FiniteKernel& kernel) {
    const auto s = static_cast<Eigen::Index>(kernel.size());
    using BoolMat = Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic>;
    BoolMat b = (kernel.matrix().array() > 0.0).cast<int>();
    const std::uint64_t target = static_cast<std::uint64_t>(s) * static_cast<std::uint64_t>(s);
    std::uint64_t reached = 1;
    while (true) {
        if ((b.array() > 0).all()) return true;
        if (reached >= target) return false;
        BoolMat next = (b * b).unaryExpr([](int x) { return x > 0 ? 1 : 0; });
        if (next == b) return false;
        b = std::move(next);
        reached *= 2;
    }
}

/// Unique stationary law of an irreducible aperiodic kernel.
inline Distribution stationary(const FiniteKernel& kernel) {
    const auto s = static_cast<Eigen::Index>(kernel.size());
    if (s == 1) return Distribution({1.0});
    const Eigen::MatrixXd& p = kernel.matrix();
    Eigen::RowVectorXd pi;
    if (s <= 2000) {
        if (!is_primitive(kernel))
            throw NotErgodic("no strictly positive power P^k with k <= S^2");
        Eigen::MatrixXd a = p.transpose() - Eigen::MatrixXd::Identity(s, s);
        a.row(s - 1).setOnes();
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(s);
        rhs(s - 1) = 1.0;
        pi = a.partialPivLu().solve(rhs).transpose();
    } else {
        // Power iteration; primitivity is inferred from convergence.
        pi = Eigen::RowVectorXd::Constant(s, 1.0 / static_cast<double>(s));
        bool converged = false;
        for (int it = 0; it < 1000000 && !converged; ++it) {
            Eigen::RowVectorXd next = pi * p;
            converged = (next - pi).lpNorm<1>() <= 1e-14;
            pi = std::move(next);
        }
        if (!converged) throw NotErgodic("power iteration did not converge");
    }
    pi = pi.cwiseMax(0.0);
    pi /= pi.sum();
    // One polishing step pulls the residual to rounding level.
    for (int it = 0; it < 4 && (pi * p - pi).lpNorm<1>() > 1e-14; ++it) {
        pi = pi * p;
        pi /= pi.sum();
    }
    return from_row(pi);
}

// ---------------------------------------------------------------------------
// ErgodicityProfile
// ---------------------------------------------------------------------------

enum class Provenance { certified, declared };

inline const char* to_string(Provenance p) {
    return p == Provenance::certified ? "certified" : "declared";
}

/// Tabulated rho(0..k_max) followed by the tail
///     rho(k) = rho(k_max) * tail_factor^floor((k - k_max) / tail_block).
struct ExplicitRho {
    std::vector<double> table;
    double tail_factor = 0.0;
    std::size_t tail_block = 1;
};

/// rho(k) = c * varrho^k.
struct GeometricRho {
    double c = 1.0;
    double varrho = 0.5;
};

/// The pair (V, rho) controlling V-weighted total variation convergence:
///     ||mu P^k - mu' P^k||_TV <= rho(k) [mu(V) + mu'(V)].
class ErgodicityProfile {
public:
    using Rho = std::variant<ExplicitRho, GeometricRho>;

    ErgodicityProfile(std::vector<double> v_values, Rho rho, Provenance provenance)
        : v_(std::move(v_values)), rho_(std::move(rho)), provenance_(provenance) {
        for (double v : v_) require(std::isfinite(v) && v >= 1.0, "V values must be >= 1");
        if (auto* e = std::get_if<ExplicitRho>(&rho_)) {
            require(!e->table.empty(), "rho table must not be empty");
            for (std::size_t k = 0; k < e->table.size(); ++k) {
                require(std::isfinite(e->table[k]) && e->table[k] >= 0.0, "rho must be >= 0");
                if (k > 0)
                    require(e->table[k] <= e->table[k - 1], "rho must be non-increasing");
            }
            require(e->tail_block >= 1, "tail block must be >= 1");
            require(e->tail_factor >= 0.0 && (e->tail_factor < 1.0 || e->table.back() == 0.0),
                    "rho tail must decay to 0");
        } else {
            const auto& g = std::get<GeometricRho>(rho_);
            require(g.c > 0.0, "geometric profile needs C > 0");
            require(g.varrho > 0.0 && g.varrho < 1.0, "geometric profile needs varrho in (0,1)");
        }
    }

    static ErgodicityProfile geometric(std::vector<double> v_values, double c, double varrho,
                                       Provenance provenance = Provenance::declared) {
        return ErgodicityProfile(std::move(v_values), GeometricRho{c, varrho}, provenance);
    }

    /// rho identically zero (one-step coupling, e.g. identical rows).
    static ErgodicityProfile zero(std::vector<double> v_values,
                                  Provenance provenance = Provenance::declared) {
        return ErgodicityProfile(std::move(v_values), ExplicitRho{{0.0}, 0.0, 1}, provenance);
    }

    double rho(std::size_t k) const {
        if (const auto* e = std::get_if<ExplicitRho>(&rho_)) {
            if (k < e->table.size()) return e->table[k];
            const double last = e->table.back();
            if (last == 0.0) return 0.0;
            const std::size_t kmax = e->table.size() - 1;
            const double steps = static_cast<double>((k - kmax) / e->tail_block);
            return last * std::pow(e->tail_factor, steps);
        }
        const auto& g = std::get<GeometricRho>(rho_);
        return g.c * std::pow(g.varrho, static_cast<double>(k));
    }

    /// Largest k for which rho(k) is exact rather than a tail extrapolation.
    std::optional<std::size_t> tabulated_horizon() const {
        if (const auto* e = std::get_if<ExplicitRho>(&rho_)) return e->table.size() - 1;
        return std::nullopt;
    }

    std::span<const double> v() const noexcept { return v_; }
    double v_max() const { return v_.empty() ? 1.0 : *std::max_element(v_.begin(), v_.end()); }
    const Rho& rho_spec() const noexcept { return rho_; }
    Provenance provenance() const noexcept { return provenance_; }
    bool is_geometric() const noexcept { return std::holds_alternative<GeometricRho>(rho_); }

    // Drift constants (P V <= lambda V + b) kept as metadata only.
    std::optional<double> drift_lambda;
    std::optional<double> drift_b;
    // Required for declared profiles on general spaces, where M cannot be computed.
    std::optional<double> declared_m;

private:
    std::vector<double> v_;
    Rho rho_;
    Provenance provenance_;
};

/// max over Dirac pairs (x, x') of ||(delta_x - delta_x') M||_1 / (V(x) + V(x')).
inline double dirac_pair_ratio(const Eigen::MatrixXd& m, std::span<const double> v) {
    const auto s = m.rows();
    double best = 0.0;
    for (Eigen::Index x = 0; x < s; ++x)
        for (Eigen::Index y = x + 1; y < s; ++y) {
            const double tv = (m.row(x) - m.row(y)).lpNorm<1>();
            best = std::max(best, tv / (v[static_cast<std::size_t>(x)] + v[static_cast<std::size_t>(y)]));
        }
    return best;
}

/// Dobrushin coefficient: half the largest row-to-row L1 distance of m.
inline double dobrushin(const Eigen::MatrixXd& m) {
    const auto s = m.rows();
    double best = 0.0;
    for (Eigen::Index x = 0; x < s; ++x)
        for (Eigen::Index y = x + 1; y < s; ++y) best = std::max(best, (m.row(x) - m.row(y)).lpNorm<1>());
    return 0.5 * best;
}

/// Minimal rho(k), k <= k_max, satisfying the V-weighted contraction for all
/// pairs of initial laws. The ratio
///     ||(mu - mu') P^k|| / (mu(V) + mu'(V))
/// is maximised at Dirac pairs: writing mu - mu' = sum w(x,x') (delta_x - delta_x')
/// with the product coupling w = mu (x) mu' and using the triangle inequality
/// reduces any pair to a convex combination of Dirac pairs.
///
/// Past k_max the tail is certified with the best per-step Dobrushin rate
/// of a block P^b, b <= k_max.
inline ErgodicityProfile certify_rho(const FiniteKernel& kernel, std::vector<double> v_values,
                                     std::size_t k_max) {
    if (v_values.size() != kernel.size()) throw DimensionMismatch("certify_rho: V size");
    require(k_max >= 1, "certify_rho: k_max must be >= 1");
    for (double x : v_values) require(x >= 1.0, "V values must be >= 1");

    std::vector<double> table;
    table.reserve(k_max + 1);
    // Row differences of P^k equal those of (P - 1 pi)^k. Powering the
    // deviation keeps small differences at relative rather than absolute
    // precision.
    Eigen::MatrixXd step = kernel.matrix();
    try {
        step.rowwise() -= as_row(stationary(kernel));
    } catch (const NotErgodic&) {
        step = kernel.matrix();
    }
    Eigen::MatrixXd pk = Eigen::MatrixXd::Identity(kernel.matrix().rows(), kernel.matrix().cols());
    double best_rate = 1.0;
    double best_factor = 1.0;
    std::size_t best_block = 0;
    for (std::size_t k = 0; k <= k_max; ++k) {
        if (k > 0) {
            pk = pk * step;
            const double d = dobrushin(pk);
            const double rate = std::pow(d, 1.0 / static_cast<double>(k));
            if (d < 1.0 && (best_block == 0 || rate < best_rate)) {
                best_rate = rate;
                best_factor = d;
                best_block = k;
            }
        }
        table.push_back(dirac_pair_ratio(pk, v_values));
    }
    // TV contracts under P, so the exact sequence is non-increasing. A suffix
    // max absorbs rounding noise without ever lowering a computed ratio.
    for (std::size_t k = table.size() - 1; k-- > 0;) table[k] = std::max(table[k], table[k + 1]);
    if (table.front() > 0.0 && !(table.back() < table.front() * (1.0 - 1e-9)))
        throw NotErgodic("rho(k_max) shows no decay from rho(0)");
    if (table.back() > 0.0 && best_block == 0)
        throw NotErgodic("no block P^b with b <= k_max contracts total variation");
    ExplicitRho rho{std::move(table), best_block ? best_factor : 0.0, best_block ? best_block : 1};
    return ErgodicityProfile(std::move(v_values), std::move(rho), Provenance::certified);
}

struct ProfileConflict {
    std::size_t k;
    double declared;
    double exact_lower;
};

/// First k <= k_check where a declared rho(k) lies below the Dirac-pair ratio
/// of P^k, which every valid profile must dominate.
inline std::optional<ProfileConflict> declared_profile_conflict(const FiniteKernel& kernel,
                                                                const ErgodicityProfile& profile,
                                                                std::size_t k_check = 64) {
    if (profile.v().size() != kernel.size()) throw DimensionMismatch("profile V size differs from chain");
    Eigen::MatrixXd pk = Eigen::MatrixXd::Identity(kernel.matrix().rows(), kernel.matrix().cols());
    for (std::size_t k = 0; k <= k_check; ++k) {
        if (k > 0) pk = pk * kernel.matrix();
        const double lower = dirac_pair_ratio(pk, profile.v());
        if (profile.rho(k) < lower * (1.0 - 1e-9) - 1e-15) return ProfileConflict{k, profile.rho(k), lower};
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Simulation
// ---------------------------------------------------------------------------

/// Path Y_1..Y_n of a finite chain started from Y_0 ~ initial, so that
/// Y_i ~ initial P^i.
struct Trajectory {
    std::vector<std::uint32_t> states;
    std::uint64_t seed = 0;
    Distribution initial;

    std::size_t size() const noexcept { return states.size(); }

    std::vector<double> values(const FiniteKernel& kernel) const {
        std::vector<double> out;
        out.reserve(states.size());
        for (auto s : states) out.push_back(kernel.values()[s]);
        return out;
    }
};

/// Inverse-CDF sampler for a finite probability vector.
class CategoricalSampler {
public:
    CategoricalSampler() = default;
    explicit CategoricalSampler(std::span<const double> probs) : cdf_(probs.size()) {
        double acc = 0.0;
        std::size_t last_positive = 0;
        for (std::size_t i = 0; i < probs.size(); ++i) {
            acc += probs[i];
            cdf_[i] = acc;
            if (probs[i] > 0.0) last_positive = i;
        }
        for (std::size_t i = last_positive; i < cdf_.size(); ++i) cdf_[i] = 1.0;
    }

    std::uint32_t operator()(Rng& rng) const {
        const double u = uniform01(rng);
        auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
        return static_cast<std::uint32_t>(it - cdf_.begin());
    }

private:
    std::vector<double> cdf_;
};

/// Precomputed per-row samplers; reuse across replicates.
class ChainSampler {
public:
    explicit ChainSampler(const FiniteKernel& kernel) {
        rows_.reserve(kernel.size());
        std::vector<double> row(kernel.size());
        for (std::size_t i = 0; i < kernel.size(); ++i) {
            for (std::size_t j = 0; j < kernel.size(); ++j) row[j] = kernel(i, j);
            rows_.emplace_back(row);
        }
    }

    /// Fills `out` with Y_1..Y_out.size(), Y_0 ~ initial.
    void run(const CategoricalSampler& initial, Rng& rng, std::span<std::uint32_t> out) const {
        std::uint32_t y = initial(rng);
        for (auto& slot : out) {
            y = rows_[y](rng);
            slot = y;
        }
    }

private:
    std::vector<CategoricalSampler> rows_;
};

inline Trajectory simulate(const FiniteKernel& kernel, const Distribution& mu0, std::size_t n,
                           std::uint64_t seed) {
    if (mu0.size() != kernel.size()) throw DimensionMismatch("simulate: initial law size");
    require(n >= 1, "simulate: n must be >= 1");
    Trajectory t{std::vector<std::uint32_t>(n), seed, mu0};
    Rng rng(seed);
    ChainSampler(kernel).run(CategoricalSampler(mu0.weights()), rng, t.states);
    return t;
}

/// Sampler-backed chain on a general state space. `init(rng)` draws Y_0 and
/// `step(rng, y)` draws from P(y, .). Only simulation is available; the
/// ergodicity profile of such a chain is taken on the user's word.
template <class Init, class Step>
std::vector<double> simulate_general(Init&& init, Step&& step, std::size_t n, std::uint64_t seed) {
    require(n >= 1, "simulate_general: n must be >= 1");
    Rng rng(seed);
    std::vector<double> out(n);
    double y = init(rng);
    for (auto& slot : out) {
        y = step(rng, y);
        slot = y;
    }
    return out;
}

}  // namespace ustat
