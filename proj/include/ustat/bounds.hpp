// bounds.hpp
//
// Explicit L2 bounds for U-statistics of an ergodic chain.
//
//   M(mu, V)  = sup_k mu P^k(V)
//   C_{n,m}   = 2^{m/2+1} sqrt((2m)!) (sum_{k=0}^n (k+1)^m rho(k))^{1/2} n^m / C(n,m)
//
//   canonical, bounded h:      ||U_{n,m}(h)|| <= C_{n,m} sqrt(M) ||h||_inf n^{-m/2}
//   d-degenerate, bounded h:   ||U_{n,m}(h) - pi^m h|| <= sqrt(M) ||h||_inf
//                                  sum_{c = max(d,1)}^m C(m,c) 2^c C_{n,c} n^{-c/2}
//   canonical, B_{2(p+1)} < inf:
//       ||U_{n,m}(h)|| <= 2^{m/2} m sqrt((2m)!) D (sum_k (k+1)^m rho(k)^{p/(p+1)})^{1/2}
//                         n^{m/2} / C(n,m)
//       D = 2^{(2p+1)/(2(p+1))} [p^{1/(p+1)} + p^{-p/(p+1)}]^{1/2} sqrt(M) B_{2(p+1)}(h)
//
// Factorials and binomials are combined in log space and exponentiated once.
#pragma once

#include "error.hpp"
#include "kernel.hpp"
#include "markov.hpp"
#include "ustatistic.hpp"

#include <cmath>
#include <cstdio>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace ustat {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// sup_{k >= 0} mu P^k(V). A declared M on the profile is returned as is.
/// Otherwise iterates until rho(K) (mu(V) + pi(V)) max V < tol, beyond which
/// mu P^k(V) stays within tol of pi(V); the result is never below pi(V).
inline double m_sup(const Distribution& mu, const ErgodicityProfile& profile, const FiniteKernel& kernel,
                    double tol = 1e-9, std::size_t max_steps = 10'000'000) {
    if (profile.declared_m) return *profile.declared_m;
    if (profile.v().empty()) throw Unbounded("profile has no V values and no declared M");
    if (profile.v().size() != kernel.size() || mu.size() != kernel.size())
        throw DimensionMismatch("m_sup: sizes of mu, V and kernel differ");
    const auto v = profile.v();
    const double pi_v = stationary(kernel).expect(v);
    const double mu_v = mu.expect(v);
    const double scale = (mu_v + pi_v) * profile.v_max();
    Eigen::RowVectorXd r = as_row(mu);
    Eigen::Map<const Eigen::VectorXd> vv(v.data(), static_cast<Eigen::Index>(v.size()));
    double best = std::max(mu_v, pi_v);
    for (std::size_t k = 0;; ++k) {
        if (profile.rho(k) * scale < tol) break;
        if (k >= max_steps) throw Unbounded("rho does not bring mu P^k(V) within tolerance of pi(V)");
        r = r * kernel.matrix();
        best = std::max(best, r.dot(vv));
    }
    return best;
}

/// log sum_{k=0}^n (k+1)^m rho(k)^exponent; -inf when every term vanishes.
inline double log_mixing_sum(const ErgodicityProfile& profile, std::size_t n, std::size_t m,
                             double exponent = 1.0) {
    std::vector<double> logs;
    logs.reserve(n + 1);
    double top = kNegInf;
    for (std::size_t k = 0; k <= n; ++k) {
        const double r = profile.rho(k);
        if (r <= 0.0) continue;
        const double t = static_cast<double>(m) * std::log(static_cast<double>(k + 1)) + exponent * std::log(r);
        logs.push_back(t);
        top = std::max(top, t);
    }
    if (logs.empty()) return kNegInf;
    CompensatedSum s;
    for (double t : logs) s.add(std::exp(t - top));
    return top + std::log(s.value());
}

inline double mixing_sum(const ErgodicityProfile& profile, std::size_t n, std::size_t m, double exponent = 1.0) {
    return std::exp(log_mixing_sum(profile, n, m, exponent));
}

/// log of n^m / C(n,m).
/// Evaluated as log m! - sum_{j<m} log(1 - j/n) to avoid cancellation between
/// large log-gamma values.
inline double log_tuple_ratio(std::size_t n, std::size_t m) {
    double s = std::lgamma(static_cast<double>(m) + 1.0);
    for (std::size_t j = 1; j < m; ++j) s -= std::log1p(-static_cast<double>(j) / static_cast<double>(n));
    return s;
}

inline double c_nm(std::size_t n, std::size_t m, const ErgodicityProfile& profile) {
    require(m >= 1, "c_nm: m must be >= 1");
    if (n < m) throw DegreeTooLarge("c_nm requires n >= m");
    const double log_sum = log_mixing_sum(profile, n, m);
    if (log_sum == kNegInf) return 0.0;
    const double md = static_cast<double>(m);
    const double log_c = (md / 2.0 + 1.0) * std::log(2.0) + 0.5 * std::lgamma(2.0 * md + 1.0) + 0.5 * log_sum +
                         log_tuple_ratio(n, m);
    return std::exp(log_c);
}

/// C(p) = p^{1/(p+1)} + p^{-p/(p+1)}.
inline double lemma_constant(double p) {
    if (!(p > 0.0)) throw PNotPositive("p must be > 0");
    return std::pow(p, 1.0 / (p + 1.0)) + std::pow(p, -p / (p + 1.0));
}

/// D(p, mu, V, h) from M = M(mu, V) and B = B_{2(p+1)}(h).
inline double d_constant(double p, double m_mu_v, double b) {
    return std::pow(2.0, (2.0 * p + 1.0) / (2.0 * (p + 1.0))) * std::sqrt(lemma_constant(p)) *
           std::sqrt(m_mu_v) * b;
}

struct BoundInputs {
    ErgodicityProfile profile;
    std::size_t n = 0;
    std::size_t m = 0;
    /// M(mu, V), from m_sup() or declared.
    double m_mu_v = 1.0;
    std::optional<double> sup_h;
    /// B_q(h) together with its q.
    std::optional<double> bq;
    double q = 0.0;
    std::optional<double> p;
    /// Degeneracy order d(h).
    std::size_t degeneracy = 0;

    void validate() const {
        require(m >= 1 && n >= m, "bound inputs need n >= m >= 1");
        require(std::isfinite(m_mu_v) && m_mu_v >= 1.0, "M(mu,V) must be finite and >= 1");
        if (sup_h) require(*sup_h >= 0.0, "sup_h must be >= 0");
        if (bq) require(*bq >= 0.0, "B_q must be >= 0");
    }
};

/// C_{n,m} sqrt(M) sup_h n^{-m/2}, without the canonicity check.
inline double canonical_bounded_term(std::size_t n, std::size_t m, const ErgodicityProfile& profile,
                                     double m_mu_v, double sup_h) {
    return c_nm(n, m, profile) * std::sqrt(m_mu_v) * sup_h *
           std::pow(static_cast<double>(n), -static_cast<double>(m) / 2.0);
}

inline double theorem1_bound(const BoundInputs& in) {
    in.validate();
    if (in.degeneracy != in.m)
        throw NotCanonical("theorem 1 bound needs a pi-canonical kernel (d = m), got d = " +
                           std::to_string(in.degeneracy));
    if (!in.sup_h) throw InvalidArgument("theorem 1 bound needs ||h||_inf");
    return canonical_bounded_term(in.n, in.m, in.profile, in.m_mu_v, *in.sup_h);
}

/// Bound on ||U_{n,m}(h) - pi^{(x)m} h|| for a bounded d-degenerate kernel.
/// Each addend reuses canonical_bounded_term so the d = m case equals
/// 2^m * theorem1_bound bit for bit.
inline double corollary2_bound(const BoundInputs& in) {
    in.validate();
    if (!in.sup_h) throw InvalidArgument("corollary 2 bound needs ||h||_inf");
    if (in.degeneracy > in.m) return 0.0;  // h vanishes pi-a.e.
    double total = 0.0;
    for (std::size_t c = std::max<std::size_t>(in.degeneracy, 1); c <= in.m; ++c)
        total += binomial(in.m, c) * std::ldexp(canonical_bounded_term(in.n, c, in.profile, in.m_mu_v, *in.sup_h),
                                               static_cast<int>(c));
    return total;
}

/// B_q(h) = sup_y |h(y)| / sum_j V(y_j)^{1/q}, exact over all S^m tuples.
inline double b_q(const TabulatedKernel& h, const ErgodicityProfile& profile, double q,
                  std::uint64_t budget = kDefaultTableBudget) {
    require(q >= 1.0, "B_q needs q >= 1");
    const auto v = profile.v();
    if (v.size() != h.states()) throw DimensionMismatch("b_q: V size differs from kernel states");
    if (h.table().size() > budget) throw BudgetExceeded("b_q: S^m exceeds budget");
    std::vector<double> vq(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) vq[i] = std::pow(v[i], 1.0 / q);
    std::vector<std::uint32_t> idx(h.degree());
    double best = 0.0;
    for (std::size_t flat = 0; flat < h.table().size(); ++flat) {
        h.unflatten(flat, idx);
        double denom = 0.0;
        for (auto i : idx) denom += vq[i];
        best = std::max(best, std::abs(h.at(flat)) / denom);
    }
    return best;
}

/// General state spaces: only a declared envelope is usable.
inline double b_q(const SymmetricKernel& h, double q) {
    auto it = h.declared_bq.find(q);
    if (it == h.declared_bq.end())
        throw NeedDeclaredEnvelope("no declared B_q for q = " + std::to_string(q));
    return it->second;
}

inline double corollary3_bound(const BoundInputs& in) {
    in.validate();
    if (!in.p || !(*in.p > 0.0)) throw PNotPositive("corollary 3 bound needs p > 0");
    if (!in.bq) throw InvalidArgument("corollary 3 bound needs B_{2(p+1)}(h)");
    const double p = *in.p;
    if (std::abs(in.q - 2.0 * (p + 1.0)) > 1e-12)
        throw InvalidArgument("corollary 3 bound needs B_q with q = 2(p+1)");
    if (in.degeneracy < in.m)
        throw Unsupported("corollary 3 is implemented for pi-canonical kernels only");
    const double b = *in.bq;
    if (b == 0.0) return 0.0;
    const double log_sum = log_mixing_sum(in.profile, in.n, in.m, p / (p + 1.0));
    if (log_sum == kNegInf) return 0.0;
    const double md = static_cast<double>(in.m);
    const double nd = static_cast<double>(in.n);
    const double log_rest = (md / 2.0) * std::log(2.0) + std::log(md) + 0.5 * std::lgamma(2.0 * md + 1.0) +
                            0.5 * log_sum + log_tuple_ratio(in.n, in.m) - (md / 2.0) * std::log(nd);
    return d_constant(p, in.m_mu_v, b) * std::exp(log_rest);
}

/// Closed-form bound on sum_{k=0}^n (k+1)^m varrho^k valid for every n:
///     (varrho L^{m+1})^{-1} (m^{m+1} - L^{m+1}) / (m - L),   L = -ln varrho.
/// The quotient is evaluated as sum_{j=0}^m m^j L^{m-j}, which is the same
/// polynomial without the removable singularity at L = m (there it equals
/// (m+1) m^m).
inline double geometric_sum_bound(double varrho, std::size_t m) {
    if (!(varrho > 0.0 && varrho < 1.0)) throw DomainError("varrho must lie in (0,1)");
    require(m >= 1, "geometric_sum_bound: m must be >= 1");
    const double l = -std::log(varrho);
    const double md = static_cast<double>(m);
    double quotient = 0.0;
    for (std::size_t j = 0; j <= m; ++j)
        quotient += std::pow(md, static_cast<double>(j)) * std::pow(l, static_cast<double>(m - j));
    return quotient / (varrho * std::pow(l, md + 1.0));
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

/// One bound at one n, optionally compared with an L2 value.
struct BoundReport {
    std::size_t n = 0;
    std::size_t m = 0;
    std::string bound_name;
    double bound = 0.0;
    /// Empirical or exact L2 norm of the bounded quantity.
    std::optional<double> estimate;
    double std_error = 0.0;
    std::optional<double> margin;
    bool pass = true;
    /// "exact" | "monte-carlo" | "none", followed by the profile provenance.
    std::string provenance;
    std::string inputs_hash;
};

/// Round-trip decimal form (%.17g).
inline std::string format_number(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

/// 64-bit FNV-1a, hex encoded; tags reports with the inputs that produced them.
inline std::string fnv1a_hex(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[h & 0xF];
        h >>= 4;
    }
    return out;
}

}  // namespace ustat
