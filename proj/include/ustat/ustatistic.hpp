// ustatistic.hpp
//
// U-statistics of a path,
//     U_{n,m}(h) = C(n,m)^{-1} sum_{i_1 < ... < i_m} h(Y_{i_1}, ..., Y_{i_m}),
// Hoeffding projections pi_{c,m} h and the decomposition
//     U_{n,m}(h) = sum_{c=0}^m C(m,c) U_{n,c}(pi_{c,m} h),   U_{n,0}(f) = f.
//
// Full enumeration visits combinations in lexicographic order and costs
// O(C(n,m) * m); callers cap C(n,m) with a budget (default 1e8).
#pragma once

#include "error.hpp"
#include "kernel.hpp"
#include "markov.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <vector>

namespace ustat {

inline constexpr std::uint64_t kDefaultEnumerationBudget = 100'000'000;
inline constexpr double kDegeneracyEps = 1e-10;

inline double log_binomial(double n, double k) {
    return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

/// C(n,k) as a double; exact while the value fits in 53 bits.
inline double binomial(std::uint64_t n, std::uint64_t k) {
    if (k > n) return 0.0;
    k = std::min(k, n - k);
    double r = 1.0;
    for (std::uint64_t i = 1; i <= k; ++i) {
        r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
        if (!std::isfinite(r)) return std::exp(log_binomial(static_cast<double>(n), static_cast<double>(k)));
    }
    return std::round(r);
}

/// Neumaier-compensated running sum; deterministic for a fixed input order.
class CompensatedSum {
public:
    void add(double x) noexcept {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x))
            comp_ += (sum_ - t) + x;
        else
            comp_ += (x - t) + sum_;
        sum_ = t;
    }
    double value() const noexcept { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

inline void check_enumeration(std::size_t n, std::size_t m, std::uint64_t budget) {
    if (n < m)
        throw DegreeTooLarge("n = " + std::to_string(n) + " < m = " + std::to_string(m));
    const double count = binomial(n, m);
    if (count > static_cast<double>(budget))
        throw BudgetExceeded("C(n,m) = " + std::to_string(count) + " exceeds enumeration budget " +
                             std::to_string(budget));
}

/// Calls visit(args) for every increasing m-subset of `sample`, in
/// lexicographic order. The argument buffer is rewritten only from the first
/// index that changed.
template <class T, class Visit>
void for_each_combination(std::span<const T> sample, std::size_t m, Visit&& visit) {
    const std::size_t n = sample.size();
    if (m == 0 || n < m) return;
    std::vector<std::size_t> idx(m);
    std::vector<T> args(m);
    for (std::size_t j = 0; j < m; ++j) {
        idx[j] = j;
        args[j] = sample[j];
    }
    while (true) {
        visit(std::span<const T>(args));
        std::size_t j = m;
        while (j-- > 0) {
            if (idx[j] < n - m + j) break;
            if (j == 0) return;
        }
        ++idx[j];
        args[j] = sample[idx[j]];
        for (std::size_t k = j + 1; k < m; ++k) {
            idx[k] = idx[k - 1] + 1;
            args[k] = sample[idx[k]];
        }
    }
}

/// U_{n,m}(h) over any sample type; h takes std::span<const T>.
template <class T, class F>
double u_statistic(std::span<const T> sample, std::size_t m, F&& h,
                   std::uint64_t budget = kDefaultEnumerationBudget) {
    require(m >= 1, "u_statistic: degree must be >= 1");
    check_enumeration(sample.size(), m, budget);
    CompensatedSum sum;
    for_each_combination(sample, m, [&](std::span<const T> args) { sum.add(h(args)); });
    return sum.value() / binomial(sample.size(), m);
}

/// U-statistic of a finite path with a tabulated kernel. The flat table
/// offset of each prefix is reused across combinations sharing it.
inline double u_statistic(std::span<const std::uint32_t> states, const TabulatedKernel& h,
                          std::uint64_t budget = kDefaultEnumerationBudget) {
    const std::size_t m = h.degree();
    const std::size_t n = states.size();
    check_enumeration(n, m, budget);
    const std::size_t s = h.states();
    const auto table = h.table();
    if (m == 1) {
        CompensatedSum sum;
        for (auto y : states) sum.add(table[y]);
        return sum.value() / static_cast<double>(n);
    }
    if (m == 2) {
        CompensatedSum sum;
        for (std::size_t i = 0; i + 1 < n; ++i) {
            const double* row = table.data() + static_cast<std::size_t>(states[i]) * s;
            double partial = 0.0;
            for (std::size_t j = i + 1; j < n; ++j) partial += row[states[j]];
            sum.add(partial);
        }
        return sum.value() / binomial(n, 2);
    }
    std::vector<std::size_t> idx(m);
    std::vector<std::size_t> offset(m + 1, 0);
    for (std::size_t j = 0; j < m; ++j) {
        idx[j] = j;
        offset[j + 1] = offset[j] * s + states[j];
    }
    CompensatedSum sum;
    while (true) {
        sum.add(table[offset[m]]);
        std::size_t j = m;
        while (j-- > 0) {
            if (idx[j] < n - m + j) break;
            if (j == 0) return sum.value() / binomial(n, m);
        }
        ++idx[j];
        offset[j + 1] = offset[j] * s + states[idx[j]];
        for (std::size_t k = j + 1; k < m; ++k) {
            idx[k] = idx[k - 1] + 1;
            offset[k + 1] = offset[k] * s + states[idx[k]];
        }
    }
}

inline double u_statistic(const Trajectory& traj, const TabulatedKernel& h,
                          std::uint64_t budget = kDefaultEnumerationBudget) {
    return u_statistic(std::span<const std::uint32_t>(traj.states), h, budget);
}

/// U-statistic of a finite path with a kernel evaluated on state values.
inline double u_statistic(const Trajectory& traj, const FiniteKernel& chain, const SymmetricKernel& h,
                          std::uint64_t budget = kDefaultEnumerationBudget) {
    const auto values = traj.values(chain);
    return u_statistic(std::span<const double>(values), h.degree(),
                       [&](std::span<const double> y) { return h(y); }, budget);
}

/// Streaming U-statistic of a finite path: appending Y_{n+1} costs
/// O(S^{m-1}). For each k < m it keeps T_k(x_1..x_k), the number of
/// increasing index k-tuples whose states are (x_1..x_k) in time order.
class IncrementalUStatistic {
public:
    explicit IncrementalUStatistic(TabulatedKernel h, std::uint64_t budget = kDefaultTableBudget)
        : h_(std::move(h)) {
        const std::size_t m = h_.degree();
        if (checked_power(h_.states(), m - 1) > budget)
            throw BudgetExceeded("incremental U-statistic needs S^(m-1) count cells");
        counts_.resize(m);
        for (std::size_t k = 0; k < m; ++k) counts_[k].assign(checked_power(h_.states(), k), 0.0);
        counts_[0][0] = 1.0;
    }

    void push(std::uint32_t y) {
        const std::size_t m = h_.degree();
        const std::size_t s = h_.states();
        if (y >= s) throw InvalidArgument("state index out of range");
        // New m-tuples end at y: every (m-1)-tuple seen so far extends by y.
        const auto& top = counts_[m - 1];
        const auto table = h_.table();
        double added = 0.0;
        for (std::size_t flat = 0; flat < top.size(); ++flat)
            if (top[flat] != 0.0) added += top[flat] * table[flat * s + y];
        sum_.add(added);
        for (std::size_t k = m - 1; k >= 1; --k) {
            auto& cur = counts_[k];
            const auto& prev = counts_[k - 1];
            for (std::size_t flat = 0; flat < prev.size(); ++flat) cur[flat * s + y] += prev[flat];
        }
        ++n_;
    }

    std::size_t count() const noexcept { return n_; }

    double value() const {
        if (n_ < h_.degree()) throw DegreeTooLarge("fewer observations than the kernel degree");
        return sum_.value() / binomial(n_, h_.degree());
    }

private:
    TabulatedKernel h_;
    std::vector<std::vector<double>> counts_;
    CompensatedSum sum_;
    std::size_t n_ = 0;
};

// ---------------------------------------------------------------------------
// Hoeffding projections
// ---------------------------------------------------------------------------

/// pi_{c,m} h = (delta_{y_1} - pi) (x) ... (x) (delta_{y_c} - pi) (x) pi^{(x)(m-c)} [h].
///
/// Expanding the signed product gives
///     pi_{c,m} h(y) = sum_{T subset {1..c}} (-1)^{c-|T|} g_{|T|}(y_T),
/// where g_k = pi^{(x)(m-k)} h integrates out the last m-k arguments. The
/// partial integrals g_0..g_c are memoised tables of S^k entries.
class ProjectedKernel {
public:
    ProjectedKernel(const TabulatedKernel& h, const Distribution& pi, std::size_t c,
                    std::uint64_t dense_limit = 1'000'000)
        : c_(c), m_(h.degree()), s_(h.states()), pi_(pi) {
        if (pi.size() != s_) throw DimensionMismatch("projection: pi size differs from kernel states");
        require(c <= m_, "projection order c must be <= m");
        // g_m = h, then integrate the trailing argument against pi.
        std::vector<double> g(h.table().begin(), h.table().end());
        std::vector<std::vector<double>> partials(m_ + 1);
        partials[m_] = g;
        for (std::size_t k = m_; k-- > 0;) {
            std::vector<double> next(g.size() / s_, 0.0);
            for (std::size_t flat = 0; flat < next.size(); ++flat) {
                double acc = 0.0;
                for (std::size_t z = 0; z < s_; ++z) acc += pi[z] * g[flat * s_ + z];
                next[flat] = acc;
            }
            g = std::move(next);
            partials[k] = g;
        }
        partials.resize(c_ + 1);
        partials_ = std::make_shared<const std::vector<std::vector<double>>>(std::move(partials));
        if (c_ >= 1 && checked_power(s_, c_) <= dense_limit) {
            std::vector<double> dense(checked_power(s_, c_));
            std::vector<std::uint32_t> idx(c_);
            for (std::size_t flat = 0; flat < dense.size(); ++flat) {
                std::size_t rem = flat;
                for (std::size_t j = c_; j-- > 0;) {
                    idx[j] = static_cast<std::uint32_t>(rem % s_);
                    rem /= s_;
                }
                dense[flat] = expand(idx);
            }
            dense_ = TabulatedKernel(s_, c_, std::move(dense));
        }
    }

    std::size_t order() const noexcept { return c_; }
    std::size_t base_degree() const noexcept { return m_; }
    std::size_t states() const noexcept { return s_; }
    const Distribution& pi() const noexcept { return pi_; }

    /// pi^{(x)m} h; the whole projection when c = 0.
    double scalar() const { return (*partials_)[0][0]; }

    double operator()(std::span<const std::uint32_t> ys) const {
        if (ys.size() != c_) throw DimensionMismatch("projection called with wrong arity");
        if (c_ == 0) return scalar();
        if (dense_) return (*dense_)(ys);
        return expand(ys);
    }

    /// Dense table (c >= 1), tabulating on demand when it was not kept.
    TabulatedKernel tabulated(std::uint64_t budget = kDefaultTableBudget) const {
        require(c_ >= 1, "the c = 0 projection is a scalar");
        if (dense_) return *dense_;
        const std::uint64_t total = checked_power(s_, c_);
        if (total > budget) throw BudgetExceeded("projection table exceeds budget");
        std::vector<double> t(total);
        std::vector<std::uint32_t> idx(c_);
        for (std::size_t flat = 0; flat < total; ++flat) {
            std::size_t rem = flat;
            for (std::size_t j = c_; j-- > 0;) {
                idx[j] = static_cast<std::uint32_t>(rem % s_);
                rem /= s_;
            }
            t[flat] = expand(idx);
        }
        return TabulatedKernel(s_, c_, std::move(t));
    }

    /// max over tuples |pi_{c,m} h|.
    double max_abs(std::uint64_t budget = kDefaultTableBudget) const {
        if (c_ == 0) return std::abs(scalar());
        return tabulated(budget).sup();
    }

    /// max over prefixes |sum_y pi(y) pi_{c,m} h(prefix, y)|; zero for a
    /// pi-canonical function.
    double canonical_residual(std::uint64_t budget = kDefaultTableBudget) const {
        require(c_ >= 1, "canonicity is defined for c >= 1");
        const auto t = tabulated(budget);
        const auto table = t.table();
        double worst = 0.0;
        for (std::size_t prefix = 0; prefix < table.size() / s_; ++prefix) {
            double acc = 0.0;
            for (std::size_t y = 0; y < s_; ++y) acc += pi_[y] * table[prefix * s_ + y];
            worst = std::max(worst, std::abs(acc));
        }
        return worst;
    }

private:
    double expand(std::span<const std::uint32_t> ys) const {
        const auto& g = *partials_;
        double total = 0.0;
        const std::uint64_t subsets = std::uint64_t{1} << c_;
        for (std::uint64_t mask = 0; mask < subsets; ++mask) {
            std::size_t flat = 0;
            std::size_t size = 0;
            for (std::size_t j = 0; j < c_; ++j)
                if (mask >> j & 1U) {
                    flat = flat * s_ + ys[j];
                    ++size;
                }
            const double sign = (c_ - size) % 2 == 0 ? 1.0 : -1.0;
            total += sign * g[size][flat];
        }
        return total;
    }

    std::size_t c_;
    std::size_t m_;
    std::size_t s_;
    Distribution pi_;
    std::shared_ptr<const std::vector<std::vector<double>>> partials_;
    std::optional<TabulatedKernel> dense_;
};

inline ProjectedKernel hoeffding_project(const TabulatedKernel& h, const Distribution& pi, std::size_t c) {
    return ProjectedKernel(h, pi, c);
}

/// General state spaces have no exact pi-integral; a quadrature rule (nodes
/// and weights) turns the projection into the finite case over the nodes.
inline ProjectedKernel hoeffding_project(const SymmetricKernel& h, std::span<const double> nodes,
                                         const std::optional<Distribution>& weights, std::size_t c) {
    if (!weights) throw NonIntegrable("general state space projection needs a quadrature rule");
    if (weights->size() != nodes.size()) throw DimensionMismatch("quadrature nodes and weights differ");
    return ProjectedKernel(TabulatedKernel::tabulate(h, nodes), *weights, c);
}

/// U_{n,c}(pi_{c,m} h), with U_{n,0}(f) = f.
inline double u_statistic(std::span<const std::uint32_t> states, const ProjectedKernel& g,
                          std::uint64_t budget = kDefaultEnumerationBudget) {
    if (g.order() == 0) return g.scalar();
    return u_statistic(states, g.tabulated(), budget);
}

struct DegeneracyResult {
    /// Smallest d with a non-vanishing projection; m + 1 when h == 0 pi-a.e.
    std::size_t order;
    /// pi^{(x)m} h.
    double mean;
    bool identically_zero;
};

inline DegeneracyResult degeneracy(const TabulatedKernel& h, const Distribution& pi,
                                   double eps = kDegeneracyEps) {
    const std::size_t m = h.degree();
    double mean = 0.0;
    for (std::size_t d = 0; d <= m; ++d) {
        ProjectedKernel g(h, pi, d);
        if (d == 0) mean = g.scalar();
        if (g.max_abs() > eps) return {d, mean, false};
    }
    return {m + 1, mean, true};
}

inline std::size_t degeneracy_order(const TabulatedKernel& h, const Distribution& pi,
                                    double eps = kDegeneracyEps) {
    return degeneracy(h, pi, eps).order;
}

/// The fully canonical part pi_{m,m} h as a kernel of the same degree.
inline TabulatedKernel canonical_part(const TabulatedKernel& h, const Distribution& pi) {
    return ProjectedKernel(h, pi, h.degree()).tabulated();
}

/// |U_{n,m}(h) - sum_c C(m,c) U_{n,c}(pi_{c,m} h)|.
inline double verify_hoeffding(std::span<const std::uint32_t> states, const TabulatedKernel& h,
                               const Distribution& pi, std::uint64_t budget = kDefaultEnumerationBudget) {
    const std::size_t m = h.degree();
    const double direct = u_statistic(states, h, budget);
    CompensatedSum rebuilt;
    for (std::size_t c = 0; c <= m; ++c)
        rebuilt.add(binomial(m, c) * u_statistic(states, ProjectedKernel(h, pi, c), budget));
    return std::abs(direct - rebuilt.value());
}

inline double verify_hoeffding(const Trajectory& traj, const TabulatedKernel& h, const Distribution& pi,
                               std::uint64_t budget = kDefaultEnumerationBudget) {
    return verify_hoeffding(std::span<const std::uint32_t>(traj.states), h, pi, budget);
}

}  // namespace ustat
