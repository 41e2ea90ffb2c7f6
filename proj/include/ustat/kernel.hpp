// kernel.hpp
//
// Symmetric kernels h : Y^m -> R. A SymmetricKernel evaluates on real state
// values and works for any state space; a TabulatedKernel holds h on all
// S^m index tuples of a finite chain and is what the exact machinery uses.
#pragma once

#include "error.hpp"
#include "random.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace ustat {

inline constexpr std::uint64_t kDefaultTableBudget = 10'000'000;

/// S^m with overflow saturation.
inline std::uint64_t checked_power(std::uint64_t base, std::size_t exp) {
    std::uint64_t r = 1;
    for (std::size_t i = 0; i < exp; ++i) {
        if (base != 0 && r > UINT64_MAX / base) return UINT64_MAX;
        r *= base;
    }
    return r;
}

class SymmetricKernel {
public:
    using Eval = std::function<double(std::span<const double>)>;

    SymmetricKernel(std::size_t degree, Eval eval, std::string name = "custom")
        : degree_(degree), eval_(std::move(eval)), name_(std::move(name)) {
        require(degree_ >= 1, "kernel degree must be >= 1");
        require(static_cast<bool>(eval_), "kernel needs an evaluation function");
    }

    std::size_t degree() const noexcept { return degree_; }
    const std::string& name() const noexcept { return name_; }

    double operator()(std::span<const double> ys) const {
        if (ys.size() != degree_) throw DimensionMismatch("kernel called with wrong arity");
        return eval_(ys);
    }

    /// Declared ||h||_inf.
    std::optional<double> declared_sup;
    /// Declared B_q(h) envelopes keyed by q.
    std::map<double, double> declared_bq;

private:
    std::size_t degree_;
    Eval eval_;
    std::string name_;
};

namespace kernels {

/// prod_i (x_i - center)
inline SymmetricKernel product(std::size_t m, double center = 0.0) {
    return SymmetricKernel(m, [center](std::span<const double> y) {
        double r = 1.0;
        for (double x : y) r *= x - center;
        return r;
    }, "product");
}

/// sum_i (x_i - center)
inline SymmetricKernel additive(std::size_t m, double center = 0.0) {
    return SymmetricKernel(m, [center](std::span<const double> y) {
        double r = 0.0;
        for (double x : y) r += x - center;
        return r;
    }, "additive");
}

/// 1 when all arguments coincide.
inline SymmetricKernel indicator_diag(std::size_t m) {
    return SymmetricKernel(m, [](std::span<const double> y) {
        return std::all_of(y.begin(), y.end(), [&](double x) { return x == y[0]; }) ? 1.0 : 0.0;
    }, "indicator-diag");
}

/// exp(-sum_{i<j} (x_i - x_j)^2 / (2 bandwidth^2))
inline SymmetricKernel gaussian_rbf(std::size_t m, double bandwidth) {
    require(bandwidth > 0.0, "gaussian-rbf bandwidth must be > 0");
    return SymmetricKernel(m, [bandwidth](std::span<const double> y) {
        double s = 0.0;
        for (std::size_t i = 0; i < y.size(); ++i)
            for (std::size_t j = i + 1; j < y.size(); ++j) s += (y[i] - y[j]) * (y[i] - y[j]);
        return std::exp(-s / (2.0 * bandwidth * bandwidth));
    }, "gaussian-rbf");
}

inline SymmetricKernel constant(std::size_t m, double c) {
    return SymmetricKernel(m, [c](std::span<const double>) { return c; }, "constant");
}

/// sum_t w_t h_t; all terms must share the degree.
inline SymmetricKernel weighted_sum(std::vector<std::pair<double, SymmetricKernel>> terms) {
    require(!terms.empty(), "weighted_sum needs at least one term");
    const std::size_t m = terms.front().second.degree();
    for (const auto& t : terms) require(t.second.degree() == m, "weighted_sum terms must share degree");
    return SymmetricKernel(m, [terms = std::move(terms)](std::span<const double> y) {
        double s = 0.0;
        for (const auto& [w, h] : terms) s += w * h(y);
        return s;
    }, "sum");
}

}  // namespace kernels

/// h tabulated on {0..S-1}^m, row-major with the first argument most significant.
class TabulatedKernel {
public:
    TabulatedKernel() = default;

    TabulatedKernel(std::size_t states, std::size_t degree, std::vector<double> table)
        : s_(states), m_(degree), table_(std::move(table)) {
        require(s_ >= 1, "tabulated kernel needs S >= 1");
        require(m_ >= 1, "tabulated kernel needs degree >= 1");
        if (checked_power(s_, m_) != table_.size())
            throw DimensionMismatch("kernel table must have S^m entries");
        for (double x : table_) require(std::isfinite(x), "kernel table entries must be finite");
    }

    /// Evaluates h on every tuple of state values.
    static TabulatedKernel tabulate(const SymmetricKernel& h, std::span<const double> state_values,
                                    std::uint64_t budget = kDefaultTableBudget) {
        const std::size_t s = state_values.size();
        const std::size_t m = h.degree();
        const std::uint64_t total = checked_power(s, m);
        if (total > budget)
            throw BudgetExceeded("S^m = " + std::to_string(total) + " exceeds table budget");
        std::vector<double> table(total);
        std::vector<std::uint32_t> idx(m, 0);
        std::vector<double> args(m, state_values.empty() ? 0.0 : state_values[0]);
        for (std::uint64_t flat = 0; flat < total; ++flat) {
            table[flat] = h(args);
            for (std::size_t j = m; j-- > 0;) {
                if (++idx[j] < s) {
                    args[j] = state_values[idx[j]];
                    break;
                }
                idx[j] = 0;
                args[j] = state_values[0];
            }
        }
        return TabulatedKernel(s, m, std::move(table));
    }

    std::size_t states() const noexcept { return s_; }
    std::size_t degree() const noexcept { return m_; }
    std::span<const double> table() const noexcept { return table_; }

    double operator()(std::span<const std::uint32_t> idx) const { return table_[flat_index(idx)]; }
    double at(std::size_t flat) const { return table_[flat]; }

    std::size_t flat_index(std::span<const std::uint32_t> idx) const {
        if (idx.size() != m_) throw DimensionMismatch("kernel called with wrong arity");
        std::size_t f = 0;
        for (auto i : idx) f = f * s_ + i;
        return f;
    }

    /// Exact ||h||_inf on the finite space.
    double sup() const {
        double r = 0.0;
        for (double x : table_) r = std::max(r, std::abs(x));
        return r;
    }

    /// Largest |h(y) - h(y_perm)| over all tuples and adjacent transpositions
    /// (adjacent transpositions generate the symmetric group).
    double symmetry_defect() const {
        double worst = 0.0;
        std::vector<std::uint32_t> idx(m_, 0);
        for (std::size_t flat = 0; flat < table_.size(); ++flat) {
            unflatten(flat, idx);
            for (std::size_t j = 0; j + 1 < m_; ++j) {
                std::swap(idx[j], idx[j + 1]);
                worst = std::max(worst, std::abs(table_[flat] - table_[flat_index(idx)]));
                std::swap(idx[j], idx[j + 1]);
            }
        }
        return worst;
    }

    bool is_symmetric(double tol = 1e-12) const { return symmetry_defect() <= tol; }

    void unflatten(std::size_t flat, std::span<std::uint32_t> idx) const {
        for (std::size_t j = m_; j-- > 0;) {
            idx[j] = static_cast<std::uint32_t>(flat % s_);
            flat /= s_;
        }
    }

    /// h - c
    TabulatedKernel shifted(double c) const {
        auto t = table_;
        for (double& x : t) x -= c;
        return TabulatedKernel(s_, m_, std::move(t));
    }

    /// a h1 + b h2
    friend TabulatedKernel combine(double a, const TabulatedKernel& h1, double b, const TabulatedKernel& h2) {
        if (h1.s_ != h2.s_ || h1.m_ != h2.m_) throw DimensionMismatch("combine: kernel shapes differ");
        std::vector<double> t(h1.table_.size());
        for (std::size_t i = 0; i < t.size(); ++i) t[i] = a * h1.table_[i] + b * h2.table_[i];
        return TabulatedKernel(h1.s_, h1.m_, std::move(t));
    }

private:
    std::size_t s_ = 0;
    std::size_t m_ = 0;
    std::vector<double> table_;
};

/// Random tuples and permutations; returns the largest symmetry violation seen.
inline double spot_check_symmetry(const SymmetricKernel& h, std::span<const double> sample_points,
                                  std::size_t trials, std::uint64_t seed) {
    require(!sample_points.empty(), "symmetry spot check needs sample points");
    Rng rng(seed);
    const std::size_t m = h.degree();
    std::vector<double> args(m);
    double worst = 0.0;
    for (std::size_t t = 0; t < trials; ++t) {
        for (auto& a : args) a = sample_points[rng() % sample_points.size()];
        const double base = h(args);
        std::shuffle(args.begin(), args.end(), rng);
        worst = std::max(worst, std::abs(base - h(args)));
    }
    return worst;
}

}  // namespace ustat
