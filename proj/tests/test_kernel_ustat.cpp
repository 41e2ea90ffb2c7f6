#include "support.hpp"
#include "ustat/kernel.hpp"
#include "ustat/ustatistic.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

using namespace ustat;
using ustat::testing::random_chain;
using ustat::testing::random_symmetric;

namespace {

// Independent projection oracle: centre one axis at a time. Applying
// (I - E_pi) on axes 1..c and E_pi on axes c+1..m to h gives pi_{c,m} h
// padded with m - c constant axes; the first c axes are read off at 0 on the rest.
std::vector<double> projection_oracle(const TabulatedKernel& h, const Distribution& pi, std::size_t c) {
    const std::size_t s = h.states();
    const std::size_t m = h.degree();
    std::vector<double> t(h.table().begin(), h.table().end());
    std::vector<std::uint32_t> idx(m);
    for (std::size_t axis = 0; axis < m; ++axis) {
        std::vector<double> next(t.size());
        for (std::size_t flat = 0; flat < t.size(); ++flat) {
            h.unflatten(flat, idx);
            double mean = 0.0;
            for (std::uint32_t y = 0; y < s; ++y) {
                auto j = idx;
                j[axis] = y;
                mean += pi[y] * t[h.flat_index(j)];
            }
            next[flat] = axis < c ? t[flat] - mean : mean;
        }
        t = std::move(next);
    }
    std::vector<double> out(checked_power(s, c));
    std::vector<std::uint32_t> full(m, 0);
    for (std::size_t flat = 0; flat < out.size(); ++flat) {
        std::size_t rem = flat;
        for (std::size_t j = c; j-- > 0;) {
            full[j] = static_cast<std::uint32_t>(rem % s);
            rem /= s;
        }
        out[flat] = t[h.flat_index(full)];
    }
    return out;
}

double brute_u(std::span<const std::uint32_t> states, const TabulatedKernel& h) {
    const std::size_t n = states.size();
    const std::size_t m = h.degree();
    std::vector<std::size_t> idx(m);
    std::iota(idx.begin(), idx.end(), 0);
    double sum = 0.0;
    double count = 0.0;
    std::vector<std::uint32_t> y(m);
    while (true) {
        for (std::size_t j = 0; j < m; ++j) y[j] = states[idx[j]];
        sum += h(y);
        count += 1.0;
        std::size_t j = m;
        while (j-- > 0 && idx[j] == n - m + j) {
        }
        if (j == static_cast<std::size_t>(-1)) break;
        ++idx[j];
        for (std::size_t k = j + 1; k < m; ++k) idx[k] = idx[k - 1] + 1;
    }
    return sum / count;
}

TEST(SymmetricKernel, BuiltinsAreSymmetric) {
    const double pts[] = {-1.5, 0.0, 0.3, 2.0, 7.0};
    for (std::size_t m = 1; m <= 4; ++m) {
        EXPECT_LE(spot_check_symmetry(kernels::product(m, 0.2), pts, 200, m), 1e-12);
        EXPECT_LE(spot_check_symmetry(kernels::additive(m), pts, 200, m), 1e-12);
        EXPECT_LE(spot_check_symmetry(kernels::indicator_diag(m), pts, 200, m), 1e-12);
        EXPECT_LE(spot_check_symmetry(kernels::gaussian_rbf(m, 0.7), pts, 200, m), 1e-12);
    }
    const auto asym = SymmetricKernel(2, [](std::span<const double> y) { return y[0] - 2 * y[1]; });
    EXPECT_GT(spot_check_symmetry(asym, pts, 200, 1), 0.1);
}

TEST(SymmetricKernel, ArityChecked) {
    const auto h = kernels::product(2);
    const double one[] = {1.0};
    EXPECT_THROW(h(one), DimensionMismatch);
}

TEST(TabulatedKernel, LayoutAndSymmetry) {
    const double vals[] = {0.0, 1.0, 2.0};
    const auto t = TabulatedKernel::tabulate(SymmetricKernel(2, [](std::span<const double> y) { return 10 * y[0] + y[1]; }), vals);
    const std::uint32_t a[] = {1, 2};
    EXPECT_EQ(t(a), 12.0);
    EXPECT_FALSE(t.is_symmetric());
    EXPECT_TRUE(TabulatedKernel::tabulate(kernels::product(3), vals).is_symmetric());
    EXPECT_THROW(TabulatedKernel(3, 2, std::vector<double>(8)), DimensionMismatch);
    EXPECT_THROW(TabulatedKernel::tabulate(kernels::product(8), vals, 1000), BudgetExceeded);
}

TEST(UStatistic, Examples) {
    const double path[] = {1, 2, 3};
    EXPECT_NEAR(u_statistic(std::span<const double>(path), 2, [](std::span<const double> y) { return y[0] * y[1]; }),
                11.0 / 3.0, 1e-15);
    const std::uint32_t states[] = {0, 1, 2, 2, 1, 0, 1};
    const double vals[] = {0.5, 1.5, -2.0};
    for (std::size_t m = 1; m <= 4; ++m) {
        const auto one = TabulatedKernel::tabulate(kernels::constant(m, 1.0), vals);
        EXPECT_DOUBLE_EQ(u_statistic(states, one), 1.0);
    }
    const auto f = TabulatedKernel::tabulate(kernels::additive(1), vals);
    double mean = 0;
    for (auto s : states) mean += vals[s];
    EXPECT_NEAR(u_statistic(states, f), mean / 7.0, 1e-15);
}

TEST(UStatistic, MatchesBruteForceForAllDegrees) {
    Rng rng(21);
    for (std::size_t m = 1; m <= 4; ++m)
        for (int t = 0; t < 5; ++t) {
            const auto chain = random_chain(4, rng);
            const auto path = simulate(chain, Distribution::uniform(4), 12 + t, rng());
            const auto h = random_symmetric(4, m, rng);
            EXPECT_NEAR(u_statistic(path, h), brute_u(path.states, h), 1e-13);
        }
}

TEST(UStatistic, Errors) {
    const std::uint32_t states[] = {0, 1};
    const auto h = TabulatedKernel(2, 3, std::vector<double>(8, 1.0));
    EXPECT_THROW(u_statistic(states, h), DegreeTooLarge);
    std::vector<std::uint32_t> many(1000, 0);
    EXPECT_THROW(u_statistic(many, h, 1000), BudgetExceeded);
}

TEST(UStatistic, LinearityAndPermutationInvariance) {
    Rng rng(22);
    const auto chain = random_chain(5, rng);
    const auto path = simulate(chain, Distribution::uniform(5), 25, 4);
    const auto h1 = random_symmetric(5, 3, rng);
    const auto h2 = random_symmetric(5, 3, rng);
    const double lhs = u_statistic(path, combine(2.5, h1, -0.75, h2));
    const double rhs = 2.5 * u_statistic(path, h1) - 0.75 * u_statistic(path, h2);
    EXPECT_NEAR(lhs, rhs, 1e-12);
    // The statistic depends on the sample only through the multiset of m-subsets.
    auto reversed = path.states;
    std::reverse(reversed.begin(), reversed.end());
    EXPECT_NEAR(u_statistic(path.states, h1), u_statistic(reversed, h1), 1e-13);
}

TEST(UStatistic, SymmetricKernelOnValuesMatchesTable) {
    const auto chain = FiniteKernel::two_state(0.3, 0.2, {-1.0, 1.0});
    const auto path = simulate(chain, Distribution::dirac(2, 0), 40, 8);
    const auto h = kernels::gaussian_rbf(3, 0.8);
    EXPECT_NEAR(u_statistic(path, chain, h), u_statistic(path, TabulatedKernel::tabulate(h, chain.values())), 1e-13);
}

TEST(IncrementalUStatistic, MatchesBatchAtEveryLength) {
    Rng rng(23);
    for (std::size_t m = 1; m <= 3; ++m) {
        const auto chain = random_chain(3, rng);
        const auto path = simulate(chain, Distribution::uniform(3), 30, rng());
        const auto h = random_symmetric(3, m, rng);
        IncrementalUStatistic inc(h);
        for (std::size_t n = 1; n <= path.size(); ++n) {
            inc.push(path.states[n - 1]);
            if (n < m) {
                EXPECT_THROW(inc.value(), DegreeTooLarge);
                continue;
            }
            const std::span<const std::uint32_t> prefix(path.states.data(), n);
            EXPECT_NEAR(inc.value(), u_statistic(prefix, h), 1e-12);
        }
    }
}

TEST(Hoeffding, MatchesAxisCentringOracle) {
    Rng rng(24);
    for (std::size_t m = 1; m <= 4; ++m) {
        const auto chain = random_chain(3, rng);
        const auto pi = stationary(chain);
        const auto h = random_symmetric(3, m, rng);
        for (std::size_t c = 0; c <= m; ++c) {
            const auto oracle = projection_oracle(h, pi, c);
            const ProjectedKernel g(h, pi, c);
            if (c == 0) {
                EXPECT_NEAR(g.scalar(), oracle[0], 1e-13);
                continue;
            }
            const auto t = g.tabulated();
            for (std::size_t i = 0; i < oracle.size(); ++i) EXPECT_NEAR(t.at(i), oracle[i], 1e-13);
            EXPECT_TRUE(t.is_symmetric(1e-13));
            EXPECT_LE(g.canonical_residual(), 1e-13);
        }
    }
}

TEST(Hoeffding, Examples) {
    const auto chain = FiniteKernel::two_state(0.3, 0.2);
    const auto pi = stationary(chain);
    // Additive kernels have no degree-2 canonical part.
    const auto add = TabulatedKernel::tabulate(kernels::additive(2), chain.values());
    EXPECT_LE(ProjectedKernel(add, pi, 2).max_abs(), 1e-15);
    // Product of centred functions is its own canonical part.
    const auto prod = TabulatedKernel::tabulate(kernels::product(2, 0.6), chain.values());
    const auto g = ProjectedKernel(prod, pi, 2).tabulated();
    for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(g.at(i), prod.at(i), 1e-15);
    // c = 0 is the pi-mean.
    const auto five = TabulatedKernel::tabulate(kernels::constant(2, 5.0), chain.values());
    EXPECT_DOUBLE_EQ(ProjectedKernel(five, pi, 0).scalar(), 5.0);
}

TEST(Hoeffding, GeneralSpaceNeedsQuadrature) {
    const double nodes[] = {0.0, 1.0};
    EXPECT_THROW(hoeffding_project(kernels::product(2), nodes, std::nullopt, 1), NonIntegrable);
    const auto g = hoeffding_project(kernels::product(2), nodes, Distribution({0.5, 0.5}), 0);
    EXPECT_DOUBLE_EQ(g.scalar(), 0.25);
}

TEST(Degeneracy, Examples) {
    const auto chain = FiniteKernel::two_state(0.3, 0.2);
    const auto pi = stationary(chain);
    const auto five = TabulatedKernel::tabulate(kernels::constant(2, 5.0), chain.values());
    const auto d5 = degeneracy(five, pi);
    EXPECT_EQ(d5.order, 0u);
    EXPECT_DOUBLE_EQ(d5.mean, 5.0);
    EXPECT_EQ(degeneracy_order(TabulatedKernel::tabulate(kernels::additive(2, 0.6), chain.values()), pi), 1u);
    EXPECT_EQ(degeneracy_order(TabulatedKernel::tabulate(kernels::product(2, 0.6), chain.values()), pi), 2u);
    const auto zero = TabulatedKernel::tabulate(kernels::constant(3, 0.0), chain.values());
    const auto dz = degeneracy(zero, pi);
    EXPECT_EQ(dz.order, 4u);
    EXPECT_TRUE(dz.identically_zero);
    Rng rng(25);
    const auto h = random_symmetric(2, 3, rng);
    EXPECT_EQ(degeneracy_order(canonical_part(h, pi), pi), 3u);
}

TEST(Hoeffding, DecompositionIdentity) {
    Rng rng(26);
    for (std::size_t m = 1; m <= 4; ++m)
        for (int t = 0; t < 4; ++t) {
            const std::size_t s = 2 + (t + m) % 5;
            const auto chain = random_chain(s, rng);
            const auto pi = stationary(chain);
            const auto path = simulate(chain, Distribution::uniform(s), 10 + 5 * t, rng());
            const auto h = random_symmetric(s, m, rng);
            const double u = u_statistic(path, h);
            EXPECT_LE(verify_hoeffding(path, h, pi), 1e-10 * (1 + std::abs(u)));
            if (m == 1) {
                EXPECT_LE(verify_hoeffding(path, h, pi), 1e-12);
            }
        }
    const auto chain = FiniteKernel::two_state(0.3, 0.2);
    const auto path = simulate(chain, Distribution::dirac(2, 0), 20, 1);
    const auto c = TabulatedKernel::tabulate(kernels::constant(2, 3.0), chain.values());
    EXPECT_EQ(verify_hoeffding(path, c, stationary(chain)), 0.0);
}

}  // namespace
