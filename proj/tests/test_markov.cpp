#include "support.hpp"
#include "ustat/markov.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace ustat;
using ustat::testing::random_chain;
using ustat::testing::random_v;

namespace {

FiniteKernel two_state() { return FiniteKernel::two_state(0.3, 0.2); }

TEST(Distribution, RejectsBadWeights) {
    EXPECT_THROW(Distribution({0.5, 0.4}), InvalidArgument);
    EXPECT_THROW(Distribution({1.5, -0.5}), InvalidArgument);
    EXPECT_NO_THROW(Distribution({0.25, 0.75}));
}

TEST(FiniteKernel, RejectsNonStochastic) {
    Eigen::MatrixXd p(2, 2);
    p << 0.5, 0.4, 0.2, 0.8;
    EXPECT_THROW(FiniteKernel({0, 1}, p), InvalidArgument);
    p << 1.2, -0.2, 0.2, 0.8;
    EXPECT_THROW(FiniteKernel({0, 1}, p), InvalidArgument);
}

TEST(Stationary, TwoStateClosedForm) {
    const auto pi = stationary(two_state());
    EXPECT_NEAR(pi[0], 0.4, 1e-14);
    EXPECT_NEAR(pi[1], 0.6, 1e-14);
}

TEST(Stationary, SymmetricDoublyStochasticIsUniform) {
    Eigen::MatrixXd p(3, 3);
    p << 0.5, 0.25, 0.25, 0.25, 0.5, 0.25, 0.25, 0.25, 0.5;
    const auto pi = stationary(FiniteKernel({0, 1, 2}, p));
    for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(pi[i], 1.0 / 3.0, 1e-14);
}

TEST(Stationary, SingleState) {
    Eigen::MatrixXd p(1, 1);
    p << 1.0;
    EXPECT_DOUBLE_EQ(stationary(FiniteKernel({0}, p))[0], 1.0);
}

TEST(Stationary, PeriodicChainIsNotErgodic) {
    Eigen::MatrixXd p(2, 2);
    p << 0, 1, 1, 0;
    EXPECT_THROW(stationary(FiniteKernel({0, 1}, p)), NotErgodic);
}

TEST(Stationary, FixedPointResidual) {
    Rng rng(11);
    for (int t = 0; t < 20; ++t) {
        const auto k = random_chain(2 + t % 6, rng);
        const auto pi = stationary(k);
        const Eigen::RowVectorXd r = as_row(pi) * k.matrix() - as_row(pi);
        EXPECT_LE(r.lpNorm<1>(), 1e-12);
    }
}

TEST(Evolve, Examples) {
    const auto k = two_state();
    const auto d0 = Distribution::dirac(2, 0);
    const auto one = evolve(d0, k, 1);
    EXPECT_NEAR(one[0], 0.7, 1e-15);
    EXPECT_NEAR(one[1], 0.3, 1e-15);
    const auto zero = evolve(d0, k, 0);
    EXPECT_EQ(zero[0], 1.0);
    const auto pi = stationary(k);
    const auto far = evolve(pi, k, 37);
    EXPECT_NEAR(far[0], pi[0], 1e-12);
}

TEST(Evolve, Semigroup) {
    Rng rng(12);
    const auto k = random_chain(4, rng);
    const auto mu = random_distribution(4, rng);
    const auto direct = evolve(mu, k, 9);
    const auto split = evolve(evolve(mu, k, 4), k, 5);
    for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(direct[i], split[i], 1e-12);
}

TEST(TvDistance, Examples) {
    const Distribution a({0.5, 0.5});
    EXPECT_EQ(tv_distance(a, a), 0.0);
    EXPECT_DOUBLE_EQ(tv_distance(Distribution::dirac(2, 0), Distribution::dirac(2, 1)), 2.0);
    EXPECT_NEAR(tv_distance(a, Distribution({0.9, 0.1})), 0.8, 1e-15);
}

TEST(CertifyRho, TwoStateMatchesEigenvalue) {
    const auto p = certify_rho(two_state(), {1.0, 1.0}, 60);
    for (std::size_t k = 0; k <= 60; ++k) EXPECT_NEAR(p.rho(k), std::pow(0.5, static_cast<double>(k)), 1e-14);
    // Tail past the table keeps decaying.
    EXPECT_LE(p.rho(100), std::pow(0.5, 60));
    EXPECT_GT(p.rho(100), 0.0);
    EXPECT_EQ(p.provenance(), Provenance::certified);
}

TEST(CertifyRho, MatchesBruteForceDiracPairs) {
    Rng rng(13);
    const auto k = random_chain(4, rng);
    const auto v = random_v(4, rng);
    const auto p = certify_rho(k, v, 30);
    for (std::size_t step = 0; step <= 30; ++step)
        for (std::uint32_t x = 0; x < 4; ++x)
            for (std::uint32_t y = 0; y < 4; ++y) {
                const double tv = tv_distance(evolve(Distribution::dirac(4, x), k, step),
                                              evolve(Distribution::dirac(4, y), k, step));
                EXPECT_LE(tv, p.rho(step) * (v[x] + v[y]) * (1 + 1e-12) + 1e-15);
            }
}

TEST(CertifyRho, NonIncreasingAndRhoZeroAtMostOne) {
    Rng rng(14);
    for (int t = 0; t < 10; ++t) {
        const auto k = random_chain(5, rng);
        const auto p = certify_rho(k, std::vector<double>(5, 1.0), 50);
        EXPECT_LE(p.rho(0), 1.0);
        for (std::size_t j = 1; j < 80; ++j) EXPECT_LE(p.rho(j), p.rho(j - 1));
    }
}

TEST(CertifyRho, HoldsForRandomInitialPairs) {
    Rng rng(15);
    const auto k = random_chain(4, rng);
    const auto v = random_v(4, rng);
    const auto p = certify_rho(k, v, 20);
    for (int t = 0; t < 200; ++t) {
        const auto mu = random_distribution(4, rng);
        const auto nu = random_distribution(4, rng);
        const std::size_t step = t % 21;
        const double lhs = tv_distance(evolve(mu, k, step), evolve(nu, k, step));
        EXPECT_LE(lhs, p.rho(step) * (mu.expect(v) + nu.expect(v)) * (1 + 1e-12));
    }
}

TEST(CertifyRho, IdenticalRowsMixInOneStep) {
    Eigen::MatrixXd m(2, 2);
    m << 0.4, 0.6, 0.4, 0.6;
    const auto p = certify_rho(FiniteKernel({0, 1}, m), {1, 1}, 5);
    EXPECT_DOUBLE_EQ(p.rho(0), 1.0);
    for (std::size_t j = 1; j < 20; ++j) EXPECT_EQ(p.rho(j), 0.0);
}

TEST(CertifyRho, NoDecayThrows) {
    Eigen::MatrixXd m(2, 2);
    m << 1, 0, 0, 1;
    EXPECT_THROW(certify_rho(FiniteKernel({0, 1}, m), {1, 1}, 10), NotErgodic);
}

TEST(DeclaredProfile, ZeroRhoConflictsWithTwoStateChain) {
    const auto conflict = declared_profile_conflict(two_state(), ErgodicityProfile::zero({1, 1}));
    ASSERT_TRUE(conflict.has_value());
    EXPECT_EQ(conflict->k, 0u);
    EXPECT_FALSE(declared_profile_conflict(two_state(), ErgodicityProfile::geometric({1, 1}, 1.0, 0.5)));
}

TEST(Profile, ValidatesInputs) {
    EXPECT_THROW(ErgodicityProfile::geometric({0.5}, 1.0, 0.5), InvalidArgument);
    EXPECT_THROW(ErgodicityProfile::geometric({1.0}, 1.0, 1.0), InvalidArgument);
    EXPECT_THROW(ErgodicityProfile({1.0}, ExplicitRho{{0.5, 0.6}, 0.5, 1}, Provenance::declared), InvalidArgument);
    const auto g = ErgodicityProfile::geometric({1.0}, 2.0, 0.5);
    EXPECT_DOUBLE_EQ(g.rho(3), 0.25);
}

TEST(Simulate, DeterministicAndPermutation) {
    const auto k = two_state();
    const auto a = simulate(k, Distribution::dirac(2, 0), 500, 99);
    const auto b = simulate(k, Distribution::dirac(2, 0), 500, 99);
    EXPECT_EQ(a.states, b.states);

    Eigen::MatrixXd m(3, 3);
    m << 0, 1, 0, 0, 0, 1, 1, 0, 0;
    const auto c = simulate(FiniteKernel({0, 1, 2}, m), Distribution::dirac(3, 0), 6, 5);
    EXPECT_EQ(c.states, (std::vector<std::uint32_t>{1, 2, 0, 1, 2, 0}));
}

TEST(Simulate, OccupationMatchesStationary) {
    const auto t = simulate(two_state(), Distribution::dirac(2, 0), 100000, 2024);
    double zeros = 0;
    for (auto s : t.states) zeros += s == 0;
    EXPECT_NEAR(zeros / 1e5, 0.4, 0.01);
}

TEST(Simulate, FirstStepLawIsMuP) {
    // Y_1 ~ mu P: from delta_0 the first draw is 0 with probability 0.7.
    const auto k = two_state();
    Rng rng(3);
    const ChainSampler sampler(k);
    const CategoricalSampler init(Distribution::dirac(2, 0).weights());
    std::uint32_t y[1];
    double zeros = 0;
    for (int r = 0; r < 40000; ++r) {
        sampler.run(init, rng, y);
        zeros += y[0] == 0;
    }
    EXPECT_NEAR(zeros / 40000, 0.7, 0.01);
}

TEST(Simulate, GeneralStateSpaceSampler) {
    auto init = [](Rng&) { return 0.0; };
    auto step = [](Rng& rng, double y) { return 0.5 * y + (uniform01(rng) - 0.5); };
    const auto a = simulate_general(init, step, 100, 7);
    const auto b = simulate_general(init, step, 100, 7);
    EXPECT_EQ(a, b);
}

TEST(Random, SeedMixIsStable) {
    // Pinned values of the documented mixing function.
    EXPECT_EQ(splitmix64(0), 0u);
    EXPECT_EQ(mix(0, 0), 0xe220a8397b1dcdafULL);
    EXPECT_NE(mix(1, 0), mix(1, 1));
    EXPECT_NE(mix(1, 0), mix(2, 0));
}

}  // namespace
