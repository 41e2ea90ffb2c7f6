// Shared generators for the tests.
#pragma once

#include "ustat/markov.hpp"
#include "ustat/kernel.hpp"
#include "ustat/proof_checks.hpp"
#include "ustat/random.hpp"

#include <algorithm>
#include <cstdint>
#include <vector>

namespace ustat::testing {

/// Chain with Dirichlet(1) rows, hence strictly positive and primitive.
inline FiniteKernel random_chain(std::size_t states, Rng& rng) {
    Eigen::MatrixXd p(states, states);
    for (std::size_t i = 0; i < states; ++i) {
        const Distribution row = random_distribution(states, rng);
        for (std::size_t j = 0; j < states; ++j) p(i, j) = row[j];
    }
    std::vector<double> values(states);
    for (std::size_t i = 0; i < states; ++i) values[i] = static_cast<double>(i);
    return FiniteKernel(std::move(values), std::move(p));
}

/// Symmetric table with independent uniform(-1, 1) values on sorted tuples.
inline TabulatedKernel random_symmetric(std::size_t states, std::size_t degree, Rng& rng) {
    TabulatedKernel shape(states, degree, std::vector<double>(checked_power(states, degree), 0.0));
    std::vector<double> table(shape.table().size());
    std::vector<std::uint32_t> idx(degree);
    for (std::size_t flat = 0; flat < table.size(); ++flat) {
        shape.unflatten(flat, idx);
        std::sort(idx.begin(), idx.end());
        const std::size_t sorted = shape.flat_index(idx);
        // The sorted arrangement has the smallest flat index, so it is filled first.
        table[flat] = sorted == flat ? 2.0 * uniform01(rng) - 1.0 : table[sorted];
    }
    return TabulatedKernel(states, degree, std::move(table));
}

inline std::vector<double> random_v(std::size_t states, Rng& rng) {
    std::vector<double> v(states);
    for (auto& x : v) x = 1.0 + 3.0 * uniform01(rng);
    return v;
}

}  // namespace ustat::testing
