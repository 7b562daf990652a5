#pragma once

#include <random>

#include "fockforge/exactnum.hpp"
#include "fockforge/fockcore.hpp"
#include "fockforge/quantize.hpp"

// Seeded random inputs for property suites. Same seed, same draw.
namespace fockforge::sampling {

FieldElem random_rational(std::mt19937_64& rng, int span = 9);
FieldElem random_nonzero_rational(std::mt19937_64& rng, int span = 9);

Matrix random_matrix(std::mt19937_64& rng, int n, int span = 5);
Matrix random_antisymmetric(std::mt19937_64& rng, int n, int span = 5);
Matrix random_symmetric(std::mt19937_64& rng, int n, int span = 5);

// V(z) with V_a^T = -(-1)^a V_a.
MatSeries random_v(std::mt19937_64& rng, int n, int order);

// Unitary R from solve_R with distinct u near 4i - 3 and random antisymmetric V_0.
MatSeries random_unitary(std::mt19937_64& rng, int n, int order);

// exp(a z) truncated at the given order.
MatSeries scalar_exp(const FieldElem& a, int order);

// Tame table on the jet universe of wk_product(colors, g_max, n_legs); about a quarter of entries zero.
CorrelatorTable random_table(std::mt19937_64& rng, int colors, int g_max, int n_legs);

Propagator random_propagator(std::mt19937_64& rng, int colors, int cutoff, int span = 4);

}  // namespace fockforge::sampling
