#include "fockforge/sampling.hpp"

#include "fockforge/frobenius.hpp"

namespace fockforge::sampling {

FieldElem random_rational(std::mt19937_64& rng, int span) {
    std::uniform_int_distribution<long> num(-span, span), den(1, span);
    return FieldElem::rational(num(rng), den(rng));
}

FieldElem random_nonzero_rational(std::mt19937_64& rng, int span) {
    FieldElem x;
    while (x.is_zero()) x = random_rational(rng, span);
    return x;
}

Matrix random_matrix(std::mt19937_64& rng, int n, int span) {
    Matrix m(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) m(i, j) = random_rational(rng, span);
    return m;
}

Matrix random_antisymmetric(std::mt19937_64& rng, int n, int span) {
    Matrix m(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            m(i, j) = random_rational(rng, span);
            m(j, i) = -m(i, j);
        }
    return m;
}

Matrix random_symmetric(std::mt19937_64& rng, int n, int span) {
    Matrix m(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
            m(i, j) = random_rational(rng, span);
            m(j, i) = m(i, j);
        }
    return m;
}

MatSeries random_v(std::mt19937_64& rng, int n, int order) {
    MatSeries v(n, order);
    for (int a = 0; a <= order; ++a) v[a] = a % 2 == 0 ? random_antisymmetric(rng, n) : random_symmetric(rng, n);
    return v;
}

MatSeries random_unitary(std::mt19937_64& rng, int n, int order) {
    std::vector<FieldElem> u;
    for (int i = 0; i < n; ++i) u.push_back(FieldElem(4 * i - 3) + random_rational(rng, 1) / FieldElem(5));
    return solve_R(u, MatSeries::constant(random_antisymmetric(rng, n), 0), order);
}

MatSeries scalar_exp(const FieldElem& a, int order) {
    MatSeries r(1, order);
    FieldElem term(1);
    for (int k = 0; k <= order; ++k) {
        r[k](0, 0) = term;
        term = term * a / FieldElem(k + 1);
    }
    return r;
}

CorrelatorTable random_table(std::mt19937_64& rng, int colors, int g_max, int n_legs) {
    CorrelatorTable t;
    t.colors = colors;
    for (int g = 0; g <= g_max; ++g) t.cap.push_back(n_legs + 2 * (g_max - g));
    t.level0_cap = t.cap;
    t.dilaton.assign(2, std::vector<FieldElem>(static_cast<std::size_t>(colors)));
    for (auto& x : t.dilaton[1]) x = FieldElem(1);
    std::uniform_int_distribution<int> skip(0, 3);
    for (int g = 0; g <= g_max; ++g)
        for (const Key& k : t.universe(g))
            if (skip(rng) != 0) t.set(g, k, random_rational(rng, 5));
    return t;
}

Propagator random_propagator(std::mt19937_64& rng, int colors, int cutoff, int span) {
    Propagator d(colors, cutoff);
    std::uniform_int_distribution<int> skip(0, 2);
    for (int n = 0; n <= cutoff; ++n)
        for (int i = 0; i < colors; ++i)
            for (int m = 0; m <= cutoff; ++m)
                for (int j = 0; j < colors; ++j) {
                    Index a{n, i}, b{m, j};
                    if (b < a || skip(rng) == 0) continue;
                    d.set(a, b, random_rational(rng, span));
                }
    return d;
}

}  // namespace fockforge::sampling
