#include <gtest/gtest.h>

#include <fstream>

#include "fockforge/fockcore.hpp"
#include "fockforge/frobenius.hpp"
#include "fockforge/quantize.hpp"
#include "test_support.hpp"

using namespace fockforge;
using namespace fockforge::testing;

namespace {

Key key(std::initializer_list<std::pair<int, int>> items) {
    Key k;
    for (auto [l, c] : items) k.push_back({l, c});
    return sorted_key(k);
}

std::vector<Index> all_indices(int colors, int cutoff) {
    std::vector<Index> out;
    for (int l = 0; l <= cutoff; ++l)
        for (int c = 0; c < colors; ++c) out.push_back({l, c});
    return out;
}

FieldElem binomial(int n, int k) {
    mpz_class b;
    mpz_bin_uiui(b.get_mpz_t(), n, k);
    return FieldElem(mpq_class(b));
}

FieldElem factorial(int n) {
    mpz_class f;
    mpz_fac_ui(f.get_mpz_t(), n);
    return FieldElem(mpq_class(f));
}

nlohmann::json load_oracle(const std::string& name) {
    std::ifstream in(std::string(FOCKFORGE_ORACLE_DIR) + "/" + name);
    EXPECT_TRUE(in.good()) << name;
    return nlohmann::json::parse(in);
}

}  // namespace

TEST(Propagator, IdentityRGivesZero) {
    Propagator d = givental_propagator(MatSeries::identity(3, 7), Matrix::identity(3), 3);
    EXPECT_TRUE(d.is_zero());
    EXPECT_EQ(d, propagator_crosscheck(MatSeries::identity(3, 7), Matrix::identity(3), 3));
}

TEST(Propagator, ScalarExponentialClosedForm) {
    // (e^{z+w} - 1)/(z + w) has w^n z^m coefficient C(n+m, n) / (n+m+1)!.
    const int cutoff = 4;
    Propagator d = givental_propagator(scalar_exp(FieldElem(1), 2 * cutoff + 1), Matrix::identity(1), cutoff);
    EXPECT_EQ(d({0, 0}, {0, 0}), FieldElem(1));
    EXPECT_EQ(d({0, 0}, {1, 0}), FieldElem::rational(-1, 2));
    EXPECT_EQ(d({1, 0}, {1, 0}), FieldElem::rational(1, 3));
    for (int n = 0; n <= cutoff; ++n)
        for (int m = 0; m <= cutoff; ++m) {
            FieldElem expect = binomial(n + m, n) / factorial(n + m + 1);
            if ((n + m) % 2) expect = -expect;
            EXPECT_EQ(d({n, 0}, {m, 0}), expect) << n << "," << m;
        }
    EXPECT_THROW(d({cutoff + 1, 0}, {0, 0}), Error);
}

TEST(Propagator, TwoRoutesAgreeOnRandomUnitary) {
    std::mt19937_64 rng(11);
    for (int n : {2, 3}) {
        MatSeries r = random_unitary(rng, n, 7);
        ASSERT_TRUE(is_unitary(r));
        Propagator a = givental_propagator(r, Matrix::identity(n), 3);
        Propagator b = propagator_crosscheck(r, Matrix::identity(n), 3);
        EXPECT_FALSE(a.is_zero());
        EXPECT_EQ(a, b);
        EXPECT_TRUE((a - b).is_zero());
    }
}

TEST(Propagator, NonUnitaryIsRejected) {
    MatSeries r(1, 3);
    r[0](0, 0) = FieldElem(1);
    r[1](0, 0) = FieldElem(1);
    EXPECT_THROW(givental_propagator(r, Matrix::identity(1), 1), Error);
}

TEST(Propagator, ShortSeriesIsRejected) {
    EXPECT_THROW(givental_propagator(scalar_exp(FieldElem(1), 4), Matrix::identity(1), 2), Error);
}

TEST(Feynman, ZeroPropagatorIsIdentity) {
    std::mt19937_64 rng(1);
    CorrelatorTable t = random_table(rng, 2, 2, 1);
    EXPECT_EQ(feynman_transform(t, Propagator(2, 3)), t);
    ClosedFormElement w = wk_product(2, 2, 0);
    EXPECT_TRUE(feynman_transform(w, Propagator(2, required_cutoff(w))) == w);
}

TEST(Feynman, GenusZeroThreePointUnchanged) {
    std::mt19937_64 rng(2);
    CorrelatorTable t = random_table(rng, 2, 2, 0);
    CorrelatorTable out = feynman_transform(t, random_propagator(rng, 2, 3));
    for (const Key& k : t.universe(0))
        if (k.size() == 3) EXPECT_EQ(out.get(0, k), t.get(0, k)) << key_string(0, k);
}

TEST(Feynman, LoopOnTheCubic) {
    ClosedFormElement w = wk_product(1, 2, 0);
    Propagator d(1, required_cutoff(w));
    d.set({0, 0}, {0, 0}, FieldElem(1));
    CorrelatorTable out = jets_of(feynman_transform(w, d), 1);
    EXPECT_EQ(out.get(1, key({{0, 0}})), FieldElem::rational(1, 2));
    EXPECT_EQ(out.get(1, key({{1, 0}})), FieldElem::rational(1, 24));
}

TEST(Feynman, GenusOneOnePointRule) {
    // C'_1(a) = C_1(a) + 1/2 sum Delta^{mu nu} C_0(a, mu, nu).
    for (std::uint64_t seed : {3u, 4u, 5u}) {
        std::mt19937_64 rng(seed);
        CorrelatorTable t = random_table(rng, 2, 2, 1);
        Propagator d = random_propagator(rng, 2, 3);
        CorrelatorTable out = feynman_transform(t, d);
        auto idx = all_indices(2, 3);
        for (const Key& k : t.universe(1)) {
            if (k.size() != 1) continue;
            FieldElem expect = t.get(1, k);
            for (const auto& mu : idx)
                for (const auto& nu : idx)
                    expect += FieldElem::rational(1, 2) * d(mu, nu) * t.get(0, sorted_key({k[0], mu, nu}));
            EXPECT_EQ(out.get(1, k), expect) << seed << " " << key_string(1, k);
        }
    }
}

TEST(Feynman, GenusTwoZeroPointSevenGraphs) {
    for (std::uint64_t seed : {6u, 7u}) {
        std::mt19937_64 rng(seed);
        CorrelatorTable t = random_table(rng, 2, 2, 0);
        Propagator d = random_propagator(rng, 2, 3);
        auto idx = all_indices(2, 3);
        auto C = [&](int g, Key k) { return t.get(g, sorted_key(std::move(k))); };
        FieldElem sum = t.get(2, {});
        for (const auto& a : idx)
            for (const auto& b : idx) {
                const FieldElem& dab = d(a, b);
                if (dab.is_zero()) continue;
                sum += FieldElem::rational(1, 2) * dab * C(1, {a, b});
                sum += FieldElem::rational(1, 2) * dab * C(1, {a}) * C(1, {b});
                for (const auto& c : idx)
                    for (const auto& e : idx) {
                        const FieldElem& dce = d(c, e);
                        if (dce.is_zero()) continue;
                        sum += FieldElem::rational(1, 8) * dab * dce * C(0, {a, b, c, e});
                        sum += FieldElem::rational(1, 2) * dab * dce * C(1, {a}) * C(0, {b, c, e});
                        FieldElem left = C(0, {a, c, e});
                        if (left.is_zero()) continue;
                        for (const auto& f : idx)
                            for (const auto& h : idx) {
                                const FieldElem& dfh = d(f, h);
                                if (dfh.is_zero()) continue;
                                // Dumbbell: loops (c,e) and (f,h) joined by edge (a,b).
                                sum += FieldElem::rational(1, 8) * dab * dce * dfh * left * C(0, {b, f, h});
                            }
                    }
            }
        // Theta: three edges between two genus-zero vertices.
        for (const auto& a : idx)
            for (const auto& c : idx)
                for (const auto& e : idx) {
                    FieldElem left = C(0, {a, c, e});
                    if (left.is_zero()) continue;
                    for (const auto& b : idx)
                        for (const auto& f : idx)
                            for (const auto& h : idx)
                                sum += FieldElem::rational(1, 12) * d(a, b) * d(c, f) * d(e, h) * left * C(0, {b, f, h});
                }
        EXPECT_EQ(feynman_transform(t, d).get(2, {}), sum) << seed;
    }
}

TEST(Feynman, CocycleAndInverse) {
    for (std::uint64_t seed : {8u, 9u}) {
        std::mt19937_64 rng(seed);
        CorrelatorTable t = random_table(rng, 2, 2, 0);
        Propagator d1 = random_propagator(rng, 2, 3);
        Propagator d2 = random_propagator(rng, 2, 3);
        CorrelatorTable once = feynman_transform(t, d1 + d2);
        EXPECT_EQ(feynman_transform(feynman_transform(t, d1), d2), once) << seed;
        EXPECT_EQ(feynman_transform(once, -(d1 + d2)), t) << seed;
    }
}

TEST(Feynman, ClosedFormMatchesTableRoute) {
    // Transforming the closed form then taking jets equals transforming the jets.
    std::mt19937_64 rng(10);
    ClosedFormElement w = wk_product(2, 2, 0);
    Propagator d = random_propagator(rng, 2, required_cutoff(w));
    CorrelatorTable direct = jets_of(feynman_transform(w, d), 0);
    CorrelatorTable via = feynman_transform(jets_of(w, 0), d);
    EXPECT_EQ(direct.entries, via.entries);
}

TEST(Substitute, IdentityIsNoOp) {
    ClosedFormElement w = wk_product(2, 2, 1);
    ClosedFormElement s = substitute_R(w, MatSeries::identity(2, 8));
    EXPECT_TRUE(s == w);
    EXPECT_EQ(jets_of(s, 1).entries, jets_of(w, 1).entries);
}

TEST(Substitute, ConstantDiagonalRescalesLegs) {
    ClosedFormElement w = wk_product(2, 2, 1);
    Matrix c = Matrix::diagonal({FieldElem(2), FieldElem(3)});
    ClosedFormElement s = substitute_R(w, MatSeries::constant(c, 8));
    EXPECT_EQ(s.dilaton[1][0], FieldElem(2));
    EXPECT_EQ(s.dilaton[1][1], FieldElem(3));
    CorrelatorTable before = jets_of(w, 1), after = jets_of(s, 1);
    EXPECT_EQ(before.entries.size(), after.entries.size());
    for (const auto& [gk, v] : before.entries) {
        FieldElem expect = v;
        for (const auto& ix : gk.second) expect = expect / c(ix.color, ix.color);
        EXPECT_EQ(after.get(gk.first, gk.second), expect) << key_string(gk.first, gk.second);
    }
    EXPECT_TRUE(check_homogeneity(after).empty());
}

TEST(Substitute, ComposesAsAGroupAction) {
    std::mt19937_64 rng(12);
    ClosedFormElement w = wk_product(2, 2, 0);
    auto random_phi = [&](Matrix m0) {
        MatSeries phi(2, 8);
        phi[0] = m0;
        for (int k = 1; k <= 8; ++k) phi[k] = random_matrix(rng, 2, 2);
        return phi;
    };
    Matrix a0(2, 2), b0(2, 2);
    a0(0, 0) = FieldElem(2), a0(0, 1) = FieldElem(1), a0(1, 0) = FieldElem(1), a0(1, 1) = FieldElem(1);
    b0(0, 0) = FieldElem(1), b0(0, 1) = FieldElem(-1), b0(1, 1) = FieldElem(3);
    MatSeries p1 = random_phi(a0), p2 = random_phi(b0);
    ClosedFormElement twice = substitute_R(substitute_R(w, p1), p2);
    ClosedFormElement once = substitute_R(w, series_mul(p2, p1));
    EXPECT_TRUE(twice == once);
    CorrelatorTable j = jets_of(once, 1);
    EXPECT_EQ(jets_of(twice, 1).entries, j.entries);
    EXPECT_TRUE(check_homogeneity(j).empty());
    EXPECT_TRUE(check_tameness(once).empty());
    EXPECT_TRUE(check_pole(once).empty());
}

TEST(Quantize, IdentityRIsNoOp) {
    ClosedFormElement w = wk_product(2, 2, 1);
    ClosedFormElement q = quantize_R(w, MatSeries::identity(2, 2 * required_cutoff(w) + 1));
    EXPECT_EQ(jets_of(q, 1).entries, jets_of(w, 1).entries);
}

TEST(Quantize, ScalarExponentialMatchesHeatFlowOracle) {
    nlohmann::json oracle = load_oracle("scalar_ez_genus2.json");
    ClosedFormElement w = wk_product(1, 2, 0);
    const int order = 2 * required_cutoff(w) + 1;
    MatSeries r = scalar_exp(FieldElem(1), order);

    CorrelatorTable old_frame = jets_of(feynman_transform(w, givental_propagator(r, Matrix::identity(1), required_cutoff(w))), 0);
    for (int n = 0; n < 2; ++n)
        EXPECT_EQ(old_frame.get(1, key({{n, 0}})), FieldElem::parse(oracle["genus1_one_point_old_frame"][n].get<std::string>()));

    ClosedFormElement q = quantize_R(w, r);
    CorrelatorTable j = jets_of(q, 0);
    EXPECT_EQ(j.get(2, {}), FieldElem::parse(oracle["genus2_zero_point"].get<std::string>()));
    for (int n = 0; n < 2; ++n)
        EXPECT_EQ(j.get(1, key({{n, 0}})), FieldElem::parse(oracle["genus1_one_point_new_frame"][n].get<std::string>()));
    EXPECT_TRUE(check_homogeneity(jets_of(q, 1)).empty());
    EXPECT_TRUE(check_pole(q).empty());
    EXPECT_TRUE(check_tameness(q).empty());
}

TEST(Quantize, ShortRIsRejected) {
    ClosedFormElement w = wk_product(1, 2, 0);
    EXPECT_THROW(quantize_R(w, scalar_exp(FieldElem(1), 2)), Error);
}

TEST(Ancestor, PointsTargetIsWittenKontsevichProduct) {
    FrobeniusPoint p = points_target({FieldElem(3), FieldElem(-1), FieldElem(5)});
    ClosedFormElement a = abstract_ancestor(p, 2, 0);
    EXPECT_EQ(jets_of(a, 1).entries, jets_of(wk_product(3, 2, 0), 1).entries);
}

TEST(Ancestor, ProjectiveLine) {
    ClosedFormElement a = abstract_ancestor(p1_point(), 2, 0);
    CorrelatorTable j = jets_of(a, 1);
    // Yukawa couplings in the basis {1, p}, p * p = 1.
    EXPECT_TRUE(j.get(0, key({{0, 0}, {0, 0}, {0, 0}})).is_zero());
    EXPECT_EQ(j.get(0, key({{0, 0}, {0, 0}, {0, 1}})), FieldElem(1));
    EXPECT_TRUE(j.get(0, key({{0, 0}, {0, 1}, {0, 1}})).is_zero());
    EXPECT_EQ(j.get(0, key({{0, 1}, {0, 1}, {0, 1}})), FieldElem(1));
    // <tau_1(1)>_1 = chi / 24, <tau_0(p)>_1 = -1/24.
    EXPECT_EQ(j.get(1, key({{1, 0}})), FieldElem::rational(1, 12));
    EXPECT_TRUE(j.get(1, key({{1, 1}})).is_zero());
    EXPECT_EQ(j.get(1, key({{0, 1}})), FieldElem::rational(-1, 24));
    // Degree zero: integral of psi^2 lambda_2 over the genus-two one-pointed space.
    EXPECT_EQ(j.get(2, key({{2, 1}})), FieldElem::rational(7, 5760));
    EXPECT_TRUE(check_tameness(j).empty());
    EXPECT_TRUE(check_homogeneity(j).empty());
    EXPECT_TRUE(check_pole(a).empty());
    EXPECT_TRUE(check_tameness(a).empty());
}

TEST(Ancestor, ProjectivePlaneGenusOne) {
    ClosedFormElement a = abstract_ancestor(p2_point(), 1, 1);
    CorrelatorTable j = jets_of(a, 1);
    EXPECT_EQ(j.get(1, key({{1, 0}})), FieldElem::rational(1, 8));
    EXPECT_TRUE(j.get(1, key({{1, 1}})).is_zero());
    EXPECT_TRUE(j.get(1, key({{1, 2}})).is_zero());
    // g(p^a, p^b) = delta_{a+b,2}; p * p^2 = q = 1 carries the line class.
    EXPECT_EQ(j.get(0, key({{0, 0}, {0, 0}, {0, 2}})), FieldElem(1));
    EXPECT_EQ(j.get(0, key({{0, 0}, {0, 1}, {0, 1}})), FieldElem(1));
    EXPECT_TRUE(j.get(0, key({{0, 0}, {0, 1}, {0, 2}})).is_zero());
    EXPECT_TRUE(j.get(0, key({{0, 1}, {0, 1}, {0, 1}})).is_zero());
    EXPECT_EQ(j.get(0, key({{0, 1}, {0, 2}, {0, 2}})), FieldElem(1));
    EXPECT_TRUE(check_homogeneity(j).empty());
    EXPECT_TRUE(check_pole(a).empty());
}

TEST(Ancestor, IndependentOfCanonicalGauge) {
    FrobeniusPoint p = p1_point();
    SemisimpleData s = canonical_data(p);
    CorrelatorTable base = jets_of(abstract_ancestor(p, s, 2, 0), 1);
    for (const auto& [perm, signs] : std::vector<std::pair<std::vector<int>, std::vector<int>>>{
             {{1, 0}, {1, 1}}, {{0, 1}, {-1, 1}}, {{1, 0}, {-1, -1}}}) {
        CorrelatorTable other = jets_of(abstract_ancestor(p, regauge(s, perm, signs), 2, 0), 1);
        EXPECT_EQ(other.entries, base.entries);
    }
}

TEST(Ancestor, ThreadCountDoesNotChangeOutput) {
    FrobeniusPoint p = p1_point();
    setenv("FOCKFORGE_THREADS", "1", 1);
    CorrelatorTable serial = jets_of(abstract_ancestor(p, 2, 0), 1);
    setenv("FOCKFORGE_THREADS", "4", 1);
    CorrelatorTable parallel = jets_of(abstract_ancestor(p, 2, 0), 1);
    unsetenv("FOCKFORGE_THREADS");
    EXPECT_EQ(serial.to_json().dump(), parallel.to_json().dump());
}

TEST(Feynman, RequiredCutoffIsTight) {
    auto ones = [](int cutoff) {
        Propagator d(1, cutoff);
        for (int n = 0; n <= cutoff; ++n)
            for (int m = n; m <= cutoff; ++m) d.set({n, 0}, {m, 0}, FieldElem(1));
        return d;
    };
    for (auto [g_max, n_legs] : std::vector<std::pair<int, int>>{{1, 0}, {1, 2}, {2, 0}, {2, 1}, {0, 5}}) {
        ClosedFormElement w = wk_product(1, g_max, n_legs);
        int k = required_cutoff(w);
        EXPECT_NO_THROW(feynman_transform(w, ones(k)));
        if (k == 0) continue;
        try {
            feynman_transform(w, ones(k - 1));
            ADD_FAILURE() << "cutoff " << k - 1 << " accepted for " << g_max << "," << n_legs;
        } catch (const Error& e) {
            EXPECT_EQ(e.kind(), ErrorKind::Overflow);
        }
    }
}
