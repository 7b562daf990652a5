#include <gtest/gtest.h>

#include "fockforge/frobenius.hpp"
#include "test_support.hpp"

using namespace fockforge;

namespace {

FieldElem fe(const char* s) { return FieldElem::parse(s); }

std::vector<FieldElem> column(const Matrix& m, int j) {
    std::vector<FieldElem> v(m.rows());
    for (int i = 0; i < m.rows(); ++i) v[i] = m(i, j);
    return v;
}

std::vector<FieldElem> product(const FrobeniusPoint& p, const std::vector<FieldElem>& a, const std::vector<FieldElem>& b) {
    std::vector<FieldElem> out(p.dim);
    for (int x = 0; x < p.dim; ++x)
        for (int y = 0; y < p.dim; ++y)
            for (int c = 0; c < p.dim; ++c) out[c] += a[x] * b[y] * p.mult[x](c, y);
    return out;
}

using fockforge::sampling::random_v;

}  // namespace

TEST(Frobenius, PointsTargetIsAlreadyNormalized) {
    FrobeniusPoint p = points_target({FieldElem(3), FieldElem(1), FieldElem(0)});
    SemisimpleData s = canonical_data(p);
    EXPECT_EQ(s.u, (std::vector<FieldElem>{FieldElem(3), FieldElem(1), FieldElem(0)}));
    for (const auto& d : s.delta) EXPECT_EQ(d, FieldElem(1));
    EXPECT_EQ(s.psi, Matrix::identity(3));
    EXPECT_TRUE(normalized_v(p, s).is_zero());
}

TEST(Frobenius, P1CanonicalData) {
    FrobeniusPoint p = p1_point();
    SemisimpleData s = canonical_data(p);
    ASSERT_EQ(s.u.size(), 2u);
    EXPECT_EQ(s.u[0], FieldElem(2));
    EXPECT_EQ(s.u[1], FieldElem(-2));
    EXPECT_EQ(s.delta[0], FieldElem(2));
    EXPECT_EQ(s.delta[1], FieldElem(-2));
    EXPECT_EQ(s.sqrt_delta[1], fe("1*sqrt(-2)"));
    EXPECT_EQ(s.psi.transpose() * p.metric * s.psi, Matrix::identity(2));
    EXPECT_EQ(p.unit(), (std::vector<FieldElem>{FieldElem(1), FieldElem(0)}));
}

TEST(Frobenius, P1NormalizedV) {
    FrobeniusPoint p = p1_point();
    SemisimpleData s = canonical_data(p);
    Matrix v = normalized_v(p, s);
    EXPECT_TRUE((v + v.transpose()).is_zero());
    // Direct oracle: (V_0)_{ij} = g(psi_i, mu psi_j).
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
            auto a = column(s.psi, i), b = p.mu.apply(column(s.psi, j));
            FieldElem g;
            for (int x = 0; x < 2; ++x)
                for (int y = 0; y < 2; ++y) g += a[x] * p.metric(x, y) * b[y];
            EXPECT_EQ(v(i, j), g);
        }
    EXPECT_EQ(v(0, 1) * v(0, 1), FieldElem::rational(-1, 4));
}

TEST(Frobenius, P2CanonicalData) {
    FrobeniusPoint p = p2_point();
    SemisimpleData s = canonical_data(p);
    ASSERT_EQ(s.u.size(), 3u);
    for (int i = 0; i < 3; ++i) {
        EXPECT_EQ(s.u[i].pow(3), FieldElem(27));
        // Delta_k = 3 omega^{2k} = u_k^2 / 3.
        EXPECT_EQ(s.delta[i], s.u[i] * s.u[i] / FieldElem(3));
        EXPECT_EQ(s.sqrt_delta[i] * s.sqrt_delta[i], s.delta[i]);
        for (int j = 0; j < 3; ++j) {
            if (i == j) continue;
            EXPECT_NE(s.u[i], s.u[j]);
        }
    }
    EXPECT_EQ(s.psi_inverse * s.psi, Matrix::identity(3));
    Matrix v = normalized_v(p, s);
    EXPECT_TRUE((v + v.transpose()).is_zero());
}

TEST(Frobenius, IdempotentsMultiplyCorrectly) {
    for (const FrobeniusPoint& p : {p1_point(), p2_point()}) {
        SemisimpleData s = canonical_data(p);
        for (int i = 0; i < p.dim; ++i)
            for (int j = 0; j < p.dim; ++j) {
                auto ei = column(s.psi, i), ej = column(s.psi, j);
                for (auto& x : ei) x /= s.sqrt_delta[i];
                for (auto& x : ej) x /= s.sqrt_delta[j];
                auto prod = product(p, ei, ej);
                for (int c = 0; c < p.dim; ++c) EXPECT_EQ(prod[c], i == j ? ei[c] : FieldElem(0));
            }
    }
}

TEST(Frobenius, RepeatedEigenvalueRejected) {
    EXPECT_THROW(canonical_data(points_target({FieldElem(1), FieldElem(1)})), Error);
}

TEST(Frobenius, InvariantGates) {
    FrobeniusPoint p = p1_point();
    p.mu = Matrix::diagonal({FieldElem(1), FieldElem(1)});
    EXPECT_THROW(p.validate(), Error);
    FrobeniusPoint q = p1_point();
    // Classical cohomology: p * p = 0, so E* = 2p* is nilpotent.
    q.mult[1](0, 1) = FieldElem(0);
    EXPECT_THROW(canonical_data(q), Error);
    q.euler = FieldElem(2) * q.mult[1];
    EXPECT_NO_THROW(q.validate());
    EXPECT_THROW(canonical_data(q), Error);
}

TEST(Frobenius, JsonRoundTrip) {
    FrobeniusPoint p = p2_point();
    FrobeniusPoint q = FrobeniusPoint::from_json(p.to_json());
    EXPECT_EQ(q.metric, p.metric);
    EXPECT_EQ(q.euler, p.euler);
    EXPECT_EQ(q.mu, p.mu);
    for (int a = 0; a < 3; ++a) EXPECT_EQ(q.mult[a], p.mult[a]);
    EXPECT_THROW(FrobeniusPoint::load("/nonexistent/point.json"), Error);
    nlohmann::json broken = p.to_json();
    broken.erase("metric");
    EXPECT_THROW(FrobeniusPoint::from_json(broken), Error);
}

TEST(Frobenius, YukawaOfP1) {
    FrobeniusPoint p = p1_point();
    EXPECT_EQ(p.yukawa(0, 0, 0), FieldElem(0));
    EXPECT_EQ(p.yukawa(0, 0, 1), FieldElem(1));
    EXPECT_EQ(p.yukawa(0, 1, 1), FieldElem(0));
    EXPECT_EQ(p.yukawa(1, 1, 1), FieldElem(1));
}

TEST(SolveR, ZeroVGivesIdentity) {
    MatSeries R = solve_R({FieldElem(0), FieldElem(1)}, MatSeries(2, 0), 5);
    EXPECT_EQ(R, MatSeries::identity(2, 5));
}

TEST(SolveR, TwoByTwoExample) {
    MatSeries v(2, 0);
    v[0](0, 1) = FieldElem(1);
    v[0](1, 0) = FieldElem(-1);
    std::vector<FieldElem> u{FieldElem(0), FieldElem(1)};
    MatSeries R = solve_R(u, v, 4);
    Matrix r1(2, 2);
    r1(0, 0) = FieldElem(-1);
    r1(0, 1) = r1(1, 0) = r1(1, 1) = FieldElem(1);
    EXPECT_EQ(R[1], r1);
    EXPECT_TRUE(check_r_ode(u, v, R));
    EXPECT_TRUE(is_unitary(R));
    MatSeries bad = R;
    bad[1](0, 1) += FieldElem(1);
    EXPECT_FALSE(check_r_ode(u, v, bad));
    EXPECT_TRUE(check_r_ode(u, MatSeries(2, 0), MatSeries::identity(2, 3)));
}

TEST(SolveR, CoincidentCanonicalCoordinatesRejected) {
    EXPECT_THROW(solve_R({FieldElem(0), FieldElem(0)}, MatSeries(2, 0), 2), Error);
}

TEST(SolveR, RandomUnitarityAndOde) {
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 6; ++trial) {
        int n = 2 + trial % 2;
        std::vector<FieldElem> u;
        for (int i = 0; i < n; ++i) u.push_back(FieldElem(3 * i - 2) + fockforge::testing::random_rational(rng, 1) / FieldElem(7));
        MatSeries v = random_v(rng, n, trial % 3);
        MatSeries R = solve_R(u, v, 5);
        EXPECT_TRUE(check_r_ode(u, v, R));
        EXPECT_TRUE(is_unitary(R));
    }
}

TEST(SolveR, SignedPermutationCovariance) {
    FrobeniusPoint p = p2_point();
    SemisimpleData s = canonical_data(p);
    MatSeries R = solve_R(s.u, MatSeries::constant(normalized_v(p, s), 0), 4);
    std::vector<int> perm{2, 0, 1}, signs{-1, 1, -1};
    SemisimpleData t = regauge(s, perm, signs);
    EXPECT_EQ(t.psi_inverse * t.psi, Matrix::identity(3));
    MatSeries R2 = solve_R(t.u, MatSeries::constant(normalized_v(p, t), 0), 4);
    Matrix S = gauge_matrix(perm, signs);
    for (int k = 0; k <= 4; ++k) EXPECT_EQ(R2[k], S.transpose() * R[k] * S) << k;
    EXPECT_TRUE(is_unitary(R));
}
