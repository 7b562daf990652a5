#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fockforge/exactnum.hpp"

namespace fockforge {

// A point of a Frobenius manifold in a flat basis e_0..e_N.
// mult[a](c, b) is the coefficient of e_c in e_a * e_b.
struct FrobeniusPoint {
    int dim = 0;
    Matrix metric;
    std::vector<Matrix> mult;
    Matrix euler;  // E* acting on column vectors
    Matrix mu;
    FieldElem conformal_dim;
    std::vector<std::int64_t> field_extensions;  // informational radicands

    // Commutativity, associativity, Frobenius property, g-skew mu, [E*, a*] = 0.
    // Throws Error(Invariant) naming the first failure.
    void validate() const;
    // Coordinates of the unit e.
    std::vector<FieldElem> unit() const;
    // g(e_a * e_b, e_c).
    FieldElem yukawa(int a, int b, int c) const;

    static FrobeniusPoint from_json(const nlohmann::json& j);
    static FrobeniusPoint load(const std::string& path);
    nlohmann::json to_json() const;
};

// N + 1 points with the given distinct u_i: g = id, e_i idempotent, mu = 0.
FrobeniusPoint points_target(const std::vector<FieldElem>& u);
// Small quantum cohomology of P^1 at t = 0, q = 1 in the basis {1, p}.
FrobeniusPoint p1_point();
// Small quantum cohomology of P^2 at t = 0, q = 1 in the basis {1, p, p^2}.
FrobeniusPoint p2_point();

struct SemisimpleData {
    std::vector<FieldElem> u;           // E* eigenvalues, in descending field order
    std::vector<FieldElem> delta;       // 1 / g(eps_i, eps_i)
    std::vector<FieldElem> sqrt_delta;  // principal roots times sign
    std::vector<int> signs;             // +1 unless regauged
    Matrix psi;                         // column i = sqrt_delta_i * eps_i
    Matrix psi_inverse;                 // psi^T g
};

SemisimpleData canonical_data(const FrobeniusPoint& p);

// V_0 = psi^{-1} mu psi; antisymmetric for g-skew mu.
Matrix normalized_v(const FrobeniusPoint& p, const SemisimpleData& s);

// Relabels the canonical frame: new slot k is old slot perm[k], with sign[k]
// multiplying sqrt_delta.
SemisimpleData regauge(const SemisimpleData& s, const std::vector<int>& perm, const std::vector<int>& signs);
// Signed permutation matrix S with psi' = psi S.
Matrix gauge_matrix(const std::vector<int>& perm, const std::vector<int>& signs);

// Unique R with R_0 = id solving d_z R + z^{-2}[U, R] + z^{-1} V R = 0 to order K.
// V_a beyond V.order() are zero.
MatSeries solve_R(const std::vector<FieldElem>& u, const MatSeries& v, int order);

// Residual of the R-matrix ODE vanishes through z^{K-1}.
bool check_r_ode(const std::vector<FieldElem>& u, const MatSeries& v, const MatSeries& r);

// R(-z)^T R(z) = id through the truncation order.
bool is_unitary(const MatSeries& r);

}  // namespace fockforge
