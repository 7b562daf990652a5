#include <algorithm>
#include <numeric>

#include "fockforge/frobenius.hpp"
#include "fockforge/json_io.hpp"

namespace fockforge {

namespace {

// Row-reduces m in place; returns pivot columns.
std::vector<int> rref(Matrix& m) {
    std::vector<int> pivots;
    int row = 0;
    for (int col = 0; col < m.cols() && row < m.rows(); ++col) {
        int piv = -1;
        for (int r = row; r < m.rows(); ++r)
            if (!m(r, col).is_zero()) {
                piv = r;
                break;
            }
        if (piv < 0) continue;
        for (int c = 0; c < m.cols(); ++c) std::swap(m(row, c), m(piv, c));
        FieldElem inv = m(row, col).inverse();
        for (int c = 0; c < m.cols(); ++c) m(row, c) *= inv;
        for (int r = 0; r < m.rows(); ++r) {
            if (r == row || m(r, col).is_zero()) continue;
            FieldElem f = m(r, col);
            for (int c = 0; c < m.cols(); ++c) m(r, c) -= f * m(row, c);
        }
        pivots.push_back(col);
        ++row;
    }
    return pivots;
}

std::vector<std::vector<FieldElem>> nullspace(Matrix m) {
    std::vector<int> pivots = rref(m);
    std::vector<std::vector<FieldElem>> basis;
    for (int free = 0; free < m.cols(); ++free) {
        if (std::find(pivots.begin(), pivots.end(), free) != pivots.end()) continue;
        std::vector<FieldElem> v(m.cols());
        v[free] = FieldElem(1);
        for (std::size_t r = 0; r < pivots.size(); ++r) v[pivots[r]] = -m(static_cast<int>(r), free);
        basis.push_back(std::move(v));
    }
    return basis;
}

// Characteristic polynomial det(xI - A), ascending coefficients (Faddeev-LeVerrier).
std::vector<FieldElem> char_poly(const Matrix& a) {
    int n = a.rows();
    std::vector<FieldElem> c(n + 1);
    c[n] = FieldElem(1);
    Matrix m(n, n);
    for (int k = 1; k <= n; ++k) {
        m = a * m;
        for (int i = 0; i < n; ++i) m(i, i) += c[n - k + 1];
        Matrix am = a * m;
        FieldElem tr;
        for (int i = 0; i < n; ++i) tr += am(i, i);
        c[n - k] = -tr / FieldElem(k);
    }
    return c;
}

FieldElem eval_poly(const std::vector<FieldElem>& p, const FieldElem& x) {
    FieldElem acc;
    for (auto it = p.rbegin(); it != p.rend(); ++it) acc = acc * x + *it;
    return acc;
}

// p / (x - r), assuming r is a root.
std::vector<FieldElem> deflate(const std::vector<FieldElem>& p, const FieldElem& r) {
    int n = static_cast<int>(p.size()) - 1;
    std::vector<FieldElem> q(n);
    FieldElem carry;
    for (int k = n; k >= 1; --k) {
        carry = p[k] + carry * r;
        q[k - 1] = carry;
    }
    return q;
}

std::vector<mpz_class> divisors(mpz_class n) {
    n = abs(n);
    std::vector<mpz_class> out;
    for (mpz_class d = 1; d * d <= n; ++d) {
        require(d < 10000000, ErrorKind::Overflow, "characteristic polynomial coefficients too large");
        if (n % d == 0) {
            out.push_back(d);
            if (d * d != n) out.push_back(n / d);
        }
    }
    return out;
}

std::vector<FieldElem> roots(std::vector<FieldElem> p) {
    std::vector<FieldElem> out;
    while (p.size() > 1 && p[0].is_zero()) {
        out.emplace_back(0);
        p.erase(p.begin());
    }
    bool rational = std::all_of(p.begin(), p.end(), [](const FieldElem& c) { return c.is_rational(); });
    if (rational && p.size() > 3) {
        mpz_class lcm = 1;
        for (const auto& c : p) mpz_lcm(lcm.get_mpz_t(), lcm.get_mpz_t(), c.to_rational().get_den_mpz_t());
        std::vector<mpz_class> ip;
        for (const auto& c : p) ip.push_back(mpz_class(c.to_rational() * lcm));
        for (const auto& num : divisors(ip.front()))
            for (const auto& den : divisors(ip.back()))
                for (int sgn : {1, -1}) {
                    if (p.size() <= 3) break;
                    mpq_class cand(sgn * num, den);
                    cand.canonicalize();
                    FieldElem x(cand);
                    while (p.size() > 1 && eval_poly(p, x).is_zero()) {
                        out.push_back(x);
                        p = deflate(p, x);
                    }
                }
    }
    if (p.size() == 2) {
        out.push_back(-p[0] / p[1]);
    } else if (p.size() == 3) {
        FieldElem disc = p[1] * p[1] - FieldElem(4) * p[0] * p[2];
        auto s = FieldElem::sqrt(disc);
        require(s.has_value(), ErrorKind::Domain, "eigenvalues outside the field tower");
        FieldElem two_a = FieldElem(2) * p[2];
        out.push_back((-p[1] + *s) / two_a);
        out.push_back((-p[1] - *s) / two_a);
    } else {
        require(p.size() <= 1, ErrorKind::Domain, "eigenvalues outside the field tower");
    }
    return out;
}

FieldElem bilinear(const Matrix& g, const std::vector<FieldElem>& a, const std::vector<FieldElem>& b) {
    FieldElem acc;
    for (int i = 0; i < g.rows(); ++i)
        for (int j = 0; j < g.cols(); ++j)
            if (!g(i, j).is_zero()) acc += a[i] * g(i, j) * b[j];
    return acc;
}

Matrix zeros(int n) { return Matrix(n, n); }

}  // namespace

void FrobeniusPoint::validate() const {
    int n = dim;
    require(n >= 1 && metric.rows() == n && metric.cols() == n && static_cast<int>(mult.size()) == n &&
                euler.rows() == n && mu.rows() == n,
            ErrorKind::Invariant, "Frobenius point: inconsistent dimensions");
    require(metric == metric.transpose(), ErrorKind::Invariant, "Frobenius point: metric not symmetric");
    metric.inverse();  // throws if degenerate
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
            for (int c = 0; c < n; ++c)
                require(mult[a](c, b) == mult[b](c, a), ErrorKind::Invariant, "Frobenius point: product not commutative");
    for (int a = 0; a < n; ++a) {
        require(mult[a].transpose() * metric == metric * mult[a], ErrorKind::Invariant,
                "Frobenius point: g(a*b, c) != g(b, a*c)");
        require(euler * mult[a] == mult[a] * euler, ErrorKind::Invariant, "Frobenius point: E* does not commute with a*");
        for (int b = 0; b < n; ++b) {
            Matrix ab = zeros(n);
            for (int c = 0; c < n; ++c) ab += mult[a](c, b) * mult[c];
            require(mult[a] * mult[b] == ab, ErrorKind::Invariant, "Frobenius point: product not associative");
        }
    }
    require((mu.transpose() * metric + metric * mu).is_zero(), ErrorKind::Invariant, "Frobenius point: mu is not g-skew");
    unit();
}

std::vector<FieldElem> FrobeniusPoint::unit() const {
    // sum_a x^a mult[a] = id, as dim^2 equations in dim unknowns.
    Matrix sys(dim * dim, dim + 1);
    for (int c = 0; c < dim; ++c)
        for (int b = 0; b < dim; ++b) {
            int row = c * dim + b;
            for (int a = 0; a < dim; ++a) sys(row, a) = mult[a](c, b);
            sys(row, dim) = FieldElem(c == b ? 1 : 0);
        }
    std::vector<int> piv = rref(sys);
    require(!piv.empty() && piv.back() != dim && static_cast<int>(piv.size()) == dim, ErrorKind::Invariant,
            "Frobenius point: product has no unit");
    std::vector<FieldElem> e(dim);
    for (int r = 0; r < dim; ++r) e[piv[r]] = sys(r, dim);
    return e;
}

FieldElem FrobeniusPoint::yukawa(int a, int b, int c) const {
    FieldElem acc;
    for (int d = 0; d < dim; ++d) acc += mult[a](d, b) * metric(d, c);
    return acc;
}

FrobeniusPoint FrobeniusPoint::from_json(const nlohmann::json& j) {
    require(j.is_object(), ErrorKind::Parse, "Frobenius point must be a JSON object");
    for (const char* key : {"dim", "metric", "structure_constants", "euler_matrix", "mu_matrix"})
        require(j.contains(key), ErrorKind::Parse, std::string("Frobenius point: missing field ") + key);
    FrobeniusPoint p;
    p.dim = j["dim"].get<int>();
    p.metric = matrix_from_json(j["metric"]);
    p.euler = matrix_from_json(j["euler_matrix"]);
    p.mu = matrix_from_json(j["mu_matrix"]);
    if (j.contains("conformal_dimension")) p.conformal_dim = field_from_json(j["conformal_dimension"]);
    if (j.contains("field_extensions"))
        for (const auto& d : j["field_extensions"]) p.field_extensions.push_back(d.get<std::int64_t>());
    const auto& sc = j["structure_constants"];
    require(sc.is_array() && static_cast<int>(sc.size()) == p.dim, ErrorKind::Parse, "structure_constants must be dim x dim x dim");
    p.mult.assign(p.dim, Matrix(p.dim, p.dim));
    for (int a = 0; a < p.dim; ++a) {
        require(sc[a].is_array() && static_cast<int>(sc[a].size()) == p.dim, ErrorKind::Parse, "structure_constants must be dim x dim x dim");
        for (int b = 0; b < p.dim; ++b) {
            require(sc[a][b].is_array() && static_cast<int>(sc[a][b].size()) == p.dim, ErrorKind::Parse,
                    "structure_constants must be dim x dim x dim");
            for (int c = 0; c < p.dim; ++c) p.mult[a](c, b) = field_from_json(sc[a][b][c]);
        }
    }
    p.validate();
    return p;
}

FrobeniusPoint FrobeniusPoint::load(const std::string& path) { return from_json(read_json_file(path)); }

nlohmann::json FrobeniusPoint::to_json() const {
    nlohmann::json sc = nlohmann::json::array();
    for (int a = 0; a < dim; ++a) {
        nlohmann::json row = nlohmann::json::array();
        for (int b = 0; b < dim; ++b) {
            nlohmann::json cell = nlohmann::json::array();
            for (int c = 0; c < dim; ++c) cell.push_back(fockforge::to_json(mult[a](c, b)));
            row.push_back(cell);
        }
        sc.push_back(row);
    }
    return {{"dim", dim},
            {"metric", fockforge::to_json(metric)},
            {"structure_constants", sc},
            {"euler_matrix", fockforge::to_json(euler)},
            {"mu_matrix", fockforge::to_json(mu)},
            {"conformal_dimension", fockforge::to_json(conformal_dim)},
            {"field_extensions", field_extensions}};
}

FrobeniusPoint points_target(const std::vector<FieldElem>& u) {
    FrobeniusPoint p;
    p.dim = static_cast<int>(u.size());
    p.metric = Matrix::identity(p.dim);
    p.mult.assign(p.dim, Matrix(p.dim, p.dim));
    for (int a = 0; a < p.dim; ++a) p.mult[a](a, a) = FieldElem(1);
    p.euler = Matrix::diagonal(u);
    p.mu = Matrix(p.dim, p.dim);
    p.validate();
    return p;
}

FrobeniusPoint p1_point() {
    FrobeniusPoint p;
    p.dim = 2;
    p.metric = Matrix(2, 2);
    p.metric(0, 1) = p.metric(1, 0) = FieldElem(1);
    p.mult.assign(2, Matrix(2, 2));
    p.mult[0] = Matrix::identity(2);
    p.mult[1](1, 0) = FieldElem(1);  // p * 1 = p
    p.mult[1](0, 1) = FieldElem(1);  // p * p = q = 1
    p.euler = FieldElem(2) * p.mult[1];
    p.mu = Matrix::diagonal({FieldElem::rational(-1, 2), FieldElem::rational(1, 2)});
    p.conformal_dim = FieldElem(1);
    p.validate();
    return p;
}

FrobeniusPoint p2_point() {
    FrobeniusPoint p;
    p.dim = 3;
    p.metric = Matrix(3, 3);
    for (int a = 0; a < 3; ++a) p.metric(a, 2 - a) = FieldElem(1);
    p.mult.assign(3, Matrix(3, 3));
    // p^a * p^b = p^{(a + b) mod 3} since p^3 = q = 1.
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) p.mult[a]((a + b) % 3, b) = FieldElem(1);
    p.euler = FieldElem(3) * p.mult[1];
    p.mu = Matrix::diagonal({FieldElem(-1), FieldElem(0), FieldElem(1)});
    p.conformal_dim = FieldElem(2);
    p.field_extensions = {-3};
    p.validate();
    return p;
}

SemisimpleData canonical_data(const FrobeniusPoint& p) {
    p.validate();
    int n = p.dim;
    std::vector<FieldElem> eig = roots(char_poly(p.euler));
    require(static_cast<int>(eig.size()) == n, ErrorKind::Domain, "eigenvalues outside the field tower");
    std::sort(eig.begin(), eig.end(), [](const FieldElem& a, const FieldElem& b) { return b < a; });
    for (int i = 0; i + 1 < n; ++i)
        require(eig[i] != eig[i + 1], ErrorKind::Domain, "repeated eigenvalue of E*: point is not tame semisimple");

    SemisimpleData s;
    s.u = eig;
    s.psi = Matrix(n, n);
    s.signs.assign(n, 1);
    for (int i = 0; i < n; ++i) {
        Matrix shifted = p.euler;
        for (int k = 0; k < n; ++k) shifted(k, k) -= eig[i];
        auto ns = nullspace(shifted);
        require(ns.size() == 1, ErrorKind::Domain, "E* eigenspace is not one-dimensional");
        std::vector<FieldElem> v = ns[0];
        // v * v = lambda v; the idempotent is v / lambda.
        Matrix vmul(n, n);
        for (int a = 0; a < n; ++a) vmul += v[a] * p.mult[a];
        std::vector<FieldElem> vv = vmul.apply(v);
        int k = 0;
        while (v[k].is_zero()) ++k;
        FieldElem lambda = vv[k] / v[k];
        require(!lambda.is_zero(), ErrorKind::Domain, "nilpotent eigenvector: point is not semisimple");
        std::vector<FieldElem> eps(n);
        for (int a = 0; a < n; ++a) eps[a] = v[a] / lambda;
        FieldElem norm = bilinear(p.metric, eps, eps);
        require(!norm.is_zero(), ErrorKind::Domain, "isotropic idempotent");
        FieldElem delta = norm.inverse();
        auto root = FieldElem::sqrt(delta);
        require(root.has_value(), ErrorKind::Domain, "sqrt(Delta) outside the field tower: " + delta.str());
        s.delta.push_back(delta);
        s.sqrt_delta.push_back(*root);
        for (int a = 0; a < n; ++a) s.psi(a, i) = *root * eps[a];
    }
    s.psi_inverse = s.psi.transpose() * p.metric;
    require(s.psi_inverse * s.psi == Matrix::identity(n), ErrorKind::Invariant, "canonical frame is not orthonormal");
    return s;
}

Matrix normalized_v(const FrobeniusPoint& p, const SemisimpleData& s) {
    Matrix v = s.psi_inverse * p.mu * s.psi;
    require((v + v.transpose()).is_zero(), ErrorKind::Invariant, "V_0 is not antisymmetric");
    return v;
}

Matrix gauge_matrix(const std::vector<int>& perm, const std::vector<int>& signs) {
    int n = static_cast<int>(perm.size());
    require(static_cast<int>(signs.size()) == n, ErrorKind::Domain, "gauge: size mismatch");
    Matrix m(n, n);
    for (int k = 0; k < n; ++k) m(perm[k], k) = FieldElem(signs[k]);
    return m;
}

SemisimpleData regauge(const SemisimpleData& s, const std::vector<int>& perm, const std::vector<int>& signs) {
    int n = static_cast<int>(s.u.size());
    std::vector<int> check = perm;
    std::sort(check.begin(), check.end());
    std::vector<int> iota(n);
    std::iota(iota.begin(), iota.end(), 0);
    require(check == iota, ErrorKind::Domain, "gauge: not a permutation");
    SemisimpleData t;
    for (int k = 0; k < n; ++k) {
        require(signs[k] == 1 || signs[k] == -1, ErrorKind::Domain, "gauge: signs must be +-1");
        t.u.push_back(s.u[perm[k]]);
        t.delta.push_back(s.delta[perm[k]]);
        t.sqrt_delta.push_back(FieldElem(signs[k]) * s.sqrt_delta[perm[k]]);
        t.signs.push_back(signs[k] * s.signs[perm[k]]);
    }
    Matrix S = gauge_matrix(perm, signs);
    t.psi = s.psi * S;
    t.psi_inverse = S.transpose() * s.psi_inverse;
    return t;
}

MatSeries solve_R(const std::vector<FieldElem>& u, const MatSeries& v, int order) {
    int n = static_cast<int>(u.size());
    require(v.dim() == n, ErrorKind::Domain, "solve_R: dimension mismatch");
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            require(u[i] != u[j], ErrorKind::Domain, "solve_R: coincident canonical coordinates");
    auto V = [&](int a) { return a <= v.order() ? v[a] : Matrix(n, n); };
    MatSeries R(n, order);
    R[0] = Matrix::identity(n);
    for (int m = 0; m < order; ++m) {
        // z^{m-1}: m R_m + [U, R_{m+1}] + sum_{a+b=m} V_a R_b = 0 fixes the off-diagonal of R_{m+1}.
        Matrix x = FieldElem(m) * R[m];
        for (int a = 0; a <= m; ++a) x += V(a) * R[m - a];
        Matrix next(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                if (i != j) next(i, j) = -x(i, j) / (u[i] - u[j]);
        // The diagonal of the z^m equation fixes the diagonal of R_{m+1}.
        for (int i = 0; i < n; ++i) {
            FieldElem acc;
            for (int j = 0; j < n; ++j)
                if (j != i) acc += V(0)(i, j) * next(j, i);
            for (int a = 1; a <= m + 1; ++a) {
                const Matrix va = V(a);
                for (int j = 0; j < n; ++j) acc += va(i, j) * R[m + 1 - a](j, i);
            }
            FieldElem pivot = FieldElem(m + 1) + V(0)(i, i);
            require(!pivot.is_zero(), ErrorKind::Domain, "solve_R: resonant diagonal of V_0");
            next(i, i) = -acc / pivot;
        }
        R[m + 1] = next;
    }
    return R;
}

bool check_r_ode(const std::vector<FieldElem>& u, const MatSeries& v, const MatSeries& r) {
    int n = static_cast<int>(u.size());
    Matrix U = Matrix::diagonal(u);
    auto V = [&](int a) { return a <= v.order() ? v[a] : Matrix(n, n); };
    for (int m = 0; m < r.order(); ++m) {
        Matrix res = FieldElem(m) * r[m] + U * r[m + 1] - r[m + 1] * U;
        for (int a = 0; a <= m; ++a) res += V(a) * r[m - a];
        if (!res.is_zero()) return false;
    }
    return true;
}

bool is_unitary(const MatSeries& r) {
    return series_mul(r.reflect().transpose(), r) == MatSeries::identity(r.dim(), r.order());
}

}  // namespace fockforge
