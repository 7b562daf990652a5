#pragma once

#include <gmpxx.h>

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fockforge/errors.hpp"

namespace fockforge {

// Element of the multiquadratic closure of Q: a finite sum of c * sqrt(d) with
// d square-free. d = 1 is the rational unit, d < 0 means i * sqrt(|d|).
// Terms are kept sorted by radical (real before imaginary, then by |d|) and
// carry nonzero coefficients, so the representation is canonical.
class FieldElem {
public:
    struct Term {
        std::int64_t rad;
        mpq_class coef;
    };

    FieldElem() = default;
    FieldElem(long v);
    FieldElem(const mpq_class& q);
    FieldElem(const mpz_class& z) : FieldElem(mpq_class(z)) {}

    // Accepts "p", "p/q" and sums such as "1/2+3/4*sqrt(-2)".
    static FieldElem parse(std::string_view s);
    static FieldElem rational(long num, long den);
    // Principal square root of a nonzero rational.
    static FieldElem sqrt_rational(const mpq_class& q);
    // A square root inside the multiquadratic closure, normalized so that the
    // leading coefficient is positive; nullopt if none exists there.
    static std::optional<FieldElem> sqrt(const FieldElem& x);
    static FieldElem unit_radical(std::int64_t d);

    bool is_zero() const { return terms_.empty(); }
    bool is_rational() const { return terms_.empty() || (terms_.size() == 1 && terms_[0].rad == 1); }
    mpq_class to_rational() const;
    const std::vector<Term>& terms() const { return terms_; }

    FieldElem operator-() const;
    FieldElem& operator+=(const FieldElem& o);
    FieldElem& operator-=(const FieldElem& o);
    FieldElem& operator*=(const FieldElem& o);
    FieldElem& operator/=(const FieldElem& o);
    friend FieldElem operator+(FieldElem a, const FieldElem& b) { return a += b; }
    friend FieldElem operator-(FieldElem a, const FieldElem& b) { return a -= b; }
    friend FieldElem operator*(const FieldElem& a, const FieldElem& b);
    friend FieldElem operator/(const FieldElem& a, const FieldElem& b) { return a * b.inverse(); }
    friend bool operator==(const FieldElem& a, const FieldElem& b);
    friend bool operator!=(const FieldElem& a, const FieldElem& b) { return !(a == b); }

    FieldElem inverse() const;
    FieldElem pow(long e) const;
    // Total order: compares the coefficient vectors at the first differing radical.
    int compare(const FieldElem& o) const;
    friend bool operator<(const FieldElem& a, const FieldElem& b) { return a.compare(b) < 0; }

    std::string str() const;

private:
    std::vector<Term> terms_;
    static FieldElem from_terms(std::vector<Term> t);
    friend class FieldOps;
};

std::ostream& operator<<(std::ostream& os, const FieldElem& x);

// Dense square or rectangular matrix over FieldElem.
class Matrix {
public:
    Matrix() = default;
    Matrix(int rows, int cols) : r_(rows), c_(cols), a_(static_cast<std::size_t>(rows) * cols) {}
    static Matrix identity(int n);
    static Matrix diagonal(const std::vector<FieldElem>& d);

    int rows() const { return r_; }
    int cols() const { return c_; }
    FieldElem& operator()(int i, int j) { return a_[static_cast<std::size_t>(i) * c_ + j]; }
    const FieldElem& operator()(int i, int j) const { return a_[static_cast<std::size_t>(i) * c_ + j]; }

    Matrix transpose() const;
    Matrix inverse() const;
    bool is_zero() const;
    Matrix& operator+=(const Matrix& o);
    Matrix& operator-=(const Matrix& o);
    friend Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
    friend Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
    friend Matrix operator*(const Matrix& a, const Matrix& b);
    friend Matrix operator*(const FieldElem& s, const Matrix& m);
    friend bool operator==(const Matrix& a, const Matrix& b);
    friend bool operator!=(const Matrix& a, const Matrix& b) { return !(a == b); }
    std::vector<FieldElem> apply(const std::vector<FieldElem>& v) const;
    std::string str() const;

private:
    int r_ = 0, c_ = 0;
    std::vector<FieldElem> a_;
};

// Truncated matrix power series M_0 + M_1 z + ... + M_K z^K.
class MatSeries {
public:
    MatSeries() = default;
    MatSeries(int dim, int order);
    static MatSeries identity(int dim, int order);
    static MatSeries constant(const Matrix& m, int order);

    int dim() const { return dim_; }
    int order() const { return static_cast<int>(c_.size()) - 1; }
    Matrix& operator[](int k) { return c_[k]; }
    const Matrix& operator[](int k) const { return c_[k]; }
    const std::vector<Matrix>& coeffs() const { return c_; }

    MatSeries truncated(int order) const;
    MatSeries transpose() const;
    // M(-z).
    MatSeries reflect() const;
    bool operator==(const MatSeries& o) const;

private:
    int dim_ = 0;
    std::vector<Matrix> c_;
};

MatSeries series_mul(const MatSeries& a, const MatSeries& b);
MatSeries series_inverse(const MatSeries& a);
MatSeries series_add(const MatSeries& a, const MatSeries& b);
MatSeries series_sub(const MatSeries& a, const MatSeries& b);

// Variable slots of MultiPoly: slot c < kMaxColors is q_1^c, slot kMaxColors + c is q_0^c.
inline constexpr int kMaxColors = 4;
inline constexpr int kSlots = 2 * kMaxColors;
inline constexpr int q1_slot(int color) { return color; }
inline constexpr int q0_slot(int color) { return kMaxColors + color; }

using Mono = std::array<std::uint16_t, kSlots>;

int mono_degree(const Mono& m);
int mono_q0_degree(const Mono& m);

class MultiPoly {
public:
    MultiPoly() = default;
    MultiPoly(const FieldElem& c);
    static MultiPoly var(int slot);
    static MultiPoly monomial(const Mono& m, const FieldElem& c);

    bool is_zero() const { return t_.empty(); }
    const std::map<Mono, FieldElem>& terms() const { return t_; }
    int total_degree() const;
    int q0_degree() const;

    MultiPoly& operator+=(const MultiPoly& o);
    MultiPoly& operator-=(const MultiPoly& o);
    MultiPoly operator-() const;
    friend MultiPoly operator+(MultiPoly a, const MultiPoly& b) { return a += b; }
    friend MultiPoly operator-(MultiPoly a, const MultiPoly& b) { return a -= b; }
    friend MultiPoly operator*(const MultiPoly& a, const MultiPoly& b);
    friend MultiPoly operator*(const FieldElem& s, const MultiPoly& p);
    friend bool operator==(const MultiPoly& a, const MultiPoly& b) { return a.t_ == b.t_; }
    friend bool operator!=(const MultiPoly& a, const MultiPoly& b) { return !(a == b); }
    MultiPoly pow(int e) const;
    // Product truncated to q0-degree <= max_q0.
    static MultiPoly mul_trunc(const MultiPoly& a, const MultiPoly& b, int max_q0);

    MultiPoly derivative(int slot) const;
    FieldElem evaluate(const std::array<FieldElem, kSlots>& at) const;
    // Replaces every slot s by images[s] (slots with an empty image are left alone),
    // discarding terms of q0-degree above max_q0.
    MultiPoly compose(const std::array<std::optional<MultiPoly>, kSlots>& images, int max_q0) const;
    // Splits by q0-monomial: the q0 part of each key, q1 polynomial as value.
    std::map<Mono, MultiPoly> split_q0() const;
    std::string str() const;

private:
    std::map<Mono, FieldElem> t_;
    void add_term(const Mono& m, const FieldElem& c);
};

// Designated denominator polynomial with cached powers.
class Discriminant {
public:
    explicit Discriminant(MultiPoly p) : p_(std::move(p)) {}
    const MultiPoly& poly() const { return p_; }
    const MultiPoly& power(int k) const;

private:
    MultiPoly p_;
    mutable std::mutex mu_;
    mutable std::vector<std::unique_ptr<MultiPoly>> pow_;
};

using DiscPtr = std::shared_ptr<const Discriminant>;

// num / P^k with P designated; no cancellation is attempted.
class RatFun {
public:
    RatFun() = default;
    RatFun(DiscPtr p) : p_(std::move(p)) {}
    RatFun(DiscPtr p, MultiPoly num, int k) : p_(std::move(p)), num_(std::move(num)), k_(k) {}

    const DiscPtr& disc() const { return p_; }
    const MultiPoly& num() const { return num_; }
    int exponent() const { return k_; }
    bool is_zero() const { return num_.is_zero(); }

    RatFun& operator+=(const RatFun& o);
    RatFun& operator-=(const RatFun& o);
    friend RatFun operator+(RatFun a, const RatFun& b) { return a += b; }
    friend RatFun operator-(RatFun a, const RatFun& b) { return a -= b; }
    friend RatFun operator*(const RatFun& a, const RatFun& b);
    friend RatFun operator*(const FieldElem& s, const RatFun& r);
    RatFun operator-() const;
    // Exact equality as rational functions (cross-multiplied).
    friend bool operator==(const RatFun& a, const RatFun& b);
    friend bool operator!=(const RatFun& a, const RatFun& b) { return !(a == b); }

    // d/dq_1^color; raises the exponent by one.
    RatFun derivative(int color) const;
    FieldElem evaluate(const std::vector<FieldElem>& q1) const;
    // Same function with exponent raised to k (k >= exponent()).
    RatFun with_exponent(int k) const;

private:
    DiscPtr p_;
    MultiPoly num_;
    int k_ = 0;
};

// q1^c -> images[c], a polynomial in the q1 and q0 slots. The target discriminant
// must be proportional to P(images) at q0 = 0. Returns the expansion of r in the
// q0 slots up to total q0-degree `order`, keyed by q0-monomial, each coefficient
// over the target discriminant with exponent r.exponent() + degree.
std::map<Mono, RatFun> ratfun_shift(const RatFun& r, const std::vector<MultiPoly>& images,
                                    const DiscPtr& target, int order);

}  // namespace fockforge
