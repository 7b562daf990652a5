#include <algorithm>
#include <sstream>

#include "fockforge/exactnum.hpp"

namespace fockforge {

// ---------------------------------------------------------------- Matrix

Matrix Matrix::identity(int n) {
    Matrix m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = FieldElem(1);
    return m;
}

Matrix Matrix::diagonal(const std::vector<FieldElem>& d) {
    int n = static_cast<int>(d.size());
    Matrix m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = d[i];
    return m;
}

Matrix Matrix::transpose() const {
    Matrix t(c_, r_);
    for (int i = 0; i < r_; ++i)
        for (int j = 0; j < c_; ++j) t(j, i) = (*this)(i, j);
    return t;
}

Matrix Matrix::inverse() const {
    require(r_ == c_, ErrorKind::Domain, "inverse of non-square matrix");
    int n = r_;
    Matrix a = *this;
    Matrix inv = identity(n);
    for (int col = 0; col < n; ++col) {
        int piv = -1;
        for (int r = col; r < n; ++r)
            if (!a(r, col).is_zero()) {
                piv = r;
                break;
            }
        require(piv >= 0, ErrorKind::Domain, "singular matrix");
        if (piv != col)
            for (int j = 0; j < n; ++j) {
                std::swap(a(piv, j), a(col, j));
                std::swap(inv(piv, j), inv(col, j));
            }
        FieldElem s = a(col, col).inverse();
        for (int j = 0; j < n; ++j) {
            a(col, j) *= s;
            inv(col, j) *= s;
        }
        for (int r = 0; r < n; ++r) {
            if (r == col || a(r, col).is_zero()) continue;
            FieldElem f = a(r, col);
            for (int j = 0; j < n; ++j) {
                a(r, j) -= f * a(col, j);
                inv(r, j) -= f * inv(col, j);
            }
        }
    }
    return inv;
}

bool Matrix::is_zero() const {
    return std::all_of(a_.begin(), a_.end(), [](const FieldElem& x) { return x.is_zero(); });
}

Matrix& Matrix::operator+=(const Matrix& o) {
    require(r_ == o.r_ && c_ == o.c_, ErrorKind::Domain, "dimension mismatch");
    for (std::size_t k = 0; k < a_.size(); ++k) a_[k] += o.a_[k];
    return *this;
}

Matrix& Matrix::operator-=(const Matrix& o) {
    require(r_ == o.r_ && c_ == o.c_, ErrorKind::Domain, "dimension mismatch");
    for (std::size_t k = 0; k < a_.size(); ++k) a_[k] -= o.a_[k];
    return *this;
}

Matrix operator*(const Matrix& a, const Matrix& b) {
    require(a.c_ == b.r_, ErrorKind::Domain, "dimension mismatch");
    Matrix m(a.r_, b.c_);
    for (int i = 0; i < a.r_; ++i)
        for (int k = 0; k < a.c_; ++k) {
            const FieldElem& x = a(i, k);
            if (x.is_zero()) continue;
            for (int j = 0; j < b.c_; ++j)
                if (!b(k, j).is_zero()) m(i, j) += x * b(k, j);
        }
    return m;
}

Matrix operator*(const FieldElem& s, const Matrix& m) {
    Matrix r = m;
    for (auto& x : r.a_) x = s * x;
    return r;
}

bool operator==(const Matrix& a, const Matrix& b) { return a.r_ == b.r_ && a.c_ == b.c_ && a.a_ == b.a_; }

std::vector<FieldElem> Matrix::apply(const std::vector<FieldElem>& v) const {
    require(static_cast<int>(v.size()) == c_, ErrorKind::Domain, "dimension mismatch");
    std::vector<FieldElem> out(r_);
    for (int i = 0; i < r_; ++i)
        for (int j = 0; j < c_; ++j)
            if (!(*this)(i, j).is_zero() && !v[j].is_zero()) out[i] += (*this)(i, j) * v[j];
    return out;
}

std::string Matrix::str() const {
    std::ostringstream os;
    os << "[";
    for (int i = 0; i < r_; ++i) {
        os << (i ? ",[" : "[");
        for (int j = 0; j < c_; ++j) os << (j ? "," : "") << (*this)(i, j);
        os << "]";
    }
    os << "]";
    return os.str();
}

// ---------------------------------------------------------------- MatSeries

MatSeries::MatSeries(int dim, int order) : dim_(dim), c_(static_cast<std::size_t>(order + 1), Matrix(dim, dim)) {
    require(order >= 0, ErrorKind::Domain, "negative truncation order");
}

MatSeries MatSeries::identity(int dim, int order) {
    MatSeries s(dim, order);
    s.c_[0] = Matrix::identity(dim);
    return s;
}

MatSeries MatSeries::constant(const Matrix& m, int order) {
    MatSeries s(m.rows(), order);
    s.c_[0] = m;
    return s;
}

MatSeries MatSeries::truncated(int order) const {
    require(order <= this->order(), ErrorKind::Overflow, "truncation order exceeds series order");
    MatSeries s(dim_, order);
    for (int k = 0; k <= order; ++k) s.c_[k] = c_[k];
    return s;
}

MatSeries MatSeries::transpose() const {
    MatSeries s(dim_, order());
    for (int k = 0; k <= order(); ++k) s.c_[k] = c_[k].transpose();
    return s;
}

MatSeries MatSeries::reflect() const {
    MatSeries s = *this;
    for (int k = 1; k <= order(); k += 2) s.c_[k] = FieldElem(-1) * s.c_[k];
    return s;
}

bool MatSeries::operator==(const MatSeries& o) const { return dim_ == o.dim_ && c_ == o.c_; }

MatSeries series_mul(const MatSeries& a, const MatSeries& b) {
    require(a.dim() == b.dim(), ErrorKind::Domain, "series dimension mismatch");
    int K = std::min(a.order(), b.order());
    MatSeries r(a.dim(), K);
    for (int i = 0; i <= K; ++i) {
        if (a[i].is_zero()) continue;
        for (int j = 0; i + j <= K; ++j)
            if (!b[j].is_zero()) r[i + j] += a[i] * b[j];
    }
    return r;
}

MatSeries series_inverse(const MatSeries& a) {
    Matrix inv0 = a[0].inverse();
    MatSeries r(a.dim(), a.order());
    r[0] = inv0;
    for (int k = 1; k <= a.order(); ++k) {
        Matrix acc(a.dim(), a.dim());
        for (int j = 1; j <= k; ++j)
            if (!a[j].is_zero()) acc += a[j] * r[k - j];
        r[k] = FieldElem(-1) * (inv0 * acc);
    }
    return r;
}

MatSeries series_add(const MatSeries& a, const MatSeries& b) {
    require(a.dim() == b.dim(), ErrorKind::Domain, "series dimension mismatch");
    int K = std::min(a.order(), b.order());
    MatSeries r(a.dim(), K);
    for (int k = 0; k <= K; ++k) r[k] = a[k] + b[k];
    return r;
}

MatSeries series_sub(const MatSeries& a, const MatSeries& b) {
    require(a.dim() == b.dim(), ErrorKind::Domain, "series dimension mismatch");
    int K = std::min(a.order(), b.order());
    MatSeries r(a.dim(), K);
    for (int k = 0; k <= K; ++k) r[k] = a[k] - b[k];
    return r;
}

// ---------------------------------------------------------------- MultiPoly

int mono_degree(const Mono& m) {
    int d = 0;
    for (auto e : m) d += e;
    return d;
}

int mono_q0_degree(const Mono& m) {
    int d = 0;
    for (int c = 0; c < kMaxColors; ++c) d += m[q0_slot(c)];
    return d;
}

namespace {
Mono mono_add(const Mono& a, const Mono& b) {
    Mono r;
    for (int s = 0; s < kSlots; ++s) r[s] = static_cast<std::uint16_t>(a[s] + b[s]);
    return r;
}
}  // namespace

MultiPoly::MultiPoly(const FieldElem& c) {
    if (!c.is_zero()) t_.emplace(Mono{}, c);
}

MultiPoly MultiPoly::var(int slot) {
    Mono m{};
    m[slot] = 1;
    return monomial(m, FieldElem(1));
}

MultiPoly MultiPoly::monomial(const Mono& m, const FieldElem& c) {
    MultiPoly p;
    if (!c.is_zero()) p.t_.emplace(m, c);
    return p;
}

void MultiPoly::add_term(const Mono& m, const FieldElem& c) {
    if (c.is_zero()) return;
    auto [it, inserted] = t_.try_emplace(m, c);
    if (!inserted) {
        it->second += c;
        if (it->second.is_zero()) t_.erase(it);
    }
}

int MultiPoly::total_degree() const {
    int d = 0;
    for (const auto& [m, c] : t_) d = std::max(d, mono_degree(m));
    return d;
}

int MultiPoly::q0_degree() const {
    int d = 0;
    for (const auto& [m, c] : t_) d = std::max(d, mono_q0_degree(m));
    return d;
}

MultiPoly& MultiPoly::operator+=(const MultiPoly& o) {
    for (const auto& [m, c] : o.t_) add_term(m, c);
    return *this;
}

MultiPoly& MultiPoly::operator-=(const MultiPoly& o) {
    for (const auto& [m, c] : o.t_) add_term(m, -c);
    return *this;
}

MultiPoly MultiPoly::operator-() const {
    MultiPoly r = *this;
    for (auto& [m, c] : r.t_) c = -c;
    return r;
}

MultiPoly MultiPoly::mul_trunc(const MultiPoly& a, const MultiPoly& b, int max_q0) {
    MultiPoly r;
    for (const auto& [ma, ca] : a.t_) {
        int da = mono_q0_degree(ma);
        if (da > max_q0) continue;
        for (const auto& [mb, cb] : b.t_) {
            if (da + mono_q0_degree(mb) > max_q0) continue;
            r.add_term(mono_add(ma, mb), ca * cb);
        }
    }
    return r;
}

MultiPoly operator*(const MultiPoly& a, const MultiPoly& b) { return MultiPoly::mul_trunc(a, b, 1 << 20); }

MultiPoly operator*(const FieldElem& s, const MultiPoly& p) {
    if (s.is_zero()) return {};
    MultiPoly r = p;
    for (auto& [m, c] : r.t_) c = s * c;
    return r;
}

MultiPoly MultiPoly::pow(int e) const {
    require(e >= 0, ErrorKind::Domain, "negative polynomial power");
    MultiPoly r(FieldElem(1)), b = *this;
    while (e) {
        if (e & 1) r = r * b;
        e >>= 1;
        if (e) b = b * b;
    }
    return r;
}

MultiPoly MultiPoly::derivative(int slot) const {
    MultiPoly r;
    for (const auto& [m, c] : t_) {
        if (m[slot] == 0) continue;
        Mono n = m;
        n[slot] -= 1;
        r.add_term(n, FieldElem(static_cast<long>(m[slot])) * c);
    }
    return r;
}

FieldElem MultiPoly::evaluate(const std::array<FieldElem, kSlots>& at) const {
    std::array<std::vector<FieldElem>, kSlots> pw;
    FieldElem sum;
    for (const auto& [m, c] : t_) {
        FieldElem term = c;
        for (int s = 0; s < kSlots && !term.is_zero(); ++s) {
            if (m[s] == 0) continue;
            auto& v = pw[s];
            if (v.empty()) v.push_back(FieldElem(1));
            while (static_cast<int>(v.size()) <= m[s]) v.push_back(v.back() * at[s]);
            term *= v[m[s]];
        }
        sum += term;
    }
    return sum;
}

MultiPoly MultiPoly::compose(const std::array<std::optional<MultiPoly>, kSlots>& images, int max_q0) const {
    std::array<std::vector<MultiPoly>, kSlots> pw;
    MultiPoly out;
    for (const auto& [m, c] : t_) {
        MultiPoly term(c);
        Mono keep{};
        for (int s = 0; s < kSlots; ++s) {
            if (m[s] == 0) continue;
            if (!images[s]) {
                keep[s] = m[s];
                continue;
            }
            auto& v = pw[s];
            if (v.empty()) v.push_back(MultiPoly(FieldElem(1)));
            while (static_cast<int>(v.size()) <= m[s]) v.push_back(mul_trunc(v.back(), *images[s], max_q0));
            term = mul_trunc(term, v[m[s]], max_q0);
        }
        if (mono_degree(keep) > 0) term = mul_trunc(term, monomial(keep, FieldElem(1)), max_q0);
        out += term;
    }
    return out;
}

std::map<Mono, MultiPoly> MultiPoly::split_q0() const {
    std::map<Mono, MultiPoly> out;
    for (const auto& [m, c] : t_) {
        Mono q0{}, q1 = m;
        for (int col = 0; col < kMaxColors; ++col) {
            q0[q0_slot(col)] = m[q0_slot(col)];
            q1[q0_slot(col)] = 0;
        }
        out[q0].add_term(q1, c);
    }
    return out;
}

std::string MultiPoly::str() const {
    if (t_.empty()) return "0";
    std::ostringstream os;
    bool first = true;
    for (const auto& [m, c] : t_) {
        os << (first ? "" : " + ") << "(" << c << ")";
        first = false;
        for (int s = 0; s < kSlots; ++s) {
            if (!m[s]) continue;
            os << "*" << (s < kMaxColors ? "x" : "y") << (s % kMaxColors);
            if (m[s] > 1) os << "^" << m[s];
        }
    }
    return os.str();
}

// ---------------------------------------------------------------- RatFun

const MultiPoly& Discriminant::power(int k) const {
    std::lock_guard<std::mutex> lock(mu_);
    if (pow_.empty()) pow_.push_back(std::make_unique<MultiPoly>(FieldElem(1)));
    while (static_cast<int>(pow_.size()) <= k) pow_.push_back(std::make_unique<MultiPoly>(*pow_.back() * p_));
    return *pow_[k];
}

namespace {
const DiscPtr& common_disc(const RatFun& a, const RatFun& b) {
    if (!a.disc()) return b.disc();
    if (!b.disc() || a.disc() == b.disc()) return a.disc();
    require(a.disc()->poly() == b.disc()->poly(), ErrorKind::Invariant, "rational functions over different discriminants");
    return a.disc();
}
}  // namespace

RatFun RatFun::with_exponent(int k) const {
    require(k >= k_, ErrorKind::Invariant, "cannot lower discriminant exponent");
    if (k == k_ || num_.is_zero()) return RatFun(p_, num_, k);
    return RatFun(p_, num_ * p_->power(k - k_), k);
}

RatFun& RatFun::operator+=(const RatFun& o) {
    if (o.num_.is_zero()) return *this;
    DiscPtr d = common_disc(*this, o);
    if (num_.is_zero()) {
        *this = o;
        p_ = d;
        return *this;
    }
    p_ = d;
    int k = std::max(k_, o.k_);
    MultiPoly n = (k == k_ ? num_ : num_ * p_->power(k - k_));
    n += (k == o.k_ ? o.num_ : o.num_ * p_->power(k - o.k_));
    num_ = std::move(n);
    k_ = k;
    return *this;
}

RatFun& RatFun::operator-=(const RatFun& o) { return *this += -o; }

RatFun RatFun::operator-() const { return RatFun(p_, -num_, k_); }

RatFun operator*(const RatFun& a, const RatFun& b) {
    DiscPtr d = common_disc(a, b);
    if (a.num_.is_zero() || b.num_.is_zero()) return RatFun(d);
    return RatFun(d, a.num_ * b.num_, a.k_ + b.k_);
}

RatFun operator*(const FieldElem& s, const RatFun& r) { return RatFun(r.p_, s * r.num_, r.k_); }

bool operator==(const RatFun& a, const RatFun& b) {
    if (a.num_.is_zero() || b.num_.is_zero()) return a.num_.is_zero() && b.num_.is_zero();
    common_disc(a, b);
    int k = std::max(a.k_, b.k_);
    return a.with_exponent(k).num_ == b.with_exponent(k).num_;
}

RatFun RatFun::derivative(int color) const {
    int s = q1_slot(color);
    if (num_.is_zero()) return *this;
    if (k_ == 0) return RatFun(p_, num_.derivative(s), 0);
    const MultiPoly& P = p_->poly();
    MultiPoly n = num_.derivative(s) * P - FieldElem(static_cast<long>(k_)) * (num_ * P.derivative(s));
    return RatFun(p_, std::move(n), k_ + 1);
}

FieldElem RatFun::evaluate(const std::vector<FieldElem>& q1) const {
    std::array<FieldElem, kSlots> at;
    for (std::size_t c = 0; c < q1.size() && c < kMaxColors; ++c) at[q1_slot(static_cast<int>(c))] = q1[c];
    FieldElem n = num_.evaluate(at);
    if (k_ == 0) return n;
    FieldElem pv = p_->poly().evaluate(at);
    require(!pv.is_zero(), ErrorKind::Domain, "evaluation point lies on the discriminant");
    return n.is_zero() ? n : n / pv.pow(k_);
}

// ---------------------------------------------------------------- ratfun_shift

std::map<Mono, RatFun> ratfun_shift(const RatFun& r, const std::vector<MultiPoly>& images, const DiscPtr& target,
                                    int order) {
    require(order >= 0, ErrorKind::Domain, "negative q0 order");
    std::array<std::optional<MultiPoly>, kSlots> img;
    for (std::size_t c = 0; c < images.size(); ++c) img[q1_slot(static_cast<int>(c))] = images[c];
    std::map<Mono, RatFun> out;
    MultiPoly f = r.num().compose(img, order);
    int k = r.exponent();
    if (k == 0) {
        for (auto& [q0, p] : f.split_q0()) out.emplace(q0, RatFun(target, std::move(p), 0));
        return out;
    }
    MultiPoly full = r.disc()->poly().compose(img, order);
    auto parts = full.split_q0();
    MultiPoly q0part = parts.count(Mono{}) ? parts[Mono{}] : MultiPoly();
    MultiPoly delta = full - q0part;
    const MultiPoly& T = target->poly();
    require(!T.is_zero() && !q0part.is_zero(), ErrorKind::Domain, "shifted base lies on the discriminant");
    // q0part = c * T.
    const auto& [m0, t0] = *T.terms().begin();
    auto it = q0part.terms().find(m0);
    require(it != q0part.terms().end(), ErrorKind::Invariant, "target discriminant not proportional to shifted one");
    FieldElem c = it->second / t0;
    require(q0part == c * T, ErrorKind::Invariant, "target discriminant not proportional to shifted one");
    FieldElem cinv = c.inverse();

    // 1/(c T + delta)^k = sum_j binom(k+j-1, j) (-delta)^j / (c T)^(k+j)
    MultiPoly acc = f;
    MultiPoly neg_delta = -delta;
    std::map<Mono, MultiPoly> numer;
    for (int j = 0; j <= order && !acc.is_zero(); ++j) {
        mpz_class b;
        mpz_bin_uiui(b.get_mpz_t(), static_cast<unsigned long>(k + j - 1), static_cast<unsigned long>(j));
        FieldElem scale = FieldElem(mpq_class(b)) * cinv.pow(k + j);
        for (auto& [q0, p] : acc.split_q0()) {
            int d = mono_q0_degree(q0);
            if (d < j) continue;
            numer[q0] += (scale * p) * target->power(d - j);
        }
        acc = MultiPoly::mul_trunc(acc, neg_delta, order);
    }
    for (auto& [q0, p] : numer)
        if (!p.is_zero()) out.emplace(q0, RatFun(target, std::move(p), k + mono_q0_degree(q0)));
    return out;
}

}  // namespace fockforge
