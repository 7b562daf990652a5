#include <algorithm>
#include <cctype>
#include <numeric>
#include <ostream>
#include <sstream>

#include "fockforge/exactnum.hpp"

namespace fockforge {

namespace {

using u64 = std::uint64_t;
using i64 = std::int64_t;

u64 rad_abs(i64 d) { return d < 0 ? static_cast<u64>(-d) : static_cast<u64>(d); }

// Real radicals sort before imaginary ones, then by |d|.
bool rad_less(i64 a, i64 b) {
    bool ia = a < 0, ib = b < 0;
    if (ia != ib) return !ia;
    return rad_abs(a) < rad_abs(b);
}

// sqrt(a) * sqrt(b) = factor * sqrt(out).
void rad_mul(i64 a, i64 b, i64& out, mpz_class& factor) {
    u64 ma = rad_abs(a), mb = rad_abs(b);
    u64 g = std::gcd(ma, mb);
    unsigned __int128 m = static_cast<unsigned __int128>(ma / g) * (mb / g);
    require(m < (static_cast<unsigned __int128>(1) << 62), ErrorKind::Overflow, "radicand overflow");
    factor = mpz_class(std::to_string(g));
    bool imag = (a < 0) != (b < 0);
    if (a < 0 && b < 0) factor = -factor;
    i64 mm = static_cast<i64>(m);
    out = imag ? -mm : mm;
}

// Writes n = s^2 * m with m square-free; m must fit in 62 bits.
void squarefree_split(const mpz_class& n_in, mpz_class& s, u64& m_out) {
    mpz_class n = n_in;
    s = 1;
    mpz_class m = 1;
    for (unsigned long p = 2;; ++p) {
        mpz_class pp = mpz_class(p) * p * p;
        if (pp > n) break;
        unsigned e = 0;
        while (mpz_divisible_ui_p(n.get_mpz_t(), p)) {
            mpz_divexact_ui(n.get_mpz_t(), n.get_mpz_t(), p);
            ++e;
        }
        for (unsigned k = 0; k < e / 2; ++k) s *= p;
        if (e % 2) m *= p;
        require(p < 4000000, ErrorKind::Overflow, "radicand too large to factor");
    }
    // Remaining cofactor has at most two prime factors.
    if (n > 1) {
        if (mpz_perfect_square_p(n.get_mpz_t())) {
            mpz_class r;
            mpz_sqrt(r.get_mpz_t(), n.get_mpz_t());
            s *= r;
        } else {
            m *= n;
        }
    }
    require(mpz_sizeinbase(m.get_mpz_t(), 2) <= 61, ErrorKind::Overflow, "radicand overflow");
    m_out = m.get_ui();
}

// Pairwise coprime refinement of a set of square-free integers > 1.
std::vector<u64> coprime_base(std::vector<u64> xs) {
    bool changed = true;
    while (changed) {
        changed = false;
        std::sort(xs.begin(), xs.end());
        xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
        for (std::size_t i = 0; i < xs.size() && !changed; ++i)
            for (std::size_t j = i + 1; j < xs.size() && !changed; ++j) {
                u64 g = std::gcd(xs[i], xs[j]);
                if (g > 1) {
                    u64 a = xs[i] / g, b = xs[j] / g;
                    xs.erase(xs.begin() + static_cast<long>(j));
                    xs.erase(xs.begin() + static_cast<long>(i));
                    xs.push_back(g);
                    if (a > 1) xs.push_back(a);
                    if (b > 1) xs.push_back(b);
                    changed = true;
                }
            }
    }
    return xs;
}

// Generator 0 means i; otherwise a coprime base element.
bool involves(i64 rad, u64 gen) {
    if (gen == 0) return rad < 0;
    return rad_abs(rad) % gen == 0;
}

std::vector<u64> generators(const FieldElem& x) {
    std::vector<u64> ms;
    bool imag = false;
    for (const auto& t : x.terms()) {
        if (rad_abs(t.rad) > 1) ms.push_back(rad_abs(t.rad));
        if (t.rad < 0) imag = true;
    }
    auto base = coprime_base(ms);
    if (imag) base.push_back(0);
    return base;
}

}  // namespace

class FieldOps {
public:
    static FieldElem make(std::vector<FieldElem::Term> t) { return FieldElem::from_terms(std::move(t)); }
    static FieldElem conj(const FieldElem& x, u64 gen) {
        std::vector<FieldElem::Term> t = x.terms_;
        for (auto& term : t)
            if (involves(term.rad, gen)) term.coef = -term.coef;
        return make(std::move(t));
    }
    // x = p + q * sqrt(gen), neither p nor q involving gen.
    static void split(const FieldElem& x, u64 gen, FieldElem& p, FieldElem& q) {
        std::vector<FieldElem::Term> tp, tq;
        for (const auto& term : x.terms_) {
            if (!involves(term.rad, gen)) {
                tp.push_back(term);
            } else if (gen == 0) {
                tq.push_back({-term.rad, term.coef});
            } else {
                i64 r = term.rad < 0 ? -static_cast<i64>(rad_abs(term.rad) / gen)
                                     : static_cast<i64>(rad_abs(term.rad) / gen);
                tq.push_back({r, term.coef});
            }
        }
        p = make(std::move(tp));
        q = make(std::move(tq));
    }
};

FieldElem::FieldElem(long v) {
    if (v != 0) terms_.push_back({1, mpq_class(v)});
}

FieldElem::FieldElem(const mpq_class& q) {
    if (q != 0) {
        mpq_class c = q;
        c.canonicalize();
        terms_.push_back({1, c});
    }
}

FieldElem FieldElem::rational(long num, long den) {
    require(den != 0, ErrorKind::Domain, "zero denominator");
    mpq_class q(num, den);
    q.canonicalize();
    return FieldElem(q);
}

FieldElem FieldElem::unit_radical(std::int64_t d) {
    require(d != 0, ErrorKind::Domain, "zero radicand");
    return sqrt_rational(mpq_class(static_cast<long>(d)));
}

FieldElem FieldElem::from_terms(std::vector<Term> t) {
    std::sort(t.begin(), t.end(), [](const Term& a, const Term& b) { return rad_less(a.rad, b.rad); });
    FieldElem out;
    for (auto& term : t) {
        if (!out.terms_.empty() && out.terms_.back().rad == term.rad) {
            out.terms_.back().coef += term.coef;
        } else {
            out.terms_.push_back(std::move(term));
        }
    }
    out.terms_.erase(std::remove_if(out.terms_.begin(), out.terms_.end(),
                                    [](const Term& x) { return x.coef == 0; }),
                     out.terms_.end());
    return out;
}

mpq_class FieldElem::to_rational() const {
    require(is_rational(), ErrorKind::Domain, "value is not rational: " + str());
    return terms_.empty() ? mpq_class(0) : terms_[0].coef;
}

FieldElem FieldElem::operator-() const {
    FieldElem r = *this;
    for (auto& t : r.terms_) t.coef = -t.coef;
    return r;
}

FieldElem& FieldElem::operator+=(const FieldElem& o) {
    if (o.terms_.empty()) return *this;
    if (terms_.size() == 1 && o.terms_.size() == 1 && terms_[0].rad == o.terms_[0].rad) {
        terms_[0].coef += o.terms_[0].coef;
        if (terms_[0].coef == 0) terms_.clear();
        return *this;
    }
    std::vector<Term> t = terms_;
    t.insert(t.end(), o.terms_.begin(), o.terms_.end());
    *this = from_terms(std::move(t));
    return *this;
}

FieldElem& FieldElem::operator-=(const FieldElem& o) { return *this += -o; }

FieldElem operator*(const FieldElem& a, const FieldElem& b) {
    if (a.terms_.empty() || b.terms_.empty()) return {};
    if (a.terms_.size() == 1 && b.terms_.size() == 1 && a.terms_[0].rad == 1) {
        FieldElem r = b;
        r.terms_[0].coef *= a.terms_[0].coef;
        return r;
    }
    if (b.terms_.size() == 1 && b.terms_[0].rad == 1) {
        FieldElem r = a;
        for (auto& t : r.terms_) t.coef *= b.terms_[0].coef;
        return r;
    }
    if (a.terms_.size() == 1 && a.terms_[0].rad == 1) {
        FieldElem r = b;
        for (auto& t : r.terms_) t.coef *= a.terms_[0].coef;
        return r;
    }
    std::vector<FieldElem::Term> t;
    t.reserve(a.terms_.size() * b.terms_.size());
    mpz_class factor;
    for (const auto& x : a.terms_)
        for (const auto& y : b.terms_) {
            i64 rad;
            rad_mul(x.rad, y.rad, rad, factor);
            t.push_back({rad, x.coef * y.coef * factor});
        }
    return FieldElem::from_terms(std::move(t));
}

FieldElem& FieldElem::operator*=(const FieldElem& o) { return *this = *this * o; }
FieldElem& FieldElem::operator/=(const FieldElem& o) { return *this = *this / o; }

bool operator==(const FieldElem& a, const FieldElem& b) {
    if (a.terms_.size() != b.terms_.size()) return false;
    for (std::size_t k = 0; k < a.terms_.size(); ++k)
        if (a.terms_[k].rad != b.terms_[k].rad || a.terms_[k].coef != b.terms_[k].coef) return false;
    return true;
}

FieldElem FieldElem::inverse() const {
    require(!is_zero(), ErrorKind::Domain, "division by zero");
    if (is_rational()) return FieldElem(mpq_class(1) / terms_[0].coef);
    FieldElem x = *this;
    FieldElem y(1);
    for (u64 gen : generators(*this)) {
        bool inv = false;
        for (const auto& t : x.terms_) inv = inv || involves(t.rad, gen);
        if (!inv) continue;
        FieldElem c = FieldOps::conj(x, gen);
        y *= c;
        x *= c;
    }
    require(x.is_rational() && !x.is_zero(), ErrorKind::Invariant, "norm computation failed");
    return y * FieldElem(mpq_class(1) / x.terms_[0].coef);
}

FieldElem FieldElem::pow(long e) const {
    if (e < 0) return inverse().pow(-e);
    FieldElem r(1), b = *this;
    while (e) {
        if (e & 1) r *= b;
        b *= b;
        e >>= 1;
    }
    return r;
}

int FieldElem::compare(const FieldElem& o) const {
    std::size_t i = 0, j = 0;
    const mpq_class zero(0);
    while (i < terms_.size() || j < o.terms_.size()) {
        i64 r;
        const mpq_class* a = &zero;
        const mpq_class* b = &zero;
        if (j >= o.terms_.size() || (i < terms_.size() && rad_less(terms_[i].rad, o.terms_[j].rad))) {
            r = terms_[i].rad;
            a = &terms_[i++].coef;
        } else if (i >= terms_.size() || rad_less(o.terms_[j].rad, terms_[i].rad)) {
            r = o.terms_[j].rad;
            b = &o.terms_[j++].coef;
        } else {
            r = terms_[i].rad;
            a = &terms_[i++].coef;
            b = &o.terms_[j++].coef;
        }
        (void)r;
        int c = cmp(*a, *b);
        if (c != 0) return c < 0 ? -1 : 1;
    }
    return 0;
}

FieldElem FieldElem::sqrt_rational(const mpq_class& q) {
    if (q == 0) return {};
    mpz_class num = abs(q.get_num());
    mpz_class den = q.get_den();
    mpz_class s;
    u64 m;
    squarefree_split(num * den, s, m);
    mpq_class c(s, den);
    c.canonicalize();
    i64 rad = static_cast<i64>(m);
    if (q < 0) rad = -rad;
    return from_terms({{rad, c}});
}

namespace {

std::optional<FieldElem> sqrt_rec(const FieldElem& x, int depth) {
    // Each level removes one generator; deeper searches only revisit the same
    // generators through freshly adjoined radicals and cannot succeed.
    if (depth > 16) return std::nullopt;
    if (x.is_zero()) return FieldElem();
    if (x.is_rational()) return FieldElem::sqrt_rational(x.to_rational());
    auto gens = generators(x);
    u64 gen = gens.front();
    FieldElem p, q;
    FieldOps::split(x, gen, p, q);
    FieldElem g = gen == 0 ? FieldElem(-1) : FieldElem(static_cast<long>(gen));
    FieldElem sqrt_g = gen == 0 ? FieldElem::unit_radical(-1) : FieldElem::unit_radical(static_cast<i64>(gen));
    if (q.is_zero()) return sqrt_rec(p, depth + 1);
    auto s = sqrt_rec(p * p - g * q * q, depth + 1);
    if (!s) return std::nullopt;
    for (int sign : {1, -1}) {
        FieldElem t = (p + FieldElem(sign) * *s) * FieldElem::rational(1, 2);
        if (t.is_zero()) continue;
        auto r = sqrt_rec(t, depth + 1);
        if (!r) continue;
        FieldElem y = *r + q / (FieldElem(2) * *r) * sqrt_g;
        if (y * y == x) return y;
    }
    return std::nullopt;
}

}  // namespace

std::optional<FieldElem> FieldElem::sqrt(const FieldElem& x) {
    auto r = sqrt_rec(x, 0);
    if (r && !r->is_zero() && r->terms_.front().coef < 0) r = -*r;
    return r;
}

std::string FieldElem::str() const {
    if (terms_.empty()) return "0";
    std::string out;
    for (std::size_t k = 0; k < terms_.size(); ++k) {
        const auto& t = terms_[k];
        std::string c = t.coef.get_str();
        if (k > 0 && c[0] != '-') out += "+";
        out += c;
        if (t.rad != 1) out += "*sqrt(" + std::to_string(t.rad) + ")";
    }
    return out;
}

FieldElem FieldElem::parse(std::string_view s) {
    std::string str;
    for (char ch : s)
        if (!std::isspace(static_cast<unsigned char>(ch))) str += ch;
    require(!str.empty(), ErrorKind::Parse, "empty number");
    std::vector<Term> terms;
    std::size_t pos = 0;
    while (pos < str.size()) {
        std::size_t end = pos + 1;
        int depth = 0;
        while (end < str.size()) {
            char ch = str[end];
            if (ch == '(') ++depth;
            if (ch == ')') --depth;
            if (depth == 0 && (ch == '+' || ch == '-') && str[end - 1] != '(' && str[end - 1] != '*') break;
            ++end;
        }
        std::string term = str.substr(pos, end - pos);
        pos = end;
        if (!term.empty() && term[0] == '+') term.erase(0, 1);
        std::string coef = term;
        i64 rad = 1;
        auto at = term.find("sqrt(");
        if (at != std::string::npos) {
            require(term.back() == ')', ErrorKind::Parse, "bad radical: " + term);
            std::string d = term.substr(at + 5, term.size() - at - 6);
            try {
                rad = std::stoll(d);
            } catch (...) {
                fail(ErrorKind::Parse, "bad radicand: " + d);
            }
            coef = term.substr(0, at);
            if (!coef.empty() && coef.back() == '*') coef.pop_back();
            if (coef.empty() || coef == "+") coef = "1";
            if (coef == "-") coef = "-1";
        }
        mpq_class q;
        if (q.set_str(coef, 10) != 0) fail(ErrorKind::Parse, "bad rational: " + coef);
        require(q.get_den() != 0, ErrorKind::Parse, "zero denominator: " + coef);
        q.canonicalize();
        if (rad == 1) {
            terms.push_back({1, q});
        } else {
            FieldElem r = unit_radical(rad) * FieldElem(q);
            for (const auto& t : r.terms_) terms.push_back(t);
        }
    }
    return from_terms(std::move(terms));
}

std::ostream& operator<<(std::ostream& os, const FieldElem& x) { return os << x.str(); }

}  // namespace fockforge
