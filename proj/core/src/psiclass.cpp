#include <algorithm>
#include <functional>
#include <map>
#include <shared_mutex>
#include <sstream>

#include "fockforge/psiclass.hpp"

namespace fockforge {

namespace {

mpz_class odd_double_factorial(int m) {  // (2m-1)!!, with (-1)!! = 1
    mpz_class r = 1;
    for (int k = 2 * m - 1; k > 1; k -= 2) r *= k;
    return r;
}

using Key = std::pair<int, std::vector<int>>;

class IntersectionMemo {
public:
    mpq_class get(int g, std::vector<int> exps) {
        std::sort(exps.begin(), exps.end());
        Key key{g, exps};
        {
            std::shared_lock lock(mu_);
            auto it = memo_.find(key);
            if (it != memo_.end()) return it->second;
        }
        mpq_class v = compute(g, exps);
        std::unique_lock lock(mu_);
        memo_.emplace(std::move(key), v);
        return v;
    }

private:
    std::shared_mutex mu_;
    std::map<Key, mpq_class> memo_;

    mpq_class compute(int g, const std::vector<int>& e) {
        int n = static_cast<int>(e.size());
        if (g < 0 || 2 * g - 2 + n <= 0) return 0;
        int sum = 0;
        for (int x : e) sum += x;
        if (sum != 3 * g - 3 + n) return 0;
        if (g == 0 && n == 3) return 1;
        if (g == 1 && n == 1) return mpq_class(1, 24);

        // Recursion on the largest exponent k = e.back().
        int k = e.back();
        std::vector<int> d(e.begin(), e.end() - 1);
        mpq_class acc = 0;
        for (std::size_t j = 0; j < d.size(); ++j) {
            if (d[j] + k - 1 < 0) continue;
            std::vector<int> dd = d;
            dd[j] = d[j] + k - 1;
            mpz_class num = odd_double_factorial(k + d[j]);
            mpz_class den = odd_double_factorial(d[j]);
            acc += mpq_class(num, den) * get(g, dd);
        }
        for (int r = 0; r <= k - 2; ++r) {
            int s = k - 2 - r;
            mpq_class w = mpq_class(odd_double_factorial(r + 1) * odd_double_factorial(s + 1), 2);
            std::vector<int> dd = d;
            dd.push_back(r);
            dd.push_back(s);
            acc += w * get(g - 1, dd);
            // Splits of d into I and J, grouped by sub-multiset with binomial weight.
            std::vector<std::pair<int, int>> groups;
            for (int x : d) {
                if (groups.empty() || groups.back().first != x) groups.emplace_back(x, 0);
                ++groups.back().second;
            }
            std::vector<int> take(groups.size(), 0);
            std::function<void(std::size_t, mpz_class)> rec = [&](std::size_t t, mpz_class weight) {
                if (t < groups.size()) {
                    for (take[t] = 0; take[t] <= groups[t].second; ++take[t]) {
                        mpz_class b;
                        mpz_bin_uiui(b.get_mpz_t(), groups[t].second, take[t]);
                        rec(t + 1, weight * b);
                    }
                    return;
                }
                std::vector<int> I{r}, J{s};
                for (std::size_t u = 0; u < groups.size(); ++u) {
                    I.insert(I.end(), take[u], groups[u].first);
                    J.insert(J.end(), groups[u].second - take[u], groups[u].first);
                }
                for (int g1 = 0; g1 <= g; ++g1) {
                    mpq_class a = get(g1, I);
                    if (a == 0) continue;
                    acc += w * weight * a * get(g - g1, J);
                }
            };
            rec(0, 1);
        }
        mpq_class out = acc / mpq_class(odd_double_factorial(k + 1));
        out.canonicalize();
        return out;
    }
};

IntersectionMemo& memo() {
    static IntersectionMemo m;
    return m;
}

void for_each_multiset(int max_len, int max_sum, const std::function<void(const std::vector<int>&)>& fn) {
    std::vector<int> cur;
    std::function<void(int, int)> rec = [&](int lo, int rem) {
        fn(cur);
        if (static_cast<int>(cur.size()) == max_len) return;
        for (int v = lo; v <= rem; ++v) {
            cur.push_back(v);
            rec(v, rem - v);
            cur.pop_back();
        }
    };
    rec(0, max_sum);
}

}  // namespace

mpq_class intersection_number(int g, std::vector<int> exps) {
    require(g >= 0, ErrorKind::Domain, "negative genus");
    for (int x : exps) require(x >= 0, ErrorKind::Domain, "negative exponent");
    return memo().get(g, std::move(exps));
}

FieldElem wk_jet(int g, const std::vector<int>& levels, const FieldElem& c, int q0_order) {
    require(!c.is_zero(), ErrorKind::Domain, "base q1 = 0 is a pole of the point potential");
    std::vector<int> a0;
    int k = 0, level0 = 0;
    for (int l : levels) {
        require(l >= 0, ErrorKind::Domain, "negative level");
        if (l == 1) {
            ++k;
        } else {
            a0.push_back(l);
            if (l == 0) ++level0;
        }
    }
    require(level0 <= q0_order, ErrorKind::Overflow, "q0 derivative order exceeds truncation");
    FieldElem minus_c = -c;
    int n = static_cast<int>(a0.size());
    if (g == 1 && n == 0) {
        if (k == 0) return {};
        mpz_class f = 1;
        for (int t = 2; t < k; ++t) f *= t;
        return FieldElem(mpq_class(f, 24)) * minus_c.pow(-k);
    }
    if (2 * g - 2 + n <= 0) return {};
    mpq_class base = intersection_number(g, a0);
    if (base == 0) return {};
    int m = 2 * g - 2 + n;
    mpz_class rising = 1;
    for (int t = 0; t < k; ++t) rising *= (m + t);
    return FieldElem(base * rising) * minus_c.pow(-(m + k));
}

std::vector<WKCorrelator> intersection_table(int bound) {
    std::vector<WKCorrelator> out;
    for (int g = 0; 3 * g - 2 <= bound; ++g) {
        // sum = 3g - 3 + n <= bound bounds n.
        int max_n = bound + 3 - 3 * g;
        for_each_multiset(max_n, bound, [&](const std::vector<int>& e) {
            int n = static_cast<int>(e.size());
            int sum = 0;
            for (int x : e) sum += x;
            if (sum != 3 * g - 3 + n || 2 * g - 2 + n <= 0) return;
            mpq_class v = intersection_number(g, e);
            if (v != 0) out.push_back({g, e, v});
        });
    }
    return out;
}

std::vector<std::string> string_dilaton_violations(int bound) {
    std::vector<std::string> bad;
    for (int g = 0; 3 * g - 2 <= bound; ++g) {
        int max_n = bound + 3 - 3 * g;
        for_each_multiset(max_n, bound, [&](const std::vector<int>& L) {
            int n = static_cast<int>(L.size());
            if (2 * g - 2 + n <= 0) return;
            auto label = [&](const char* what) {
                std::ostringstream os;
                os << what << " g=" << g << " [";
                for (std::size_t t = 0; t < L.size(); ++t) os << (t ? "," : "") << L[t];
                os << "]";
                return os.str();
            };
            std::vector<int> with0 = L;
            with0.push_back(0);
            mpq_class lhs = intersection_number(g, with0), rhs = 0;
            for (int j = 0; j < n; ++j) {
                if (L[j] == 0) continue;
                std::vector<int> d = L;
                d[j] -= 1;
                rhs += intersection_number(g, d);
            }
            if (lhs != rhs) bad.push_back(label("string"));
            std::vector<int> with1 = L;
            with1.push_back(1);
            int s1 = 0;
            for (int x : with1) s1 += x;
            if (s1 <= bound && intersection_number(g, with1) != (2 * g - 2 + n) * intersection_number(g, L))
                bad.push_back(label("dilaton"));
        });
    }
    return bad;
}

std::string intersection_table_csv(int bound) {
    std::ostringstream os;
    os << "genus,exponents,value\n";
    for (const auto& c : intersection_table(bound)) {
        os << c.genus << ",";
        for (std::size_t t = 0; t < c.exps.size(); ++t) os << (t ? ";" : "") << c.exps[t];
        os << "," << c.value.get_str() << "\n";
    }
    return os.str();
}

}  // namespace fockforge
