#include <algorithm>
#include <climits>
#include <sstream>

#include "fockforge/fockcore.hpp"
#include "fockforge/json_io.hpp"
#include "fockforge/psiclass.hpp"

namespace fockforge {

Key sorted_key(Key k) {
    std::sort(k.begin(), k.end());
    return k;
}

std::string key_string(int g, const Key& k) {
    std::string s = std::to_string(g) + "|";
    for (std::size_t a = 0; a < k.size(); ++a) {
        if (a) s += ";";
        s += std::to_string(k[a].level) + "," + std::to_string(k[a].color);
    }
    return s;
}

std::pair<int, Key> parse_key_string(const std::string& s) {
    auto bar = s.find('|');
    require(bar != std::string::npos && bar > 0, ErrorKind::Parse, "bad correlator key '" + s + "'");
    int g = 0;
    Key k;
    try {
        std::size_t used = 0;
        g = std::stoi(s.substr(0, bar), &used);
        require(used == bar, ErrorKind::Parse, "bad genus in key '" + s + "'");
        std::string rest = s.substr(bar + 1);
        std::stringstream in(rest);
        std::string item;
        while (!rest.empty() && std::getline(in, item, ';')) {
            auto comma = item.find(',');
            require(comma != std::string::npos, ErrorKind::Parse, "bad index '" + item + "' in key '" + s + "'");
            Index ix{std::stoi(item.substr(0, comma)), std::stoi(item.substr(comma + 1))};
            require(ix.level >= 0 && ix.color >= 0, ErrorKind::Parse, "negative index in key '" + s + "'");
            k.push_back(ix);
        }
    } catch (const std::logic_error&) {
        fail(ErrorKind::Parse, "bad correlator key '" + s + "'");
    }
    require(g >= 0, ErrorKind::Parse, "negative genus in key '" + s + "'");
    return {g, sorted_key(std::move(k))};
}

int excess(const Key& k) {
    int s = 0;
    for (const auto& ix : k) s += ix.level - 1;
    return s;
}

int level0_count(const Key& k) {
    return static_cast<int>(std::count_if(k.begin(), k.end(), [](const Index& ix) { return ix.level == 0; }));
}

mpz_class key_factorial(const Key& k) {
    mpz_class out = 1;
    std::size_t a = 0;
    while (a < k.size()) {
        std::size_t b = a;
        while (b < k.size() && k[b] == k[a]) ++b;
        mpz_class f;
        mpz_fac_ui(f.get_mpz_t(), static_cast<unsigned long>(b - a));
        out *= f;
        a = b;
    }
    return out;
}

namespace {

struct KeyEnumerator {
    int g, colors, max_level0, max_size;
    std::vector<Index> candidates;
    std::vector<Key> out;
    Key cur;

    void run(std::size_t pos, int slack, int level0) {
        if (pos == candidates.size()) {
            if (slack < 0) return;
            int n = static_cast<int>(cur.size());
            if (g == 0 && n < 3) return;
            if (g == 1 && n < 1) return;
            out.push_back(cur);
            return;
        }
        const Index ix = candidates[pos];
        // Past level 1 the slack only decreases.
        if (ix.level >= 2 && slack < 0) return;
        int room = max_size - static_cast<int>(cur.size());
        int maxm = room;
        if (ix.level == 0) maxm = std::min(maxm, max_level0 - level0);
        if (ix.level >= 2) maxm = std::min(maxm, slack / (ix.level - 1));
        maxm = std::max(maxm, 0);
        for (int m = 0; m <= maxm; ++m) {
            run(pos + 1, slack - m * (ix.level - 1), level0 + (ix.level == 0 ? m : 0));
            cur.push_back(ix);
        }
        cur.resize(cur.size() - static_cast<std::size_t>(maxm + 1));
    }
};

}  // namespace

std::vector<Key> tame_keys(int g, int colors, int max_level0, int max_size, bool with_level1) {
    require(g >= 0 && colors >= 1, ErrorKind::Domain, "tame_keys needs g >= 0 and colors >= 1");
    require(!with_level1 || max_size < INT_MAX, ErrorKind::Domain, "level-1 keys need a size bound");
    max_level0 = std::max(0, max_level0);
    KeyEnumerator en{g, colors, max_level0, max_size, {}, {}, {}};
    int top = 3 * g - 3 + std::min(max_level0, max_size) + 1;
    for (int l = 0; l <= top; ++l) {
        if (l == 1 && !with_level1) continue;
        for (int c = 0; c < colors; ++c) en.candidates.push_back({l, c});
    }
    en.run(0, 3 * g - 3, 0);
    std::sort(en.out.begin(), en.out.end(), [](const Key& a, const Key& b) {
        return a.size() != b.size() ? a.size() < b.size() : a < b;
    });
    return en.out;
}

// ---------------------------------------------------------------- CorrelatorTable

FieldElem CorrelatorTable::get(int g, const Key& k) const {
    auto it = entries.find({g, k});
    return it == entries.end() ? FieldElem() : it->second;
}

void CorrelatorTable::set(int g, Key k, const FieldElem& v) {
    k = sorted_key(std::move(k));
    if (v.is_zero())
        entries.erase({g, k});
    else
        entries[{g, std::move(k)}] = v;
}

std::vector<Key> CorrelatorTable::universe(int g) const {
    require(g >= 0 && g <= g_max(), ErrorKind::Domain, "genus outside the table");
    int l0 = g < static_cast<int>(level0_cap.size()) ? level0_cap[g] : cap[g];
    return tame_keys(g, colors, l0, cap[g], true);
}

nlohmann::json CorrelatorTable::to_json() const {
    nlohmann::json j;
    j["colors"] = colors;
    j["cap"] = cap;
    j["level0_cap"] = level0_cap;
    nlohmann::json d = nlohmann::json::array();
    for (const auto& row : dilaton) {
        nlohmann::json r = nlohmann::json::array();
        for (const auto& x : row) r.push_back(fockforge::to_json(x));
        d.push_back(std::move(r));
    }
    j["dilaton"] = std::move(d);
    nlohmann::json e = nlohmann::json::object();
    for (const auto& [gk, v] : entries) e[key_string(gk.first, gk.second)] = fockforge::to_json(v);
    j["entries"] = std::move(e);
    return j;
}

CorrelatorTable CorrelatorTable::from_json(const nlohmann::json& j) {
    require(j.is_object() && j.contains("colors") && j.contains("cap") && j.contains("entries"), ErrorKind::Parse,
            "correlator table needs colors, cap and entries");
    CorrelatorTable t;
    try {
        t.colors = j["colors"].get<int>();
        t.cap = j["cap"].get<std::vector<int>>();
        t.level0_cap = j.contains("level0_cap") ? j["level0_cap"].get<std::vector<int>>() : t.cap;
    } catch (const nlohmann::json::exception& ex) {
        fail(ErrorKind::Parse, std::string("correlator table header: ") + ex.what());
    }
    require(t.colors >= 1 && !t.cap.empty(), ErrorKind::Parse, "correlator table needs colors >= 1 and a cap");
    if (j.contains("dilaton"))
        for (const auto& row : j["dilaton"]) {
            std::vector<FieldElem> r;
            for (const auto& x : row) r.push_back(field_from_json(x));
            t.dilaton.push_back(std::move(r));
        }
    for (const auto& [k, v] : j["entries"].items()) {
        auto [g, key] = parse_key_string(k);
        require(g <= t.g_max(), ErrorKind::Parse, "entry genus above the table's cap: " + k);
        for (const auto& ix : key) require(ix.color < t.colors, ErrorKind::Parse, "color out of range in " + k);
        t.set(g, key, field_from_json(v));
    }
    return t;
}

std::string CorrelatorTable::to_csv() const {
    std::string s = "genus,levels,colors,value\n";
    for (const auto& [gk, v] : entries) {
        std::string lv, cl;
        for (std::size_t a = 0; a < gk.second.size(); ++a) {
            if (a) {
                lv += ";";
                cl += ";";
            }
            lv += std::to_string(gk.second[a].level);
            cl += std::to_string(gk.second[a].color);
        }
        s += std::to_string(gk.first) + "," + lv + "," + cl + "," + v.str() + "\n";
    }
    return s;
}

// ---------------------------------------------------------------- ClosedFormElement

std::vector<FieldElem> ClosedFormElement::base_q1() const {
    std::vector<FieldElem> q(static_cast<std::size_t>(colors));
    if (dilaton.size() > 1)
        for (int i = 0; i < colors; ++i) q[i] = -dilaton[1][i];
    return q;
}

bool ClosedFormElement::flat_dilaton() const {
    for (std::size_t n = 2; n < dilaton.size(); ++n)
        for (const auto& x : dilaton[n])
            if (!x.is_zero()) return false;
    return true;
}

RatFun ClosedFormElement::coefficient(int g, const Key& k) const {
    if (g < 0 || g >= static_cast<int>(coeffs.size())) return RatFun(disc);
    auto it = coeffs[g].find(k);
    return it == coeffs[g].end() ? RatFun(disc) : it->second;
}

RatFun ClosedFormElement::derivative(int g, const Key& a, const std::vector<int>& level1_colors) const {
    RatFun r(disc);
    std::size_t first = 0;
    if (g == 1 && a.empty()) {
        if (level1_colors.empty()) return RatFun(disc);
        r = gradient[level1_colors[0]];
        first = 1;
    } else {
        r = coefficient(g, a);
    }
    for (std::size_t s = first; s < level1_colors.size() && !r.is_zero(); ++s) r = r.derivative(level1_colors[s]);
    return r;
}

namespace {
// n1 / P1^k1 == n2 / P2^k2 as functions.
bool same_function(const RatFun& a, const RatFun& b) {
    if (a.is_zero() || b.is_zero()) return a.is_zero() && b.is_zero();
    if (a.disc() == b.disc() || a.disc()->poly() == b.disc()->poly()) return a == b;
    return a.num() * b.disc()->power(b.exponent()) == b.num() * a.disc()->power(a.exponent());
}
}  // namespace

bool operator==(const ClosedFormElement& a, const ClosedFormElement& b) {
    if (a.colors != b.colors || a.coeffs.size() != b.coeffs.size() || a.gradient.size() != b.gradient.size())
        return false;
    if (a.base_q1() != b.base_q1()) return false;
    for (std::size_t g = 0; g < a.coeffs.size(); ++g) {
        for (const auto& [k, r] : a.coeffs[g])
            if (!same_function(r, b.coefficient(static_cast<int>(g), k))) return false;
        for (const auto& [k, r] : b.coeffs[g])
            if (!same_function(r, a.coefficient(static_cast<int>(g), k))) return false;
    }
    for (std::size_t i = 0; i < a.gradient.size(); ++i)
        if (!same_function(a.gradient[i], b.gradient[i])) return false;
    return true;
}

ClosedFormElement wk_product(int colors, int g_max, int n_legs) {
    require(colors >= 1 && colors <= kMaxColors, ErrorKind::Domain,
            "colors must lie in 1.." + std::to_string(kMaxColors));
    require(g_max >= 0 && n_legs >= 0, ErrorKind::Domain, "g_max and n_legs must be nonnegative");
    ClosedFormElement e;
    e.colors = colors;
    e.g_max = g_max;
    e.n_legs = n_legs;
    std::vector<MultiPoly> neg_q1;
    MultiPoly P(FieldElem(1));
    for (int i = 0; i < colors; ++i) {
        neg_q1.push_back(-MultiPoly::var(q1_slot(i)));
        P = P * neg_q1.back();
    }
    e.disc = std::make_shared<Discriminant>(P);
    e.dilaton.assign(2, std::vector<FieldElem>(static_cast<std::size_t>(colors)));
    for (int i = 0; i < colors; ++i) e.dilaton[1][i] = FieldElem(1);
    e.coeffs.resize(static_cast<std::size_t>(g_max + 1));
    for (int g = 0; g <= g_max; ++g) {
        for (const Key& k : tame_keys(g, 1, e.level0_budget(g), INT_MAX, false)) {
            if (excess(k) != 3 * g - 3) continue;
            std::vector<int> exps;
            for (const auto& ix : k) exps.push_back(ix.level);
            mpq_class v = intersection_number(g, exps);
            if (v == 0) continue;
            int m = 2 * g - 2 + static_cast<int>(k.size());
            for (int i = 0; i < colors; ++i) {
                MultiPoly num{FieldElem(v)};
                for (int j = 0; j < colors; ++j)
                    if (j != i) num = num * neg_q1[j].pow(m);
                Key ki = k;
                for (auto& ix : ki) ix.color = i;
                e.coeffs[g].emplace(ki, RatFun(e.disc, std::move(num), m));
            }
        }
    }
    e.gradient.assign(static_cast<std::size_t>(colors), RatFun(e.disc));
    for (int i = 0; i < colors; ++i) {
        MultiPoly num(FieldElem::rational(1, 24));
        for (int j = 0; j < colors; ++j)
            if (j != i) num = num * neg_q1[j];
        e.gradient[i] = RatFun(e.disc, std::move(num), 1);
    }
    return e;
}

CorrelatorTable jets_of(const ClosedFormElement& e, int extra) {
    require(extra >= 0, ErrorKind::Domain, "negative extra insertions");
    CorrelatorTable t;
    t.colors = e.colors;
    t.dilaton = e.dilaton;
    std::vector<FieldElem> base = e.base_q1();
    for (int g = 0; g <= e.g_max; ++g) {
        t.level0_cap.push_back(e.level0_budget(g));
        t.cap.push_back(e.level0_budget(g) + extra);
    }
    for (int g = 0; g <= e.g_max; ++g) {
        for (const Key& k : t.universe(g)) {
            Key a;
            std::vector<int> l1;
            for (const auto& ix : k) {
                if (ix.level == 1)
                    l1.push_back(ix.color);
                else
                    a.push_back(ix);
            }
            RatFun r = e.derivative(g, a, l1);
            if (!r.is_zero()) t.set(g, k, r.evaluate(base));
        }
    }
    return t;
}

std::vector<std::string> check_tameness(const CorrelatorTable& t) {
    std::vector<std::string> out;
    for (const auto& [gk, v] : t.entries) {
        const auto& [g, k] = gk;
        if (v.is_zero()) continue;
        if (excess(k) > 3 * g - 3 || (g == 1 && k.empty()) || (g == 0 && k.size() < 3))
            out.push_back(key_string(g, k));
    }
    return out;
}

std::vector<std::string> check_tameness(const ClosedFormElement& e) {
    std::vector<std::string> out;
    for (std::size_t g = 0; g < e.coeffs.size(); ++g)
        for (const auto& [k, r] : e.coeffs[g]) {
            int gi = static_cast<int>(g);
            if (r.is_zero()) continue;
            if (excess(k) > 3 * gi - 3 || (gi == 0 && k.size() < 3) || (gi == 1 && k.empty()))
                out.push_back(key_string(gi, k));
        }
    return out;
}

std::vector<std::string> check_homogeneity(const CorrelatorTable& t) {
    std::vector<std::string> out;
    for (int g = 0; g <= t.g_max(); ++g) {
        for (const Key& k : t.universe(g)) {
            int n = static_cast<int>(k.size());
            if (n + 1 > t.cap[g]) continue;
            if (g == 1 && n == 0) continue;
            FieldElem lhs;
            for (std::size_t lv = 1; lv < t.dilaton.size(); ++lv)
                for (int i = 0; i < t.colors; ++i) {
                    const FieldElem& d = t.dilaton[lv][i];
                    if (d.is_zero()) continue;
                    Key kk = k;
                    kk.push_back({static_cast<int>(lv), i});
                    lhs -= d * t.get(g, sorted_key(std::move(kk)));
                }
            FieldElem rhs = FieldElem(2 - 2 * g - n) * t.get(g, k);
            if (lhs != rhs) out.push_back(key_string(g, k));
        }
    }
    return out;
}

std::vector<std::string> check_pole(const ClosedFormElement& e) {
    std::vector<std::string> out;
    for (std::size_t g = 0; g < e.coeffs.size(); ++g)
        for (const auto& [k, r] : e.coeffs[g]) {
            if (r.is_zero()) continue;
            int sum = 0;
            for (const auto& ix : k) sum += ix.level;
            int bound = 5 * static_cast<int>(g) - 5 + 2 * static_cast<int>(k.size()) - sum;
            if (r.exponent() > bound) out.push_back(key_string(static_cast<int>(g), k));
        }
    for (int i = 0; i < static_cast<int>(e.gradient.size()); ++i)
        if (!e.gradient[i].is_zero() && e.gradient[i].exponent() > 1) out.push_back(key_string(1, {{1, i}}));
    return out;
}

}  // namespace fockforge
