#pragma once

#include <compare>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "fockforge/exactnum.hpp"

namespace fockforge {

// Label of the variable q_n^i (equivalently y_n^i).
struct Index {
    int level = 0;
    int color = 0;
    auto operator<=>(const Index&) const = default;
};

// Sorted multiset of indices.
using Key = std::vector<Index>;

Key sorted_key(Key k);
// "g|n0,i0;n1,i1;..."
std::string key_string(int g, const Key& k);
std::pair<int, Key> parse_key_string(const std::string& s);
// Sum of (level - 1) over the key; tame at genus g iff <= 3g - 3.
int excess(const Key& k);
int level0_count(const Key& k);
// prod over distinct indices of multiplicity!
mpz_class key_factorial(const Key& k);

// All tame, stable keys of genus g over `colors` colors with at most max_level0
// level-0 entries and at most max_size entries. Level-1 entries only if with_level1.
std::vector<Key> tame_keys(int g, int colors, int max_level0, int max_size, bool with_level1);

// Dilaton vector D = sum_n D_n z^n; dilaton[n][i] = D_n^i, dilaton[0] = 0.
using Dilaton = std::vector<std::vector<FieldElem>>;

// Derivatives of F^g at the base point y = 0, keyed by (g, sorted key).
// Only nonzero entries are stored. cap[g] bounds the number of insertions and
// level0_cap[g] the number of level-0 insertions.
struct CorrelatorTable {
    int colors = 1;
    std::vector<int> cap;  // indexed by genus, size g_max + 1
    std::vector<int> level0_cap;
    Dilaton dilaton;
    std::map<std::pair<int, Key>, FieldElem> entries;

    int g_max() const { return static_cast<int>(cap.size()) - 1; }
    FieldElem get(int g, const Key& k) const;
    // Sorts k; a zero value erases the entry.
    void set(int g, Key k, const FieldElem& v);
    // The keys this table describes: tame, stable and within both caps.
    std::vector<Key> universe(int g) const;

    nlohmann::json to_json() const;
    static CorrelatorTable from_json(const nlohmann::json& j);
    std::string to_csv() const;

    friend bool operator==(const CorrelatorTable& a, const CorrelatorTable& b) {
        return a.colors == b.colors && a.cap == b.cap && a.level0_cap == b.level0_cap && a.entries == b.entries;
    }
};

// Tame rational potential in closed form. Per genus, coeffs[g][K] is the K-th
// y-derivative at y_0 = 0, y_{>=2} = 0 as a rational function of absolute q_1.
// Keys never contain level 1. The genus-one q_1-only part is held through its
// gradient. The base point is q_1 = -D_1, y = 0.
struct ClosedFormElement {
    int colors = 1;
    int g_max = 0;
    int n_legs = 0;
    DiscPtr disc;
    Dilaton dilaton;
    std::vector<std::map<Key, RatFun>> coeffs;
    std::vector<RatFun> gradient;  // d/dq_1^i of the genus-one constant part

    // Level-0 entries kept at genus g.
    int level0_budget(int g) const { return n_legs + 2 * (g_max - g); }
    std::vector<FieldElem> base_q1() const;
    // D_n = 0 for all n >= 2.
    bool flat_dilaton() const;
    RatFun coefficient(int g, const Key& k) const;
    // d/dq_1 of the coefficient at (g, A) along the given colors.
    RatFun derivative(int g, const Key& a, const std::vector<int>& level1_colors) const;
    friend bool operator==(const ClosedFormElement& a, const ClosedFormElement& b);
};

// prod_i tau(q^i) of Witten-Kontsevich factors with D = z(1,...,1) and P = prod_i (-q_1^i).
ClosedFormElement wk_product(int colors, int g_max, int n_legs);

// Exact derivatives at the base point. The table's cap is the level-0 budget
// plus `extra`, so `extra` = 1 leaves room for one q_1-insertion.
CorrelatorTable jets_of(const ClosedFormElement& e, int extra = 0);

// Keys with nonzero value and sum of levels > 3g - 3 + n.
std::vector<std::string> check_tameness(const CorrelatorTable& t);
// Nonzero coefficients whose key is not tame, and genus-zero keys with fewer than 3 entries.
std::vector<std::string> check_tameness(const ClosedFormElement& e);
// Keys whose Euler identity sum (-D_n^i) C_{K,(n,i)} = (2 - 2g - |K|) C_K fails.
std::vector<std::string> check_homogeneity(const CorrelatorTable& t);
// Coefficients whose P-exponent exceeds 5g - 5 + 2n - sum of levels.
std::vector<std::string> check_pole(const ClosedFormElement& e);

}  // namespace fockforge
