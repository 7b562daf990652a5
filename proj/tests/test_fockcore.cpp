#include <gtest/gtest.h>

#include <climits>

#include "fockforge/fockcore.hpp"
#include "fockforge/psiclass.hpp"
#include "fockforge/quantize.hpp"
#include "test_support.hpp"

using namespace fockforge;

namespace {

Key key(std::initializer_list<std::pair<int, int>> items) {
    Key k;
    for (auto [l, c] : items) k.push_back({l, c});
    return sorted_key(k);
}

}  // namespace

TEST(Keys, StringRoundTrip) {
    Key k = key({{2, 1}, {0, 0}, {0, 1}});
    std::string s = key_string(3, k);
    EXPECT_EQ(s, "3|0,0;0,1;2,1");
    auto [g, back] = parse_key_string(s);
    EXPECT_EQ(g, 3);
    EXPECT_EQ(back, k);
    EXPECT_EQ(parse_key_string("2|").second, Key{});
    EXPECT_THROW(parse_key_string("x|0,0"), Error);
    EXPECT_THROW(parse_key_string("1|0;0"), Error);
    EXPECT_THROW(parse_key_string("0,0"), Error);
}

TEST(Keys, FactorialAndCounts) {
    Key k = key({{0, 0}, {0, 0}, {0, 0}, {2, 1}, {2, 1}});
    EXPECT_EQ(key_factorial(k), mpz_class(12));
    EXPECT_EQ(level0_count(k), 3);
    EXPECT_EQ(excess(k), -1);
}

TEST(Keys, TameEnumerationMatchesFilter) {
    // Brute force: all multisets with levels <= 9 and size <= 4, filtered by the definition.
    for (int g = 0; g <= 2; ++g) {
        std::set<Key> brute;
        std::vector<Index> idx;
        for (int l = 0; l <= 9; ++l)
            for (int c = 0; c < 2; ++c) idx.push_back({l, c});
        std::function<void(std::size_t, Key&)> rec = [&](std::size_t from, Key& cur) {
            int n = static_cast<int>(cur.size());
            bool stable = !(g == 0 && n < 3) && !(g == 1 && n < 1);
            if (stable && excess(cur) <= 3 * g - 3 && level0_count(cur) <= 3) brute.insert(cur);
            if (n == 4) return;
            for (std::size_t a = from; a < idx.size(); ++a) {
                cur.push_back(idx[a]);
                rec(a, cur);
                cur.pop_back();
            }
        };
        Key cur;
        rec(0, cur);
        auto got = tame_keys(g, 2, 3, 4, true);
        EXPECT_EQ(std::set<Key>(got.begin(), got.end()), brute) << g;
        EXPECT_EQ(got.size(), brute.size());
    }
}

TEST(WKProduct, JetsMatchPsiclassOracle) {
    ClosedFormElement w = wk_product(1, 3, 1);
    CorrelatorTable t = jets_of(w, 2);
    int checked = 0;
    for (int g = 0; g <= 3; ++g)
        for (const Key& k : t.universe(g)) {
            std::vector<int> levels;
            for (const auto& ix : k) levels.push_back(ix.level);
            EXPECT_EQ(t.get(g, k), wk_jet(g, levels, FieldElem(-1), w.level0_budget(g))) << key_string(g, k);
            ++checked;
        }
    EXPECT_GT(checked, 50);
}

TEST(WKProduct, PaperAnchoredJets) {
    CorrelatorTable t = jets_of(wk_product(1, 2, 0), 1);
    EXPECT_EQ(t.get(0, key({{0, 0}, {0, 0}, {0, 0}})), FieldElem(1));
    EXPECT_EQ(t.get(1, key({{1, 0}})), FieldElem::rational(1, 24));
    EXPECT_EQ(t.get(2, key({{4, 0}})), FieldElem::rational(1, 1152));
    // Level sum above 3g - 3 + n.
    EXPECT_TRUE(t.get(1, key({{2, 0}})).is_zero());
    EXPECT_TRUE(t.get(0, key({{0, 0}, {0, 0}, {2, 0}})).is_zero());
}

TEST(WKProduct, ColorsDoNotMix) {
    CorrelatorTable t = jets_of(wk_product(3, 1, 1), 1);
    EXPECT_EQ(t.get(0, key({{0, 2}, {0, 2}, {0, 2}})), FieldElem(1));
    EXPECT_TRUE(t.get(0, key({{0, 0}, {0, 1}, {0, 1}})).is_zero());
    EXPECT_EQ(t.get(1, key({{1, 1}})), FieldElem::rational(1, 24));
    EXPECT_TRUE(t.get(1, key({{1, 0}, {1, 1}})).is_zero());
}

TEST(Validators, Tameness) {
    CorrelatorTable t = jets_of(wk_product(2, 2, 1), 1);
    EXPECT_TRUE(check_tameness(t).empty());
    t.set(0, key({{2, 0}, {2, 0}, {2, 0}}), FieldElem(1));
    auto report = check_tameness(t);
    ASSERT_EQ(report.size(), 1u);
    EXPECT_EQ(report[0], "0|2,0;2,0;2,0");
    EXPECT_TRUE(check_tameness(CorrelatorTable{}).empty());
    EXPECT_TRUE(check_tameness(wk_product(2, 3, 0)).empty());
}

TEST(Validators, Homogeneity) {
    CorrelatorTable t = jets_of(wk_product(1, 2, 1), 1);
    // Euler identity at (0; 0,0,0) with D_1 = 1: (-1) * C_{0001} = (2 - 0 - 3) * C_{000}.
    EXPECT_EQ(t.get(0, key({{0, 0}, {0, 0}, {0, 0}, {1, 0}})), FieldElem(1));
    EXPECT_TRUE(check_homogeneity(t).empty());
    CorrelatorTable bad = t;
    Key k2 = key({{4, 0}});
    bad.set(2, k2, FieldElem(2) * t.get(2, k2));
    auto report = check_homogeneity(bad);
    ASSERT_FALSE(report.empty());
    EXPECT_NE(std::find(report.begin(), report.end(), key_string(2, k2)), report.end());
    EXPECT_TRUE(check_homogeneity(jets_of(wk_product(3, 2, 0), 1)).empty());
}

TEST(Validators, Pole) {
    ClosedFormElement w = wk_product(2, 3, 1);
    EXPECT_TRUE(check_pole(w).empty());
    // Genus-zero cubic: exponent 1 against bound 5*0 - 5 + 2*3 - 0 = 1.
    Key cubic = key({{0, 0}, {0, 0}, {0, 0}});
    EXPECT_EQ(w.coeffs[0].at(cubic).exponent(), 1);
    ClosedFormElement bumped = w;
    RatFun& r = bumped.coeffs[0].at(cubic);
    r = r.with_exponent(r.exponent() + 1);
    auto report = check_pole(bumped);
    ASSERT_EQ(report.size(), 1u);
    EXPECT_EQ(report[0], key_string(0, cubic));
    EXPECT_TRUE(bumped == w);
}

TEST(CorrelatorTable, JsonRoundTrip) {
    CorrelatorTable t = jets_of(wk_product(2, 2, 1), 1);
    CorrelatorTable back = CorrelatorTable::from_json(t.to_json());
    EXPECT_EQ(back, t);
    EXPECT_EQ(back.to_json().dump(), t.to_json().dump());
    nlohmann::json broken = t.to_json();
    broken["entries"]["0|0,7;0,0;0,0"] = "1";
    EXPECT_THROW(CorrelatorTable::from_json(broken), Error);
}

TEST(CorrelatorTable, CsvFormats) {
    CorrelatorTable empty;
    empty.cap = {3};
    EXPECT_EQ(empty.to_csv(), "genus,levels,colors,value\n");
    CorrelatorTable t;
    t.colors = 2;
    t.cap = {3};
    t.set(0, key({{0, 1}, {0, 0}, {0, 0}}), FieldElem::parse("1/2+1*sqrt(-2)"));
    EXPECT_EQ(t.to_csv(), "genus,levels,colors,value\n0,0;0;0,0;0;1,1/2+1*sqrt(-2)\n");
    CorrelatorTable back = CorrelatorTable::from_json(t.to_json());
    EXPECT_EQ(back.get(0, key({{0, 0}, {0, 0}, {0, 1}})), FieldElem::parse("1/2+sqrt(-2)"));
}

TEST(Translate, ZeroIsIdentity) {
    ClosedFormElement w = wk_product(2, 2, 1);
    ClosedFormElement t = translate(w, Dilaton{});
    EXPECT_TRUE(t == w);
    EXPECT_EQ(jets_of(t, 1), jets_of(w, 1));
}

TEST(Translate, ShiftsTheBase) {
    ClosedFormElement w = wk_product(1, 2, 0);
    Dilaton xi{{FieldElem(0)}, {FieldElem(1)}};
    ClosedFormElement t = translate(w, xi);
    EXPECT_EQ(t.base_q1()[0], FieldElem(-2));
    CorrelatorTable j = jets_of(t, 1);
    // -(1/24) d/dq_1 log(-q_1) at q_1 = -2.
    EXPECT_EQ(j.get(1, key({{1, 0}})), FieldElem::rational(1, 48));
    // The closed form evaluated at the new base directly.
    EXPECT_EQ(j.get(0, key({{0, 0}, {0, 0}, {0, 0}})), w.coefficient(0, key({{0, 0}, {0, 0}, {0, 0}})).evaluate({FieldElem(-2)}));
    EXPECT_EQ(j.get(2, key({{4, 0}})), w.coefficient(2, key({{4, 0}})).evaluate({FieldElem(-2)}));
    EXPECT_TRUE(check_homogeneity(j).empty());
    EXPECT_THROW(translate(w, Dilaton{{FieldElem(0)}, {FieldElem(-1)}}), Error);
}

TEST(Translate, InverseShiftRestores) {
    std::mt19937_64 rng(5);
    ClosedFormElement w = wk_product(2, 2, 1);
    for (int trial = 0; trial < 3; ++trial) {
        Dilaton xi(4, std::vector<FieldElem>(2));
        for (int n = 1; n < 4; ++n)
            for (auto& x : xi[n]) x = fockforge::testing::random_rational(rng, 3);
        if (xi[1][0] == FieldElem(-1)) xi[1][0] = FieldElem(0);
        if (xi[1][1] == FieldElem(-1)) xi[1][1] = FieldElem(0);
        Dilaton neg = xi;
        for (auto& row : neg)
            for (auto& x : row) x = -x;
        ClosedFormElement t = translate(w, xi);
        // Translated elements obey the Euler identity for the new dilaton vector.
        EXPECT_TRUE(check_homogeneity(jets_of(t, 1)).empty());
        EXPECT_TRUE(check_tameness(t).empty());
        EXPECT_TRUE(check_pole(t).empty());
        ClosedFormElement back = translate(t, neg);
        EXPECT_TRUE(back == w);
        EXPECT_EQ(jets_of(back, 1).entries, jets_of(w, 1).entries);
    }
}

TEST(Translate, RebasingCommutesWithJets) {
    // Two small shifts equal one combined shift.
    ClosedFormElement w = wk_product(1, 2, 1);
    Dilaton a{{FieldElem(0)}, {FieldElem::rational(1, 2)}, {FieldElem(3)}};
    Dilaton b{{FieldElem(0)}, {FieldElem(2)}, {FieldElem(-1)}, {FieldElem::rational(1, 3)}};
    Dilaton ab{{FieldElem(0)}, {FieldElem::rational(5, 2)}, {FieldElem(2)}, {FieldElem::rational(1, 3)}};
    EXPECT_EQ(jets_of(translate(translate(w, a), b), 1).entries, jets_of(translate(w, ab), 1).entries);
}
