#include <gtest/gtest.h>

#include "fockforge/anomalysym.hpp"

using namespace fockforge;

namespace {

TensorExpr P(const std::string& s) { return parse_tensor_expr(s); }

std::string canon(const std::string& s) { return canonicalize(P(s)).str(); }

Certificate check(const std::string& lhs, const std::string& rhs) { return verify_identity(P(lhs), P(rhs)); }

std::string join(const std::vector<std::string>& v) {
    std::string s;
    for (const auto& x : v) s += x + " ";
    return s;
}

// Ordered decompositions of `set` into (S1, S2) with both parts of size >= min_part.
std::vector<std::pair<std::vector<std::string>, std::vector<std::string>>> splits(const std::vector<std::string>& set, int min_part) {
    std::vector<std::pair<std::vector<std::string>, std::vector<std::string>>> out;
    int m = static_cast<int>(set.size());
    for (int mask = 0; mask < (1 << m); ++mask) {
        std::vector<std::string> a, b;
        for (int i = 0; i < m; ++i) (mask >> i & 1 ? a : b).push_back(set[i]);
        if (static_cast<int>(a.size()) >= min_part && static_cast<int>(b.size()) >= min_part) out.push_back({a, b});
    }
    return out;
}

}  // namespace

TEST(Canonicalize, SymmetryAndRenaming) {
    EXPECT_EQ(canon("C0_{a b} D^{a b}"), canon("C0_{b a} D^{b a}"));
    EXPECT_EQ(canon("C0_{a b} D^{a b} - C0_{b a} D^{b a}"), "0");
    EXPECT_EQ(canon("D^{a b} - D^{b a}"), "0");
    EXPECT_NE(canon("C0_{a b c} D^{a b}"), canon("C0_{a b c} D^{a c}"));
    EXPECT_EQ(canon("C1_{x} D^{x y} C0_{y 1 2} + C0_{2 1 q} D^{p q} C1_{p}"), "2 " + canon("C1_{x} D^{x y} C0_{y 1 2}"));
}

TEST(Canonicalize, DistinguishesContractionPatterns) {
    // Same atoms, two ways of wiring the propagators between four cubic vertices:
    // a triangle with a pendant vertex against a bubble on a chain.
    std::string chain = "C0_{1 a b} D^{b c} C0_{c d e} D^{e f} C0_{f g 2} D^{a g} D^{d h} C0_{h 3 4}";
    std::string other = "C0_{1 a b} D^{a c} D^{b d} C0_{c d e} D^{e f} C0_{f 2 g} D^{g h} C0_{h 3 4}";
    EXPECT_NE(canon(chain), canon(other));
    EXPECT_EQ(canon(chain + " - " + chain), "0");
    // Atom order and dummy names do not matter.
    EXPECT_EQ(canon(chain), canon("D^{d h} C0_{h 3 4} D^{u g} C0_{f g 2} D^{e f} C0_{c d e} D^{b c} C0_{1 u b}"));
}

TEST(Canonicalize, TorsionSlotsAreOrdered) {
    EXPECT_NE(canon("L_{1 2}^{a b} C0_{a b 3}"), canon("L_{2 1}^{a b} C0_{a b 3}"));
    EXPECT_EQ(canon("L_{1 2}^{a b} C0_{a b 3}"), canon("C0_{3 b a} L_{1 2}^{b a}"));
}

TEST(Canonicalize, RejectsUnbalancedIndices) {
    // Two lower slots contracted together.
    EXPECT_THROW(canon("C0_{a a 1}"), Error);
    EXPECT_THROW(canon("D^{a 1} D^{a 2}"), Error);
    try {
        canon("D^{1 2} - D^{1 3}");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Invariant);
    }
    EXPECT_THROW(P("C0_{a a a}"), Error);
}

TEST(Canonicalize, AlphabetOverflow) {
    // Thirteen contractions: a closed chain of cubic vertices.
    std::string s;
    for (int i = 0; i < 13; ++i) s += " C0_{x" + std::to_string(i) + " y" + std::to_string(i) + " " + std::to_string(i) + "} D^{y" +
                                      std::to_string(i) + " x" + std::to_string((i + 1) % 13) + "}";
    try {
        canonicalize(P(s));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Overflow);
    }
}

TEST(Parse, RoundTripsPrintedForm) {
    TensorExpr e = canonicalize(P("-3/4 N_{m}(C1_{a}) D^{a b} L_{m2 b}^{c d} C0_{c d y} + 2 C0_{m m2 y}"));
    EXPECT_EQ(canonicalize(P(e.str())).str(), e.str());
    EXPECT_EQ(canon("0"), "0");
    try {
        P("Q_{a}");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Parse);
    }
    EXPECT_THROW(P("C_{a}"), Error);
    EXPECT_THROW(P("D^{a b c}"), Error);
    EXPECT_THROW(P("C0_{a} C0_{b"), Error);
}

TEST(NablaRewrite, JetnessAndPropagator) {
    EXPECT_EQ(nabla_rewrite(P("N_{m}(C0_{n r s})")).str(), canon("C0_{m n r s}"));
    EXPECT_EQ(canonicalize(nabla_rewrite(P("N_{m}(D^{n r})"))).str(), canon("L_{m}^{n r} + D^{n s} C0_{s m t} D^{t r}"));
    EXPECT_EQ(canonicalize(nabla_rewrite(nabla(Idx::free("m"), P("1")))).str(), "0");
    EXPECT_EQ(canonicalize(nabla_rewrite(P("N_{m}(L_{k}^{a b})"))).str(), canon("L_{m k}^{a b}"));
    RewriteRules parallel_q1{true, true, -1};
    EXPECT_EQ(canonicalize(nabla_rewrite(P("N_{m}(D^{n r})"), parallel_q1)).str(), canon("-L_{m}^{n r} + D^{n s} C0_{s m t} D^{t r}"));
}

TEST(NablaRewrite, LeibnizOnProducts) {
    TensorExpr e = nabla(Idx::free("m"), P("C0_{1 a b} D^{a b}"));
    EXPECT_EQ(e.terms.size(), 2u);
    EXPECT_EQ(canonicalize(nabla_rewrite(e)).str(),
              canon("C0_{m 1 a b} D^{a b} + C0_{1 a b} L_{m}^{a b} + C0_{1 a b} D^{a s} C0_{s m t} D^{t b}"));
    // Second derivatives act on the result of the first.
    EXPECT_EQ(canonicalize(nabla_rewrite(P("N_{p}(N_{m}(C1_{x}))"))).str(), canon("C1_{p m x}"));
}

TEST(FeynmanSum, GenusOneOnePoint) {
    EXPECT_EQ(canonicalize(feynman_sum(1, {Idx::free("1")})).str(), canon("C1_{1} + 1/2 C0_{1 a b} D^{a b}"));
    EXPECT_EQ(canonicalize(feynman_sum(0, {Idx::free("1"), Idx::free("2"), Idx::free("3")})).str(), canon("C0_{1 2 3}"));
    EXPECT_EQ(feynman_sum(2, {}).terms.size(), 7u);
    EXPECT_THROW(feynman_sum(1, {}), Error);
}

TEST(Anomaly, LowGenusCasesHold) {
    for (auto [g, n] : std::vector<std::pair<int, int>>{{0, 4}, {0, 5}, {1, 2}, {1, 3}, {2, 1}, {2, 2}, {1, 4}, {0, 6}}) {
        Certificate c = verify_anomaly(g, n);
        EXPECT_TRUE(c.holds) << g << "," << n << "\n" << c.text();
        EXPECT_GT(c.lhs.terms.size(), 0u);
        EXPECT_TRUE(replay(c));
    }
}

TEST(Anomaly, StatesTheExpectedIdentity) {
    EXPECT_EQ(verify_anomaly(1, 2).identity, canon("C1_{1 2}") + " = " + canon("N_{1}(C1_{2}) + 1/2 C0_{2 a b} L_{1}^{a b}"));
    EXPECT_EQ(verify_anomaly(2, 1).identity,
              canon("C2_{1}") + " = " + canon("N_{1}(C2_{}) + 1/2 C1_{a} L_{1}^{a b} C1_{b} + 1/2 C1_{a b} L_{1}^{a b}"));
}

TEST(Anomaly, LambdaZeroReducesToJetness) {
    for (auto [g, n] : std::vector<std::pair<int, int>>{{0, 5}, {1, 2}, {1, 3}, {2, 1}}) {
        AnomalyOptions o;
        o.lambda_zero = true;
        Certificate c = verify_anomaly(g, n, o);
        EXPECT_TRUE(c.holds) << g << "," << n;
        for (const auto& t : c.lhs.terms)
            for (const auto& a : t.atoms) EXPECT_NE(a.kind, AtomKind::Lambda);
    }
    // Jetness in the parallel frame alone: the curved one-point function differs.
    Certificate bare = verify_identity(P("C1_{1 2}"), P("N_{1}(C1_{2})"));
    EXPECT_FALSE(bare.holds);
}

TEST(Anomaly, MutationsAreDetected) {
    AnomalyOptions split;
    split.split_coef = 1;
    EXPECT_FALSE(verify_anomaly(0, 5, split).holds);
    EXPECT_FALSE(verify_anomaly(2, 1, split).holds);
    AnomalyOptions loop;
    loop.loop_coef = 0;
    EXPECT_FALSE(verify_anomaly(1, 2, loop).holds);
    EXPECT_FALSE(verify_anomaly(2, 1, loop).holds);
    AnomalyOptions neg;
    neg.loop_coef = mpq_class(-1, 2);
    EXPECT_FALSE(verify_anomaly(1, 3, neg).holds);
}

TEST(Anomaly, DomainAndOverflow) {
    EXPECT_THROW(verify_anomaly(0, 3), Error);
    EXPECT_THROW(verify_anomaly(1, 1), Error);
    try {
        verify_anomaly(3, 3);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Overflow);
    }
}

TEST(Anomaly, HolomorphicForm) {
    for (auto [g, n] : std::vector<std::pair<int, int>>{{0, 5}, {1, 2}, {1, 3}, {2, 1}, {2, 2}}) {
        Certificate c = verify_hae(g, n);
        EXPECT_TRUE(c.holds) << g << "," << n << "\n" << c.text();
        EXPECT_TRUE(replay(c));
    }
    AnomalyOptions o;
    o.split_coef = mpq_class(1, 4);
    EXPECT_FALSE(verify_hae(2, 1, o).holds);
}

// The worked examples, written out term by term in the curved frame.
TEST(WorkedExamples, GenusZero) {
    // Printed with C_{123} on the right; the identity needs C_{234}.
    EXPECT_TRUE(check("C0_{1 2 3 4}", "N_{1}(C0_{2 3 4})").holds);
    EXPECT_TRUE(check("C0_{1 2 3 4 5}",
                      "N_{1}(N_{2}(C0_{3 4 5})) + C0_{2 3 a} L_{1}^{a b} C0_{4 5 b} + C0_{4 3 a} L_{1}^{a b} C0_{2 5 b}"
                      " + C0_{5 3 a} L_{1}^{a b} C0_{4 2 b}")
                    .holds);
}

TEST(WorkedExamples, GenusZeroSixPoint) {
    std::string rhs = "N_{1}(N_{2}(N_{3}(C0_{4 5 6})))";
    for (const auto& [s1, s2] : splits({"3", "4", "5", "6"}, 2)) {
        std::string a = join(s1), b = join(s2);
        rhs += " + 1/2 N_{1}(C0_{" + a + "a}) L_{2}^{a b} C0_{" + b + "b}";
        rhs += " + 1/2 C0_{" + a + "a} N_{1}(L_{2}^{a b}) C0_{" + b + "b}";
        rhs += " + 1/2 C0_{" + a + "a} L_{2}^{a b} N_{1}(C0_{" + b + "b})";
    }
    for (const auto& [s1, s2] : splits({"2", "3", "4", "5", "6"}, 2))
        if (s1.size() == 3) rhs += " + C0_{" + join(s1) + "a} L_{1}^{a b} C0_{" + join(s2) + "b}";
    Certificate c = check("C0_{1 2 3 4 5 6}", rhs);
    EXPECT_TRUE(c.holds) << c.residual.str();
}

TEST(WorkedExamples, GenusOne) {
    EXPECT_TRUE(check("C1_{1 2}", "N_{1}(C1_{2}) + 1/2 C0_{2 a b} L_{1}^{a b}").holds);
    Certificate c = check("C1_{1 2 3}",
                          "N_{1}(N_{2}(C1_{3})) + 1/2 N_{1}(C0_{3 a b}) L_{2}^{a b} + 1/2 C0_{3 a b} N_{1}(L_{2}^{a b})"
                          " + C1_{a} L_{1}^{a b} C0_{2 3 b} + 1/2 N_{2}(C0_{3 a b}) L_{1}^{a b}");
    EXPECT_TRUE(c.holds) << c.residual.str();
}

TEST(WorkedExamples, GenusTwoNeedsTheLoopTerm) {
    // As printed, the genus-two example lacks the self-contraction term.
    Certificate printed = check("C2_{1}", "N_{1}(C2_{}) + 1/2 C1_{a} L_{1}^{a b} C1_{b}");
    EXPECT_FALSE(printed.holds);
    EXPECT_EQ(printed.residual.str(), canonicalize(expand_curved(P("1/2 C1_{a b} L_{1}^{a b}"))).str());
    EXPECT_TRUE(check("C2_{1}", "N_{1}(C2_{}) + 1/2 C1_{a} L_{1}^{a b} C1_{b} + 1/2 C1_{a b} L_{1}^{a b}").holds);
}

TEST(Curvature, GenusOneOneForm) {
    Certificate c = verify_curvature_condition();
    EXPECT_TRUE(c.holds) << c.text();
    EXPECT_TRUE(replay(c));
    AnomalyOptions zero;
    zero.lambda_zero = true;
    Certificate z = verify_curvature_condition(zero);
    EXPECT_TRUE(z.holds);
    EXPECT_TRUE(z.lhs.empty());
    EXPECT_TRUE(z.rhs.empty());
    AnomalyOptions mutated;
    mutated.theta_coef = 1;
    EXPECT_FALSE(verify_curvature_condition(mutated).holds);
}

TEST(Certificate, ReplayDetectsTampering) {
    Certificate c = verify_anomaly(1, 3);
    ASSERT_TRUE(replay(c));
    Certificate bad = c;
    bad.rhs.terms.pop_back();
    EXPECT_FALSE(replay(bad));
    EXPECT_NE(c.text().find("residual: 0"), std::string::npos);
}
