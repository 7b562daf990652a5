#include "fockforge/suites.hpp"

#include <algorithm>
#include <functional>
#include <map>

#include "fockforge/anomalysym.hpp"
#include "fockforge/frobenius.hpp"
#include "fockforge/psiclass.hpp"
#include "fockforge/quantize.hpp"
#include "fockforge/sampling.hpp"

namespace fockforge {

namespace {

using namespace sampling;

struct Recorder {
    SuiteReport& r;
    void check(bool ok, const std::string& what) {
        ++r.cases;
        if (!ok) r.failures.push_back(what);
    }
    void none(const std::vector<std::string>& bad, const std::string& what) {
        ++r.cases;
        for (const auto& b : bad) r.failures.push_back(what + ": " + b);
    }
};

std::vector<FieldElem> distinct_values(std::mt19937_64& rng, int n) {
    std::vector<FieldElem> u;
    while (static_cast<int>(u.size()) < n) {
        FieldElem x = random_rational(rng, 7);
        if (std::find(u.begin(), u.end(), x) == u.end()) u.push_back(x);
    }
    return u;
}

void string_dilaton(Recorder& rec, std::mt19937_64&) {
    rec.check(intersection_number(0, {0, 0, 0}) == 1, "<tau_0^3>_0 = 1");
    rec.check(intersection_number(1, {1}) == mpq_class(1, 24), "<tau_1>_1 = 1/24");
    auto table = intersection_table(12);
    rec.r.cases += static_cast<int>(table.size());
    for (const auto& v : string_dilaton_violations(12)) rec.r.failures.push_back(v);
}

void propagator(Recorder& rec, std::mt19937_64& rng) {
    for (int i = 0; i < 50; ++i) {
        int n = 2 + i % 2;
        MatSeries r = random_unitary(rng, n, 17);
        Matrix g = Matrix::identity(n);
        std::string tag = "draw " + std::to_string(i) + " (" + std::to_string(n) + "x" + std::to_string(n) + ")";
        rec.check(is_unitary(r), tag + " unitary");
        rec.check(givental_propagator(r, g, 8) == propagator_crosscheck(r, g, 8), tag + " formulas agree");
    }
}

void cocycle(Recorder& rec, std::mt19937_64& rng) {
    for (int i = 0; i < 20; ++i) {
        int colors = 1 + i % 2;
        // A genus-(g-1) vertex with a loop carries flag level up to 3g - 4.
        int cutoff = 5;
        CorrelatorTable t = random_table(rng, colors, 3, 0);
        Propagator d1 = random_propagator(rng, colors, cutoff), d2 = random_propagator(rng, colors, cutoff);
        CorrelatorTable once = feynman_transform(t, d1 + d2);
        std::string tag = "draw " + std::to_string(i);
        rec.check(feynman_transform(feynman_transform(t, d1), d2) == once, tag + " cocycle");
        rec.check(feynman_transform(once, -(d1 + d2)) == t, tag + " inverse");
        rec.none(check_tameness(once), tag + " tameness");
    }
}

void rmatrix(Recorder& rec, std::mt19937_64& rng) {
    for (int i = 0; i < 20; ++i) {
        int n = 2 + i % 2;
        std::vector<FieldElem> u;
        for (int k = 0; k < n; ++k) u.push_back(FieldElem(3 * k - 2) + random_rational(rng, 1) / FieldElem(7));
        MatSeries v = random_v(rng, n, i % 3);
        MatSeries r = solve_R(u, v, 6);
        std::string tag = "draw " + std::to_string(i);
        rec.check(check_r_ode(u, v, r), tag + " ode residual");
        rec.check(is_unitary(r), tag + " unitarity");
    }
    std::vector<FieldElem> u = distinct_values(rng, 3);
    rec.check(solve_R(u, MatSeries(3, 0), 6) == MatSeries::identity(3, 6), "V = 0 gives id");
    MatSeries v(2, 0);
    v[0](0, 1) = FieldElem(1);
    v[0](1, 0) = FieldElem(-1);
    Matrix r1(2, 2);
    r1(0, 0) = FieldElem(-1);
    r1(0, 1) = r1(1, 0) = r1(1, 1) = FieldElem(1);
    rec.check(solve_R({FieldElem(0), FieldElem(1)}, v, 6)[1] == r1, "worked 2x2 R_1");
}

void points(Recorder& rec, std::mt19937_64& rng) {
    for (int n = 0; n <= 2; ++n) {
        ClosedFormElement a = abstract_ancestor(points_target(distinct_values(rng, n + 1)), 3, 0);
        rec.check(jets_of(a, 1).entries == jets_of(wk_product(n + 1, 3, 0), 1).entries, std::to_string(n + 1) + " points");
    }
}

void gauge_of(Recorder& rec, const std::string& name, const FrobeniusPoint& p, int g_max, int n_legs) {
    SemisimpleData s = canonical_data(p);
    auto base = jets_of(abstract_ancestor(p, s, g_max, n_legs), 1).entries;
    std::vector<int> perm(p.dim);
    for (int i = 0; i < p.dim; ++i) perm[i] = i;
    do {
        for (int mask = 0; mask < (1 << p.dim); ++mask) {
            std::vector<int> signs(p.dim);
            for (int i = 0; i < p.dim; ++i) signs[i] = mask >> i & 1 ? -1 : 1;
            std::string tag = name + " perm";
            for (int x : perm) tag += " " + std::to_string(x);
            tag += " signs " + std::to_string(mask);
            rec.check(jets_of(abstract_ancestor(p, regauge(s, perm, signs), g_max, n_legs), 1).entries == base, tag);
        }
    } while (std::next_permutation(perm.begin(), perm.end()));
}

void gauge(Recorder& rec, std::mt19937_64&) {
    gauge_of(rec, "P1", p1_point(), 2, 0);
    gauge_of(rec, "P2", p2_point(), 1, 1);
}

void axioms_of(Recorder& rec, const std::string& tag, const ClosedFormElement& e) {
    rec.none(check_tameness(e), tag + " tameness");
    rec.none(check_pole(e), tag + " pole");
    CorrelatorTable j = jets_of(e, 1);
    rec.none(check_tameness(j), tag + " jet tameness");
    rec.none(check_homogeneity(j), tag + " homogeneity");
}

void axioms(Recorder& rec, std::mt19937_64& rng) {
    ClosedFormElement w = wk_product(2, 2, 0);
    int k = required_cutoff(w);
    for (int i = 0; i < 3; ++i) {
        axioms_of(rec, "quantize draw " + std::to_string(i), quantize_R(w, random_unitary(rng, 2, 2 * k + 1)));
        axioms_of(rec, "transform draw " + std::to_string(i), feynman_transform(w, random_propagator(rng, 2, k)));
    }
    for (int n = 0; n <= 2; ++n)
        axioms_of(rec, std::to_string(n + 1) + " points", abstract_ancestor(points_target(distinct_values(rng, n + 1)), 3, 0));
    axioms_of(rec, "P1", abstract_ancestor(p1_point(), 2, 0));
    axioms_of(rec, "P2", abstract_ancestor(p2_point(), 1, 1));
}

void anomaly(Recorder& rec, std::mt19937_64&) {
    for (auto [g, n] : std::vector<std::pair<int, int>>{{0, 5}, {1, 2}, {1, 3}, {2, 1}}) {
        std::string tag = "(" + std::to_string(g) + "," + std::to_string(n) + ")";
        Certificate c = verify_anomaly(g, n);
        rec.check(c.holds, tag + " anomaly residual " + c.residual.str());
        rec.check(replay(c), tag + " replay");
        rec.check(verify_hae(g, n).holds, tag + " holomorphic form");
        AnomalyOptions split;
        split.split_coef = 1;
        AnomalyOptions loop;
        loop.loop_coef = 1;
        rec.check(!verify_anomaly(g, n, split).holds || !verify_anomaly(g, n, loop).holds, tag + " mutation detected");
    }
    rec.check(verify_curvature_condition().holds, "curvature condition");
    AnomalyOptions theta;
    theta.theta_coef = 1;
    rec.check(!verify_curvature_condition(theta).holds, "curvature mutation detected");
}

const std::map<std::string, std::function<void(Recorder&, std::mt19937_64&)>>& registry() {
    static const std::map<std::string, std::function<void(Recorder&, std::mt19937_64&)>> r{
        {"string-dilaton", string_dilaton}, {"propagator", propagator}, {"cocycle", cocycle}, {"rmatrix", rmatrix},
        {"points", points},                 {"gauge", gauge},           {"axioms", axioms},   {"anomaly", anomaly},
    };
    return r;
}

}  // namespace

nlohmann::json SuiteReport::to_json() const {
    return {{"suite", name}, {"seed", seed}, {"cases", cases}, {"passed", passed()}, {"failures", failures}};
}

const std::vector<std::string>& suite_names() {
    static const std::vector<std::string> names{"string-dilaton", "propagator", "cocycle", "rmatrix",
                                                "points",         "gauge",      "axioms",  "anomaly"};
    return names;
}

SuiteReport run_suite(const std::string& name, std::uint64_t seed) {
    auto it = registry().find(name);
    require(it != registry().end(), ErrorKind::Parse, "unknown suite '" + name + "'");
    SuiteReport r;
    r.name = name;
    r.seed = seed;
    std::mt19937_64 rng(seed);
    Recorder rec{r};
    it->second(rec, rng);
    return r;
}

}  // namespace fockforge
