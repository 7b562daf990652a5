#pragma once

#include <vector>

#include <nlohmann/json.hpp>

#include "fockforge/exactnum.hpp"
#include "fockforge/fockcore.hpp"
#include "fockforge/frobenius.hpp"

namespace fockforge {

// Symmetric bivector Delta^{(n,i),(m,j)} on levels 0..cutoff.
class Propagator {
public:
    Propagator() = default;
    Propagator(int colors, int cutoff);

    int colors() const { return colors_; }
    int cutoff() const { return cutoff_; }
    const FieldElem& operator()(const Index& a, const Index& b) const;
    // Sets both (a, b) and (b, a).
    void set(const Index& a, const Index& b, const FieldElem& v);
    bool is_zero() const;

    Propagator operator-() const;
    friend Propagator operator+(const Propagator& a, const Propagator& b);
    friend Propagator operator-(const Propagator& a, const Propagator& b) { return a + (-b); }
    friend bool operator==(const Propagator& a, const Propagator& b);

    nlohmann::json to_json() const;
    // Inverse of to_json; entries keyed "n,i;m,j".
    static Propagator from_json(const nlohmann::json& j);

private:
    int colors_ = 0, cutoff_ = -1;
    std::vector<FieldElem> a_;
    std::size_t slot(const Index& a, const Index& b) const;
};

// sum (-1)^{n+m} V^{(n,j),(m,i)} w^n z^m = g(e^j, (R(w)^dagger R(z) - id)/(z + w) e^i),
// with R(w)^dagger = g^{-1} R(w)^T g = R(-w)^{-1}. R must be known to order 2 * cutoff + 1.
// Throws Error(Invariant) when the numerator is not divisible by z + w.
Propagator givental_propagator(const MatSeries& r, const Matrix& g, int cutoff);

// Same propagator from -[R(z)^{-1} [R(z) (-z)^{-n-1} e^j]_+]^i_m.
Propagator propagator_crosscheck(const MatSeries& r, const Matrix& g, int cutoff);

// Sum over connected stable graphs of Cont / |Aut|, vertices carrying the
// input's entries and edges carrying Delta. Inputs must be tame: vertex values
// past the tameness bound are taken to vanish.
CorrelatorTable feynman_transform(const CorrelatorTable& t, const Propagator& d);
ClosedFormElement feynman_transform(const ClosedFormElement& e, const Propagator& d);

// Highest flag level any contraction for e's outputs can reach.
int required_cutoff(const ClosedFormElement& e);
// Highest level appearing in a tame key within e's budgets.
int max_key_level(const ClosedFormElement& e);

// Moves the base by xi: y -> y + xi, D -> D + xi, q_1 stays absolute.
// xi[0] must vanish; rows past xi.size() are zero. The discriminant is rescaled
// to equal 1 at the new base.
ClosedFormElement translate(const ClosedFormElement& e, const Dilaton& xi);

// Pulls back along q_old = Phi^{-1} q_new. The new discriminant is P o (Phi^{-1})_0
// and the new dilaton vector is Phi D.
ClosedFormElement substitute_R(const ClosedFormElement& e, const MatSeries& phi);

// feynman_transform with givental_propagator(R, id) followed by substitute_R(R).
ClosedFormElement quantize_R(const ClosedFormElement& e, const MatSeries& r);

// The Givental wave function of a semisimple point, re-centered at D = z e.
ClosedFormElement abstract_ancestor(const FrobeniusPoint& p, const SemisimpleData& s, int g_max, int n_legs);
ClosedFormElement abstract_ancestor(const FrobeniusPoint& p, int g_max, int n_legs);

// Worker count for contractions: FOCKFORGE_THREADS if set, else hardware concurrency.
int worker_count();

}  // namespace fockforge
