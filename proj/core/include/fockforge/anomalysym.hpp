#pragma once

#include <gmpxx.h>

#include <string>
#include <string_view>
#include <vector>

#include "fockforge/errors.hpp"

namespace fockforge {

// Abstract index. Free when dummy < 0; dummies are local to a term.
struct Idx {
    std::string name;
    int dummy = -1;

    static Idx free(std::string n) { return {std::move(n), -1}; }
    static Idx bound(int d) { return {{}, d}; }
    bool is_free() const { return dummy < 0; }
    bool operator==(const Idx&) const = default;
};

enum class AtomKind { C, Delta, Lambda };

// C^{(genus)}_{lower}: lower fully symmetric, upper empty.
// Delta^{upper}: two symmetric upper indices.
// Lambda: lower = derivative indices (outermost first, ordered) then the form index;
//         upper = two symmetric indices.
// pending = unevaluated covariant derivatives, outermost first.
struct Atom {
    AtomKind kind = AtomKind::C;
    int genus = 0;
    std::vector<Idx> pending;
    std::vector<Idx> lower;
    std::vector<Idx> upper;
};

struct Term {
    mpq_class coef = 1;
    std::vector<Atom> atoms;
};

class TensorExpr {
public:
    std::vector<Term> terms;

    TensorExpr() = default;
    static TensorExpr scalar(const mpq_class& c);
    static TensorExpr atom(Atom a);

    bool empty() const { return terms.empty(); }

    TensorExpr& operator+=(const TensorExpr& o);
    TensorExpr& operator-=(const TensorExpr& o);
    TensorExpr& operator*=(const mpq_class& c);
    friend TensorExpr operator+(TensorExpr a, const TensorExpr& b) { return a += b; }
    friend TensorExpr operator-(TensorExpr a, const TensorExpr& b) { return a -= b; }
    friend TensorExpr operator*(TensorExpr a, const mpq_class& c) { return a *= c; }
    friend TensorExpr operator*(const mpq_class& c, TensorExpr a) { return a *= c; }
    // Dummies of the right factor are renumbered; free names are shared.
    friend TensorExpr operator*(const TensorExpr& a, const TensorExpr& b);

    // Printed in the parser's syntax; dummies become Greek letters.
    std::string str() const;
};

// Grammar: terms joined by + / -, each an optional rational then factors
//   C<g>_{i j ..}   D^{i j}   L_{d .. m}^{i j}   N_{m}(factor)
// An index appearing twice in one term is contracted, once is free.
TensorExpr parse_tensor_expr(std::string_view text);

// Throws Invariant on unbalanced indices, Overflow past 12 dummies in a term.
TensorExpr canonicalize(const TensorExpr& e);
bool is_zero(const TensorExpr& e);

// Leibniz: marks a pending derivative on each atom of each term.
TensorExpr nabla(const Idx& mu, const TensorExpr& e);

struct RewriteRules {
    bool jetness = true;       // nabla C^{(g)}_I = C^{(g)}_{mu I}; otherwise 0
    bool quadratic = true;     // keep Delta C^{(0)} Delta in nabla Delta
    int torsion_sign = 1;      // coefficient of Lambda_mu in nabla Delta; 0 drops it
};

// Evaluates every pending derivative in the parallel frame.
TensorExpr nabla_rewrite(const TensorExpr& e, const RewriteRules& rules = {});

// Feynman sum of C^{(g)}_{legs} in the curved frame, over stable graphs weighted 1/|Aut|.
// Vertices are parallel-frame jets, edges Delta. Legs must be free.
TensorExpr feynman_sum(int g, const std::vector<Idx>& legs);

// Reads C atoms as curved-frame correlators and pending derivatives as the curved
// connection; returns the parallel-frame expansion. Delta and Lambda pass through.
TensorExpr expand_curved(const TensorExpr& e);

TensorExpr drop_lambda(const TensorExpr& e);

struct AnomalyOptions {
    bool lambda_zero = false;
    mpq_class split_coef{1, 2};
    mpq_class loop_coef{1, 2};
    mpq_class theta_coef{1, 2};
};

struct Certificate {
    std::string identity;  // curved-frame statement
    TensorExpr lhs;        // canonical parallel-frame expansions
    TensorExpr rhs;
    TensorExpr residual;
    bool holds = false;

    std::string text() const;
};

// Right-hand side of the anomaly equation for C^{(g)}_{1..n}, in the curved frame.
TensorExpr anomaly_rhs(int g, int n, const AnomalyOptions& opt = {});

Certificate verify_identity(const TensorExpr& curved_lhs, const TensorExpr& curved_rhs, bool lambda_zero = false);
Certificate verify_anomaly(int g, int n, const AnomalyOptions& opt = {});
// Holomorphic form: 0 = dbar_1 C^{(g)}_{2..n} + split + loop, with dbar Delta = -Lambda.
Certificate verify_hae(int g, int n, const AnomalyOptions& opt = {});
// d of the genus-one one-form against theta_coef (C_{1jk} L_2^{jk} - C_{2jk} L_1^{jk}).
Certificate verify_curvature_condition(const AnomalyOptions& opt = {});

// Re-parses lhs and rhs and recomputes the residual.
bool replay(const Certificate& c);

}  // namespace fockforge
