#include "fockforge/anomalysym.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

#include "fockforge/stablegraphs.hpp"

namespace fockforge {

namespace {

constexpr int kMaxDummies = 12;
const char* const kGreek[kMaxDummies] = {"α", "β", "γ", "δ", "ε", "ζ", "η", "θ", "κ", "λ", "μ", "ν"};

std::string fresh_name() {
    thread_local long counter = 0;
    return "#" + std::to_string(counter++);
}

template <class F>
void for_each_idx(Atom& a, F&& f) {
    for (auto& x : a.pending) f(x, false);
    for (auto& x : a.lower) f(x, false);
    for (auto& x : a.upper) f(x, true);
}

template <class F>
void for_each_idx(const Atom& a, F&& f) {
    for (const auto& x : a.pending) f(x, false);
    for (const auto& x : a.lower) f(x, false);
    for (const auto& x : a.upper) f(x, true);
}

int max_dummy(const Term& t) {
    int m = -1;
    for (const auto& a : t.atoms) for_each_idx(a, [&](const Idx& x, bool) { m = std::max(m, x.dummy); });
    return m;
}

void shift_dummies(Term& t, int by) {
    for (auto& a : t.atoms)
        for_each_idx(a, [&](Idx& x, bool) {
            if (!x.is_free()) x.dummy += by;
        });
}

// Dummies become fresh free names, so products can share them.
Term unbind(const Term& t, std::vector<std::string>& names) {
    Term out = t;
    std::map<int, std::string> m;
    for (auto& a : out.atoms)
        for_each_idx(a, [&](Idx& x, bool) {
            if (x.is_free()) return;
            auto it = m.find(x.dummy);
            if (it == m.end()) {
                it = m.emplace(x.dummy, fresh_name()).first;
                names.push_back(it->second);
            }
            x = Idx::free(it->second);
        });
    return out;
}

TensorExpr bind_names(TensorExpr e, const std::vector<std::string>& names) {
    for (auto& t : e.terms) {
        int next = max_dummy(t) + 1;
        for (const auto& n : names) {
            int seen = 0;
            for (auto& a : t.atoms)
                for_each_idx(a, [&](Idx& x, bool) {
                    if (x.is_free() && x.name == n) {
                        x = Idx::bound(next);
                        ++seen;
                    }
                });
            require(seen == 2, ErrorKind::Invariant, "unbalanced indices: contraction appears " + std::to_string(seen) + " times");
            ++next;
        }
    }
    return e;
}

TensorExpr rename(TensorExpr e, const std::string& from, const std::string& to) {
    for (auto& t : e.terms)
        for (auto& a : t.atoms)
            for_each_idx(a, [&](Idx& x, bool) {
                if (x.is_free() && x.name == from) x.name = to;
            });
    return e;
}

Atom make_c(int g, std::vector<Idx> lower) {
    Atom a;
    a.kind = AtomKind::C;
    a.genus = g;
    a.lower = std::move(lower);
    return a;
}

Atom make_delta(Idx a, Idx b) {
    Atom x;
    x.kind = AtomKind::Delta;
    x.upper = {std::move(a), std::move(b)};
    return x;
}

Atom make_lambda(std::vector<Idx> lower, Idx a, Idx b) {
    Atom x;
    x.kind = AtomKind::Lambda;
    x.lower = std::move(lower);
    x.upper = {std::move(a), std::move(b)};
    return x;
}

std::vector<Idx> frees(std::initializer_list<std::string> names) {
    std::vector<Idx> v;
    for (const auto& n : names) v.push_back(Idx::free(n));
    return v;
}

// ---- canonical form ----

struct Group {
    std::vector<Idx> idx;
    bool symmetric;
};

std::vector<Group> groups_of(const Atom& a) {
    std::vector<Group> gs;
    for (const auto& p : a.pending) gs.push_back({{p}, false});
    if (a.kind == AtomKind::Lambda) {
        for (const auto& l : a.lower) gs.push_back({{l}, false});
    } else if (!a.lower.empty() || a.kind == AtomKind::C) {
        gs.push_back({a.lower, true});
    }
    if (!a.upper.empty()) gs.push_back({a.upper, true});
    return gs;
}

std::string base_label(const Atom& a) {
    std::string s = a.kind == AtomKind::C ? "C" + std::to_string(a.genus) : a.kind == AtomKind::Delta ? "D" : "L";
    s += "/" + std::to_string(a.pending.size()) + "/" + std::to_string(a.lower.size()) + "/" + std::to_string(a.upper.size());
    for (const auto& g : groups_of(a)) {
        std::vector<std::string> f;
        for (const auto& x : g.idx)
            if (x.is_free()) f.push_back(x.name);
        std::sort(f.begin(), f.end());
        s += "[";
        for (const auto& n : f) s += n + ",";
        s += "]";
    }
    return s;
}

struct Endpoint {
    int atom, group;
};

void check_balance(const Term& t) {
    std::map<int, std::pair<int, int>> var;  // dummy -> (lower count, upper count)
    std::set<std::string> free;
    for (const auto& a : t.atoms) {
        require(a.kind != AtomKind::Delta || (a.lower.empty() && a.upper.size() == 2), ErrorKind::Invariant,
                "propagator needs two upper indices");
        require(a.kind != AtomKind::Lambda || (!a.lower.empty() && a.upper.size() == 2), ErrorKind::Invariant,
                "torsion atom needs a form index and two upper indices");
        require(a.kind != AtomKind::C || a.upper.empty(), ErrorKind::Invariant, "correlators carry lower indices only");
        for_each_idx(a, [&](const Idx& x, bool up) {
            if (x.is_free()) {
                require(free.insert(x.name).second, ErrorKind::Invariant, "unbalanced indices: free index " + x.name + " repeated");
            } else {
                auto& c = var[x.dummy];
                (up ? c.second : c.first)++;
            }
        });
    }
    for (const auto& [d, c] : var)
        require(c.first == 1 && c.second == 1, ErrorKind::Invariant, "unbalanced indices: contraction must pair one upper and one lower slot");
}

std::set<std::pair<std::string, bool>> free_signature(const Term& t) {
    std::set<std::pair<std::string, bool>> s;
    for (const auto& a : t.atoms)
        for_each_idx(a, [&](const Idx& x, bool up) {
            if (x.is_free()) s.insert({x.name, up});
        });
    return s;
}

class TermCanonizer {
public:
    explicit TermCanonizer(const Term& t) : atoms_(t.atoms) {
        int n = static_cast<int>(atoms_.size());
        groups_.resize(n);
        std::map<int, std::vector<Endpoint>> ends;
        for (int a = 0; a < n; ++a) {
            groups_[a] = groups_of(atoms_[a]);
            for (int g = 0; g < static_cast<int>(groups_[a].size()); ++g)
                for (const auto& x : groups_[a][g].idx)
                    if (!x.is_free()) ends[x.dummy].push_back({a, g});
        }
        require(static_cast<int>(ends.size()) <= kMaxDummies, ErrorKind::Overflow,
                "index alphabet overflow: " + std::to_string(ends.size()) + " contractions in one term (limit " +
                    std::to_string(kMaxDummies) + ")");
        adj_.resize(n);
        for (const auto& [d, e] : ends) {
            partner_[{e[0].atom, e[0].group, d}] = e[1];
            partner_[{e[1].atom, e[1].group, d}] = e[0];
            adj_[e[0].atom].push_back({e[0].group, e[1].atom, e[1].group});
            adj_[e[1].atom].push_back({e[1].group, e[0].atom, e[0].group});
        }
        std::vector<std::string> labels(n);
        for (int a = 0; a < n; ++a) labels[a] = base_label(atoms_[a]);
        std::vector<std::string> sorted = labels;
        std::sort(sorted.begin(), sorted.end());
        sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
        colors0_.resize(n);
        for (int a = 0; a < n; ++a)
            colors0_[a] = static_cast<int>(std::lower_bound(sorted.begin(), sorted.end(), labels[a]) - sorted.begin());
    }

    // Returns the canonical key and rewrites `out` into canonical atom order and dummy numbering.
    std::string run(Term& out) {
        search(colors0_);
        out.atoms = best_atoms_;
        return best_;
    }

private:
    struct Adj {
        int group, atom, other_group;
    };

    static int rerank(std::vector<long>& keys, std::vector<int>& colors) {
        std::vector<long> s = keys;
        std::sort(s.begin(), s.end());
        s.erase(std::unique(s.begin(), s.end()), s.end());
        for (std::size_t i = 0; i < keys.size(); ++i)
            colors[i] = static_cast<int>(std::lower_bound(s.begin(), s.end(), keys[i]) - s.begin());
        return static_cast<int>(s.size());
    }

    void refine(std::vector<int>& colors) const {
        int n = static_cast<int>(colors.size());
        int cells = static_cast<int>(std::set<int>(colors.begin(), colors.end()).size());
        while (true) {
            std::vector<std::pair<int, std::vector<std::array<int, 3>>>> sig(n);
            for (int a = 0; a < n; ++a) {
                sig[a].first = colors[a];
                for (const auto& e : adj_[a]) sig[a].second.push_back({e.group, colors[e.atom], e.other_group});
                std::sort(sig[a].second.begin(), sig[a].second.end());
            }
            auto s = sig;
            std::sort(s.begin(), s.end());
            s.erase(std::unique(s.begin(), s.end()), s.end());
            for (int a = 0; a < n; ++a) colors[a] = static_cast<int>(std::lower_bound(s.begin(), s.end(), sig[a]) - s.begin());
            int now = static_cast<int>(s.size());
            if (now == cells) return;
            cells = now;
        }
    }

    void search(std::vector<int> colors) {
        refine(colors);
        int n = static_cast<int>(colors.size());
        std::vector<int> count(n, 0);
        for (int c : colors) ++count[c];
        int cell = -1;
        for (int c = 0; c < n && cell < 0; ++c)
            if (count[c] > 1) cell = c;
        if (cell < 0) {
            leaf(colors);
            return;
        }
        for (int x = 0; x < n; ++x) {
            if (colors[x] != cell) continue;
            std::vector<long> keys(n);
            for (int y = 0; y < n; ++y) keys[y] = 2L * colors[y] + (colors[y] == cell && y != x ? 1 : 0);
            std::vector<int> next(n);
            rerank(keys, next);
            search(next);
        }
    }

    void leaf(const std::vector<int>& colors) {
        int n = static_cast<int>(colors.size());
        std::vector<int> order(n), pos(n);
        for (int a = 0; a < n; ++a) order[colors[a]] = a;
        for (int i = 0; i < n; ++i) pos[order[i]] = i;
        std::map<int, int> name;
        std::string key;
        std::vector<Atom> atoms;
        for (int i = 0; i < n; ++i) {
            int a = order[i];
            const auto& gs = groups_[a];
            Atom out = atoms_[a];
            std::vector<std::vector<Idx>> renamed(gs.size());
            key += base_label(atoms_[a]) + "{";
            for (int g = 0; g < static_cast<int>(gs.size()); ++g) {
                std::vector<std::pair<std::pair<int, int>, int>> fresh;
                for (const auto& x : gs[g].idx)
                    if (!x.is_free() && !name.count(x.dummy)) {
                        Endpoint p = partner_.at({a, g, x.dummy});
                        fresh.push_back({{pos[p.atom], p.group}, x.dummy});
                    }
                std::sort(fresh.begin(), fresh.end());
                for (const auto& f : fresh) name.emplace(f.second, static_cast<int>(name.size()));
                std::vector<std::string> tokens;
                for (const auto& x : gs[g].idx) {
                    if (x.is_free()) {
                        tokens.push_back("'" + x.name);
                        renamed[g].push_back(x);
                    } else {
                        int k = name.at(x.dummy);
                        tokens.push_back(std::string("#") + char('A' + k));
                        renamed[g].push_back(Idx::bound(k));
                    }
                }
                if (gs[g].symmetric) {
                    std::vector<std::size_t> perm(tokens.size());
                    for (std::size_t k = 0; k < perm.size(); ++k) perm[k] = k;
                    std::sort(perm.begin(), perm.end(), [&](std::size_t u, std::size_t v) { return tokens[u] < tokens[v]; });
                    std::vector<std::string> t2;
                    std::vector<Idx> r2;
                    for (auto k : perm) {
                        t2.push_back(tokens[k]);
                        r2.push_back(renamed[g][k]);
                    }
                    tokens = std::move(t2);
                    renamed[g] = std::move(r2);
                }
                for (const auto& tk : tokens) key += tk + " ";
                key += "|";
            }
            key += "}";
            // Write the renamed groups back in slot order.
            std::size_t g = 0;
            for (auto& p : out.pending) p = renamed[g++][0];
            if (out.kind == AtomKind::Lambda) {
                for (auto& l : out.lower) l = renamed[g++][0];
            } else if (!out.lower.empty() || out.kind == AtomKind::C) {
                out.lower = renamed[g++];
            }
            if (!out.upper.empty()) out.upper = renamed[g++];
            atoms.push_back(std::move(out));
        }
        if (!have_ || key < best_) {
            have_ = true;
            best_ = key;
            best_atoms_ = std::move(atoms);
        }
    }

    std::vector<Atom> atoms_;
    std::vector<std::vector<Group>> groups_;
    std::vector<std::vector<Adj>> adj_;
    std::map<std::tuple<int, int, int>, Endpoint> partner_;
    std::vector<int> colors0_;
    bool have_ = false;
    std::string best_;
    std::vector<Atom> best_atoms_;
};

// ---- printing ----

std::string print_idx_list(const std::vector<Idx>& v, std::map<int, std::string>& names) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += " ";
        if (v[i].is_free()) {
            s += v[i].name;
        } else {
            auto it = names.find(v[i].dummy);
            if (it == names.end()) {
                int k = static_cast<int>(names.size());
                std::string nm = k < kMaxDummies ? kGreek[k] : "ω" + std::to_string(k);
                it = names.emplace(v[i].dummy, nm).first;
            }
            s += it->second;
        }
    }
    return s;
}

std::string print_atom(const Atom& a, std::map<int, std::string>& names) {
    std::string head;
    std::size_t depth = a.pending.size();
    for (const auto& p : a.pending) head += "N_{" + print_idx_list({p}, names) + "}(";
    std::string body;
    switch (a.kind) {
        case AtomKind::C:
            body = "C" + std::to_string(a.genus) + "_{" + print_idx_list(a.lower, names) + "}";
            break;
        case AtomKind::Delta:
            body = "D^{" + print_idx_list(a.upper, names) + "}";
            break;
        case AtomKind::Lambda:
            body = "L_{" + print_idx_list(a.lower, names) + "}";
            body += "^{" + print_idx_list(a.upper, names) + "}";
            break;
    }
    return head + body + std::string(depth, ')');
}

// ---- parsing ----

class Parser {
public:
    explicit Parser(std::string_view s) : s_(s) {}

    TensorExpr parse() {
        TensorExpr out;
        skip();
        bool first = true;
        while (pos_ < s_.size()) {
            int sign = 1;
            if (peek() == '+' || peek() == '-') {
                sign = peek() == '-' ? -1 : 1;
                ++pos_;
                skip();
            } else if (!first) {
                fail(ErrorKind::Parse, "expected + or - at offset " + std::to_string(pos_));
            }
            first = false;
            out.terms.push_back(parse_term(sign));
            skip();
        }
        return out;
    }

private:
    char peek() const { return pos_ < s_.size() ? s_[pos_] : '\0'; }
    void skip() {
        while (pos_ < s_.size() && (std::isspace(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '*')) ++pos_;
    }
    void expect(char c) {
        skip();
        require(peek() == c, ErrorKind::Parse, std::string("expected '") + c + "' at offset " + std::to_string(pos_));
        ++pos_;
    }

    std::vector<std::string> index_list() {
        expect('{');
        std::vector<std::string> out;
        std::string cur;
        while (true) {
            require(pos_ < s_.size(), ErrorKind::Parse, "unterminated index list");
            char c = s_[pos_++];
            if (c == '}' || c == ' ' || c == ',' || c == '\t') {
                if (!cur.empty()) out.push_back(cur);
                cur.clear();
                if (c == '}') return out;
            } else {
                cur += c;
            }
        }
    }

    Atom factor() {
        skip();
        char c = peek();
        Atom a;
        if (c == 'N') {
            ++pos_;
            expect('_');
            auto mu = index_list();
            require(mu.size() == 1, ErrorKind::Parse, "derivative takes one index");
            expect('(');
            a = factor();
            expect(')');
            a.pending.insert(a.pending.begin(), Idx::free(mu[0]));
            return a;
        }
        if (c == 'C') {
            ++pos_;
            std::size_t start = pos_;
            while (std::isdigit(static_cast<unsigned char>(peek()))) ++pos_;
            require(pos_ > start, ErrorKind::Parse, "correlator needs a genus");
            a = make_c(std::stoi(std::string(s_.substr(start, pos_ - start))), {});
            expect('_');
            for (auto& n : index_list()) a.lower.push_back(Idx::free(n));
            return a;
        }
        if (c == 'D') {
            ++pos_;
            expect('^');
            auto up = index_list();
            require(up.size() == 2, ErrorKind::Parse, "propagator takes two indices");
            return make_delta(Idx::free(up[0]), Idx::free(up[1]));
        }
        if (c == 'L') {
            ++pos_;
            expect('_');
            auto lo = index_list();
            expect('^');
            auto up = index_list();
            require(!lo.empty() && up.size() == 2, ErrorKind::Parse, "torsion atom is L_{..}^{a b}");
            std::vector<Idx> lower;
            for (auto& n : lo) lower.push_back(Idx::free(n));
            return make_lambda(std::move(lower), Idx::free(up[0]), Idx::free(up[1]));
        }
        std::size_t end = pos_;
        while (end < s_.size() && std::isalnum(static_cast<unsigned char>(s_[end]))) ++end;
        fail(ErrorKind::Parse, "unknown atom '" + std::string(s_.substr(pos_, std::max<std::size_t>(end - pos_, 1))) + "'");
    }

    Term parse_term(int sign) {
        Term t;
        t.coef = sign;
        skip();
        if (std::isdigit(static_cast<unsigned char>(peek()))) {
            std::size_t start = pos_;
            while (std::isdigit(static_cast<unsigned char>(peek())) || peek() == '/') ++pos_;
            mpq_class q(std::string(s_.substr(start, pos_ - start)));
            require(q.get_den() != 0, ErrorKind::Parse, "zero denominator");
            q.canonicalize();
            t.coef *= q;
            skip();
        }
        while (pos_ < s_.size() && peek() != '+' && peek() != '-') {
            t.atoms.push_back(factor());
            skip();
        }
        // Names seen twice are contracted.
        std::map<std::string, int> count;
        for (const auto& a : t.atoms)
            for_each_idx(a, [&](const Idx& x, bool) { ++count[x.name]; });
        std::map<std::string, int> id;
        for (auto& a : t.atoms)
            for_each_idx(a, [&](Idx& x, bool) {
                int k = count[x.name];
                require(k <= 2, ErrorKind::Parse, "index " + x.name + " appears " + std::to_string(k) + " times");
                if (k == 2) {
                    auto it = id.emplace(x.name, static_cast<int>(id.size())).first;
                    x = Idx::bound(it->second);
                }
            });
        return t;
    }

    std::string_view s_;
    std::size_t pos_ = 0;
};

// ---- derivatives ----

TensorExpr derive_atom(const Idx& mu, const Atom& a, const RewriteRules& r) {
    TensorExpr out;
    switch (a.kind) {
        case AtomKind::C:
            if (r.jetness) {
                Atom c = a;
                c.lower.insert(c.lower.begin(), mu);
                out = TensorExpr::atom(c);
            }
            break;
        case AtomKind::Delta: {
            if (r.torsion_sign != 0)
                out += TensorExpr::atom(make_lambda({mu}, a.upper[0], a.upper[1])) * mpq_class(r.torsion_sign);
            if (r.quadratic) {
                std::string s = fresh_name(), t = fresh_name();
                Term q;
                q.atoms = {make_delta(a.upper[0], Idx::free(s)), make_c(0, {Idx::free(s), mu, Idx::free(t)}),
                           make_delta(Idx::free(t), a.upper[1])};
                TensorExpr e;
                e.terms.push_back(q);
                out += bind_names(e, {s, t});
            }
            break;
        }
        case AtomKind::Lambda: {
            Atom l = a;
            l.lower.insert(l.lower.begin(), mu);
            out = TensorExpr::atom(l);
            break;
        }
    }
    return out;
}

// Leibniz rule on an expression without pending derivatives.
TensorExpr derive(const Idx& mu, const TensorExpr& e, const RewriteRules& r) {
    TensorExpr out;
    for (const auto& t0 : e.terms) {
        std::vector<std::string> names;
        Term t = unbind(t0, names);
        TensorExpr sum;
        for (std::size_t i = 0; i < t.atoms.size(); ++i) {
            TensorExpr d = derive_atom(mu, t.atoms[i], r);
            if (d.empty()) continue;
            TensorExpr prod = TensorExpr::scalar(t.coef);
            for (std::size_t j = 0; j < t.atoms.size(); ++j) prod = prod * (j == i ? d : TensorExpr::atom(t.atoms[j]));
            sum += prod;
        }
        out += bind_names(sum, names);
    }
    return out;
}

TensorExpr rewrite_atom(const Atom& a, const RewriteRules& r) {
    if (a.pending.empty()) return TensorExpr::atom(a);
    Atom inner = a;
    Idx mu = inner.pending.front();
    inner.pending.erase(inner.pending.begin());
    return derive(mu, rewrite_atom(inner, r), r);
}

template <class F>
TensorExpr map_terms(const TensorExpr& e, F&& atom_map) {
    TensorExpr out;
    for (const auto& t0 : e.terms) {
        std::vector<std::string> names;
        Term t = unbind(t0, names);
        TensorExpr prod = TensorExpr::scalar(t.coef);
        for (const auto& a : t.atoms) {
            prod = prod * atom_map(a);
            if (prod.empty()) break;
        }
        out += bind_names(prod, names);
    }
    return out;
}

bool stable(int g, int n) { return 2 * g - 2 + n > 0; }

const RewriteRules kCurvedRules{true, true, -1};

// Curved connection minus parallel connection, applied to the external indices of `inner`.
TensorExpr expand_curved_atom(const Atom& a) {
    if (a.pending.empty()) {
        if (a.kind != AtomKind::C) return TensorExpr::atom(a);
        return feynman_sum(a.genus, a.lower);
    }
    Atom base = a;
    Idx mu = base.pending.front();
    base.pending.erase(base.pending.begin());
    TensorExpr inner = expand_curved_atom(base);
    TensorExpr out = derive(mu, inner, kCurvedRules);
    std::vector<Idx> lowers = base.pending;
    lowers.insert(lowers.end(), base.lower.begin(), base.lower.end());
    for (const auto& rho : lowers) {
        std::string s = fresh_name(), n = fresh_name();
        TensorExpr conn = TensorExpr::atom(make_c(0, {mu, rho, Idx::free(s)})) * TensorExpr::atom(make_delta(Idx::free(s), Idx::free(n)));
        out += bind_names(conn * rename(inner, rho.name, n), {s, n});
    }
    for (const auto& nu : base.upper) {
        std::string r = fresh_name(), s = fresh_name();
        TensorExpr conn = TensorExpr::atom(make_c(0, {mu, Idx::free(r), Idx::free(s)})) * TensorExpr::atom(make_delta(Idx::free(s), nu));
        out -= bind_names(conn * rename(inner, nu.name, r), {r, s});
    }
    return out;
}

std::vector<Idx> leg_range(int from, int to) {
    std::vector<Idx> v;
    for (int i = from; i <= to; ++i) v.push_back(Idx::free(std::to_string(i)));
    return v;
}

// Split and loop terms of the anomaly equation, contracted through Lambda_1.
TensorExpr lambda_terms(int g, int n, const AnomalyOptions& opt) {
    TensorExpr out;
    std::vector<Idx> rest = leg_range(2, n);
    int m = static_cast<int>(rest.size());
    Idx one = Idx::free("1");
    for (int mask = 0; mask < (1 << m); ++mask) {
        std::vector<Idx> s1, s2;
        for (int i = 0; i < m; ++i) (mask >> i & 1 ? s1 : s2).push_back(rest[i]);
        for (int k = 0; k <= g; ++k) {
            int l = g - k;
            if (!stable(k, static_cast<int>(s1.size()) + 1) || !stable(l, static_cast<int>(s2.size()) + 1)) continue;
            s1.push_back(Idx::bound(0));
            s2.push_back(Idx::bound(1));
            Term t;
            t.coef = opt.split_coef;
            t.atoms = {make_c(k, s1), make_lambda({one}, Idx::bound(0), Idx::bound(1)), make_c(l, s2)};
            s1.pop_back();
            s2.pop_back();
            out.terms.push_back(t);
        }
    }
    if (g >= 1 && stable(g - 1, m + 2)) {
        std::vector<Idx> legs = rest;
        legs.push_back(Idx::bound(0));
        legs.push_back(Idx::bound(1));
        Term t;
        t.coef = opt.loop_coef;
        t.atoms = {make_c(g - 1, legs), make_lambda({one}, Idx::bound(0), Idx::bound(1))};
        out.terms.push_back(t);
    }
    return out;
}

void require_anomaly_range(int g, int n) {
    require(g >= 0 && n >= 1 && stable(g, n - 1), ErrorKind::Domain,
            "anomaly equation needs a stable (g, n-1); got (" + std::to_string(g) + ", " + std::to_string(n) + ")");
}

std::string c_atom_text(int g, int from, int to) {
    std::map<int, std::string> none;
    return print_atom(make_c(g, leg_range(from, to)), none);
}

}  // namespace

// ---- TensorExpr ----

TensorExpr TensorExpr::scalar(const mpq_class& c) {
    TensorExpr e;
    if (c != 0) e.terms.push_back(Term{c, {}});
    return e;
}

TensorExpr TensorExpr::atom(Atom a) {
    TensorExpr e;
    e.terms.push_back(Term{1, {std::move(a)}});
    return e;
}

TensorExpr& TensorExpr::operator+=(const TensorExpr& o) {
    terms.insert(terms.end(), o.terms.begin(), o.terms.end());
    return *this;
}

TensorExpr& TensorExpr::operator-=(const TensorExpr& o) {
    for (const auto& t : o.terms) terms.push_back(Term{-t.coef, t.atoms});
    return *this;
}

TensorExpr& TensorExpr::operator*=(const mpq_class& c) {
    if (c == 0) {
        terms.clear();
        return *this;
    }
    for (auto& t : terms) t.coef *= c;
    return *this;
}

TensorExpr operator*(const TensorExpr& a, const TensorExpr& b) {
    TensorExpr out;
    out.terms.reserve(a.terms.size() * b.terms.size());
    for (const auto& x : a.terms) {
        int off = max_dummy(x) + 1;
        for (const auto& y : b.terms) {
            Term t = y;
            shift_dummies(t, off);
            t.coef *= x.coef;
            t.atoms.insert(t.atoms.begin(), x.atoms.begin(), x.atoms.end());
            out.terms.push_back(std::move(t));
        }
    }
    return out;
}

std::string TensorExpr::str() const {
    if (terms.empty()) return "0";
    std::string s;
    for (std::size_t i = 0; i < terms.size(); ++i) {
        const Term& t = terms[i];
        mpq_class c = t.coef;
        bool neg = c < 0;
        if (neg) c = -c;
        if (i == 0) {
            if (neg) s += "-";
        } else {
            s += neg ? " - " : " + ";
        }
        bool unit = c == 1 && !t.atoms.empty();
        if (!unit) s += c.get_str();
        std::map<int, std::string> names;
        for (std::size_t k = 0; k < t.atoms.size(); ++k) {
            if (k || !unit) s += " ";
            s += print_atom(t.atoms[k], names);
        }
    }
    return s;
}

TensorExpr parse_tensor_expr(std::string_view text) { return Parser(text).parse(); }

TensorExpr canonicalize(const TensorExpr& e) {
    std::map<std::string, Term> merged;
    bool have_sig = false;
    std::set<std::pair<std::string, bool>> sig;
    for (const auto& t : e.terms) {
        if (t.coef == 0) continue;
        check_balance(t);
        auto s = free_signature(t);
        if (!have_sig) {
            sig = s;
            have_sig = true;
        } else {
            require(s == sig, ErrorKind::Invariant, "unbalanced indices: terms carry different free indices");
        }
        Term c;
        c.coef = t.coef;
        std::string key = TermCanonizer(t).run(c);
        auto [it, fresh] = merged.emplace(key, c);
        if (!fresh) it->second.coef += c.coef;
    }
    TensorExpr out;
    for (auto& [k, t] : merged)
        if (t.coef != 0) out.terms.push_back(std::move(t));
    return out;
}

bool is_zero(const TensorExpr& e) { return canonicalize(e).empty(); }

TensorExpr nabla(const Idx& mu, const TensorExpr& e) {
    require(mu.is_free(), ErrorKind::Invariant, "derivative index must be free");
    TensorExpr out;
    for (const auto& t : e.terms)
        for (std::size_t i = 0; i < t.atoms.size(); ++i) {
            Term c = t;
            c.atoms[i].pending.insert(c.atoms[i].pending.begin(), mu);
            out.terms.push_back(std::move(c));
        }
    return out;
}

TensorExpr nabla_rewrite(const TensorExpr& e, const RewriteRules& rules) {
    return map_terms(e, [&](const Atom& a) { return rewrite_atom(a, rules); });
}

TensorExpr feynman_sum(int g, const std::vector<Idx>& legs) {
    int n = static_cast<int>(legs.size());
    require(g >= 0 && stable(g, n), ErrorKind::Domain, "correlator C" + std::to_string(g) + " with " + std::to_string(n) + " legs is unstable");
    for (const auto& l : legs) require(l.is_free(), ErrorKind::Invariant, "Feynman legs must be free indices");
    TensorExpr out;
    for (const auto& [graph, aut] : enumerate_stable_graphs(g, n)) {
        Term t;
        t.coef = mpq_class(1, aut);
        std::vector<std::vector<Idx>> at(graph.vertex_count());
        for (int l = 0; l < n; ++l) at[graph.legs[l]].push_back(legs[l]);
        for (int e = 0; e < graph.edge_count(); ++e) {
            auto [u, v] = graph.edges[e];
            at[u].push_back(Idx::bound(2 * e));
            at[v].push_back(Idx::bound(2 * e + 1));
            t.atoms.push_back(make_delta(Idx::bound(2 * e), Idx::bound(2 * e + 1)));
        }
        for (int v = 0; v < graph.vertex_count(); ++v) t.atoms.push_back(make_c(graph.genus[v], at[v]));
        out.terms.push_back(std::move(t));
    }
    return out;
}

TensorExpr expand_curved(const TensorExpr& e) { return map_terms(e, expand_curved_atom); }

TensorExpr drop_lambda(const TensorExpr& e) {
    TensorExpr out;
    for (const auto& t : e.terms)
        if (std::none_of(t.atoms.begin(), t.atoms.end(), [](const Atom& a) { return a.kind == AtomKind::Lambda; }))
            out.terms.push_back(t);
    return out;
}

TensorExpr anomaly_rhs(int g, int n, const AnomalyOptions& opt) {
    require_anomaly_range(g, n);
    TensorExpr out = nabla(Idx::free("1"), TensorExpr::atom(make_c(g, leg_range(2, n))));
    return out + lambda_terms(g, n, opt);
}

std::string Certificate::text() const {
    std::ostringstream os;
    os << "identity: " << identity << "\n";
    os << "holds: " << (holds ? "yes" : "no") << "\n";
    os << "lhs terms: " << lhs.terms.size() << "\n";
    os << "lhs: " << lhs.str() << "\n";
    os << "rhs terms: " << rhs.terms.size() << "\n";
    os << "rhs: " << rhs.str() << "\n";
    os << "residual: " << residual.str() << "\n";
    return os.str();
}

Certificate verify_identity(const TensorExpr& curved_lhs, const TensorExpr& curved_rhs, bool lambda_zero) {
    Certificate c;
    c.identity = canonicalize(curved_lhs).str() + " = " + canonicalize(curved_rhs).str();
    TensorExpr l = expand_curved(curved_lhs), r = expand_curved(curved_rhs);
    if (lambda_zero) {
        l = drop_lambda(l);
        r = drop_lambda(r);
    }
    c.lhs = canonicalize(l);
    c.rhs = canonicalize(r);
    c.residual = canonicalize(c.lhs - c.rhs);
    c.holds = c.residual.empty();
    return c;
}

Certificate verify_anomaly(int g, int n, const AnomalyOptions& opt) {
    TensorExpr rhs = anomaly_rhs(g, n, opt);
    return verify_identity(TensorExpr::atom(make_c(g, leg_range(1, n))), rhs, opt.lambda_zero);
}

Certificate verify_hae(int g, int n, const AnomalyOptions& opt) {
    require_anomaly_range(g, n);
    RewriteRules dbar{false, false, opt.lambda_zero ? 0 : -1};
    TensorExpr lam = lambda_terms(g, n, opt);
    TensorExpr total = derive(Idx::free("1"), feynman_sum(g, leg_range(2, n)), dbar) + expand_curved(lam);
    if (opt.lambda_zero) total = drop_lambda(total);
    Certificate c;
    c.identity = "0 = dbar_{1}(" + c_atom_text(g, 2, n) + ") + " + canonicalize(lam).str();
    c.lhs = canonicalize(total);
    c.residual = c.lhs;
    c.holds = c.residual.empty();
    return c;
}

Certificate verify_curvature_condition(const AnomalyOptions& opt) {
    RewriteRules flat{true, true, opt.lambda_zero ? 0 : -1};
    TensorExpr d = derive(Idx::free("1"), feynman_sum(1, frees({"2"})), flat) -
                   derive(Idx::free("2"), feynman_sum(1, frees({"1"})), flat);
    TensorExpr theta = parse_tensor_expr("C0_{1 a b} L_{2}^{a b} - C0_{2 a b} L_{1}^{a b}") * opt.theta_coef;
    if (opt.lambda_zero) theta = drop_lambda(theta);
    Certificate c;
    c.identity = "d(C1) = " + canonicalize(theta).str();
    c.lhs = canonicalize(d);
    c.rhs = canonicalize(theta);
    c.residual = canonicalize(c.lhs - c.rhs);
    c.holds = c.residual.empty();
    return c;
}

bool replay(const Certificate& c) {
    TensorExpr l = parse_tensor_expr(c.lhs.str()), r = parse_tensor_expr(c.rhs.str());
    TensorExpr res = canonicalize(l - r);
    return res.str() == c.residual.str() && res.empty() == c.holds;
}

}  // namespace fockforge
