#include <algorithm>
#include <atomic>
#include <climits>
#include <cstdlib>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>

#include "fockforge/json_io.hpp"
#include "fockforge/quantize.hpp"
#include "fockforge/stablegraphs.hpp"

namespace fockforge {

// ---------------------------------------------------------------- Propagator

Propagator::Propagator(int colors, int cutoff) : colors_(colors), cutoff_(cutoff) {
    require(colors >= 1 && cutoff >= 0, ErrorKind::Domain, "propagator needs colors >= 1 and cutoff >= 0");
    std::size_t side = static_cast<std::size_t>((cutoff + 1) * colors);
    a_.assign(side * side, FieldElem());
}

std::size_t Propagator::slot(const Index& a, const Index& b) const {
    require(a.level <= cutoff_ && b.level <= cutoff_, ErrorKind::Overflow,
            "propagator entry beyond level cutoff " + std::to_string(cutoff_));
    require(a.color < colors_ && b.color < colors_ && a.level >= 0 && b.level >= 0, ErrorKind::Domain,
            "propagator index out of range");
    std::size_t side = static_cast<std::size_t>((cutoff_ + 1) * colors_);
    return static_cast<std::size_t>(a.level * colors_ + a.color) * side + static_cast<std::size_t>(b.level * colors_ + b.color);
}

const FieldElem& Propagator::operator()(const Index& a, const Index& b) const { return a_[slot(a, b)]; }

void Propagator::set(const Index& a, const Index& b, const FieldElem& v) {
    a_[slot(a, b)] = v;
    a_[slot(b, a)] = v;
}

bool Propagator::is_zero() const {
    return std::all_of(a_.begin(), a_.end(), [](const FieldElem& x) { return x.is_zero(); });
}

Propagator Propagator::operator-() const {
    Propagator out = *this;
    for (auto& x : out.a_) x = -x;
    return out;
}

Propagator operator+(const Propagator& a, const Propagator& b) {
    require(a.colors_ == b.colors_ && a.cutoff_ == b.cutoff_, ErrorKind::Domain, "propagator shapes differ");
    Propagator out = a;
    for (std::size_t k = 0; k < out.a_.size(); ++k) out.a_[k] += b.a_[k];
    return out;
}

bool operator==(const Propagator& a, const Propagator& b) {
    return a.colors_ == b.colors_ && a.cutoff_ == b.cutoff_ && a.a_ == b.a_;
}

nlohmann::json Propagator::to_json() const {
    nlohmann::json entries = nlohmann::json::object();
    for (int n = 0; n <= cutoff_; ++n)
        for (int i = 0; i < colors_; ++i)
            for (int m = 0; m <= cutoff_; ++m)
                for (int j = 0; j < colors_; ++j) {
                    Index a{n, i}, b{m, j};
                    if (b < a) continue;
                    const FieldElem& v = (*this)(a, b);
                    if (v.is_zero()) continue;
                    entries[key_string(0, {a, b}).substr(2)] = fockforge::to_json(v);
                }
    return {{"colors", colors_}, {"cutoff", cutoff_}, {"entries", std::move(entries)}};
}

Propagator Propagator::from_json(const nlohmann::json& j) {
    require(j.is_object() && j.contains("colors") && j.contains("cutoff") && j.contains("entries"), ErrorKind::Parse,
            "propagator needs colors, cutoff and entries");
    Propagator d(j["colors"].get<int>(), j["cutoff"].get<int>());
    for (const auto& [k, v] : j["entries"].items()) {
        Key pair = parse_key_string("0|" + k).second;
        require(pair.size() == 2, ErrorKind::Parse, "propagator entry '" + k + "' needs two indices");
        for (const auto& ix : pair)
            require(ix.color < d.colors() && ix.level <= d.cutoff(), ErrorKind::Parse, "propagator entry '" + k + "' out of range");
        d.set(pair[0], pair[1], field_from_json(v));
    }
    return d;
}

namespace {

// R(w)^dagger = g^{-1} R(w)^T g, which is R(-w)^{-1} for unitary R.
MatSeries adjoint(const MatSeries& r, const Matrix& g) {
    Matrix ginv = g.inverse();
    MatSeries a(r.dim(), r.order());
    for (int k = 0; k <= r.order(); ++k) a[k] = ginv * r[k].transpose() * g;
    return a;
}

void check_propagator_inputs(const MatSeries& r, const Matrix& g, int cutoff) {
    require(cutoff >= 0, ErrorKind::Domain, "negative propagator cutoff");
    require(g.rows() == r.dim() && g.cols() == r.dim(), ErrorKind::Domain, "pairing and R differ in dimension");
    require(r.order() >= 2 * cutoff + 1, ErrorKind::Overflow,
            "R known to order " + std::to_string(r.order()) + ", cutoff " + std::to_string(cutoff) + " needs " +
                std::to_string(2 * cutoff + 1));
    require(r.dim() <= kMaxColors, ErrorKind::Domain, "too many colors");
}

Propagator symmetric_from(int dim, int cutoff, const std::function<FieldElem(int, int, int, int)>& entry) {
    Propagator p(dim, cutoff);
    for (int n = 0; n <= cutoff; ++n)
        for (int j = 0; j < dim; ++j)
            for (int m = 0; m <= cutoff; ++m)
                for (int i = 0; i < dim; ++i) {
                    Index a{n, j}, b{m, i};
                    if (b < a) continue;
                    FieldElem v = entry(n, j, m, i);
                    require(v == entry(m, i, n, j), ErrorKind::Invariant,
                            "propagator is not symmetric at " + key_string(0, {a, b}));
                    p.set(a, b, v);
                }
    return p;
}

}  // namespace

Propagator givental_propagator(const MatSeries& r, const Matrix& g, int cutoff) {
    check_propagator_inputs(r, g, cutoff);
    int dim = r.dim();
    int top = 2 * cutoff + 1;
    MatSeries a = adjoint(r, g);
    // N(w, z) = R(w)^dagger R(z) - id, N[a][b] the w^a z^b coefficient.
    std::vector<std::vector<Matrix>> N(static_cast<std::size_t>(top + 1));
    for (int x = 0; x <= top; ++x)
        for (int y = 0; x + y <= top; ++y) {
            Matrix m = a[x] * r[y];
            if (x == 0 && y == 0) m -= Matrix::identity(dim);
            N[x].push_back(std::move(m));
        }
    // (z + w) Q = N, solved along b: Q[a][b] = sum_k (-1)^k N[a-k][b+1+k].
    std::vector<std::vector<Matrix>> Q(static_cast<std::size_t>(top));
    for (int x = 0; x < top; ++x)
        for (int y = 0; x + y < top; ++y) {
            Matrix q(dim, dim);
            for (int k = 0; k <= x; ++k) {
                if (k % 2 == 0)
                    q += N[x - k][y + 1 + k];
                else
                    q -= N[x - k][y + 1 + k];
            }
            Q[x].push_back(std::move(q));
        }
    require(N[0][0].is_zero(), ErrorKind::Invariant, "R(0) is not unitary");
    for (int x = 1; x <= top; ++x)
        require(N[x][0] == Q[x - 1][0], ErrorKind::Invariant,
                "numerator not divisible by z + w at w^" + std::to_string(x) + ": R is not unitary");
    Matrix ginv = g.inverse();
    return symmetric_from(dim, cutoff, [&](int n, int j, int m, int i) {
        FieldElem v = (Q[n][m] * ginv)(j, i);
        return (n + m) % 2 == 0 ? v : -v;
    });
}

Propagator propagator_crosscheck(const MatSeries& r, const Matrix& g, int cutoff) {
    check_propagator_inputs(r, g, cutoff);
    int dim = r.dim();
    require(series_mul(adjoint(r, g).reflect(), r) == MatSeries::identity(dim, r.order()), ErrorKind::Invariant,
            "R is not unitary");
    MatSeries rinv = series_inverse(r);
    Matrix ginv = g.inverse();
    return symmetric_from(dim, cutoff, [&](int n, int j, int m, int i) {
        Matrix s(dim, dim);
        for (int c = 0; c <= m; ++c) s += rinv[c] * r[n + m + 1 - c];
        FieldElem v = (s * ginv)(i, j);
        return n % 2 == 0 ? v : -v;
    });
}

// ---------------------------------------------------------------- contraction engine

int worker_count() {
    if (const char* env = std::getenv("FOCKFORGE_THREADS")) {
        char* end = nullptr;
        long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v >= 1) return static_cast<int>(std::min(v, 256L));
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

namespace {

// Evaluates f(0..n-1) on worker threads; results land in index order.
template <class Out, class F>
std::vector<Out> parallel_map(std::size_t n, F f) {
    std::vector<Out> out(n);
    std::vector<std::exception_ptr> errs(n);
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t k = next++; k < n; k = next++) {
            try {
                out[k] = f(k);
            } catch (...) {
                errs[k] = std::current_exception();
            }
        }
    };
    int threads = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(worker_count()), n));
    if (threads <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t) pool.emplace_back(work);
        for (auto& th : pool) th.join();
    }
    for (auto& e : errs)
        if (e) std::rethrow_exception(e);
    return out;
}

std::vector<Index> all_indices(int colors, int cutoff) {
    std::vector<Index> v;
    for (int l = 0; l <= cutoff; ++l)
        for (int c = 0; c < colors; ++c) v.push_back({l, c});
    return v;
}

struct GraphFrame {
    std::vector<Key> keys;  // legs per vertex
    std::vector<int> rem;   // 3g_v - 3 + n_v minus the levels placed so far
    bool feasible = true;
};

GraphFrame frame_for(const StableGraph& G, const Key& legs) {
    GraphFrame f;
    int nv = G.vertex_count();
    f.keys.assign(static_cast<std::size_t>(nv), {});
    f.rem.assign(static_cast<std::size_t>(nv), 0);
    for (std::size_t l = 0; l < legs.size(); ++l) f.keys[G.legs[l]].push_back(legs[l]);
    for (int v = 0; v < nv; ++v) {
        int s = 3 * G.genus[v] - 3 + G.valence(v);
        for (const auto& ix : f.keys[v]) s -= ix.level;
        f.rem[v] = s;
        if (s < 0) f.feasible = false;
    }
    return f;
}

// Highest flag level reachable at any vertex carrying a flag.
template <class V>
class Contractor {
public:
    using VertexFn = std::function<V(int, const Key&)>;
    Contractor(const Propagator& d, VertexFn vertex, V zero)
        : d_(d), vertex_(std::move(vertex)), zero_(std::move(zero)), idx_(all_indices(d.colors(), d.cutoff())) {}

    V operator()(int g, const Key& legs) const {
        V total = zero_;
        for (const auto& gw : enumerate_stable_graphs(g, static_cast<int>(legs.size()))) {
            const StableGraph& G = gw.graph;
            GraphFrame f = frame_for(G, legs);
            if (!f.feasible) continue;
            if (G.edge_count() > 0 && d_.is_zero()) continue;
            for (int v = 0; v < G.vertex_count(); ++v)
                if (G.valence(v) > static_cast<int>(f.keys[v].size()))
                    require(f.rem[v] <= d_.cutoff(), ErrorKind::Overflow,
                            "propagator cutoff " + std::to_string(d_.cutoff()) + " below required level " +
                                std::to_string(f.rem[v]));
            V acc = zero_;
            walk(G, f, 0, FieldElem(1), acc);
            total += FieldElem(mpq_class(mpz_class(1), mpz_class(gw.aut))) * acc;
        }
        return total;
    }

private:
    const Propagator& d_;
    VertexFn vertex_;
    V zero_;
    std::vector<Index> idx_;

    void walk(const StableGraph& G, GraphFrame& f, int e, const FieldElem& weight, V& acc) const {
        if (e == G.edge_count()) {
            V prod = zero_;
            bool first = true;
            for (int v = 0; v < G.vertex_count(); ++v) {
                V x = vertex_(G.genus[v], sorted_key(f.keys[v]));
                if (x.is_zero()) return;
                if (first) {
                    prod = std::move(x);
                    first = false;
                } else {
                    prod = prod * x;
                }
            }
            acc += weight * prod;
            return;
        }
        auto [u, v] = G.edges[e];
        for (const Index& a : idx_) {
            if (a.level > f.rem[u]) break;
            f.rem[u] -= a.level;
            f.keys[u].push_back(a);
            for (const Index& b : idx_) {
                if (b.level > f.rem[v]) break;
                const FieldElem& w = d_(a, b);
                if (w.is_zero()) continue;
                f.rem[v] -= b.level;
                f.keys[v].push_back(b);
                walk(G, f, e + 1, weight * w, acc);
                f.keys[v].pop_back();
                f.rem[v] += b.level;
            }
            f.keys[u].pop_back();
            f.rem[u] += a.level;
        }
    }
};

struct Task {
    int g;
    Key key;
};

template <class V>
class Memo {
public:
    explicit Memo(std::function<V(int, const Key&)> compute) : compute_(std::move(compute)) {}
    V operator()(int g, const Key& k) const {
        {
            std::lock_guard<std::mutex> lock(mu_);
            auto it = cache_.find({g, k});
            if (it != cache_.end()) return it->second;
        }
        V v = compute_(g, k);
        std::lock_guard<std::mutex> lock(mu_);
        return cache_.emplace(std::make_pair(g, k), std::move(v)).first->second;
    }

private:
    std::function<V(int, const Key&)> compute_;
    mutable std::mutex mu_;
    mutable std::map<std::pair<int, Key>, V> cache_;
};

std::pair<Key, std::vector<int>> split_level1(const Key& k) {
    Key a;
    std::vector<int> l1;
    for (const auto& ix : k) {
        if (ix.level == 1)
            l1.push_back(ix.color);
        else
            a.push_back(ix);
    }
    return {a, l1};
}

}  // namespace

CorrelatorTable feynman_transform(const CorrelatorTable& t, const Propagator& d) {
    require(d.colors() == t.colors, ErrorKind::Domain, "propagator and table differ in colors");
    // Only one-vertex graphs survive a zero propagator.
    if (d.is_zero()) return t;
    auto vertex = std::make_shared<Memo<FieldElem>>([&t](int g, const Key& k) -> FieldElem {
        if (excess(k) > 3 * g - 3) return FieldElem();
        int l0 = g < static_cast<int>(t.level0_cap.size()) ? t.level0_cap[g] : t.cap[g];
        require(g <= t.g_max() && static_cast<int>(k.size()) <= t.cap[g] && level0_count(k) <= l0, ErrorKind::Overflow,
                "vertex " + key_string(g, k) + " lies outside the table's caps");
        return t.get(g, k);
    });
    Contractor<FieldElem> contract(d, [vertex](int g, const Key& k) { return (*vertex)(g, k); }, FieldElem());
    std::vector<Task> tasks;
    for (int g = 0; g <= t.g_max(); ++g)
        for (Key& k : t.universe(g)) tasks.push_back({g, std::move(k)});
    auto vals = parallel_map<FieldElem>(tasks.size(), [&](std::size_t i) { return contract(tasks[i].g, tasks[i].key); });
    CorrelatorTable out;
    out.colors = t.colors;
    out.cap = t.cap;
    out.level0_cap = t.level0_cap;
    out.dilaton = t.dilaton;
    for (std::size_t i = 0; i < tasks.size(); ++i) out.set(tasks[i].g, tasks[i].key, vals[i]);
    return out;
}

namespace {

std::vector<Task> closed_form_outputs(const ClosedFormElement& e) {
    std::vector<Task> tasks;
    for (int g = 0; g <= e.g_max; ++g)
        for (Key& k : tame_keys(g, e.colors, e.level0_budget(g), INT_MAX, false)) tasks.push_back({g, std::move(k)});
    if (e.g_max >= 1)
        for (int i = 0; i < e.colors; ++i) tasks.push_back({1, {{1, i}}});
    return tasks;
}

}  // namespace

int required_cutoff(const ClosedFormElement& e) {
    // A flagged vertex has rem <= 3g - 4 + n - sum of leg levels, with equality on
    // the one-loop graph (g >= 1) or a one-edge tree (g = 0). All-level-0 keys dominate.
    int best = 0;
    for (int g = 0; g <= e.g_max; ++g) {
        int n = e.level0_budget(g);
        if (g == 0 ? n >= 4 : 2 * g - 2 + n > 0) best = std::max(best, 3 * g - 4 + n);
    }
    return best;
}

int max_key_level(const ClosedFormElement& e) {
    int best = 0;
    for (int g = 0; g <= e.g_max; ++g)
        for (const Key& k : tame_keys(g, 1, e.level0_budget(g), INT_MAX, false))
            for (const auto& ix : k) best = std::max(best, ix.level);
    for (std::size_t g = 0; g < e.coeffs.size(); ++g)
        for (const auto& [k, r] : e.coeffs[g])
            for (const auto& ix : k) best = std::max(best, ix.level);
    return best;
}

ClosedFormElement feynman_transform(const ClosedFormElement& e, const Propagator& d) {
    require(d.colors() == e.colors, ErrorKind::Domain, "propagator and element differ in colors");
    if (d.is_zero()) return e;
    RatFun zero(e.disc);
    auto vertex = std::make_shared<Memo<RatFun>>([&e](int g, const Key& k) -> RatFun {
        if (excess(k) > 3 * g - 3) return RatFun(e.disc);
        auto [a, l1] = split_level1(k);
        require(g <= e.g_max && level0_count(a) <= e.level0_budget(g), ErrorKind::Overflow,
                "vertex " + key_string(g, k) + " exceeds the level-0 budget");
        return e.derivative(g, a, l1);
    });
    Contractor<RatFun> contract(d, [vertex](int g, const Key& k) { return (*vertex)(g, k); }, zero);
    std::vector<Task> tasks = closed_form_outputs(e);
    auto vals = parallel_map<RatFun>(tasks.size(), [&](std::size_t i) { return contract(tasks[i].g, tasks[i].key); });
    ClosedFormElement out = e;
    out.coeffs.assign(static_cast<std::size_t>(e.g_max + 1), {});
    out.gradient.assign(static_cast<std::size_t>(e.colors), zero);
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        const Task& t = tasks[i];
        if (t.g == 1 && t.key.size() == 1 && t.key[0].level == 1)
            out.gradient[t.key[0].color] = vals[i];
        else if (!vals[i].is_zero())
            out.coeffs[t.g].emplace(t.key, std::move(vals[i]));
    }
    return out;
}

// ---------------------------------------------------------------- translate

namespace {

FieldElem xi_at(const Dilaton& xi, const Index& ix) {
    if (ix.level >= static_cast<int>(xi.size())) return FieldElem();
    const auto& row = xi[ix.level];
    return ix.color < static_cast<int>(row.size()) ? row[ix.color] : FieldElem();
}

// Distinct (index, multiplicity) runs of a sorted key.
std::vector<std::pair<Index, int>> runs(const Key& k) {
    std::vector<std::pair<Index, int>> out;
    for (const auto& ix : k) {
        if (!out.empty() && out.back().first == ix)
            ++out.back().second;
        else
            out.push_back({ix, 1});
    }
    return out;
}

void require_small_keys_vanish(int g, const std::map<Key, RatFun>& acc, const char* where) {
    for (const auto& [k, r] : acc) {
        bool unstable = (g == 0 && k.size() < 3);
        require(!unstable || r.is_zero(), ErrorKind::Invariant,
                std::string(where) + " produced a nonzero unstable coefficient " + key_string(g, k));
    }
}

}  // namespace

ClosedFormElement translate(const ClosedFormElement& e, const Dilaton& xi) {
    if (!xi.empty())
        for (const auto& x : xi[0]) require(x.is_zero(), ErrorKind::Domain, "translation must have xi_0 = 0");
    ClosedFormElement out = e;
    out.coeffs.assign(e.coeffs.size(), {});
    for (std::size_t gi = 0; gi < e.coeffs.size(); ++gi) {
        int g = static_cast<int>(gi);
        std::map<Key, RatFun> acc;
        for (const auto& [m, c] : e.coeffs[gi]) {
            Key low, high;
            for (const auto& ix : m) (ix.level >= 2 ? high : low).push_back(ix);
            auto hr = runs(high);
            // Choose how many copies of each high index move into L.
            std::vector<int> take(hr.size(), 0);
            while (true) {
                FieldElem w(1);
                Key rest = low;
                for (std::size_t r = 0; r < hr.size() && !w.is_zero(); ++r) {
                    if (take[r] > 0) {
                        FieldElem x = -xi_at(xi, hr[r].first);
                        mpz_class f;
                        mpz_fac_ui(f.get_mpz_t(), static_cast<unsigned long>(take[r]));
                        w *= x.pow(take[r]) / FieldElem(mpq_class(f));
                    }
                    for (int s = take[r]; s < hr[r].second; ++s) rest.push_back(hr[r].first);
                }
                if (!w.is_zero()) {
                    rest = sorted_key(std::move(rest));
                    auto it = acc.find(rest);
                    if (it == acc.end())
                        acc.emplace(rest, w * c);
                    else
                        it->second += w * c;
                }
                std::size_t r = 0;
                while (r < hr.size() && take[r] == hr[r].second) take[r++] = 0;
                if (r == hr.size()) break;
                ++take[r];
            }
        }
        require_small_keys_vanish(g, acc, "translate");
        for (auto& [k, r] : acc) {
            if (r.is_zero() || (g == 0 && k.size() < 3)) continue;
            if (g == 1 && k.empty()) {
                for (int i = 0; i < e.colors; ++i) out.gradient[i] += r.derivative(i);
                continue;
            }
            out.coeffs[gi].emplace(k, std::move(r));
        }
    }
    std::size_t rows = std::max(e.dilaton.size(), xi.size());
    out.dilaton.assign(rows, std::vector<FieldElem>(static_cast<std::size_t>(e.colors)));
    for (std::size_t n = 0; n < rows; ++n)
        for (int i = 0; i < e.colors; ++i) {
            Index ix{static_cast<int>(n), i};
            FieldElem d = n < e.dilaton.size() && i < static_cast<int>(e.dilaton[n].size()) ? e.dilaton[n][i] : FieldElem();
            out.dilaton[n][i] = d + xi_at(xi, ix);
        }
    // Normalize the discriminant to 1 at the new base.
    std::array<FieldElem, kSlots> at;
    std::vector<FieldElem> base = out.base_q1();
    for (int i = 0; i < e.colors; ++i) at[q1_slot(i)] = base[i];
    FieldElem pv = e.disc->poly().evaluate(at);
    require(!pv.is_zero(), ErrorKind::Domain, "shifted base lies on the discriminant");
    FieldElem inv = pv.inverse();
    out.disc = std::make_shared<Discriminant>(inv * e.disc->poly());
    auto rescale = [&](const RatFun& r) {
        if (r.is_zero()) return RatFun(out.disc);
        return RatFun(out.disc, inv.pow(r.exponent()) * r.num(), r.exponent());
    };
    for (auto& m : out.coeffs)
        for (auto& [k, r] : m) r = rescale(r);
    for (auto& r : out.gradient) r = rescale(r);
    return out;
}

// ---------------------------------------------------------------- substitute_R

namespace {

// y_n^i as a linear form in the new variables (levels 0 and >= 2) plus a q_1 part.
struct LinForm {
    std::vector<std::pair<Index, FieldElem>> vars;
    MultiPoly constant;
};

using KeyPoly = std::map<Key, MultiPoly>;

KeyPoly multiply(const KeyPoly& p, const LinForm& f, int max_level0) {
    KeyPoly out;
    for (const auto& [k, poly] : p) {
        int l0 = level0_count(k);
        for (const auto& [ix, c] : f.vars) {
            if (ix.level == 0 && l0 + 1 > max_level0) continue;
            Key kk = k;
            kk.insert(std::upper_bound(kk.begin(), kk.end(), ix), ix);
            out[kk] += c * poly;
        }
        if (!f.constant.is_zero()) out[k] += poly * f.constant;
    }
    for (auto it = out.begin(); it != out.end();) it = it->second.is_zero() ? out.erase(it) : std::next(it);
    return out;
}

Key key_from_q0(const Mono& m, int colors) {
    Key k;
    for (int c = 0; c < colors; ++c)
        for (int s = 0; s < m[q0_slot(c)]; ++s) k.push_back({0, c});
    return k;
}

Key merge(const Key& a, const Key& b) {
    Key k = a;
    k.insert(k.end(), b.begin(), b.end());
    return sorted_key(std::move(k));
}

}  // namespace

ClosedFormElement substitute_R(const ClosedFormElement& e, const MatSeries& phi) {
    int N = e.colors;
    require(phi.dim() == N, ErrorKind::Domain, "frame and element differ in colors");
    int top = max_key_level(e);
    require(phi.order() >= top, ErrorKind::Overflow,
            "frame known to order " + std::to_string(phi.order()) + ", keys reach level " + std::to_string(top));
    MatSeries B = series_inverse(phi);
    auto Bk = [&](int k) { return k <= B.order() ? B[k] : Matrix(N, N); };

    ClosedFormElement out;
    out.colors = N;
    out.g_max = e.g_max;
    out.n_legs = e.n_legs;

    // New dilaton D' = phi D; rows past e.dilaton are zero.
    int rows = phi.order() + 2;
    out.dilaton.assign(static_cast<std::size_t>(rows), std::vector<FieldElem>(static_cast<std::size_t>(N)));
    for (int n = 1; n < rows; ++n)
        for (int k = 0; k <= std::min(n - 1, phi.order()); ++k) {
            int m = n - k;
            if (m >= static_cast<int>(e.dilaton.size())) continue;
            auto v = phi[k].apply(e.dilaton[m]);
            for (int i = 0; i < N; ++i) out.dilaton[n][i] += v[i];
        }

    // q_1 = B_0 q_1' + B_1 y_0'.
    std::vector<MultiPoly> images(static_cast<std::size_t>(N));
    std::array<std::optional<MultiPoly>, kSlots> q1_only;
    for (int c = 0; c < N; ++c) {
        MultiPoly a, b;
        for (int j = 0; j < N; ++j) {
            a += Bk(0)(c, j) * MultiPoly::var(q1_slot(j));
            b += Bk(1)(c, j) * MultiPoly::var(q0_slot(j));
        }
        q1_only[q1_slot(c)] = a;
        images[c] = a + b;
    }
    out.disc = std::make_shared<Discriminant>(e.disc->poly().compose(q1_only, 0));

    std::vector<MultiPoly> q1new(static_cast<std::size_t>(N));
    for (int j = 0; j < N; ++j) q1new[j] = MultiPoly::var(q1_slot(j)) + MultiPoly(out.dilaton[1][j]);
    auto linform = [&](const Index& ix) {
        LinForm f;
        int n = ix.level;
        for (int k = 0; k <= n; ++k) {
            if (k == n - 1) continue;
            Matrix b = Bk(k);
            for (int j = 0; j < N; ++j)
                if (!b(ix.color, j).is_zero()) f.vars.push_back({{n - k, j}, b(ix.color, j)});
        }
        if (n >= 2) {
            Matrix b = Bk(n - 1);
            for (int j = 0; j < N; ++j) f.constant += b(ix.color, j) * q1new[j];
        }
        return f;
    };

    out.coeffs.assign(e.coeffs.size(), {});
    out.gradient.assign(static_cast<std::size_t>(N), RatFun(out.disc));
    for (std::size_t gi = 0; gi < e.coeffs.size(); ++gi) {
        int g = static_cast<int>(gi);
        int budget = e.level0_budget(g);
        std::map<Key, RatFun> taylor;
        auto add = [&](const Key& k, RatFun r) {
            if (r.is_zero()) return;
            auto it = taylor.find(k);
            if (it == taylor.end())
                taylor.emplace(k, std::move(r));
            else
                it->second += r;
        };
        for (const auto& [k, c] : e.coeffs[gi]) {
            auto shifted = ratfun_shift(c, images, out.disc, budget);
            KeyPoly ex{{Key{}, MultiPoly(FieldElem(mpq_class(mpz_class(1), key_factorial(k))))}};
            for (const auto& ix : k) ex = multiply(ex, linform(ix), budget);
            for (const auto& [mono, r] : shifted) {
                Key fromq0 = key_from_q0(mono, N);
                for (const auto& [kk, poly] : ex) {
                    if (level0_count(kk) + static_cast<int>(fromq0.size()) > budget) continue;
                    add(merge(fromq0, kk), r * RatFun(out.disc, poly, 0));
                }
            }
        }
        if (g == 1) {
            // Genus-one constant part f: d/dt f(a + t v) = G(a + t v) . v with v = B_1 y_0'.
            for (int c = 0; c < N; ++c) {
                const RatFun& G = e.gradient[c];
                if (G.is_zero()) continue;
                auto shifted = ratfun_shift(G, images, out.disc, std::max(budget - 1, 0));
                for (const auto& [mono, r] : shifted) {
                    if (mono == Mono{}) {
                        for (int i = 0; i < N; ++i)
                            if (!Bk(0)(c, i).is_zero()) out.gradient[i] += Bk(0)(c, i) * r;
                    }
                    int d = mono_q0_degree(mono) + 1;
                    if (d > budget) continue;
                    for (int j = 0; j < N; ++j) {
                        FieldElem b = Bk(1)(c, j);
                        if (b.is_zero()) continue;
                        Mono m2 = mono;
                        ++m2[q0_slot(j)];
                        add(key_from_q0(m2, N), (b / FieldElem(d)) * r);
                    }
                }
            }
        }
        for (auto& [k, r] : taylor) r = FieldElem(mpq_class(key_factorial(k))) * r;
        require_small_keys_vanish(g, taylor, "substitute_R");
        for (auto& [k, r] : taylor) {
            if (r.is_zero() || (g == 0 && k.size() < 3)) continue;
            if (g == 1 && k.empty()) {
                for (int i = 0; i < N; ++i) out.gradient[i] += r.derivative(i);
                continue;
            }
            out.coeffs[gi].emplace(k, std::move(r));
        }
    }
    return out;
}

ClosedFormElement quantize_R(const ClosedFormElement& e, const MatSeries& r) {
    int K = required_cutoff(e);
    Propagator d = givental_propagator(r, Matrix::identity(e.colors), K);
    return substitute_R(feynman_transform(e, d), r);
}

ClosedFormElement abstract_ancestor(const FrobeniusPoint& p, const SemisimpleData& s, int g_max, int n_legs) {
    int N = p.dim;
    ClosedFormElement e = wk_product(N, g_max, n_legs);
    int K = required_cutoff(e);
    int order = std::max({2 * K + 1, max_key_level(e), 1});
    MatSeries R = solve_R(s.u, MatSeries::constant(normalized_v(p, s), 0), order);
    Propagator d = givental_propagator(R, Matrix::identity(N), K);
    ClosedFormElement t = feynman_transform(e, d);
    MatSeries phi(N, order);
    for (int k = 0; k <= order; ++k) phi[k] = s.psi * R[k];
    ClosedFormElement sub = substitute_R(t, phi);
    // xi = z e - phi(z (1, ..., 1)), over every row of the new dilaton vector.
    Dilaton xi(sub.dilaton.size(), std::vector<FieldElem>(static_cast<std::size_t>(N)));
    std::vector<FieldElem> unit = p.unit();
    for (std::size_t n = 1; n < sub.dilaton.size(); ++n)
        for (int i = 0; i < N; ++i) xi[n][i] = (n == 1 ? unit[i] : FieldElem()) - sub.dilaton[n][i];
    return translate(sub, xi);
}

ClosedFormElement abstract_ancestor(const FrobeniusPoint& p, int g_max, int n_legs) {
    return abstract_ancestor(p, canonical_data(p), g_max, n_legs);
}

}  // namespace fockforge
