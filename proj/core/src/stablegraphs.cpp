#include <algorithm>
#include <functional>
#include <map>
#include <mutex>
#include <numeric>
#include <tuple>

#include <nlohmann/json.hpp>

#include "fockforge/errors.hpp"
#include "fockforge/stablegraphs.hpp"

namespace fockforge {

int StableGraph::valence(int v) const {
    int n = 0;
    for (auto [a, b] : edges) n += (a == v) + (b == v);
    for (int l : legs) n += (l == v);
    return n;
}

int StableGraph::total_genus() const {
    int g = 0;
    for (int x : genus) g += x;
    return g + edge_count() - vertex_count() + 1;
}

bool StableGraph::connected() const {
    int V = vertex_count();
    if (V == 0) return false;
    std::vector<int> parent(V);
    std::iota(parent.begin(), parent.end(), 0);
    std::function<int(int)> find = [&](int x) { return parent[x] == x ? x : parent[x] = find(parent[x]); };
    for (auto [a, b] : edges) parent[find(a)] = find(b);
    for (int v = 0; v < V; ++v)
        if (find(v) != find(0)) return false;
    return true;
}

bool StableGraph::stable() const {
    for (int v = 0; v < vertex_count(); ++v)
        if (2 * genus[v] - 2 + valence(v) <= 0) return false;
    return true;
}

std::vector<std::vector<int>> StableGraph::multiplicity() const {
    std::vector<std::vector<int>> m(vertex_count(), std::vector<int>(vertex_count(), 0));
    for (auto [a, b] : edges) {
        ++m[a][b];
        if (a != b) ++m[b][a];
    }
    return m;
}

namespace {

using Matrix2 = std::vector<std::vector<int>>;

// Vertex colors refined by neighbor multisets until stable. Leg-carrying
// vertices get distinct colors, so color-preserving maps fix legs.
std::vector<int> refined_colors(const StableGraph& G, const Matrix2& M) {
    int V = G.vertex_count();
    std::vector<std::vector<int>> leg_sets(V);
    for (std::size_t l = 0; l < G.legs.size(); ++l) leg_sets[G.legs[l]].push_back(static_cast<int>(l));
    using Sig = std::tuple<int, int, int, std::vector<int>, std::vector<std::pair<int, int>>>;
    std::vector<int> color(V, 0);
    for (int round = 0;; ++round) {
        std::vector<Sig> sig(V);
        for (int v = 0; v < V; ++v) {
            std::vector<std::pair<int, int>> nb;
            if (round > 0)
                for (int u = 0; u < V; ++u)
                    if (u != v && M[v][u]) nb.emplace_back(color[u], M[v][u]);
            std::sort(nb.begin(), nb.end());
            sig[v] = {color[v], G.genus[v], M[v][v], leg_sets[v], nb};
            if (round == 0) std::get<0>(sig[v]) = G.valence(v);
        }
        std::vector<Sig> sorted = sig;
        std::sort(sorted.begin(), sorted.end());
        sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
        std::vector<int> next(V);
        for (int v = 0; v < V; ++v)
            next[v] = static_cast<int>(std::lower_bound(sorted.begin(), sorted.end(), sig[v]) - sorted.begin());
        int before = *std::max_element(color.begin(), color.end());
        int after = *std::max_element(next.begin(), next.end());
        bool done = round > 0 && after == before;
        color = next;
        if (done) return color;
    }
}

// Calls fn(order) for every vertex order listing color classes in increasing
// color, permuting freely inside each class. order[k] = old vertex at slot k.
void for_each_ordering(const std::vector<int>& color, const std::function<void(const std::vector<int>&)>& fn) {
    int V = static_cast<int>(color.size());
    std::vector<std::vector<int>> classes(*std::max_element(color.begin(), color.end()) + 1);
    for (int v = 0; v < V; ++v) classes[color[v]].push_back(v);
    std::vector<int> order;
    std::function<void(std::size_t)> rec = [&](std::size_t c) {
        if (c == classes.size()) {
            fn(order);
            return;
        }
        std::vector<int> cls = classes[c];
        do {
            std::size_t base = order.size();
            order.insert(order.end(), cls.begin(), cls.end());
            rec(c + 1);
            order.resize(base);
        } while (std::next_permutation(cls.begin(), cls.end()));
    };
    rec(0);
}

std::vector<int> encode(const StableGraph& G, const Matrix2& M, const std::vector<int>& order) {
    int V = G.vertex_count();
    std::vector<int> slot(V);
    for (int k = 0; k < V; ++k) slot[order[k]] = k;
    std::vector<int> code;
    code.push_back(V);
    for (int k = 0; k < V; ++k) code.push_back(G.genus[order[k]]);
    for (int a = 0; a < V; ++a)
        for (int b = a; b < V; ++b) code.push_back(M[order[a]][order[b]]);
    for (int l : G.legs) code.push_back(slot[l]);
    return code;
}

long factorial(int k) {
    long f = 1;
    for (int t = 2; t <= k; ++t) f *= t;
    return f;
}

StableGraph from_matrix(const std::vector<int>& genus, const Matrix2& M, const std::vector<int>& legs) {
    StableGraph G;
    G.genus = genus;
    G.legs = legs;
    int V = static_cast<int>(genus.size());
    for (int a = 0; a < V; ++a)
        for (int b = a; b < V; ++b)
            for (int t = 0; t < M[a][b]; ++t) G.edges.emplace_back(a, b);
    return G;
}

// Relabels G into its canonical vertex order so equal classes print alike.
StableGraph canonical_representative(const StableGraph& G) {
    std::vector<int> code = canonical_form(G);
    int V = code[0];
    std::vector<int> genus(code.begin() + 1, code.begin() + 1 + V);
    Matrix2 M(V, std::vector<int>(V, 0));
    std::size_t p = 1 + V;
    for (int a = 0; a < V; ++a)
        for (int b = a; b < V; ++b) M[a][b] = M[b][a] = code[p++];
    std::vector<int> legs(code.begin() + static_cast<long>(p), code.end());
    return from_matrix(genus, M, legs);
}

std::vector<StableGraph> one_step_degenerations(const StableGraph& G) {
    std::vector<StableGraph> out;
    Matrix2 M = G.multiplicity();
    int V = G.vertex_count();
    for (int v = 0; v < V; ++v) {
        if (G.genus[v] >= 1) {
            std::vector<int> genus = G.genus;
            --genus[v];
            Matrix2 N = M;
            ++N[v][v];
            out.push_back(from_matrix(genus, N, G.legs));
        }
        std::vector<int> legs_at_v;
        for (std::size_t l = 0; l < G.legs.size(); ++l)
            if (G.legs[l] == v) legs_at_v.push_back(static_cast<int>(l));
        std::vector<int> others;
        for (int u = 0; u < V; ++u)
            if (u != v && M[v][u]) others.push_back(u);
        int L = M[v][v];
        // Vertex v keeps its index; the split-off vertex is w = V.
        std::vector<int> keep(others.size());
        std::function<void(std::size_t)> rec = [&](std::size_t t) {
            if (t < others.size()) {
                for (keep[t] = 0; keep[t] <= M[v][others[t]]; ++keep[t]) rec(t + 1);
                return;
            }
            for (int g1 = 0; g1 <= G.genus[v]; ++g1)
                for (int l1 = 0; l1 <= L; ++l1)
                    for (int l2 = 0; l1 + l2 <= L; ++l2)
                        for (unsigned mask = 0; mask < (1u << legs_at_v.size()); ++mask) {
                            Matrix2 N(V + 1, std::vector<int>(V + 1, 0));
                            for (int a = 0; a < V; ++a)
                                for (int b = 0; b < V; ++b) N[a][b] = M[a][b];
                            int w = V;
                            N[v][v] = l1;
                            N[w][w] = l2;
                            N[v][w] = N[w][v] = L - l1 - l2 + 1;
                            for (std::size_t s = 0; s < others.size(); ++s) {
                                int u = others[s];
                                N[v][u] = N[u][v] = keep[s];
                                N[w][u] = N[u][w] = M[v][u] - keep[s];
                            }
                            std::vector<int> genus = G.genus;
                            genus[v] = g1;
                            genus.push_back(G.genus[v] - g1);
                            std::vector<int> legs = G.legs;
                            for (std::size_t s = 0; s < legs_at_v.size(); ++s)
                                if ((mask >> s) & 1) legs[legs_at_v[s]] = w;
                            StableGraph H = from_matrix(genus, N, legs);
                            if (H.stable()) out.push_back(std::move(H));
                        }
        };
        rec(0);
    }
    return out;
}

struct CacheKey {
    int g, n, max_edges;
    bool operator<(const CacheKey& o) const { return std::tie(g, n, max_edges) < std::tie(o.g, o.n, o.max_edges); }
};

}  // namespace

std::vector<int> canonical_form(const StableGraph& G) {
    Matrix2 M = G.multiplicity();
    std::vector<int> best;
    for_each_ordering(refined_colors(G, M), [&](const std::vector<int>& order) {
        std::vector<int> code = encode(G, M, order);
        if (best.empty() || code < best) best = std::move(code);
    });
    return best;
}

long automorphism_order(const StableGraph& G) {
    Matrix2 M = G.multiplicity();
    int V = G.vertex_count();
    std::vector<int> color = refined_colors(G, M);
    // Orderings list classes by color; compare against the class-sorted identity.
    std::vector<int> sorted_identity(V);
    std::iota(sorted_identity.begin(), sorted_identity.end(), 0);
    std::stable_sort(sorted_identity.begin(), sorted_identity.end(), [&](int a, int b) { return color[a] < color[b]; });
    std::vector<int> base = encode(G, M, sorted_identity);
    long vertex_maps = 0;
    for_each_ordering(color, [&](const std::vector<int>& order) {
        if (encode(G, M, order) == base) ++vertex_maps;
    });
    long edge_factor = 1;
    for (int a = 0; a < V; ++a) {
        edge_factor *= factorial(M[a][a]) << M[a][a];
        for (int b = a + 1; b < V; ++b) edge_factor *= factorial(M[a][b]);
    }
    return vertex_maps * edge_factor;
}

const std::vector<GraphWithAut>& enumerate_stable_graphs(int g, int n, int max_edges) {
    require(g >= 0 && n >= 0 && 2 * g - 2 + n > 0, ErrorKind::Domain, "unstable (g, n)");
    static std::mutex mu;
    static std::map<CacheKey, std::vector<GraphWithAut>> cache;
    int cap = 3 * g - 3 + n;
    if (max_edges >= 0) cap = std::min(cap, max_edges);
    CacheKey key{g, n, cap};
    std::lock_guard lock(mu);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;

    StableGraph root;
    root.genus = {g};
    root.legs.assign(n, 0);
    std::map<std::vector<int>, StableGraph> level{{canonical_form(root), canonical_representative(root)}};
    std::vector<GraphWithAut> out;
    for (int e = 0;; ++e) {
        for (auto& [code, G] : level) {
            require(G.edge_count() <= 3 * g - 3 + n, ErrorKind::Invariant, "stable graph exceeds 3g-3+n edges");
            out.push_back({G, automorphism_order(G)});
        }
        if (e == cap || level.empty()) break;
        std::map<std::vector<int>, StableGraph> next;
        for (const auto& [code, G] : level)
            for (StableGraph& H : one_step_degenerations(G)) {
                std::vector<int> c = canonical_form(H);
                if (!next.count(c)) next.emplace(std::move(c), canonical_representative(H));
            }
        level = std::move(next);
    }
    return cache.emplace(key, std::move(out)).first->second;
}

std::string graphs_to_json(const std::vector<GraphWithAut>& graphs, int indent) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& [G, aut] : graphs) {
        nlohmann::json vertices = nlohmann::json::array();
        Matrix2 M = G.multiplicity();
        for (int v = 0; v < G.vertex_count(); ++v) {
            nlohmann::json adj = nlohmann::json::array();
            for (int u = 0; u < G.vertex_count(); ++u)
                for (int t = 0; t < M[v][u]; ++t) adj.push_back(u);
            nlohmann::json legs = nlohmann::json::array();
            for (std::size_t l = 0; l < G.legs.size(); ++l)
                if (G.legs[l] == v) legs.push_back(l + 1);
            vertices.push_back({{"genus", G.genus[v]}, {"adjacent", adj}, {"legs", legs}});
        }
        arr.push_back({{"vertices", vertices}, {"edges", G.edge_count()}, {"aut", aut}});
    }
    return arr.dump(indent);
}

}  // namespace fockforge
