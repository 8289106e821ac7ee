#include "cqa/attack.hpp"

#include <algorithm>
#include <deque>
#include <sstream>

#include "cqa/fd.hpp"

namespace cqa {

bool AttackGraph::has_edge(int from, int to) const {
    return edge(from, to) != nullptr;
}

const AttackEdge* AttackGraph::edge(int from, int to) const {
    for (const AttackEdge& e : edges)
        if (e.from == from && e.to == to) return &e;
    return nullptr;
}

std::vector<int> AttackGraph::successors(int from) const {
    std::vector<int> out;
    for (const AttackEdge& e : edges)
        if (e.from == from) out.push_back(e.to);
    std::sort(out.begin(), out.end());
    return out;
}

int AttackGraph::in_degree(int node) const {
    int d = 0;
    for (const AttackEdge& e : edges)
        if (e.to == node) ++d;
    return d;
}

namespace {

// Smallest shared variable of a and b outside K, if any.
std::optional<std::string> link_var(const Atom& a, const Atom& b,
                                    const std::set<std::string>& K) {
    std::optional<std::string> best;
    for (const std::string& v : a.var_set()) {
        if (K.count(v)) continue;
        if (!b.var_set().count(v)) continue;
        if (!best || v < *best) best = v;
    }
    return best;
}

// Breadth-first search in the co-occurrence graph of q modulo K(f,q),
// recording parents. Returns per-node predecessor (-2 unreached, -1 root)
// and the variable used to enter the node.
void bfs_from(const Query& q, int f, const std::set<std::string>& K,
              std::vector<int>& parent, std::vector<std::string>& via) {
    parent.assign(static_cast<size_t>(q.size()), -2);
    via.assign(static_cast<size_t>(q.size()), "");
    parent[static_cast<size_t>(f)] = -1;
    std::deque<int> frontier{f};
    while (!frontier.empty()) {
        int u = frontier.front();
        frontier.pop_front();
        for (int w = 0; w < q.size(); ++w) {
            if (parent[static_cast<size_t>(w)] != -2) continue;
            auto z = link_var(q.at(u), q.at(w), K);
            if (!z) continue;
            parent[static_cast<size_t>(w)] = u;
            via[static_cast<size_t>(w)] = *z;
            frontier.push_back(w);
        }
    }
}

Witness path_to(int g, const std::vector<int>& parent, const std::vector<std::string>& via) {
    Witness w;
    for (int cur = g; cur != -1; cur = parent[static_cast<size_t>(cur)]) {
        w.atoms.push_back(cur);
        if (parent[static_cast<size_t>(cur)] != -1)
            w.vars.push_back(via[static_cast<size_t>(cur)]);
    }
    std::reverse(w.atoms.begin(), w.atoms.end());
    std::reverse(w.vars.begin(), w.vars.end());
    return w;
}

} // namespace

std::optional<Witness> attacks_atom(const Query& q, int f, int g) {
    if (f < 0 || f >= q.size() || g < 0 || g >= q.size())
        throw AtomNotInQuery("attacks_atom: index out of range");
    if (f == g) return std::nullopt;
    std::set<std::string> K = k_closure(q, f, false);
    std::vector<int> parent;
    std::vector<std::string> via;
    bfs_from(q, f, K, parent, via);
    if (parent[static_cast<size_t>(g)] == -2) return std::nullopt;
    return path_to(g, parent, via);
}

bool attacks_variable(const Query& q, int f, const std::string& z) {
    if (f < 0 || f >= q.size())
        throw AtomNotInQuery("attacks_variable: index out of range");
    std::set<std::string> K = k_closure(q, f, false);
    if (K.count(z)) return false;
    if (q.at(f).var_set().count(z)) return true;
    std::vector<int> parent;
    std::vector<std::string> via;
    bfs_from(q, f, K, parent, via);
    for (int i = 0; i < q.size(); ++i)
        if (parent[static_cast<size_t>(i)] >= 0 && q.at(i).var_set().count(z))
            return true;
    return false;
}

bool verify_witness(const Query& q, int f, int g, const Witness& w) {
    if (w.atoms.empty() || w.atoms.front() != f || w.atoms.back() != g) return false;
    if (w.vars.size() + 1 != w.atoms.size()) return false;
    if (f == g) return false;
    std::set<std::string> K = k_closure(q, f, false);
    for (size_t i = 0; i < w.vars.size(); ++i) {
        int a = w.atoms[i], b = w.atoms[i + 1];
        if (a < 0 || a >= q.size() || b < 0 || b >= q.size()) return false;
        const std::string& z = w.vars[i];
        if (K.count(z)) return false;
        if (!q.at(a).var_set().count(z) || !q.at(b).var_set().count(z)) return false;
    }
    return true;
}

AttackGraph attack_graph(const Query& q) {
    AttackGraph g;
    g.n = q.size();
    FDSet full = fd_of_query(q);
    for (int f = 0; f < q.size(); ++f) {
        std::set<std::string> K = k_closure(q, f, false);
        std::vector<int> parent;
        std::vector<std::string> via;
        bfs_from(q, f, K, parent, via);
        for (int t = 0; t < q.size(); ++t) {
            if (t == f || parent[static_cast<size_t>(t)] == -2) continue;
            AttackEdge e;
            e.from = f;
            e.to = t;
            e.witness = path_to(t, parent, via);
            e.strength = implies(full, q.at(f).key_var_set(), q.at(t).key_var_set())
                             ? AttackStrength::weak
                             : AttackStrength::strong;
            g.edges.push_back(std::move(e));
        }
    }
    return g;
}

CycleStatus cycle_status(const AttackGraph& g) {
    CycleStatus st;
    std::optional<std::pair<int, int>> weak_pair;
    for (int i = 0; i < g.n; ++i)
        for (int j = 0; j < g.n; ++j) {
            if (i == j) continue;
            const AttackEdge* fwd = g.edge(i, j);
            if (!fwd || !g.has_edge(j, i)) continue;
            if (fwd->strength == AttackStrength::strong) {
                st.kind = CycleClass::strong_cycle;
                st.pair = {i, j};
                return st;
            }
            if (!weak_pair) weak_pair = {i, j};
        }
    if (weak_pair) {
        st.kind = CycleClass::weak_cycle;
        st.pair = weak_pair;
    }
    return st;
}

namespace {

struct TarjanState {
    const AttackGraph& g;
    std::vector<int> index, low, comp;
    std::vector<bool> on_stack;
    std::vector<int> stack;
    int next_index = 0;
    int next_comp = 0;

    explicit TarjanState(const AttackGraph& graph)
        : g(graph),
          index(static_cast<size_t>(graph.n), -1),
          low(static_cast<size_t>(graph.n), 0),
          comp(static_cast<size_t>(graph.n), -1),
          on_stack(static_cast<size_t>(graph.n), false) {}

    void visit(int v) {
        index[static_cast<size_t>(v)] = low[static_cast<size_t>(v)] = next_index++;
        stack.push_back(v);
        on_stack[static_cast<size_t>(v)] = true;
        for (int w : g.successors(v)) {
            if (index[static_cast<size_t>(w)] < 0) {
                visit(w);
                low[static_cast<size_t>(v)] =
                    std::min(low[static_cast<size_t>(v)], low[static_cast<size_t>(w)]);
            } else if (on_stack[static_cast<size_t>(w)]) {
                low[static_cast<size_t>(v)] =
                    std::min(low[static_cast<size_t>(v)], index[static_cast<size_t>(w)]);
            }
        }
        if (low[static_cast<size_t>(v)] == index[static_cast<size_t>(v)]) {
            while (true) {
                int w = stack.back();
                stack.pop_back();
                on_stack[static_cast<size_t>(w)] = false;
                comp[static_cast<size_t>(w)] = next_comp;
                if (w == v) break;
            }
            ++next_comp;
        }
    }
};

} // namespace

StrongComponentSet initial_strong_components(const AttackGraph& g) {
    TarjanState t(g);
    for (int v = 0; v < g.n; ++v)
        if (t.index[static_cast<size_t>(v)] < 0) t.visit(v);

    // renumber components by smallest member for a stable output order
    std::vector<std::vector<int>> raw(static_cast<size_t>(t.next_comp));
    for (int v = 0; v < g.n; ++v) raw[static_cast<size_t>(t.comp[static_cast<size_t>(v)])].push_back(v);
    for (auto& c : raw) std::sort(c.begin(), c.end());
    std::sort(raw.begin(), raw.end());

    StrongComponentSet out;
    out.components = std::move(raw);
    out.component_of.assign(static_cast<size_t>(g.n), -1);
    for (size_t ci = 0; ci < out.components.size(); ++ci)
        for (int v : out.components[ci])
            out.component_of[static_cast<size_t>(v)] = static_cast<int>(ci);

    std::set<std::pair<int, int>> edges;
    for (const AttackEdge& e : g.edges) {
        int a = out.component_of[static_cast<size_t>(e.from)];
        int b = out.component_of[static_cast<size_t>(e.to)];
        if (a != b) edges.insert({a, b});
    }
    out.component_edges.assign(edges.begin(), edges.end());
    out.initial.assign(out.components.size(), true);
    for (auto [a, b] : edges) out.initial[static_cast<size_t>(b)] = false;
    return out;
}

std::string attack_graph_dot(const Query& q, const AttackGraph& g) {
    std::ostringstream os;
    os << "digraph attack {\n";
    for (int i = 0; i < q.size(); ++i)
        os << "  n" << i << " [label=\"" << q.at(i).display() << "\"];\n";
    for (const AttackEdge& e : g.edges)
        os << "  n" << e.from << " -> n" << e.to
           << (e.strength == AttackStrength::strong ? " [style=solid]"
                                                    : " [style=dashed]")
           << ";\n";
    os << "}\n";
    return os.str();
}

} // namespace cqa
