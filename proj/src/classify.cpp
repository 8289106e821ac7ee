#include "cqa/classify.hpp"

#include <algorithm>

namespace cqa {

std::string to_string(QueryClass c) {
    switch (c) {
        case QueryClass::fo: return "FO";
        case QueryClass::ptime_not_fo: return "PTIME";
        case QueryClass::conp_complete: return "CONP-COMPLETE";
    }
    return "?";
}

namespace {

std::vector<int> topological_order(const AttackGraph& g) {
    std::vector<int> indeg(static_cast<size_t>(g.n), 0);
    for (const AttackEdge& e : g.edges) ++indeg[static_cast<size_t>(e.to)];
    std::vector<int> order;
    std::vector<bool> taken(static_cast<size_t>(g.n), false);
    for (int round = 0; round < g.n; ++round) {
        int pick = -1;
        for (int v = 0; v < g.n; ++v)
            if (!taken[static_cast<size_t>(v)] && indeg[static_cast<size_t>(v)] == 0) {
                pick = v;
                break;
            }
        if (pick < 0) break; // cyclic
        taken[static_cast<size_t>(pick)] = true;
        order.push_back(pick);
        for (const AttackEdge& e : g.edges)
            if (e.from == pick && !taken[static_cast<size_t>(e.to)])
                --indeg[static_cast<size_t>(e.to)];
    }
    return order;
}

} // namespace

Classification classify(const Query& q) {
    AttackGraph g = attack_graph(q);
    CycleStatus st = cycle_status(g);
    Classification out;
    switch (st.kind) {
        case CycleClass::acyclic:
            out.cls = QueryClass::fo;
            out.topo_order = topological_order(g);
            break;
        case CycleClass::weak_cycle:
            out.cls = QueryClass::ptime_not_fo;
            break;
        case CycleClass::strong_cycle:
            out.cls = QueryClass::conp_complete;
            break;
    }
    if (st.pair) {
        out.cycle_pair = st.pair;
        out.forward_strength = g.edge(st.pair->first, st.pair->second)->strength;
        out.backward_strength = g.edge(st.pair->second, st.pair->first)->strength;
    }
    return out;
}

} // namespace cqa
