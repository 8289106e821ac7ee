#pragma once

#include <set>
#include <string>
#include <utility>
#include <vector>

#include "cqa/attack.hpp"
#include "cqa/model.hpp"

namespace cqa::test {

inline Query q(const std::string& text) { return parse_query(text); }

inline Database db(const Query& query, const std::string& text) {
    return parse_database(text, query);
}

// Reachability in the attack graph, source excluded unless on a cycle.
inline bool reaches(const AttackGraph& g, int from, int to) {
    std::vector<bool> seen(static_cast<size_t>(g.n), false);
    std::vector<int> stack{from};
    while (!stack.empty()) {
        int v = stack.back();
        stack.pop_back();
        for (int s : g.successors(v)) {
            if (s == to) return true;
            if (!seen[static_cast<size_t>(s)]) {
                seen[static_cast<size_t>(s)] = true;
                stack.push_back(s);
            }
        }
    }
    return false;
}

// Reference cycle detection, independent of the 2-cycle scan used by the
// library: a cycle exists iff some vertex reaches itself.
inline bool any_cycle(const AttackGraph& g) {
    for (int v = 0; v < g.n; ++v)
        if (reaches(g, v, v)) return true;
    return false;
}

// A strong cycle exists iff some strong edge closes back on its source.
inline bool any_strong_cycle(const AttackGraph& g) {
    for (const AttackEdge& e : g.edges)
        if (e.strength == AttackStrength::strong && (e.to == e.from || reaches(g, e.to, e.from)))
            return true;
    return false;
}

inline bool has_two_cycle(const AttackGraph& g) {
    for (const AttackEdge& e : g.edges)
        if (e.from < e.to && g.has_edge(e.to, e.from)) return true;
    return false;
}

inline bool has_strong_two_cycle(const AttackGraph& g) {
    for (const AttackEdge& e : g.edges)
        if (e.strength == AttackStrength::strong && g.has_edge(e.to, e.from)) return true;
    return false;
}

inline std::set<std::pair<std::string, std::string>> edge_set(
    const std::vector<std::pair<std::string, std::string>>& pairs) {
    return {pairs.begin(), pairs.end()};
}

} // namespace cqa::test
