#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cqa/model.hpp"

namespace cqa {

// A witness for an attack from atoms[0] to atoms.back(): consecutive atoms
// share vars[i], which lies outside K(source, q). vars has one entry fewer
// than atoms.
struct Witness {
    std::vector<int> atoms;
    std::vector<std::string> vars;

    bool operator==(const Witness&) const = default;
};

enum class AttackStrength { weak, strong };

struct AttackEdge {
    int from = -1;
    int to = -1;
    AttackStrength strength = AttackStrength::weak;
    Witness witness;
};

struct AttackGraph {
    int n = 0; // one node per query atom, in query order
    std::vector<AttackEdge> edges;

    bool has_edge(int from, int to) const;
    const AttackEdge* edge(int from, int to) const;
    std::vector<int> successors(int from) const;
    int in_degree(int node) const;
};

// Does atom f attack atom g? Returns a shortest witness path if so.
// Shared-variable choices prefer lexicographically smaller variables.
std::optional<Witness> attacks_atom(const Query& q, int f, int g);

// Does atom f attack variable z (an attack on a fresh simple-key unary atom
// carrying z)?
bool attacks_variable(const Query& q, int f, const std::string& z);

// Validates a caller-supplied witness path for f -> g.
bool verify_witness(const Query& q, int f, int g, const Witness& w);

AttackGraph attack_graph(const Query& q);

enum class CycleClass { acyclic, weak_cycle, strong_cycle };

struct CycleStatus {
    CycleClass kind = CycleClass::acyclic;
    // For cyclic graphs: a 2-cycle (f,g). When kind is strong_cycle the edge
    // f->g is strong.
    std::optional<std::pair<int, int>> pair;
};

// Decided by scanning ordered pairs for 2-cycles; any cycle yields a 2-cycle
// and any strong cycle yields a strong 2-cycle, so the scan is complete.
CycleStatus cycle_status(const AttackGraph& g);

struct StrongComponentSet {
    std::vector<std::vector<int>> components; // each sorted; deterministic order
    std::vector<bool> initial;                // no edge from another component
    std::vector<std::pair<int, int>> component_edges;
    std::vector<int> component_of;            // atom index -> component index
};

StrongComponentSet initial_strong_components(const AttackGraph& g);

// GraphViz rendering: nodes in query order, solid edges strong, dashed weak.
std::string attack_graph_dot(const Query& q, const AttackGraph& g);

} // namespace cqa
