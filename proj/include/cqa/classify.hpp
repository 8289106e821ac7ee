#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cqa/attack.hpp"
#include "cqa/model.hpp"

namespace cqa {

enum class QueryClass { fo, ptime_not_fo, conp_complete };

std::string to_string(QueryClass c);

struct Classification {
    QueryClass cls = QueryClass::fo;
    // FO: a topological order of the attack graph (atom indices).
    std::vector<int> topo_order;
    // Cyclic classes: a witnessing 2-cycle with the strength of each edge.
    std::optional<std::pair<int, int>> cycle_pair;
    AttackStrength forward_strength = AttackStrength::weak;
    AttackStrength backward_strength = AttackStrength::weak;
};

// Acyclic attack graph -> fo; cycles but only weak ones -> ptime_not_fo
// (membership in P, L-hard, not FO-expressible); some strong cycle ->
// conp_complete.
Classification classify(const Query& q);

} // namespace cqa
