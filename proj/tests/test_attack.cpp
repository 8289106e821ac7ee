#include <doctest.h>

#include <set>
#include <utility>

#include "cqa/attack.hpp"
#include "cqa/model.hpp"
#include "helpers.hpp"

using namespace cqa;
using test::q;

namespace {

const char* kFiveAtoms =
    "R(x | y)\n"
    "S(y | z)\n"
    "T(z | x)\n"
    "U(x | u)\n"
    "V(x, u | v)\n";

std::set<std::pair<int, int>> edges_of(const AttackGraph& g) {
    std::set<std::pair<int, int>> out;
    for (const AttackEdge& e : g.edges) out.insert({e.from, e.to});
    return out;
}

} // namespace

TEST_CASE("attack graph of the five-atom example") {
    Query query = q(kFiveAtoms);
    AttackGraph g = attack_graph(query);

    // R, S, T attack each other in both directions. S and T also reach U and
    // V through x, which escapes their K. R does not: x, u, v all lie in K(R).
    std::set<std::pair<int, int>> expect = {{0, 1}, {0, 2}, {1, 0}, {1, 2},
                                            {1, 3}, {1, 4}, {2, 0}, {2, 1},
                                            {2, 3}, {2, 4}, {3, 4}};
    CHECK(edges_of(g) == expect);
    for (const AttackEdge& e : g.edges) CHECK(e.strength == AttackStrength::weak);

    CHECK(g.in_degree(0) == 2);
    CHECK(g.in_degree(3) == 2);
    CHECK(g.in_degree(4) == 3);
    CHECK(g.successors(0) == std::vector<int>{1, 2});
    CHECK(g.successors(1) == std::vector<int>{0, 2, 3, 4});
}

TEST_CASE("witnesses are shortest paths outside K") {
    Query query = q(kFiveAtoms);

    // R -> T must route through S: the direct shared variable x lies in K(R)
    auto w = attacks_atom(query, 0, 2);
    REQUIRE(w);
    CHECK(w->atoms == std::vector<int>{0, 1, 2});
    CHECK(w->vars == std::vector<std::string>{"y", "z"});
    CHECK(verify_witness(query, 0, 2, *w));

    Witness bogus{{0, 2}, {"x"}};
    CHECK_FALSE(verify_witness(query, 0, 2, bogus));

    auto direct = attacks_atom(query, 0, 1);
    REQUIRE(direct);
    CHECK(direct->atoms == std::vector<int>{0, 1});
    CHECK(direct->vars == std::vector<std::string>{"y"});

    CHECK_FALSE(attacks_atom(query, 3, 0)); // U reaches no one but V
}

TEST_CASE("consistent atoms never attack") {
    Query query = q("consistent R(x | y)\nS(y | x)");
    AttackGraph g = attack_graph(query);
    CHECK(edges_of(g) == std::set<std::pair<int, int>>{{1, 0}});
}

TEST_CASE("attacks on variables") {
    Query query = q("R(x | y)");
    CHECK(attacks_variable(query, 0, "y"));
    CHECK_FALSE(attacks_variable(query, 0, "x"));

    // y is protected once a second atom fixes it from x
    Query guarded = q("R(x | y)\nconsistent S(x | y)");
    CHECK_FALSE(attacks_variable(guarded, 0, "y"));
}

TEST_CASE("cycle status distinguishes weak from strong") {
    AttackGraph five = attack_graph(q(kFiveAtoms));
    CycleStatus cs = cycle_status(five);
    CHECK(cs.kind == CycleClass::weak_cycle);
    REQUIRE(cs.pair);
    CHECK(five.has_edge(cs.pair->first, cs.pair->second));
    CHECK(five.has_edge(cs.pair->second, cs.pair->first));

    Query hard = q("R1(x | y)\nS1(y, z | x)");
    AttackGraph hg = attack_graph(hard);
    REQUIRE(hg.edge(0, 1));
    REQUIRE(hg.edge(1, 0));
    CHECK(hg.edge(0, 1)->strength == AttackStrength::strong);
    CHECK(hg.edge(1, 0)->strength == AttackStrength::weak);
    CycleStatus hs = cycle_status(hg);
    CHECK(hs.kind == CycleClass::strong_cycle);
    REQUIRE(hs.pair);
    REQUIRE(hg.edge(hs.pair->first, hs.pair->second));
    CHECK(hg.edge(hs.pair->first, hs.pair->second)->strength ==
          AttackStrength::strong);

    AttackGraph lone = attack_graph(q("R(x | y)"));
    CHECK(cycle_status(lone).kind == CycleClass::acyclic);
}

TEST_CASE("initial strong components") {
    // R(x|y,v), S(y|x) form the only cycle; the consistent atoms and W hang off
    Query query = q(
        "R(x | y, v)\n"
        "S(y | x)\n"
        "consistent V1(v | w)\n"
        "W(w | v)\n"
        "consistent V2(w | y)\n");
    AttackGraph g = attack_graph(query);

    std::set<std::pair<int, int>> expect;
    for (int t : {1, 2, 3, 4}) expect.insert({0, t});
    for (int t : {0, 2, 3, 4}) expect.insert({1, t});
    CHECK(edges_of(g) == expect);
    for (const AttackEdge& e : g.edges) CHECK(e.strength == AttackStrength::weak);

    StrongComponentSet scc = initial_strong_components(g);
    int rs = scc.component_of[0];
    CHECK(scc.component_of[1] == rs);
    CHECK(scc.components[static_cast<size_t>(rs)] == std::vector<int>{0, 1});
    CHECK(scc.initial[static_cast<size_t>(rs)]);
    for (int atom : {2, 3, 4}) {
        int c = scc.component_of[static_cast<size_t>(atom)];
        CHECK_FALSE(scc.initial[static_cast<size_t>(c)]);
    }
}

TEST_CASE("five-atom example components") {
    AttackGraph g = attack_graph(q(kFiveAtoms));
    StrongComponentSet scc = initial_strong_components(g);

    int rst = scc.component_of[0];
    CHECK(scc.components[static_cast<size_t>(rst)] == std::vector<int>{0, 1, 2});
    CHECK(scc.initial[static_cast<size_t>(rst)]);
    // S and T attack U, so neither {U} nor {V} is initial
    CHECK_FALSE(scc.initial[static_cast<size_t>(scc.component_of[3])]);
    CHECK_FALSE(scc.initial[static_cast<size_t>(scc.component_of[4])]);
}

TEST_CASE("dot rendering mentions every relation") {
    Query query = q(kFiveAtoms);
    AttackGraph g = attack_graph(query);
    std::string dot = attack_graph_dot(query, g);
    CHECK(dot.find("digraph") != std::string::npos);
    for (const char* name : {"R", "S", "T", "U", "V"})
        CHECK(dot.find(name) != std::string::npos);
    CHECK(dot.find("->") != std::string::npos);
}
