#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "cqa/model.hpp"
#include "cqa/oracle.hpp"

namespace cqa {

struct PtimeOptions {
    std::ostream* trace = nullptr;            // stage-by-stage log when set
    std::uint64_t gblock_cap = kDefaultRepairCap; // cap on gblock repair spaces
};

// ---- database preparation ----

// Delete, to fixpoint, every block containing a fact that no valuation of q
// into the current database uses. Preserves the certain answer.
Database purify(const Query& q, const Database& db);

// Tag constants at variable positions with the variable's name; facts that
// contradict a query constant disappear. Requires the simplified shape
// (variables occur once per atom, constants only as simple keys).
Database type_tag(const Query& q, const Database& db);

// Is every fact used by some valuation of q into db?
bool is_purified(const Query& q, const Database& db);

struct SimplifyResult {
    Query query;
    Database db;
};

// (a) Replace every atom carrying duplicate variables or non-simple-key
// constants by a canonical fresh atom over the same variables, rewriting the
// facts through the matching valuations. (b) Split composite-key mode-i atoms
// R(xs|ys) into consistent R1(xs|w), R2(w|xs) and simple-key S(w|ys), with an
// injective surrogate for each key value. Preserves the certain answer and
// never increases icard.
SimplifyResult simplify(const Query& q, const Database& db);

struct SaturateResult {
    Query query;
    Database db;
};

// Does every implied-but-not-consistently-implied pair x -> z have a
// supporting attacked atom?
bool is_saturated(const Query& q);

// Add consistent witness atoms (and their facts) until saturated. Requires a
// typed database and an attack graph without strong cycles.
SaturateResult saturate(const Query& q, const Database& db);

// ---- gblocks ----

// Maximal sets of simple-key mode-i facts sharing one key constant.
std::vector<std::vector<Fact>> gblocks(const Query& q, const Database& db);

// Would some repair of the gblock, substituted for its relations' facts,
// still satisfy q? If not for some repair, the whole gblock is deleted.
bool is_gpurified(const Query& q, const Database& db,
                  const PtimeOptions& opts = {});
Database gpurify(const Query& q, const Database& db, const PtimeOptions& opts = {});

// ---- Markov graph and dissolution ----

// Mode-i atoms whose key is exactly {x}.
std::vector<int> clutch(const Query& q, const std::string& x);

struct MarkovGraph {
    std::vector<std::string> vars;                 // first-occurrence order
    std::set<std::pair<std::string, std::string>> edges;

    bool has_edge(const std::string& from, const std::string& to) const;
    std::vector<std::string> successors(const std::string& from) const;
};

// Edge x -> y iff the dependencies of clutch(x,q) plus the mode-c atoms imply
// x -> y. Requires simple-key mode-i atoms.
MarkovGraph markov_graph(const Query& q);

std::string markov_graph_dot(const MarkovGraph& g);

// Is C (an elementary Markov cycle) premier: some variable x that is the key
// of a mode-i atom in an initial strong component of the attack graph reaches
// a cycle variable y with FD(q) |= y -> x?
bool is_premier(const Query& q, const std::vector<std::string>& cycle);

// An elementary premier Markov cycle with nonempty clutches, contracted along
// shortcuts until minimal. Deterministic choice. Throws PreconditionError if
// none exists.
std::vector<std::string> find_premier_cycle(const Query& q);

// Replace the union of the cycle's clutches by one fresh mode-i atom
// T(u | x_0..x_{k-1}, ys) plus consistent U_i(x_i | u).
Query dissolve_query(const Query& q, const std::vector<std::string>& cycle);

// Companion database transform: encode the strong components of the
// constant-level cycle graph into T/U facts, deleting components with
// overlong cycles or unsupported k-cycles. Requires a typed, purified,
// gpurified database and a minimal premier cycle.
Database dissolve_database(const Query& q, const std::vector<std::string>& cycle,
                           const Database& db, const PtimeOptions& opts = {});

// ---- the engine ----

// Certain answers for queries whose attack graph has no strong cycle, by
// recursion on icard through the preparation pipeline, unattacked-atom
// elimination and cycle dissolution.
bool certain_ptime(const Query& q, const Database& db, const PtimeOptions& opts = {});

// ---- mode-c elimination ----

struct Desugared {
    Query query;
    std::string removed; // the mode-c relation that was expanded
    std::string r1, r2;  // the two fresh mode-i relation names

    Database apply(const Database& db) const; // duplicate removed's facts
};

// Replace the first mode-c atom R^c(xs|ys) by two mode-i copies with fresh
// names. Repeated application eliminates all mode-c atoms.
Desugared desugar_consistent(const Query& q);

// ---- shared helpers ----

std::string fresh_relation_name(const Query& q, const std::string& base);
std::string fresh_variable(const Query& q, const std::string& base);

} // namespace cqa
