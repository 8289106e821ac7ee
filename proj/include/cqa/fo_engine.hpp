#pragma once

#include <memory>
#include <string>
#include <vector>

#include "cqa/model.hpp"

namespace cqa {

// First-order formulas produced by the certain-answer rewriting. Conjunction
// over an empty list is truth.
struct FOFormula;
using FOF = std::shared_ptr<const FOFormula>;

struct FOFormula {
    enum class Kind { exists, forall, conj, implies, equals, atom };

    Kind kind = Kind::conj;
    std::string var;       // exists / forall
    FOF body;              // exists / forall
    std::vector<FOF> kids; // conj
    FOF lhs, rhs;          // implies
    Term a, b;             // equals
    std::string rel;       // atom
    std::vector<Term> terms;

    static FOF exists(std::string v, FOF body);
    static FOF forall(std::string v, FOF body);
    static FOF conj(std::vector<FOF> kids);
    static FOF implies(FOF l, FOF r);
    static FOF equals(Term a, Term b);
    static FOF atom(std::string rel, std::vector<Term> terms);
};

struct FOOptions {
    // Rotates the choice among zero-in-degree atoms; the result must not
    // depend on it.
    int pick_offset = 0;
};

// Certain answers for queries with an acyclic attack graph, by recursion on
// an unattacked atom: some block must exist whose every member matches the
// atom's pattern and leads to a certain residual query. Throws NotFOQuery on
// a cyclic attack graph (checked at every recursion level).
bool certain_fo(const Query& q, const Database& db, const FOOptions& opts = {});

// The matching first-order rewriting over the database vocabulary.
FOF emit_rewriting(const Query& q, const FOOptions& opts = {});

// Active-domain model checking (domain: database constants plus formula
// constants).
bool eval_fo(const FOF& f, const Database& db);

// s-expression rendering: (exists (x) (and ...)).
std::string to_sexpr(const FOF& f);

// Structural equality up to renaming of bound variables.
bool alpha_equal(const FOF& x, const FOF& y);

} // namespace cqa
