#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "cqa/model.hpp"

namespace cqa {

// A functional dependency over query variables.
struct FunctionalDependency {
    std::set<std::string> lhs;
    std::set<std::string> rhs;

    bool operator==(const FunctionalDependency&) const = default;
};

struct FDSet {
    std::vector<FunctionalDependency> deps;

    bool operator==(const FDSet&) const = default;
};

// One dependency per atom: key variables determine all variables. Constants
// contribute nothing.
FDSet fd_of_query(const std::vector<Atom>& atoms);
FDSet fd_of_query(const Query& q);

// Attribute-set closure of xs under fds (worklist fixpoint).
std::set<std::string> closure(const FDSet& fds, const std::set<std::string>& xs);

// fds |= X -> Y iff Y is a subset of closure(X).
bool implies(const FDSet& fds, const std::set<std::string>& X,
             const std::set<std::string>& Y);
bool implies(const FDSet& fds, const std::set<std::string>& X, const std::string& y);

// K(F,q): closure of F's key variables under FD((q \ {F}) united with the
// mode-c atoms of q). K+(F,q) (plus = true): closure under FD(q).
std::set<std::string> k_closure(const Query& q, int atom_index, bool plus);

// Shortest sequence of atom indices H_0..H_l such that y lies in X united
// with the variables of the sequence, and each H_i's key variables lie in X
// united with the variables of earlier atoms. std::nullopt when FD(q) does
// not imply X -> y. Ties broken toward earlier query positions.
std::optional<std::vector<int>> sequential_proof(const Query& q,
                                                 const std::set<std::string>& X,
                                                 const std::string& y);

// Checks the two defining conditions for a given sequence.
bool verify_sequential_proof(const Query& q, const std::set<std::string>& X,
                             const std::string& y, const std::vector<int>& seq);

} // namespace cqa
