#include "cqa/fd.hpp"

#include <algorithm>
#include <map>
#include <queue>

#include "cqa/errors.hpp"

namespace cqa {

FDSet fd_of_query(const std::vector<Atom>& atoms) {
    FDSet out;
    out.deps.reserve(atoms.size());
    for (const Atom& a : atoms)
        out.deps.push_back(FunctionalDependency{a.key_var_set(), a.var_set()});
    return out;
}

FDSet fd_of_query(const Query& q) {
    return fd_of_query(q.atoms);
}

std::set<std::string> closure(const FDSet& fds, const std::set<std::string>& xs) {
    std::set<std::string> known = xs;
    bool changed = true;
    while (changed) {
        changed = false;
        for (const FunctionalDependency& d : fds.deps) {
            if (!std::includes(known.begin(), known.end(), d.lhs.begin(), d.lhs.end()))
                continue;
            for (const std::string& v : d.rhs)
                changed |= known.insert(v).second;
        }
    }
    return known;
}

bool implies(const FDSet& fds, const std::set<std::string>& X,
             const std::set<std::string>& Y) {
    std::set<std::string> cl = closure(fds, X);
    return std::includes(cl.begin(), cl.end(), Y.begin(), Y.end());
}

bool implies(const FDSet& fds, const std::set<std::string>& X, const std::string& y) {
    return closure(fds, X).count(y) > 0;
}

std::set<std::string> k_closure(const Query& q, int atom_index, bool plus) {
    if (atom_index < 0 || atom_index >= q.size())
        throw AtomNotInQuery("k_closure: atom index " + std::to_string(atom_index));
    const Atom& f = q.at(atom_index);
    if (plus) return closure(fd_of_query(q), f.key_var_set());

    // (q \ {F}) united with the mode-c atoms of q: a mode-c F stays in.
    std::vector<Atom> atoms;
    for (int i = 0; i < q.size(); ++i)
        if (i != atom_index || q.at(i).decl.mode == Mode::c)
            atoms.push_back(q.at(i));
    return closure(fd_of_query(atoms), f.key_var_set());
}

namespace {

std::set<std::string> vars_after(const Query& q, const std::set<std::string>& X,
                                 const std::vector<int>& seq) {
    std::set<std::string> known = X;
    for (int i : seq) {
        auto vs = q.at(i).var_set();
        known.insert(vs.begin(), vs.end());
    }
    return known;
}

} // namespace

bool verify_sequential_proof(const Query& q, const std::set<std::string>& X,
                             const std::string& y, const std::vector<int>& seq) {
    std::set<std::string> known = X;
    for (int i : seq) {
        if (i < 0 || i >= q.size()) return false;
        const Atom& h = q.at(i);
        auto kv = h.key_var_set();
        if (!std::includes(known.begin(), known.end(), kv.begin(), kv.end()))
            return false;
        auto vs = h.var_set();
        known.insert(vs.begin(), vs.end());
    }
    return known.count(y) > 0;
}

std::optional<std::vector<int>> sequential_proof(const Query& q,
                                                 const std::set<std::string>& X,
                                                 const std::string& y) {
    if (X.count(y)) return std::vector<int>{};

    // breadth-first over sets of used atoms; the set determines the known
    // variables, so visiting each set once suffices for a shortest sequence
    std::map<std::set<int>, std::vector<int>> visited;
    std::queue<std::vector<int>> pending;
    visited[{}] = {};
    pending.push({});
    while (!pending.empty()) {
        std::vector<int> seq = pending.front();
        pending.pop();
        std::set<std::string> known = vars_after(q, X, seq);
        std::set<int> used(seq.begin(), seq.end());
        for (int i = 0; i < q.size(); ++i) {
            if (used.count(i)) continue;
            auto kv = q.at(i).key_var_set();
            if (!std::includes(known.begin(), known.end(), kv.begin(), kv.end()))
                continue;
            std::set<int> next_used = used;
            next_used.insert(i);
            if (visited.count(next_used)) continue;
            std::vector<int> next = seq;
            next.push_back(i);
            if (q.at(i).var_set().count(y)) return next;
            visited[next_used] = next;
            pending.push(next);
        }
    }
    return std::nullopt;
}

} // namespace cqa
