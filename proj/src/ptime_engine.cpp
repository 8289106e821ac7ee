#include "cqa/ptime_engine.hpp"

#include <algorithm>
#include <cassert>
#include <deque>
#include <map>
#include <ostream>
#include <sstream>

#include "cqa/attack.hpp"
#include "cqa/fd.hpp"

namespace cqa {

namespace {

std::set<std::string> relation_names(const Query& q) {
    std::set<std::string> out;
    for (const Atom& a : q.atoms) out.insert(a.decl.name);
    return out;
}

std::map<std::string, RelationDecl> schema_of(const Query& q) {
    std::map<std::string, RelationDecl> out;
    for (const Atom& a : q.atoms) out[a.decl.name] = a.decl;
    return out;
}

// Facts reachable by some valuation of q into db.
std::set<Fact> used_facts(const Query& q, const Database& db) {
    std::set<Fact> used;
    enumerate_homomorphisms(q, db, [&](const Valuation& v) {
        for (const Atom& a : q.atoms) used.insert(apply_valuation(a, v));
        return true;
    });
    return used;
}

// Mints constants whose text avoids everything already in use.
struct SurrogatePool {
    std::set<std::string> taken;
    std::string base;
    int counter = 0;

    SurrogatePool(const Database& db, std::string base_) : base(std::move(base_)) {
        for (const Value& v : db.adom()) taken.insert(v.text);
    }

    std::string next() {
        while (true) {
            std::string cand = base + std::to_string(++counter);
            if (taken.insert(cand).second) return cand;
        }
    }
};

void require_simplified_shape(const Query& q, const char* who) {
    for (const Atom& a : q.atoms) {
        std::set<std::string> seen;
        for (size_t p = 0; p < a.terms.size(); ++p) {
            const Term& t = a.terms[p];
            if (t.is_var()) {
                if (!seen.insert(t.var).second)
                    throw ShapeError(std::string(who) + ": variable " + t.var +
                                     " occurs twice in " + a.display());
            } else if (!(a.decl.key_len == 1 && p == 0)) {
                throw ShapeError(std::string(who) + ": constant outside a simple key in " +
                                 a.display());
            }
        }
    }
}

} // namespace

std::string fresh_relation_name(const Query& q, const std::string& base) {
    std::set<std::string> taken = relation_names(q);
    if (!taken.count(base)) return base;
    for (int i = 2;; ++i) {
        std::string cand = base + std::to_string(i);
        if (!taken.count(cand)) return cand;
    }
}

std::string fresh_variable(const Query& q, const std::string& base) {
    std::set<std::string> taken = q.var_set();
    if (!taken.count(base)) return base;
    for (int i = 2;; ++i) {
        std::string cand = base + std::to_string(i);
        if (!taken.count(cand)) return cand;
    }
}

// ---- purify ----

bool is_purified(const Query& q, const Database& db) {
    std::set<Fact> used = used_facts(q, db);
    for (const Fact& f : db.facts())
        if (!used.count(f)) return false;
    return true;
}

Database purify(const Query& q, const Database& db) {
    Database cur = db;
    while (true) {
        std::set<Fact> used = used_facts(q, cur);
        std::vector<Fact> stale;
        for (const Fact& f : cur.facts())
            if (!used.count(f)) stale.push_back(f);
        if (stale.empty()) return cur;
        // a block containing an unused fact contributes nothing a repair
        // could not avoid, so the whole block goes
        for (const Fact& f : stale) cur.erase_block(f.relation, cur.key_of(f));
    }
}

// ---- type_tag ----

Database type_tag(const Query& q, const Database& db) {
    require_simplified_shape(q, "type_tag");
    Database out(db.schema());
    for (const Fact& f : db.facts()) {
        const Atom* atom = q.find(f.relation);
        if (!atom) throw ShapeError("type_tag: no atom for relation " + f.relation);
        Fact g = f;
        bool drop = false;
        for (size_t p = 0; p < g.values.size(); ++p) {
            const Term& t = atom->terms[p];
            if (!t.is_var()) {
                if (g.values[p] != t.val) {
                    drop = true;
                    break;
                }
                continue;
            }
            Value& v = g.values[p];
            if (v.tag == t.var) continue; // already carries this type
            v = Value{v.tag.empty() ? v.text : v.display(), t.var};
        }
        if (!drop) out.insert(g);
    }
    return out;
}

// ---- simplify ----

namespace {

bool atom_canonical(const Atom& a) {
    std::set<std::string> seen;
    for (size_t p = 0; p < a.terms.size(); ++p) {
        const Term& t = a.terms[p];
        if (t.is_var()) {
            if (!seen.insert(t.var).second) return false;
        } else if (!(a.decl.key_len == 1 && p == 0)) {
            return false;
        }
    }
    return true;
}

} // namespace

SimplifyResult simplify(const Query& q, const Database& db) {
    Database purified = purify(q, db);

    // (a) canonical atoms: key lists the key variables once, non-key lists
    // the remaining variables once
    std::set<std::string> rel_names = relation_names(q);
    auto fresh_rel = [&rel_names](const std::string& base) {
        if (!rel_names.count(base)) {
            rel_names.insert(base);
            return base;
        }
        for (int i = 2;; ++i) {
            std::string cand = base + std::to_string(i);
            if (!rel_names.count(cand)) {
                rel_names.insert(cand);
                return cand;
            }
        }
    };

    SurrogatePool ground_keys(purified, "k");
    Query canon;
    std::vector<std::pair<Atom, Atom>> rewrites; // old atom -> new atom
    for (const Atom& a : q.atoms) {
        if (atom_canonical(a)) {
            canon.atoms.push_back(a);
            continue;
        }
        std::vector<std::string> kv = a.key_vars();
        std::vector<std::string> nv;
        for (const std::string& v : a.vars())
            if (std::find(kv.begin(), kv.end(), v) == kv.end()) nv.push_back(v);
        Atom g;
        g.decl.mode = a.decl.mode;
        g.decl.name = fresh_rel(a.decl.name);
        if (kv.empty()) {
            // fully ground key: all matching facts share it, one surrogate block
            g.terms.push_back(Term::constant(Value{ground_keys.next(), ""}));
            g.decl.key_len = 1;
        } else {
            for (const std::string& v : kv) g.terms.push_back(Term::variable(v));
            g.decl.key_len = static_cast<int>(kv.size());
        }
        for (const std::string& v : nv) g.terms.push_back(Term::variable(v));
        g.decl.arity = static_cast<int>(g.terms.size());
        rewrites.push_back({a, g});
        canon.atoms.push_back(g);
    }

    Database canon_db(schema_of(canon));
    for (const Fact& f : purified.facts()) {
        const Atom* old_atom = q.find(f.relation);
        auto rw = std::find_if(rewrites.begin(), rewrites.end(), [&](const auto& pr) {
            return pr.first.decl.name == f.relation;
        });
        if (rw == rewrites.end()) {
            canon_db.insert(f);
            continue;
        }
        auto theta = match_atom(*old_atom, f);
        if (!theta) continue; // cannot participate in any valuation
        canon_db.insert(apply_valuation(rw->second, *theta));
    }

    // (b) composite-key mode-i atoms split into two consistent bridges plus a
    // simple-key core
    Query out;
    std::vector<Fact> pending;
    SurrogatePool keys(canon_db, "k");
    keys.taken.insert(ground_keys.taken.begin(), ground_keys.taken.end());
    for (const Atom& a : canon.atoms) {
        if (a.decl.mode != Mode::i || a.decl.key_len <= 1) {
            out.atoms.push_back(a);
            for (const Fact& f : canon_db.facts_of(a.decl.name)) pending.push_back(f);
            continue;
        }
        int k = a.decl.key_len;
        std::vector<Term> key(a.terms.begin(), a.terms.begin() + k);
        std::vector<Term> rest(a.terms.begin() + k, a.terms.end());
        std::string w;
        {
            Query scratch = canon;
            scratch.atoms.insert(scratch.atoms.end(), out.atoms.begin(), out.atoms.end());
            w = fresh_variable(scratch, "w");
        }
        Atom r1, r2, core;
        r1.decl = RelationDecl{fresh_rel(a.decl.name + "1"), k + 1, k, Mode::c};
        r1.terms = key;
        r1.terms.push_back(Term::variable(w));
        r2.decl = RelationDecl{fresh_rel(a.decl.name + "2"), k + 1, 1, Mode::c};
        r2.terms.push_back(Term::variable(w));
        r2.terms.insert(r2.terms.end(), key.begin(), key.end());
        core.decl = RelationDecl{fresh_rel(a.decl.name + "0"),
                                 1 + static_cast<int>(rest.size()), 1, Mode::i};
        core.terms.push_back(Term::variable(w));
        core.terms.insert(core.terms.end(), rest.begin(), rest.end());
        out.atoms.push_back(r1);
        out.atoms.push_back(r2);
        out.atoms.push_back(core);

        for (const Block& b : canon_db.blocks(a.decl.name)) {
            Value h{keys.next(), ""};
            Fact f1{r1.decl.name, b.key};
            f1.values.push_back(h);
            Fact f2{r2.decl.name, {h}};
            f2.values.insert(f2.values.end(), b.key.begin(), b.key.end());
            pending.push_back(f1);
            pending.push_back(f2);
            for (const Fact& f : b.facts) {
                Fact fc{core.decl.name, {h}};
                fc.values.insert(fc.values.end(), f.values.begin() + k, f.values.end());
                pending.push_back(fc);
            }
        }
    }
    Database out_db(schema_of(out));
    for (const Fact& f : pending) out_db.insert(f);
    return SimplifyResult{std::move(out), std::move(out_db)};
}

// ---- saturate ----

namespace {

// A pair (x,z) breaks saturation when FD(q) |= x -> z holds, the mode-c
// dependencies alone do not give it, and no atom whose key x determines
// attacks x or z.
std::optional<std::pair<std::string, std::string>> violating_pair(const Query& q) {
    FDSet full = fd_of_query(q);
    FDSet cons = fd_of_query(q.mode_c_atoms());
    std::vector<std::string> vars = q.vars();
    for (const std::string& x : vars) {
        std::set<std::string> clo = closure(full, {x});
        std::set<std::string> clo_c = closure(cons, {x});
        for (const std::string& z : vars) {
            if (z == x || !clo.count(z) || clo_c.count(z)) continue;
            bool witnessed = false;
            for (int f = 0; f < q.size() && !witnessed; ++f) {
                auto kv = q.at(f).key_var_set();
                if (!std::includes(clo.begin(), clo.end(), kv.begin(), kv.end()))
                    continue;
                witnessed = attacks_variable(q, f, x) || attacks_variable(q, f, z);
            }
            if (!witnessed) return std::make_pair(x, z);
        }
    }
    return std::nullopt;
}

} // namespace

bool is_saturated(const Query& q) {
    return !violating_pair(q).has_value();
}

SaturateResult saturate(const Query& q, const Database& db) {
    if (cycle_status(attack_graph(q)).kind == CycleClass::strong_cycle)
        throw PreconditionError("saturate: attack graph has a strong cycle");

    Query cur_q = q;
    Database cur_db = db;
    size_t nvars = cur_q.vars().size();
    size_t budget = nvars * nvars + 8;
    while (auto pair = violating_pair(cur_q)) {
        if (budget-- == 0)
            throw UnsupportedStructure("saturate: did not converge");
        const auto& [x, z] = *pair;

        // remove blocks around key values that still admit two z-values
        while (true) {
            std::map<Value, std::set<Value>> images;
            enumerate_homomorphisms(cur_q, cur_db, [&](const Valuation& v) {
                images[v.at(x)].insert(v.at(z));
                return true;
            });
            std::optional<Value> bad;
            for (const auto& [a, zs] : images)
                if (zs.size() > 1) {
                    bad = a;
                    break;
                }
            if (!bad) break;
            for (const Block& b : cur_db.all_blocks()) {
                bool hits = false;
                for (const Fact& f : b.facts)
                    for (const Value& v : f.values)
                        if (v == *bad) hits = true;
                if (hits) cur_db.erase_block(b.relation, b.key);
            }
        }

        Atom witness;
        witness.decl = RelationDecl{fresh_relation_name(cur_q, "T"), 2, 1, Mode::c};
        witness.terms = {Term::variable(x), Term::variable(z)};

        std::set<Fact> tfacts;
        enumerate_homomorphisms(cur_q, cur_db, [&](const Valuation& v) {
            tfacts.insert(Fact{witness.decl.name, {v.at(x), v.at(z)}});
            return true;
        });

        cur_q.atoms.push_back(witness);
        Database next(schema_of(cur_q));
        for (const Fact& f : cur_db.facts()) next.insert(f);
        for (const Fact& f : tfacts) next.insert(f);
        next.validate_consistent();
        cur_db = std::move(next);
    }
    return SaturateResult{std::move(cur_q), std::move(cur_db)};
}

// ---- gblocks and gpurify ----

std::vector<std::vector<Fact>> gblocks(const Query& q, const Database& db) {
    std::map<Value, std::vector<Fact>> by_key;
    for (const Fact& f : db.facts()) {
        const RelationDecl& d = db.decl(f.relation);
        if (d.mode != Mode::i || d.key_len != 1) continue;
        (void)q;
        by_key[f.values[0]].push_back(f);
    }
    std::vector<std::vector<Fact>> out;
    out.reserve(by_key.size());
    for (auto& [key, facts] : by_key) out.push_back(std::move(facts));
    return out;
}

namespace {

// Scans gblock repairs; returns the first repair s such that no valuation of
// q into (db \ gblock) union s uses a fact of s. Such an s can be extended
// into a full repair where the gblock contributes nothing, so deleting the
// whole gblock preserves the certain answer.
std::optional<std::vector<Fact>> bad_gblock_repair(const Query& q, const Database& db,
                                                   const std::vector<Fact>& gblock,
                                                   std::uint64_t cap) {
    // within a gblock all facts share the key constant, so the blocks of the
    // gblock are exactly its per-relation groups
    std::map<std::string, std::vector<Fact>> by_rel;
    for (const Fact& f : gblock) by_rel[f.relation].push_back(f);
    std::vector<std::vector<Fact>> blocks;
    std::uint64_t total = 1;
    for (auto& [rel, facts] : by_rel) {
        std::uint64_t size = facts.size();
        if (total > cap / size)
            throw RepairSpaceTooLarge("gblock repair space exceeds cap");
        total *= size;
        blocks.push_back(facts);
    }

    Database base = db;
    for (const Fact& f : gblock) base.erase(f);

    std::vector<size_t> choice(blocks.size(), 0);
    while (true) {
        Database candidate = base;
        std::vector<Fact> repair;
        for (size_t i = 0; i < blocks.size(); ++i) {
            candidate.insert(blocks[i][choice[i]]);
            repair.push_back(blocks[i][choice[i]]);
        }
        bool grelevant =
            enumerate_homomorphisms(q, candidate, [&](const Valuation& v) {
                for (const Atom& a : q.atoms) {
                    Fact f = apply_valuation(a, v);
                    for (const Fact& r : repair)
                        if (r.relation == f.relation && r.values == f.values)
                            return false; // the repair is used; stop searching
                }
                return true;
            });
        if (!grelevant) return repair;
        size_t i = 0;
        for (; i < blocks.size(); ++i) {
            if (++choice[i] < blocks[i].size()) break;
            choice[i] = 0;
        }
        if (i == blocks.size()) return std::nullopt;
    }
}

} // namespace

bool is_gpurified(const Query& q, const Database& db, const PtimeOptions& opts) {
    for (const auto& g : gblocks(q, db))
        if (bad_gblock_repair(q, db, g, opts.gblock_cap)) return false;
    return true;
}

Database gpurify(const Query& q, const Database& db, const PtimeOptions& opts) {
    Database cur = db;
    bool changed = true;
    while (changed) {
        changed = false;
        for (const auto& g : gblocks(q, cur)) {
            if (!bad_gblock_repair(q, cur, g, opts.gblock_cap)) continue;
            for (const Fact& f : g) cur.erase(f);
            changed = true;
            break;
        }
    }
    return cur;
}

// ---- Markov graph ----

std::vector<int> clutch(const Query& q, const std::string& x) {
    std::vector<int> out;
    for (int i = 0; i < q.size(); ++i) {
        const Atom& a = q.at(i);
        if (a.decl.mode != Mode::i) continue;
        auto kv = a.key_var_set();
        if (kv.size() == 1 && kv.count(x)) out.push_back(i);
    }
    return out;
}

namespace {

void require_simple_mode_i(const Query& q, const char* who) {
    for (const Atom& a : q.atoms)
        if (a.decl.mode == Mode::i && a.decl.key_len != 1)
            throw ShapeError(std::string(who) + ": mode-i atom " + a.display() +
                             " does not have a simple key");
}

} // namespace

bool MarkovGraph::has_edge(const std::string& from, const std::string& to) const {
    return edges.count({from, to}) > 0;
}

std::vector<std::string> MarkovGraph::successors(const std::string& from) const {
    std::vector<std::string> out;
    for (const auto& [a, b] : edges)
        if (a == from) out.push_back(b);
    return out;
}

MarkovGraph markov_graph(const Query& q) {
    require_simple_mode_i(q, "markov_graph");
    MarkovGraph g;
    g.vars = q.vars();
    std::vector<Atom> cons;
    for (const Atom& a : q.atoms)
        if (a.decl.mode == Mode::c) cons.push_back(a);
    for (const std::string& x : g.vars) {
        std::vector<Atom> atoms = cons;
        for (int i : clutch(q, x)) atoms.push_back(q.at(i));
        std::set<std::string> clo = closure(fd_of_query(atoms), {x});
        for (const std::string& y : g.vars)
            if (y != x && clo.count(y)) g.edges.insert({x, y});
    }
    return g;
}

std::string markov_graph_dot(const MarkovGraph& g) {
    std::ostringstream os;
    os << "digraph markov {\n";
    for (const std::string& v : g.vars) os << "  " << v << ";\n";
    for (const auto& [a, b] : g.edges) os << "  " << a << " -> " << b << ";\n";
    os << "}\n";
    return os.str();
}

namespace {

bool markov_reaches(const MarkovGraph& g, const std::string& from,
                    const std::string& to) {
    if (from == to) return true;
    std::set<std::string> seen{from};
    std::deque<std::string> frontier{from};
    while (!frontier.empty()) {
        std::string u = frontier.front();
        frontier.pop_front();
        for (const std::string& w : g.successors(u)) {
            if (w == to) return true;
            if (seen.insert(w).second) frontier.push_back(w);
        }
    }
    return false;
}

} // namespace

bool is_premier(const Query& q, const std::vector<std::string>& cycle) {
    MarkovGraph mg = markov_graph(q);
    AttackGraph ag = attack_graph(q);
    StrongComponentSet sc = initial_strong_components(ag);
    FDSet full = fd_of_query(q);
    for (const std::string& x : q.vars()) {
        bool keyed = false;
        for (int i = 0; i < q.size() && !keyed; ++i) {
            const Atom& a = q.at(i);
            if (a.decl.mode != Mode::i) continue;
            auto kv = a.key_var_set();
            if (kv.size() != 1 || !kv.count(x)) continue;
            keyed = sc.initial[static_cast<size_t>(sc.component_of[static_cast<size_t>(i)])];
        }
        if (!keyed) continue;
        for (const std::string& y : cycle)
            if (markov_reaches(mg, x, y) && implies(full, {y}, x)) return true;
    }
    return false;
}

namespace {

void collect_cycles(const MarkovGraph& g, const std::string& start,
                    std::vector<std::string>& path, std::set<std::string>& on_path,
                    std::vector<std::vector<std::string>>& out) {
    const std::string& last = path.back();
    for (const std::string& next : g.successors(last)) {
        if (next == start && path.size() >= 2) out.push_back(path);
        // anchor each cycle at its smallest variable to enumerate it once
        if (next > start && !on_path.count(next)) {
            path.push_back(next);
            on_path.insert(next);
            collect_cycles(g, start, path, on_path, out);
            on_path.erase(next);
            path.pop_back();
        }
    }
}

std::vector<std::vector<std::string>> elementary_cycles(const MarkovGraph& g) {
    std::vector<std::string> starts = g.vars;
    std::sort(starts.begin(), starts.end());
    std::vector<std::vector<std::string>> out;
    for (const std::string& s : starts) {
        std::vector<std::string> path{s};
        std::set<std::string> on_path{s};
        collect_cycles(g, s, path, on_path, out);
    }
    return out;
}

std::set<std::string> clutch_vars(const Query& q, const std::string& x) {
    std::set<std::string> out;
    for (int i : clutch(q, x)) {
        auto vs = q.at(i).var_set();
        out.insert(vs.begin(), vs.end());
    }
    return out;
}

bool clutches_nonempty(const Query& q, const std::vector<std::string>& cycle) {
    return std::all_of(cycle.begin(), cycle.end(), [&](const std::string& y) {
        return !clutch(q, y).empty();
    });
}

// While some x_i occurs among the variables of a non-predecessor clutch, the
// shortcut edge x_j -> x_i yields a shorter premier cycle.
std::vector<std::string> contract_shortcuts(const Query& q,
                                            std::vector<std::string> cycle) {
    bool again = true;
    while (again) {
        again = false;
        int k = static_cast<int>(cycle.size());
        for (int i = 0; i < k && !again; ++i) {
            for (int j = 0; j < k && !again; ++j) {
                if (j == i || j == (i + k - 1) % k) continue;
                if (!clutch_vars(q, cycle[static_cast<size_t>(j)])
                         .count(cycle[static_cast<size_t>(i)]))
                    continue;
                std::vector<std::string> shorter;
                for (int t = i; t != (j + 1) % k; t = (t + 1) % k)
                    shorter.push_back(cycle[static_cast<size_t>(t)]);
                cycle = std::move(shorter);
                again = true;
            }
        }
    }
    auto smallest = std::min_element(cycle.begin(), cycle.end());
    std::rotate(cycle.begin(), smallest, cycle.end());
    return cycle;
}

} // namespace

std::vector<std::string> find_premier_cycle(const Query& q) {
    require_simple_mode_i(q, "find_premier_cycle");
    for (const Atom& a : q.atoms)
        if (a.decl.mode == Mode::i && a.key_vars().empty())
            throw PreconditionError("find_premier_cycle: mode-i atom " + a.display() +
                                    " has a constant key");
    if (!is_saturated(q))
        throw PreconditionError("find_premier_cycle: query is not saturated");
    AttackGraph ag = attack_graph(q);
    if (cycle_status(ag).kind == CycleClass::strong_cycle)
        throw PreconditionError("find_premier_cycle: attack graph has a strong cycle");
    StrongComponentSet sc = initial_strong_components(ag);
    bool wide_initial = false;
    for (size_t i = 0; i < sc.components.size(); ++i)
        wide_initial |= sc.initial[i] && sc.components[i].size() >= 2;
    if (!wide_initial)
        throw PreconditionError(
            "find_premier_cycle: no initial strong component with two or more atoms");

    MarkovGraph mg = markov_graph(q);
    std::vector<std::vector<std::string>> cycles = elementary_cycles(mg);
    std::stable_sort(cycles.begin(), cycles.end(),
                     [](const auto& a, const auto& b) { return a.size() < b.size(); });
    for (const auto& c : cycles) {
        if (!clutches_nonempty(q, c) || !is_premier(q, c)) continue;
        std::vector<std::string> minimal = contract_shortcuts(q, c);
        assert(clutches_nonempty(q, minimal) && is_premier(q, minimal));
        return minimal;
    }
    throw PreconditionError("find_premier_cycle: no premier cycle found");
}

// ---- dissolution ----

namespace {

struct DissolutionPlan {
    std::vector<std::string> cycle;
    std::vector<std::set<std::string>> cvars; // X_i per cycle position
    std::set<int> q0;                         // clutch atoms
    std::vector<std::string> ybar;
    std::string t_name;
    std::vector<std::string> u_names;
    std::string u_var;
    Query new_query;
};

DissolutionPlan plan_dissolution(const Query& q, const std::vector<std::string>& cycle) {
    require_simple_mode_i(q, "dissolve");
    if (cycle.size() < 2)
        throw PreconditionError("dissolve: cycle must have at least two variables");
    std::set<std::string> distinct(cycle.begin(), cycle.end());
    if (distinct.size() != cycle.size())
        throw PreconditionError("dissolve: cycle is not elementary");
    MarkovGraph mg = markov_graph(q);
    int k = static_cast<int>(cycle.size());
    for (int i = 0; i < k; ++i)
        if (!mg.has_edge(cycle[static_cast<size_t>(i)],
                         cycle[static_cast<size_t>((i + 1) % k)]))
            throw PreconditionError("dissolve: not a cycle of the Markov graph");

    DissolutionPlan plan;
    plan.cycle = cycle;
    for (const std::string& x : cycle) {
        std::vector<int> cl = clutch(q, x);
        if (cl.empty())
            throw PreconditionError("dissolve: clutch of " + x + " is empty");
        plan.q0.insert(cl.begin(), cl.end());
        plan.cvars.push_back(clutch_vars(q, x));
    }

    // remaining clutch variables, first occurrence over the clutch atoms
    for (int i : plan.q0)
        for (const std::string& v : q.at(i).vars())
            if (!distinct.count(v) &&
                std::find(plan.ybar.begin(), plan.ybar.end(), v) == plan.ybar.end())
                plan.ybar.push_back(v);

    std::set<std::string> rel_names = relation_names(q);
    auto fresh_rel = [&rel_names](const std::string& base) {
        if (rel_names.insert(base).second) return base;
        for (int i = 2;; ++i) {
            std::string cand = base + std::to_string(i);
            if (rel_names.insert(cand).second) return cand;
        }
    };
    plan.t_name = fresh_rel("T");
    for (int i = 1; i <= k; ++i) plan.u_names.push_back(fresh_rel("U" + std::to_string(i)));
    plan.u_var = fresh_variable(q, "u");

    for (int i = 0; i < q.size(); ++i)
        if (!plan.q0.count(i)) plan.new_query.atoms.push_back(q.at(i));
    Atom t;
    t.decl = RelationDecl{plan.t_name, 1 + k + static_cast<int>(plan.ybar.size()), 1,
                          Mode::i};
    t.terms.push_back(Term::variable(plan.u_var));
    for (const std::string& x : cycle) t.terms.push_back(Term::variable(x));
    for (const std::string& y : plan.ybar) t.terms.push_back(Term::variable(y));
    plan.new_query.atoms.push_back(t);
    for (int i = 0; i < k; ++i) {
        Atom u;
        u.decl = RelationDecl{plan.u_names[static_cast<size_t>(i)], 2, 1, Mode::c};
        u.terms = {Term::variable(cycle[static_cast<size_t>(i)]),
                   Term::variable(plan.u_var)};
        plan.new_query.atoms.push_back(u);
    }
    return plan;
}

void require_minimal(const DissolutionPlan& plan) {
    int k = static_cast<int>(plan.cycle.size());
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j) {
            if (j == i || j == (i + k - 1) % k) continue;
            if (plan.cvars[static_cast<size_t>(j)].count(plan.cycle[static_cast<size_t>(i)]))
                throw PreconditionError("dissolve: cycle admits a shortcut through " +
                                        plan.cycle[static_cast<size_t>(i)]);
        }
}

// Each constant should inhabit positions of one variable only, and differ
// from the query's own constants.
void require_typed(const Query& q, const Database& db) {
    std::set<Value> query_consts;
    for (const Atom& a : q.atoms)
        for (const Term& t : a.terms)
            if (!t.is_var()) query_consts.insert(t.val);
    std::map<Value, std::string> type_of;
    for (const Fact& f : db.facts()) {
        const Atom* atom = q.find(f.relation);
        if (!atom) throw ShapeError("dissolve: no atom for relation " + f.relation);
        for (size_t p = 0; p < f.values.size(); ++p) {
            const Term& t = atom->terms[p];
            if (!t.is_var()) {
                if (f.values[p] != t.val)
                    throw ShapeError("dissolve: fact contradicts a query constant");
                continue;
            }
            if (query_consts.count(f.values[p]))
                throw ShapeError("dissolve: database constant collides with the query");
            auto [it, inserted] = type_of.emplace(f.values[p], t.var);
            if (!inserted && it->second != t.var)
                throw ShapeError("dissolve: constant " + f.values[p].display() +
                                 " occurs under two variables");
        }
    }
}

struct ComponentGraph {
    std::map<Value, std::set<Value>> succ;
    std::map<Value, int> comp;
    std::vector<std::vector<Value>> members;

    void add_edge(const Value& a, const Value& b) {
        succ[a].insert(b);
        succ[b]; // ensure the vertex exists
    }

    void run_scc() {
        // iterative Tarjan over Value vertices
        std::map<Value, int> index, low;
        std::map<Value, bool> on_stack;
        std::vector<Value> stack;
        int next = 0;
        std::vector<std::vector<Value>> raw;

        struct Frame {
            Value v;
            std::vector<Value> succs;
            size_t next_succ = 0;
        };
        for (const auto& [root, _] : succ) {
            if (index.count(root)) continue;
            std::vector<Frame> frames;
            frames.push_back({root, {succ[root].begin(), succ[root].end()}, 0});
            index[root] = low[root] = next++;
            stack.push_back(root);
            on_stack[root] = true;
            while (!frames.empty()) {
                Frame& f = frames.back();
                if (f.next_succ < f.succs.size()) {
                    Value w = f.succs[f.next_succ++];
                    if (!index.count(w)) {
                        index[w] = low[w] = next++;
                        stack.push_back(w);
                        on_stack[w] = true;
                        frames.push_back({w, {succ[w].begin(), succ[w].end()}, 0});
                    } else if (on_stack[w]) {
                        low[f.v] = std::min(low[f.v], index[w]);
                    }
                } else {
                    if (low[f.v] == index[f.v]) {
                        std::vector<Value> comp_vals;
                        while (true) {
                            Value w = stack.back();
                            stack.pop_back();
                            on_stack[w] = false;
                            comp_vals.push_back(w);
                            if (w == f.v) break;
                        }
                        std::sort(comp_vals.begin(), comp_vals.end());
                        raw.push_back(std::move(comp_vals));
                    }
                    Value done = f.v;
                    frames.pop_back();
                    if (!frames.empty())
                        low[frames.back().v] = std::min(low[frames.back().v], low[done]);
                }
            }
        }
        std::sort(raw.begin(), raw.end());
        members = std::move(raw);
        for (size_t i = 0; i < members.size(); ++i)
            for (const Value& v : members[i]) comp[v] = static_cast<int>(i);
    }

    bool all_initial() const {
        for (const auto& [a, succs] : succ)
            for (const Value& b : succs)
                if (comp.at(a) != comp.at(b)) return false;
        return true;
    }
};

} // namespace

Query dissolve_query(const Query& q, const std::vector<std::string>& cycle) {
    return plan_dissolution(q, cycle).new_query;
}

Database dissolve_database(const Query& q, const std::vector<std::string>& cycle,
                           const Database& db, const PtimeOptions& opts) {
    DissolutionPlan plan = plan_dissolution(q, cycle);
    require_minimal(plan);
    require_typed(q, db);
    if (!is_premier(q, cycle))
        throw PreconditionError("dissolve: cycle is not premier");
    if (!is_purified(q, db))
        throw PreconditionError("dissolve: database is not purified");

    int k = static_cast<int>(plan.cycle.size());

    // constant-level cycle graph: one edge per valuation and cycle position,
    // remembering the clutch-variable realizations
    ComponentGraph graph;
    std::map<std::tuple<int, Value, Value>, std::set<Valuation>> realizations;
    enumerate_homomorphisms(q, db, [&](const Valuation& v) {
        for (int i = 0; i < k; ++i) {
            Value a = v.at(plan.cycle[static_cast<size_t>(i)]);
            Value b = v.at(plan.cycle[static_cast<size_t>((i + 1) % k)]);
            graph.add_edge(a, b);
            Valuation restricted;
            for (const std::string& xv : plan.cvars[static_cast<size_t>(i)])
                restricted[xv] = v.at(xv);
            realizations[{i, a, b}].insert(std::move(restricted));
        }
        return true;
    });
    graph.run_scc();
    if (!graph.all_initial())
        throw NotGPurified("dissolve: a strong component has an incoming edge");

    // type lookup for vertices
    std::map<Value, int> position;
    for (const auto& [key, reals] : realizations) {
        position[std::get<1>(key)] = std::get<0>(key);
        position[std::get<2>(key)] = (std::get<0>(key) + 1) % k;
    }

    SurrogatePool ids(db, "d");
    std::vector<Fact> emitted;
    size_t encoded = 0, deleted = 0;
    for (const auto& comp_vals : graph.members) {
        std::set<Value> in_comp(comp_vals.begin(), comp_vals.end());

        // k-cycles anchored at position 0
        std::vector<std::vector<Value>> kcycles;
        std::vector<Value> starts;
        for (const Value& v : comp_vals)
            if (position.at(v) == 0) starts.push_back(v);
        for (const Value& a0 : starts) {
            std::vector<std::vector<Value>> paths{{a0}};
            for (int step = 1; step < k; ++step) {
                std::vector<std::vector<Value>> next_paths;
                for (const auto& p : paths)
                    for (const Value& nxt : graph.succ.at(p.back()))
                        if (position.at(nxt) == step % k) {
                            auto np = p;
                            np.push_back(nxt);
                            next_paths.push_back(std::move(np));
                        }
                paths = std::move(next_paths);
            }
            for (const auto& p : paths)
                if (graph.succ.at(p.back()).count(a0)) kcycles.push_back(p);
        }

        // any cycle longer than k: a k-step path reaching a fresh position-0
        // vertex that can return while avoiding the path's interior
        bool overlong = false;
        for (const Value& a0 : starts) {
            if (overlong) break;
            std::vector<std::vector<Value>> paths{{a0}};
            for (int step = 1; step <= k && !overlong; ++step) {
                std::vector<std::vector<Value>> next_paths;
                for (const auto& p : paths)
                    for (const Value& nxt : graph.succ.at(p.back()))
                        if (position.at(nxt) == step % k) {
                            if (step == k) {
                                if (nxt == a0) continue;
                                // return search avoiding the interior vertices
                                std::set<Value> blocked(p.begin() + 1, p.end());
                                std::set<Value> seen{nxt};
                                std::deque<Value> frontier{nxt};
                                while (!frontier.empty() && !overlong) {
                                    Value u = frontier.front();
                                    frontier.pop_front();
                                    for (const Value& w : graph.succ.at(u)) {
                                        if (w == a0) {
                                            overlong = true;
                                            break;
                                        }
                                        if (blocked.count(w) || !seen.insert(w).second)
                                            continue;
                                        frontier.push_back(w);
                                    }
                                }
                            } else {
                                auto np = p;
                                np.push_back(nxt);
                                next_paths.push_back(std::move(np));
                            }
                        }
                paths = std::move(next_paths);
            }
        }

        // realizations along each k-cycle must agree across positions
        bool supported = true;
        for (const auto& cyc : kcycles) {
            if (!supported) break;
            for (int i = 0; i < k && supported; ++i)
                for (int j = i + 1; j < k && supported; ++j) {
                    const auto& di = realizations.at(
                        {i, cyc[static_cast<size_t>(i)], cyc[static_cast<size_t>((i + 1) % k)]});
                    const auto& dj = realizations.at(
                        {j, cyc[static_cast<size_t>(j)], cyc[static_cast<size_t>((j + 1) % k)]});
                    for (const Valuation& mi : di)
                        for (const Valuation& mj : dj)
                            for (const auto& [var, val] : mi) {
                                auto it = mj.find(var);
                                if (it != mj.end() && it->second != val) {
                                    supported = false;
                                    break;
                                }
                            }
                }
        }

        if (overlong || !supported) {
            ++deleted;
            if (opts.trace)
                *opts.trace << "[dissolve] component of "
                            << comp_vals.front().display() << " deleted ("
                            << (overlong ? "overlong cycle" : "unsupported cycle")
                            << ")\n";
            continue;
        }

        Value id{ids.next(), plan.u_var};
        ++encoded;
        for (const auto& cyc : kcycles) {
            // cartesian product over the per-position realization sets
            std::vector<std::vector<Valuation>> delta;
            for (int i = 0; i < k; ++i) {
                const auto& d = realizations.at(
                    {i, cyc[static_cast<size_t>(i)], cyc[static_cast<size_t>((i + 1) % k)]});
                delta.emplace_back(d.begin(), d.end());
            }
            std::vector<size_t> pick(static_cast<size_t>(k), 0);
            while (true) {
                Valuation merged;
                for (int i = 0; i < k; ++i)
                    for (const auto& [var, val] : delta[static_cast<size_t>(i)][pick[static_cast<size_t>(i)]])
                        merged[var] = val;
                Fact t{plan.t_name, {id}};
                for (const Value& v : cyc) t.values.push_back(v);
                for (const std::string& y : plan.ybar) t.values.push_back(merged.at(y));
                emitted.push_back(std::move(t));
                size_t i = 0;
                for (; i < pick.size(); ++i) {
                    if (++pick[i] < delta[i].size()) break;
                    pick[i] = 0;
                }
                if (i == pick.size()) break;
            }
            for (int i = 0; i < k; ++i)
                emitted.push_back(Fact{plan.u_names[static_cast<size_t>(i)],
                                       {cyc[static_cast<size_t>(i)], id}});
        }
    }

    if (opts.trace)
        *opts.trace << "[dissolve] cycle (" << [&] {
            std::string s;
            for (size_t i = 0; i < plan.cycle.size(); ++i)
                s += (i ? ", " : "") + plan.cycle[i];
            return s;
        }() << "): " << encoded << " component(s) encoded, " << deleted
                    << " deleted, " << emitted.size() << " fact(s) emitted\n";

    std::set<std::string> q0_rels;
    for (int i : plan.q0) q0_rels.insert(q.at(i).decl.name);
    Database out(schema_of(plan.new_query));
    for (const Fact& f : db.facts())
        if (!q0_rels.count(f.relation) && out.has_relation(f.relation)) out.insert(f);
    for (const Fact& f : emitted) out.insert(f);
    out.validate_consistent();
    return out;
}

// ---- the engine ----

namespace {

bool certain_ptime_rec(const Query& q, const Database& db, const PtimeOptions& opts,
                       int depth) {
    if (q.icard() == 0) return eval_bcq(q, db);
    if (opts.trace)
        *opts.trace << "[ptime] depth " << depth << ": icard " << q.icard() << ", "
                    << db.fact_count() << " fact(s)\n";

    Database db1 = purify(q, db);
    SimplifyResult simp = simplify(q, db1);
    Database db3 = type_tag(simp.query, simp.db);
    SaturateResult sat = saturate(simp.query, db3);
    const Query& cur = sat.query;

    Database prepared = purify(cur, sat.db);
    while (true) {
        Database next = purify(cur, gpurify(cur, prepared, opts));
        if (next == prepared) break;
        prepared = std::move(next);
    }
    if (opts.trace)
        *opts.trace << "[ptime] prepared: " << cur.size() << " atom(s), "
                    << prepared.fact_count() << " fact(s)\n";

    AttackGraph ag = attack_graph(cur);
    int pick = -1;
    for (int i = 0; i < cur.size() && pick < 0; ++i)
        if (cur.at(i).decl.mode == Mode::i && ag.in_degree(i) == 0) pick = i;

    if (pick >= 0) {
        const Atom& F = cur.at(pick);
        if (opts.trace)
            *opts.trace << "[ptime] eliminating unattacked " << F.display() << "\n";
        Query rest = cur.without(pick);
        for (const Block& b : prepared.blocks(F.relation())) {
            bool all_good = true;
            for (const Fact& fact : b.facts) {
                auto theta = match_atom(F, fact);
                if (!theta) {
                    all_good = false;
                    break;
                }
                std::vector<std::string> xs;
                std::vector<Value> vals;
                for (const auto& [var, val] : *theta) {
                    xs.push_back(var);
                    vals.push_back(val);
                }
                if (!certain_ptime_rec(substitute(rest, xs, vals), prepared, opts,
                                       depth + 1)) {
                    all_good = false;
                    break;
                }
            }
            if (all_good) return true;
        }
        return false;
    }

    // every mode-i atom is attacked: dissolve a premier cycle
    for (const Atom& a : cur.atoms)
        if (a.decl.mode == Mode::i)
            for (const Term& t : a.terms)
                if (!t.is_var())
                    throw UnsupportedStructure(
                        "certain_ptime: constant in an attacked mode-i atom");

    std::vector<std::string> cycle = find_premier_cycle(cur);
    Query next_q = dissolve_query(cur, cycle);
    Database next_db = dissolve_database(cur, cycle, prepared, opts);
    if (opts.trace)
        *opts.trace << "[ptime] dissolved: icard " << cur.icard() << " -> "
                    << next_q.icard() << "\n";
    return certain_ptime_rec(next_q, next_db, opts, depth + 1);
}

} // namespace

bool certain_ptime(const Query& q, const Database& db, const PtimeOptions& opts) {
    if (cycle_status(attack_graph(q)).kind == CycleClass::strong_cycle)
        throw PreconditionError("certain_ptime: attack graph has a strong cycle");
    return certain_ptime_rec(q, db, opts, 0);
}

// ---- mode-c elimination ----

Database Desugared::apply(const Database& db) const {
    std::map<std::string, RelationDecl> schema = schema_of(query);
    Database out(std::move(schema));
    for (const Fact& f : db.facts()) {
        if (f.relation == removed) {
            Fact a = f, b = f;
            a.relation = r1;
            b.relation = r2;
            out.insert(a);
            out.insert(b);
        } else if (out.has_relation(f.relation)) {
            out.insert(f);
        }
    }
    return out;
}

Desugared desugar_consistent(const Query& q) {
    int idx = -1;
    for (int i = 0; i < q.size() && idx < 0; ++i)
        if (q.at(i).decl.mode == Mode::c) idx = i;
    if (idx < 0) throw NoConsistentAtom("desugar_consistent: no mode-c atom");

    const Atom& a = q.at(idx);
    Desugared out;
    out.removed = a.decl.name;
    out.r1 = fresh_relation_name(q, a.decl.name + "1");
    {
        Query bump = q;
        Atom tmp = a;
        tmp.decl.name = out.r1;
        bump.atoms.push_back(tmp);
        out.r2 = fresh_relation_name(bump, a.decl.name + "2");
    }
    for (int i = 0; i < q.size(); ++i) {
        if (i != idx) {
            out.query.atoms.push_back(q.at(i));
            continue;
        }
        Atom first = a, second = a;
        first.decl.name = out.r1;
        first.decl.mode = Mode::i;
        second.decl.name = out.r2;
        second.decl.mode = Mode::i;
        out.query.atoms.push_back(first);
        out.query.atoms.push_back(second);
    }
    return out;
}

} // namespace cqa
