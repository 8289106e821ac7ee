#include "cqa/fo_engine.hpp"

#include <algorithm>
#include <map>
#include <sstream>

#include "cqa/attack.hpp"
#include "cqa/classify.hpp"

namespace cqa {

FOF FOFormula::exists(std::string v, FOF body) {
    auto f = std::make_shared<FOFormula>();
    f->kind = Kind::exists;
    f->var = std::move(v);
    f->body = std::move(body);
    return f;
}

FOF FOFormula::forall(std::string v, FOF body) {
    auto f = std::make_shared<FOFormula>();
    f->kind = Kind::forall;
    f->var = std::move(v);
    f->body = std::move(body);
    return f;
}

FOF FOFormula::conj(std::vector<FOF> kids) {
    auto f = std::make_shared<FOFormula>();
    f->kind = Kind::conj;
    f->kids = std::move(kids);
    return f;
}

FOF FOFormula::implies(FOF l, FOF r) {
    auto f = std::make_shared<FOFormula>();
    f->kind = Kind::implies;
    f->lhs = std::move(l);
    f->rhs = std::move(r);
    return f;
}

FOF FOFormula::equals(Term a, Term b) {
    auto f = std::make_shared<FOFormula>();
    f->kind = Kind::equals;
    f->a = std::move(a);
    f->b = std::move(b);
    return f;
}

FOF FOFormula::atom(std::string rel, std::vector<Term> terms) {
    auto f = std::make_shared<FOFormula>();
    f->kind = Kind::atom;
    f->rel = std::move(rel);
    f->terms = std::move(terms);
    return f;
}

namespace {

// Zero-in-degree atom of q, rotated by the option offset. The query passed
// here already has bound variables replaced by constants, so its attack
// graph is the one the recursion must consult.
int pick_unattacked(const Query& q, const FOOptions& opts) {
    AttackGraph g = attack_graph(q);
    if (cycle_status(g).kind != CycleClass::acyclic)
        throw NotFOQuery("attack graph is cyclic");
    std::vector<int> zero;
    for (int i = 0; i < q.size(); ++i)
        if (g.in_degree(i) == 0) zero.push_back(i);
    // an acyclic nonempty graph always has a source
    return zero[static_cast<size_t>(opts.pick_offset) % zero.size()];
}

bool certain_fo_rec(const Query& q, const Database& db, const FOOptions& opts) {
    if (q.empty()) return true;
    int f = pick_unattacked(q, opts);
    const Atom& F = q.at(f);
    Query rest = q.without(f);

    for (const Block& b : db.blocks(F.relation())) {
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
            if (!certain_fo_rec(substitute(rest, xs, vals), db, opts)) {
                all_good = false;
                break;
            }
        }
        if (all_good) return true;
    }
    return false;
}

struct NameGen {
    std::set<std::string> used;

    std::string fresh(const std::string& base) {
        if (!used.count(base)) {
            used.insert(base);
            return base;
        }
        for (int i = 2;; ++i) {
            std::string cand = base + std::to_string(i);
            if (!used.count(cand)) {
                used.insert(cand);
                return cand;
            }
        }
    }
};

FOF make_conj(std::vector<FOF> kids) {
    if (kids.size() == 1) return kids[0];
    return FOFormula::conj(std::move(kids));
}

bool is_truth(const FOF& f) {
    return f->kind == FOFormula::Kind::conj && f->kids.empty();
}

// Placeholder constants standing for variables bound further out; they only
// drive the attack-graph analysis of the residual query.
Value bound_marker(const std::string& var) {
    return Value{var, "#bound"};
}

FOF rewrite_rec(const Query& q, std::set<std::string> bound, NameGen& names,
                const FOOptions& opts) {
    if (q.empty()) return FOFormula::conj({});

    std::vector<std::string> bound_list(bound.begin(), bound.end());
    std::vector<Value> markers;
    markers.reserve(bound_list.size());
    for (const std::string& v : bound_list) markers.push_back(bound_marker(v));
    int f = pick_unattacked(substitute(q, bound_list, markers), opts);

    const Atom& F = q.at(f);
    Query rest = q.without(f);

    std::vector<std::string> new_vars;
    for (const std::string& v : F.vars())
        if (!bound.count(v)) new_vars.push_back(v);

    // universal side: fresh variable per non-key position
    std::vector<Term> forall_terms = F.key_terms();
    std::vector<std::string> forall_vars;
    std::vector<FOF> eqs;
    std::map<std::string, std::string> renamed; // first occurrences of unbound non-key vars
    std::set<std::string> key_vars = F.key_var_set();
    for (const Term& t : F.nonkey_terms()) {
        std::string u = names.fresh(t.is_var() ? t.var : "z");
        forall_vars.push_back(u);
        forall_terms.push_back(Term::variable(u));
        if (!t.is_var()) {
            eqs.push_back(FOFormula::equals(Term::variable(u), Term::constant(t.val)));
        } else if (key_vars.count(t.var) || bound.count(t.var)) {
            eqs.push_back(FOFormula::equals(Term::variable(u), Term::variable(t.var)));
        } else if (auto it = renamed.find(t.var); it != renamed.end()) {
            eqs.push_back(
                FOFormula::equals(Term::variable(u), Term::variable(it->second)));
        } else {
            renamed[t.var] = u;
        }
    }

    Query renamed_rest = rest;
    for (Atom& a : renamed_rest.atoms)
        for (Term& t : a.terms)
            if (t.is_var())
                if (auto it = renamed.find(t.var); it != renamed.end())
                    t = Term::variable(it->second);

    std::set<std::string> inner_bound = bound;
    inner_bound.insert(new_vars.begin(), new_vars.end());
    inner_bound.insert(forall_vars.begin(), forall_vars.end());
    FOF rest_formula = rewrite_rec(renamed_rest, std::move(inner_bound), names, opts);

    std::vector<FOF> exists_kids{FOFormula::atom(F.relation(), F.terms)};
    if (!eqs.empty() || !is_truth(rest_formula)) {
        std::vector<FOF> body_kids = eqs;
        if (!is_truth(rest_formula)) body_kids.push_back(rest_formula);
        FOF universal = FOFormula::implies(
            FOFormula::atom(F.relation(), forall_terms), make_conj(std::move(body_kids)));
        for (auto it = forall_vars.rbegin(); it != forall_vars.rend(); ++it)
            universal = FOFormula::forall(*it, std::move(universal));
        exists_kids.push_back(std::move(universal));
    }

    FOF out = make_conj(std::move(exists_kids));
    for (auto it = new_vars.rbegin(); it != new_vars.rend(); ++it)
        out = FOFormula::exists(*it, std::move(out));
    return out;
}

} // namespace

bool certain_fo(const Query& q, const Database& db, const FOOptions& opts) {
    return certain_fo_rec(q, db, opts);
}

FOF emit_rewriting(const Query& q, const FOOptions& opts) {
    NameGen names;
    for (const std::string& v : q.vars()) names.used.insert(v);
    return rewrite_rec(q, {}, names, opts);
}

namespace {

using Env = std::map<std::string, Value>;

Value resolve(const Term& t, const Env& env) {
    if (!t.is_var()) return t.val;
    auto it = env.find(t.var);
    if (it == env.end()) throw PreconditionError("unbound variable " + t.var);
    return it->second;
}

void collect_constants(const FOF& f, std::set<Value>& out) {
    switch (f->kind) {
        case FOFormula::Kind::exists:
        case FOFormula::Kind::forall:
            collect_constants(f->body, out);
            break;
        case FOFormula::Kind::conj:
            for (const FOF& k : f->kids) collect_constants(k, out);
            break;
        case FOFormula::Kind::implies:
            collect_constants(f->lhs, out);
            collect_constants(f->rhs, out);
            break;
        case FOFormula::Kind::equals:
            if (!f->a.is_var()) out.insert(f->a.val);
            if (!f->b.is_var()) out.insert(f->b.val);
            break;
        case FOFormula::Kind::atom:
            for (const Term& t : f->terms)
                if (!t.is_var()) out.insert(t.val);
            break;
    }
}

bool eval_rec(const FOF& f, const Database& db, const std::vector<Value>& domain,
              Env& env) {
    switch (f->kind) {
        case FOFormula::Kind::exists:
            for (const Value& d : domain) {
                env[f->var] = d;
                bool ok = eval_rec(f->body, db, domain, env);
                env.erase(f->var);
                if (ok) return true;
            }
            return false;
        case FOFormula::Kind::forall:
            for (const Value& d : domain) {
                env[f->var] = d;
                bool ok = eval_rec(f->body, db, domain, env);
                env.erase(f->var);
                if (!ok) return false;
            }
            return true;
        case FOFormula::Kind::conj:
            for (const FOF& k : f->kids)
                if (!eval_rec(k, db, domain, env)) return false;
            return true;
        case FOFormula::Kind::implies:
            return !eval_rec(f->lhs, db, domain, env) || eval_rec(f->rhs, db, domain, env);
        case FOFormula::Kind::equals:
            return resolve(f->a, env) == resolve(f->b, env);
        case FOFormula::Kind::atom: {
            Fact fact;
            fact.relation = f->rel;
            for (const Term& t : f->terms) fact.values.push_back(resolve(t, env));
            return db.contains(fact);
        }
    }
    return false;
}

} // namespace

bool eval_fo(const FOF& f, const Database& db) {
    std::set<Value> dom = db.adom();
    collect_constants(f, dom);
    std::vector<Value> domain(dom.begin(), dom.end());
    Env env;
    return eval_rec(f, db, domain, env);
}

std::string to_sexpr(const FOF& f) {
    std::ostringstream os;
    switch (f->kind) {
        case FOFormula::Kind::exists:
            os << "(exists (" << f->var << ") " << to_sexpr(f->body) << ")";
            break;
        case FOFormula::Kind::forall:
            os << "(forall (" << f->var << ") " << to_sexpr(f->body) << ")";
            break;
        case FOFormula::Kind::conj:
            os << "(and";
            for (const FOF& k : f->kids) os << " " << to_sexpr(k);
            os << ")";
            break;
        case FOFormula::Kind::implies:
            os << "(implies " << to_sexpr(f->lhs) << " " << to_sexpr(f->rhs) << ")";
            break;
        case FOFormula::Kind::equals:
            os << "(= " << f->a.display() << " " << f->b.display() << ")";
            break;
        case FOFormula::Kind::atom:
            os << "(" << f->rel;
            for (const Term& t : f->terms) os << " " << t.display();
            os << ")";
            break;
    }
    return os.str();
}

namespace {

bool term_alpha_equal(const Term& a, const Term& b, const std::map<std::string, int>& la,
                      const std::map<std::string, int>& lb) {
    if (a.is_var() != b.is_var()) return false;
    if (!a.is_var()) return a.val == b.val;
    auto ia = la.find(a.var);
    auto ib = lb.find(b.var);
    if ((ia == la.end()) != (ib == lb.end())) return false;
    if (ia == la.end()) return a.var == b.var; // both free
    return ia->second == ib->second;
}

bool alpha_rec(const FOF& x, const FOF& y, std::map<std::string, int> lx,
               std::map<std::string, int> ly, int depth) {
    if (x->kind != y->kind) return false;
    switch (x->kind) {
        case FOFormula::Kind::exists:
        case FOFormula::Kind::forall:
            lx[x->var] = depth;
            ly[y->var] = depth;
            return alpha_rec(x->body, y->body, std::move(lx), std::move(ly), depth + 1);
        case FOFormula::Kind::conj:
            if (x->kids.size() != y->kids.size()) return false;
            for (size_t i = 0; i < x->kids.size(); ++i)
                if (!alpha_rec(x->kids[i], y->kids[i], lx, ly, depth)) return false;
            return true;
        case FOFormula::Kind::implies:
            return alpha_rec(x->lhs, y->lhs, lx, ly, depth) &&
                   alpha_rec(x->rhs, y->rhs, lx, ly, depth);
        case FOFormula::Kind::equals:
            return term_alpha_equal(x->a, y->a, lx, ly) &&
                   term_alpha_equal(x->b, y->b, lx, ly);
        case FOFormula::Kind::atom:
            if (x->rel != y->rel || x->terms.size() != y->terms.size()) return false;
            for (size_t i = 0; i < x->terms.size(); ++i)
                if (!term_alpha_equal(x->terms[i], y->terms[i], lx, ly)) return false;
            return true;
    }
    return false;
}

} // namespace

bool alpha_equal(const FOF& x, const FOF& y) {
    return alpha_rec(x, y, {}, {}, 0);
}

} // namespace cqa
