#include "cqa/model.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

namespace cqa {

namespace {

bool plain_constant_token(const std::string& s) {
    if (s.empty()) return false;
    if (!std::isdigit(static_cast<unsigned char>(s[0])) &&
        !std::isupper(static_cast<unsigned char>(s[0])))
        return false;
    return std::all_of(s.begin(), s.end(), [](unsigned char c) {
        return std::isalnum(c) || c == '_';
    });
}

std::string quote(const std::string& s) {
    return "'" + s + "'";
}

} // namespace

std::string Value::display() const {
    std::string base = plain_constant_token(text) ? text : quote(text);
    if (tag.empty()) return base;
    return base + "@" + tag;
}

Term Term::variable(std::string name) {
    Term t;
    t.kind = Kind::variable;
    t.var = std::move(name);
    return t;
}

Term Term::constant(Value v) {
    Term t;
    t.kind = Kind::constant;
    t.val = std::move(v);
    return t;
}

Term Term::constant(std::string text) {
    return constant(Value{std::move(text), ""});
}

std::string Term::display() const {
    return is_var() ? var : val.display();
}

std::vector<Term> Atom::key_terms() const {
    return {terms.begin(), terms.begin() + decl.key_len};
}

std::vector<Term> Atom::nonkey_terms() const {
    return {terms.begin() + decl.key_len, terms.end()};
}

namespace {

std::vector<std::string> vars_of_terms(const std::vector<Term>& terms) {
    std::vector<std::string> out;
    for (const Term& t : terms) {
        if (t.is_var() && std::find(out.begin(), out.end(), t.var) == out.end())
            out.push_back(t.var);
    }
    return out;
}

} // namespace

std::vector<std::string> Atom::vars() const {
    return vars_of_terms(terms);
}

std::vector<std::string> Atom::key_vars() const {
    return vars_of_terms(key_terms());
}

std::set<std::string> Atom::var_set() const {
    auto v = vars();
    return {v.begin(), v.end()};
}

std::set<std::string> Atom::key_var_set() const {
    auto v = key_vars();
    return {v.begin(), v.end()};
}

std::string Atom::display() const {
    std::ostringstream os;
    if (decl.mode == Mode::c) os << "consistent ";
    os << decl.name << "(";
    for (int i = 0; i < decl.arity; ++i) {
        if (i == decl.key_len) os << " | ";
        else if (i > 0) os << ", ";
        os << terms[static_cast<size_t>(i)].display();
    }
    os << ")";
    return os.str();
}

int Query::index_of(const std::string& relation) const {
    for (int i = 0; i < size(); ++i)
        if (atoms[static_cast<size_t>(i)].relation() == relation) return i;
    return -1;
}

const Atom* Query::find(const std::string& relation) const {
    int i = index_of(relation);
    return i < 0 ? nullptr : &atoms[static_cast<size_t>(i)];
}

std::vector<std::string> Query::vars() const {
    std::vector<std::string> out;
    for (const Atom& a : atoms)
        for (const std::string& v : a.vars())
            if (std::find(out.begin(), out.end(), v) == out.end()) out.push_back(v);
    return out;
}

std::set<std::string> Query::var_set() const {
    auto v = vars();
    return {v.begin(), v.end()};
}

int Query::icard() const {
    int n = 0;
    for (const Atom& a : atoms)
        if (a.decl.mode == Mode::i) ++n;
    return n;
}

std::vector<Atom> Query::mode_c_atoms() const {
    std::vector<Atom> out;
    for (const Atom& a : atoms)
        if (a.decl.mode == Mode::c) out.push_back(a);
    return out;
}

Query Query::without(int index) const {
    Query out;
    for (int i = 0; i < size(); ++i)
        if (i != index) out.atoms.push_back(atoms[static_cast<size_t>(i)]);
    return out;
}

std::string Fact::display() const {
    std::ostringstream os;
    os << relation << "(";
    for (size_t i = 0; i < values.size(); ++i) {
        if (i) os << ", ";
        os << values[i].display();
    }
    os << ")";
    return os.str();
}

Database::Database(std::map<std::string, RelationDecl> schema)
    : schema_(std::move(schema)) {}

const RelationDecl& Database::decl(const std::string& relation) const {
    auto it = schema_.find(relation);
    if (it == schema_.end()) throw UnknownRelation("unknown relation: " + relation);
    return it->second;
}

bool Database::has_relation(const std::string& relation) const {
    return schema_.count(relation) > 0;
}

void Database::insert(const Fact& f) {
    const RelationDecl& d = decl(f.relation);
    if (static_cast<int>(f.values.size()) != d.arity)
        throw ArityMismatch("fact " + f.display() + " has arity " +
                            std::to_string(f.values.size()) + ", expected " +
                            std::to_string(d.arity));
    std::vector<Value> key(f.values.begin(), f.values.begin() + d.key_len);
    auto& block = index_[f.relation][key];
    auto it = std::lower_bound(block.begin(), block.end(), f);
    if (it != block.end() && *it == f) return;
    block.insert(it, f);
    ++count_;
}

void Database::erase(const Fact& f) {
    auto rel = index_.find(f.relation);
    if (rel == index_.end()) return;
    const RelationDecl& d = decl(f.relation);
    std::vector<Value> key(f.values.begin(), f.values.begin() + d.key_len);
    auto blk = rel->second.find(key);
    if (blk == rel->second.end()) return;
    auto it = std::lower_bound(blk->second.begin(), blk->second.end(), f);
    if (it == blk->second.end() || *it != f) return;
    blk->second.erase(it);
    --count_;
    if (blk->second.empty()) rel->second.erase(blk);
    if (rel->second.empty()) index_.erase(rel);
}

void Database::erase_block(const std::string& relation, const std::vector<Value>& key) {
    auto rel = index_.find(relation);
    if (rel == index_.end()) return;
    auto blk = rel->second.find(key);
    if (blk == rel->second.end()) return;
    count_ -= blk->second.size();
    rel->second.erase(blk);
    if (rel->second.empty()) index_.erase(rel);
}

bool Database::contains(const Fact& f) const {
    auto rel = index_.find(f.relation);
    if (rel == index_.end()) return false;
    const RelationDecl& d = decl(f.relation);
    if (static_cast<int>(f.values.size()) != d.arity) return false;
    std::vector<Value> key(f.values.begin(), f.values.begin() + d.key_len);
    auto blk = rel->second.find(key);
    if (blk == rel->second.end()) return false;
    return std::binary_search(blk->second.begin(), blk->second.end(), f);
}

std::vector<Fact> Database::facts() const {
    std::vector<Fact> out;
    out.reserve(count_);
    for (const auto& [rel, blocks] : index_)
        for (const auto& [key, facts] : blocks)
            out.insert(out.end(), facts.begin(), facts.end());
    return out;
}

std::vector<Fact> Database::facts_of(const std::string& rel) const {
    std::vector<Fact> out;
    auto it = index_.find(rel);
    if (it == index_.end()) return out;
    for (const auto& [key, facts] : it->second)
        out.insert(out.end(), facts.begin(), facts.end());
    return out;
}

std::vector<Block> Database::blocks(const std::string& rel) const {
    std::vector<Block> out;
    auto it = index_.find(rel);
    if (it == index_.end()) return out;
    for (const auto& [key, facts] : it->second)
        out.push_back(Block{rel, key, facts});
    return out;
}

std::vector<Block> Database::all_blocks() const {
    std::vector<Block> out;
    for (const auto& [rel, blocks] : index_)
        for (const auto& [key, facts] : blocks)
            out.push_back(Block{rel, key, facts});
    return out;
}

std::vector<Value> Database::key_of(const Fact& f) const {
    const RelationDecl& d = decl(f.relation);
    return {f.values.begin(), f.values.begin() + d.key_len};
}

Block Database::block_of(const Fact& f) const {
    std::vector<Value> key = key_of(f);
    auto rel = index_.find(f.relation);
    if (rel != index_.end()) {
        auto blk = rel->second.find(key);
        if (blk != rel->second.end()) return Block{f.relation, key, blk->second};
    }
    return Block{f.relation, key, {}};
}

std::set<Value> Database::adom() const {
    std::set<Value> out;
    for (const auto& [rel, blocks] : index_)
        for (const auto& [key, facts] : blocks)
            for (const Fact& f : facts)
                out.insert(f.values.begin(), f.values.end());
    return out;
}

void Database::validate_consistent() const {
    for (const auto& [rel, blocks] : index_) {
        if (decl(rel).mode != Mode::c) continue;
        for (const auto& [key, facts] : blocks)
            if (facts.size() > 1)
                throw InconsistentConsistentRelation(
                    "relation " + rel + " is declared consistent but holds " +
                    facts[0].display() + " and " + facts[1].display());
    }
}

// ---- parsing ----

namespace {

struct Cursor {
    const std::string& text;
    size_t pos = 0;
    int line = 1;

    bool done() const { return pos >= text.size(); }
    char peek() const { return text[pos]; }
    void advance() {
        if (text[pos] == '\n') ++line;
        ++pos;
    }

    void skip_space_in_line() {
        while (!done() && (peek() == ' ' || peek() == '\t' || peek() == '\r')) advance();
    }

    [[noreturn]] void fail(const std::string& msg) const {
        throw ParseError("line " + std::to_string(line) + ": " + msg);
    }
};

bool ident_start(char c) {
    return std::isalpha(static_cast<unsigned char>(c)) || c == '_';
}

bool ident_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

std::string read_ident(Cursor& c) {
    std::string out;
    while (!c.done() && ident_char(c.peek())) {
        out.push_back(c.peek());
        c.advance();
    }
    return out;
}

Term read_term(Cursor& c) {
    c.skip_space_in_line();
    if (c.done()) c.fail("expected a term");
    char ch = c.peek();
    if (ch == '\'') {
        c.advance();
        std::string text;
        while (!c.done() && c.peek() != '\'' && c.peek() != '\n') {
            text.push_back(c.peek());
            c.advance();
        }
        if (c.done() || c.peek() != '\'') c.fail("unterminated quoted constant");
        c.advance();
        return Term::constant(std::move(text));
    }
    if (std::isdigit(static_cast<unsigned char>(ch)) ||
        std::isupper(static_cast<unsigned char>(ch))) {
        std::string text = read_ident(c);
        if (text.empty()) c.fail("malformed constant");
        return Term::constant(std::move(text));
    }
    if (std::islower(static_cast<unsigned char>(ch)) || ch == '_') {
        std::string name = read_ident(c);
        if (name.empty()) c.fail("malformed variable");
        return Term::variable(std::move(name));
    }
    c.fail(std::string("unexpected character '") + ch + "' in term");
}

// Parses one atom line; assumes cursor sits at a non-space, non-comment char.
Atom read_atom_line(Cursor& c) {
    Atom atom;
    if (!ident_start(c.peek())) c.fail("expected a relation name");
    std::string name = read_ident(c);
    c.skip_space_in_line();
    if (name == "consistent" && !c.done() && ident_start(c.peek())) {
        atom.decl.mode = Mode::c;
        name = read_ident(c);
        c.skip_space_in_line();
    }
    if (name.empty()) c.fail("expected a relation name");
    if (c.done() || c.peek() != '(') c.fail("expected '(' after relation name");
    c.advance();

    atom.decl.name = name;
    int key_len = -1;
    while (true) {
        atom.terms.push_back(read_term(c));
        c.skip_space_in_line();
        if (c.done()) c.fail("unterminated atom");
        char ch = c.peek();
        if (ch == ',') {
            c.advance();
            continue;
        }
        if (ch == '|') {
            if (key_len >= 0) c.fail("more than one '|' in atom");
            key_len = static_cast<int>(atom.terms.size());
            c.advance();
            c.skip_space_in_line();
            if (!c.done() && c.peek() == ')') {
                // empty non-key side: the key is the whole tuple so far
                c.advance();
                break;
            }
            continue;
        }
        if (ch == ')') {
            c.advance();
            break;
        }
        c.fail(std::string("unexpected character '") + ch + "' in atom");
    }
    atom.decl.arity = static_cast<int>(atom.terms.size());
    atom.decl.key_len = key_len < 0 ? atom.decl.arity : key_len;
    if (atom.decl.arity == 0) c.fail("atoms need at least one term");
    if (atom.decl.key_len == 0) c.fail("the primary key cannot be empty");
    c.skip_space_in_line();
    if (!c.done() && c.peek() != '\n' && c.peek() != '#')
        c.fail("trailing characters after atom");
    return atom;
}

void skip_blank_and_comments(Cursor& c) {
    while (!c.done()) {
        c.skip_space_in_line();
        if (c.done()) return;
        if (c.peek() == '\n') {
            c.advance();
            continue;
        }
        if (c.peek() == '#') {
            while (!c.done() && c.peek() != '\n') c.advance();
            continue;
        }
        return;
    }
}

} // namespace

Query parse_query(const std::string& text) {
    Cursor c{text};
    Query q;
    while (true) {
        skip_blank_and_comments(c);
        if (c.done()) break;
        Atom atom = read_atom_line(c);
        if (q.index_of(atom.decl.name) >= 0)
            throw SelfJoinError("relation " + atom.decl.name +
                                " occurs in more than one atom");
        q.atoms.push_back(std::move(atom));
    }
    return q;
}

Database parse_database(const std::string& text, const Query& q) {
    std::map<std::string, RelationDecl> schema;
    for (const Atom& a : q.atoms) schema[a.decl.name] = a.decl;
    Database db(std::move(schema));

    Cursor c{text};
    while (true) {
        skip_blank_and_comments(c);
        if (c.done()) break;
        if (!ident_start(c.peek())) c.fail("expected a relation name");
        std::string name = read_ident(c);
        c.skip_space_in_line();
        if (c.done() || c.peek() != '(') c.fail("expected '(' after relation name");
        c.advance();
        Fact f;
        f.relation = name;
        while (true) {
            Term t = read_term(c);
            if (t.is_var()) c.fail("facts may only contain constants");
            f.values.push_back(t.val);
            c.skip_space_in_line();
            if (c.done()) c.fail("unterminated fact");
            char ch = c.peek();
            if (ch == ',') {
                c.advance();
                continue;
            }
            if (ch == ')') {
                c.advance();
                break;
            }
            c.fail(std::string("unexpected character '") + ch + "' in fact");
        }
        // facts are separated by whitespace; newlines are not significant
        if (!db.has_relation(f.relation))
            throw UnknownRelation("fact " + f.display() +
                                  " uses a relation the query does not declare");
        db.insert(f);
    }
    db.validate_consistent();
    return db;
}

std::string print_query(const Query& q) {
    std::ostringstream os;
    for (const Atom& a : q.atoms) os << a.display() << "\n";
    return os.str();
}

std::string print_database(const Database& db) {
    std::ostringstream os;
    for (const Fact& f : db.facts()) os << f.display() << "\n";
    return os.str();
}

// ---- evaluation ----

std::optional<Valuation> match_atom(const Atom& atom, const Fact& fact) {
    if (atom.relation() != fact.relation) return std::nullopt;
    if (atom.terms.size() != fact.values.size()) return std::nullopt;
    Valuation v;
    for (size_t i = 0; i < atom.terms.size(); ++i) {
        const Term& t = atom.terms[i];
        if (t.is_var()) {
            auto [it, inserted] = v.emplace(t.var, fact.values[i]);
            if (!inserted && it->second != fact.values[i]) return std::nullopt;
        } else if (t.val != fact.values[i]) {
            return std::nullopt;
        }
    }
    return v;
}

namespace {

bool extend(const Query& q, const Database& db, std::vector<bool>& used,
            Valuation& bound, int remaining,
            const std::function<bool(const Valuation&)>& fn) {
    if (remaining == 0) return !fn(bound);

    // pick the unused atom with the most bound variables
    int best = -1, best_bound = -1;
    for (int i = 0; i < q.size(); ++i) {
        if (used[static_cast<size_t>(i)]) continue;
        int nb = 0;
        for (const std::string& v : q.at(i).vars())
            if (bound.count(v)) ++nb;
        if (nb > best_bound) {
            best_bound = nb;
            best = i;
        }
    }

    const Atom& atom = q.at(best);
    used[static_cast<size_t>(best)] = true;
    for (const Fact& f : db.facts_of(atom.relation())) {
        auto m = match_atom(atom, f);
        if (!m) continue;
        Valuation merged = bound;
        bool ok = true;
        for (const auto& [var, val] : *m) {
            auto [it, inserted] = merged.emplace(var, val);
            if (!inserted && it->second != val) {
                ok = false;
                break;
            }
        }
        if (!ok) continue;
        std::swap(bound, merged);
        bool stopped = extend(q, db, used, bound, remaining - 1, fn);
        std::swap(bound, merged);
        if (stopped) {
            used[static_cast<size_t>(best)] = false;
            return true;
        }
    }
    used[static_cast<size_t>(best)] = false;
    return false;
}

} // namespace

bool enumerate_homomorphisms(const Query& q, const Database& db,
                             const std::function<bool(const Valuation&)>& fn) {
    std::vector<bool> used(static_cast<size_t>(q.size()), false);
    Valuation bound;
    return extend(q, db, used, bound, q.size(), fn);
}

std::vector<Valuation> all_homomorphisms(const Query& q, const Database& db) {
    std::vector<Valuation> out;
    enumerate_homomorphisms(q, db, [&](const Valuation& v) {
        out.push_back(v);
        return true;
    });
    return out;
}

bool eval_bcq(const Query& q, const Database& db) {
    return enumerate_homomorphisms(q, db, [](const Valuation&) { return false; });
}

Fact apply_valuation(const Atom& atom, const Valuation& v) {
    Fact f;
    f.relation = atom.relation();
    f.values.reserve(atom.terms.size());
    for (const Term& t : atom.terms) {
        if (t.is_var()) {
            auto it = v.find(t.var);
            if (it == v.end())
                throw PreconditionError("valuation does not bind " + t.var);
            f.values.push_back(it->second);
        } else {
            f.values.push_back(t.val);
        }
    }
    return f;
}

Query substitute(const Query& q, const std::vector<std::string>& xs,
                 const std::vector<Value>& vals) {
    if (xs.size() != vals.size())
        throw PreconditionError("substitute: mismatched variable/value lists");
    Query out = q;
    for (Atom& a : out.atoms)
        for (Term& t : a.terms) {
            if (!t.is_var()) continue;
            for (size_t i = 0; i < xs.size(); ++i)
                if (xs[i] == t.var) {
                    t = Term::constant(vals[i]);
                    break;
                }
        }
    return out;
}

} // namespace cqa
