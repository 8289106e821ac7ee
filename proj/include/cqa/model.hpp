#pragma once

#include <compare>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "cqa/errors.hpp"

namespace cqa {

// A database constant. `tag` is empty for plain constants; the type-tagging
// step of the polynomial-time pipeline sets it to the name of the query
// variable whose positions the constant inhabits.
struct Value {
    std::string text;
    std::string tag;

    auto operator<=>(const Value&) const = default;

    // Parseable form for untagged values, `text@tag` for tagged ones.
    std::string display() const;
};

// A term of a query atom: either a variable or a constant.
struct Term {
    enum class Kind { variable, constant };

    Kind kind = Kind::variable;
    std::string var; // meaningful when kind == variable
    Value val;       // meaningful when kind == constant

    static Term variable(std::string name);
    static Term constant(Value v);
    static Term constant(std::string text);

    bool is_var() const { return kind == Kind::variable; }
    bool operator==(const Term&) const = default;
    auto operator<=>(const Term&) const = default;

    std::string display() const;
};

enum class Mode { i, c }; // i = uncertain, c = declared consistent

struct RelationDecl {
    std::string name;
    int arity = 0;
    int key_len = 0; // first key_len positions form the primary key
    Mode mode = Mode::i;

    bool operator==(const RelationDecl&) const = default;
    auto operator<=>(const RelationDecl&) const = default;

    bool simple_key() const { return key_len == 1; }
};

struct Atom {
    RelationDecl decl;
    std::vector<Term> terms;

    const std::string& relation() const { return decl.name; }

    // Terms at key / non-key positions.
    std::vector<Term> key_terms() const;
    std::vector<Term> nonkey_terms() const;

    // Variables in first-occurrence order over the whole atom / the key.
    std::vector<std::string> vars() const;
    std::vector<std::string> key_vars() const;
    std::set<std::string> var_set() const;
    std::set<std::string> key_var_set() const;

    bool operator==(const Atom&) const = default;

    std::string display() const;
};

// A self-join-free Boolean conjunctive query: a set of atoms, kept in input
// order. Relation names are unique across atoms.
struct Query {
    std::vector<Atom> atoms;

    int size() const { return static_cast<int>(atoms.size()); }
    bool empty() const { return atoms.empty(); }

    const Atom& at(int i) const { return atoms.at(static_cast<size_t>(i)); }
    int index_of(const std::string& relation) const; // -1 if absent
    const Atom* find(const std::string& relation) const;

    std::vector<std::string> vars() const; // first-occurrence order
    std::set<std::string> var_set() const;

    int icard() const; // number of mode-i atoms
    std::vector<Atom> mode_c_atoms() const;

    Query without(int index) const;

    bool operator==(const Query&) const = default;
};

struct Fact {
    std::string relation;
    std::vector<Value> values;

    bool operator==(const Fact&) const = default;
    auto operator<=>(const Fact&) const = default;

    std::string display() const;
};

struct Block {
    std::string relation;
    std::vector<Value> key;
    std::vector<Fact> facts; // sorted

    bool operator==(const Block&) const = default;
};

// An uncertain database over the schema of some query. Facts are a set,
// indexed relation -> key value -> block. All iteration orders are
// deterministic.
class Database {
public:
    Database() = default;
    explicit Database(std::map<std::string, RelationDecl> schema);

    const std::map<std::string, RelationDecl>& schema() const { return schema_; }
    const RelationDecl& decl(const std::string& relation) const;
    bool has_relation(const std::string& relation) const;

    // Inserting validates arity against the schema. Re-inserting an existing
    // fact is a no-op (set semantics).
    void insert(const Fact& f);
    void erase(const Fact& f);
    void erase_block(const std::string& relation, const std::vector<Value>& key);
    bool contains(const Fact& f) const;

    size_t fact_count() const { return count_; }
    bool empty() const { return count_ == 0; }

    std::vector<Fact> facts() const;                          // all, sorted
    std::vector<Fact> facts_of(const std::string& rel) const; // sorted
    std::vector<Block> blocks(const std::string& rel) const;  // sorted by key
    std::vector<Block> all_blocks() const;                    // sorted by (rel, key)
    std::vector<Value> key_of(const Fact& f) const;
    Block block_of(const Fact& f) const;

    std::set<Value> adom() const;

    // Throws InconsistentConsistentRelation if a mode-c relation holds two
    // distinct key-equal facts.
    void validate_consistent() const;

    bool operator==(const Database&) const = default;

private:
    std::map<std::string, RelationDecl> schema_;
    std::map<std::string, std::map<std::vector<Value>, std::vector<Fact>>> index_;
    size_t count_ = 0;
};

using Valuation = std::map<std::string, Value>;

// ---- parsing and printing ----

// Query files: one atom per line, `#` comments, optional `consistent` prefix,
// terms before `|` are the key, no `|` means the whole tuple is the key.
Query parse_query(const std::string& text);

// Database files: one fact per line, `NAME(c1,...,cn)`. The schema comes from
// the query. Duplicate facts collapse.
Database parse_database(const std::string& text, const Query& q);

std::string print_query(const Query& q);
std::string print_database(const Database& db);

// ---- evaluation ----

// Does the single atom's pattern match the fact? Returns the induced
// valuation over the atom's variables if so.
std::optional<Valuation> match_atom(const Atom& atom, const Fact& fact);

// Enumerate valuations theta over vars(q) with theta(q) contained in db.
// The callback returns false to stop early. Returns true if enumeration was
// stopped by the callback.
bool enumerate_homomorphisms(const Query& q, const Database& db,
                             const std::function<bool(const Valuation&)>& fn);
std::vector<Valuation> all_homomorphisms(const Query& q, const Database& db);

// Boolean conjunctive query evaluation: does some valuation map q into db?
bool eval_bcq(const Query& q, const Database& db);

// Ground fact produced by applying a valuation (plus the atom's own
// constants) to an atom. Every variable of the atom must be bound.
Fact apply_valuation(const Atom& atom, const Valuation& v);

// Replace variables xs[i] by constants vals[i] everywhere in q.
Query substitute(const Query& q, const std::vector<std::string>& xs,
                 const std::vector<Value>& vals);

} // namespace cqa
