#include <doctest.h>

#include "cqa/model.hpp"
#include "helpers.hpp"

using namespace cqa;
using test::db;
using test::q;

TEST_CASE("query parsing: keys, modes, constants") {
    Query query = q("R(x | y, 'b')\n"
                    "consistent S(y, z | x)\n"
                    "T(z)\n");
    REQUIRE(query.size() == 3);

    const Atom& r = query.at(0);
    CHECK(r.relation() == "R");
    CHECK(r.decl.arity == 3);
    CHECK(r.decl.key_len == 1);
    CHECK(r.decl.mode == Mode::i);
    CHECK(r.key_vars() == std::vector<std::string>{"x"});
    CHECK(r.terms[2] == Term::constant("b"));

    const Atom& s = query.at(1);
    CHECK(s.decl.mode == Mode::c);
    CHECK(s.decl.key_len == 2);
    CHECK(s.key_var_set() == std::set<std::string>{"y", "z"});

    const Atom& t = query.at(2);
    CHECK(t.decl.key_len == 1); // no separator: the whole tuple is the key
    CHECK(query.icard() == 2);
    CHECK(query.vars() == std::vector<std::string>{"x", "y", "z"});
}

TEST_CASE("query parsing rejects self-joins and malformed atoms") {
    CHECK_THROWS_AS(q("R(x | y)\nR(y | x)"), SelfJoinError);
    CHECK_THROWS_AS(q("R(x | y"), ParseError);
    CHECK_THROWS_AS(q("R()"), ParseError);
    CHECK_THROWS_AS(q("R(x | y | z)"), ParseError);
}

TEST_CASE("database parsing groups facts into blocks") {
    Query query = q("R(x | y)\nS(y | x)");
    Database d = db(query,
                    "R(1, 'a')\n"
                    "R(1, 'b')   # same block\n"
                    "R(2, 'a')\n"
                    "S('a', 1)\n");
    CHECK(d.fact_count() == 4);
    CHECK(d.blocks("R").size() == 2);
    CHECK(d.blocks("S").size() == 1);

    Block b = d.block_of(Fact{"R", {{"1", ""}, {"a", ""}}});
    CHECK(b.facts.size() == 2);
    CHECK(d.adom().size() == 4);

    CHECK_THROWS_AS(db(query, "W(1)"), UnknownRelation);
    CHECK_THROWS_AS(db(query, "R(1)"), ArityMismatch);
    CHECK_THROWS_AS(db(query, "R(1, x)"), ParseError); // facts are ground
}

TEST_CASE("consistent relations must hold consistent data") {
    Query query = q("consistent R(x | y)");
    CHECK_THROWS_AS(db(query, "R(1, 'a')\nR(1, 'b')"), InconsistentConsistentRelation);
    CHECK_NOTHROW(db(query, "R(1, 'a')\nR(2, 'b')"));
}

TEST_CASE("print and reparse round trip") {
    Query query = q("R(x | y, 'b')\nconsistent S(y, z | x)\nT(z)");
    CHECK(parse_query(print_query(query)) == query);

    Database d = db(query, "R(1, 'a', 'b')\nS('a', 'c', 1)\nT('c')");
    CHECK(parse_database(print_database(d), query) == d);
}

TEST_CASE("match_atom binds variables and rejects mismatches") {
    Query query = q("R(x | y, x, 'b')");
    const Atom& r = query.at(0);

    auto hit = match_atom(r, Fact{"R", {{"1", ""}, {"a", ""}, {"1", ""}, {"b", ""}}});
    REQUIRE(hit);
    CHECK(hit->at("x") == Value{"1", ""});
    CHECK(hit->at("y") == Value{"a", ""});

    // repeated variable must repeat the value; the constant must match
    CHECK_FALSE(match_atom(r, Fact{"R", {{"1", ""}, {"a", ""}, {"2", ""}, {"b", ""}}}));
    CHECK_FALSE(match_atom(r, Fact{"R", {{"1", ""}, {"a", ""}, {"1", ""}, {"c", ""}}}));
}

TEST_CASE("homomorphism enumeration and eval_bcq") {
    Query query = q("R(x | y)\nS(y | z)");
    Database d = db(query, "R(1, 'a')\nR(2, 'b')\nS('a', 'p')\nS('a', 'q')");

    std::vector<Valuation> homs = all_homomorphisms(query, d);
    CHECK(homs.size() == 2); // (1,a,p), (1,a,q); R(2,b) finds no S partner
    for (const Valuation& v : homs) CHECK(v.at("x") == Value{"1", ""});

    CHECK(eval_bcq(query, d));
    CHECK_FALSE(eval_bcq(query, db(query, "R(1, 'a')")));

    // early stop: the callback sees at most one hit
    int seen = 0;
    enumerate_homomorphisms(query, d, [&](const Valuation&) {
        ++seen;
        return false;
    });
    CHECK(seen == 1);
}

TEST_CASE("substitute grounds variables in place") {
    Query query = q("R(x | y)\nS(y | x)");
    Query g = substitute(query, {"x"}, {Value{"7", ""}});
    CHECK(g.at(0).terms[0] == Term::constant(Value{"7", ""}));
    CHECK(g.at(1).terms[1] == Term::constant(Value{"7", ""}));
    CHECK(g.at(0).terms[1] == Term::variable("y"));
    CHECK(g.var_set() == std::set<std::string>{"y"});
}

TEST_CASE("erase_block removes a whole block") {
    Query query = q("R(x | y)");
    Database d = db(query, "R(1, 'a')\nR(1, 'b')\nR(2, 'c')");
    d.erase_block("R", {Value{"1", ""}});
    CHECK(d.fact_count() == 1);
    CHECK(d.blocks("R").size() == 1);
}
