#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "cqa/attack.hpp"
#include "cqa/classify.hpp"
#include "cqa/errors.hpp"
#include "cqa/fd.hpp"
#include "cqa/fo_engine.hpp"
#include "cqa/fuzz.hpp"
#include "cqa/model.hpp"
#include "cqa/oracle.hpp"
#include "cqa/ptime_engine.hpp"
#include "cqa/report.hpp"

namespace {

using nlohmann::json;

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw cqa::ParseError("cannot read " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

std::string witness_path(const cqa::Query& q, const cqa::Witness& w) {
    std::string s = q.at(w.atoms[0]).relation();
    for (size_t i = 1; i < w.atoms.size(); ++i)
        s += " -" + w.vars[i - 1] + "- " + q.at(w.atoms[i]).relation();
    return s;
}

const char* strength_name(cqa::AttackStrength s) {
    return s == cqa::AttackStrength::strong ? "strong" : "weak";
}

std::string set_display(const std::set<std::string>& xs) {
    std::string s = "{";
    bool first = true;
    for (const std::string& x : xs) {
        if (!first) s += ", ";
        s += x;
        first = false;
    }
    return s + "}";
}

struct Options {
    std::string query_path;
    std::string db_path;
    std::string engine = "auto";
    std::uint64_t cap = cqa::kDefaultRepairCap;
    std::uint64_t seed = 1;
    std::uint64_t cases = 100;
    int workers = 1;
    bool dot = false;
    bool count = false;
    bool witness = false;
    bool trace = false;
    bool as_json = false;
};

void emit(const Options& opt, const json& report, const std::string& text) {
    if (opt.as_json)
        std::cout << report.dump(2) << "\n";
    else
        std::cout << text;
}

json query_json(const cqa::Query& q) {
    json atoms = json::array();
    for (const cqa::Atom& a : q.atoms) atoms.push_back(a.display());
    return atoms;
}

int cmd_classify(const Options& opt) {
    cqa::Query q = cqa::parse_query(slurp(opt.query_path));
    cqa::Classification c = cqa::classify(q);

    std::ostringstream text;
    text << cqa::to_string(c.cls);
    if (c.cls == cqa::QueryClass::ptime_not_fo) text << " (not FO, L-hard)";
    text << "\n";
    if (c.cls == cqa::QueryClass::fo) {
        text << "order:";
        for (int i : c.topo_order) text << " " << q.at(i).relation();
        text << "\n";
    } else if (c.cycle_pair) {
        text << "cycle: " << q.at(c.cycle_pair->first).relation() << " <-> "
             << q.at(c.cycle_pair->second).relation() << " (forward "
             << strength_name(c.forward_strength) << ", backward "
             << strength_name(c.backward_strength) << ")\n";
    }

    json report = cqa::report_envelope("classify");
    report["class"] = cqa::to_string(c.cls);
    report["evidence"] = cqa::classification_json(q, c);
    report["stats"] = {{"atoms", q.size()}};
    emit(opt, report, text.str());
    return 0;
}

int cmd_attack_graph(const Options& opt) {
    cqa::Query q = cqa::parse_query(slurp(opt.query_path));
    cqa::AttackGraph g = cqa::attack_graph(q);

    if (opt.dot && !opt.as_json) {
        std::cout << cqa::attack_graph_dot(q, g);
        return 0;
    }

    cqa::StrongComponentSet sc = cqa::initial_strong_components(g);
    std::ostringstream text;
    if (g.edges.empty()) text << "edges: none\n";
    for (const cqa::AttackEdge& e : g.edges)
        text << q.at(e.from).relation() << " -> " << q.at(e.to).relation() << " ["
             << strength_name(e.strength) << "] path " << witness_path(q, e.witness)
             << "\n";
    for (size_t i = 0; i < sc.components.size(); ++i) {
        text << "component {";
        for (size_t j = 0; j < sc.components[i].size(); ++j)
            text << (j ? ", " : "") << q.at(sc.components[i][j]).relation();
        text << "}" << (sc.initial[i] ? " initial" : "") << "\n";
    }

    json report = cqa::report_envelope("attack-graph");
    json edges = json::array();
    for (const cqa::AttackEdge& e : g.edges) {
        json path = json::array();
        for (int a : e.witness.atoms) path.push_back(q.at(a).relation());
        edges.push_back({{"from", q.at(e.from).relation()},
                         {"to", q.at(e.to).relation()},
                         {"strength", strength_name(e.strength)},
                         {"path", path},
                         {"vars", e.witness.vars}});
    }
    json comps = json::array();
    for (size_t i = 0; i < sc.components.size(); ++i) {
        json names = json::array();
        for (int a : sc.components[i]) names.push_back(q.at(a).relation());
        comps.push_back({{"atoms", names}, {"initial", static_cast<bool>(sc.initial[i])}});
    }
    report["evidence"] = {{"edges", edges}, {"components", comps}};
    if (opt.dot) report["result"] = cqa::attack_graph_dot(q, g);
    report["stats"] = {{"atoms", q.size()}, {"edges", g.edges.size()}};
    emit(opt, report, text.str());
    return 0;
}

int cmd_markov(const Options& opt) {
    cqa::Query q = cqa::parse_query(slurp(opt.query_path));
    cqa::MarkovGraph g = cqa::markov_graph(q);

    if (opt.dot && !opt.as_json) {
        std::cout << cqa::markov_graph_dot(g);
        return 0;
    }
    std::ostringstream text;
    if (g.edges.empty()) text << "edges: none\n";
    for (const auto& [a, b] : g.edges) text << a << " -> " << b << "\n";

    json report = cqa::report_envelope("markov");
    json edges = json::array();
    for (const auto& [a, b] : g.edges) edges.push_back({a, b});
    report["evidence"] = {{"edges", edges}};
    if (opt.dot) report["result"] = cqa::markov_graph_dot(g);
    report["stats"] = {{"vars", g.vars.size()}, {"edges", g.edges.size()}};
    emit(opt, report, text.str());
    return 0;
}

int cmd_rewrite(const Options& opt) {
    cqa::Query q = cqa::parse_query(slurp(opt.query_path));
    cqa::FOF f = cqa::emit_rewriting(q);
    std::string sexpr = cqa::to_sexpr(f);

    json report = cqa::report_envelope("rewrite");
    report["class"] = "FO";
    report["result"] = sexpr;
    report["stats"] = {{"atoms", q.size()}};
    emit(opt, report, sexpr + "\n");
    return 0;
}

int cmd_certain(const Options& opt) {
    cqa::Query q = cqa::parse_query(slurp(opt.query_path));
    cqa::Database db = cqa::parse_database(slurp(opt.db_path), q);
    cqa::Classification c = cqa::classify(q);

    std::string engine = opt.engine;
    if (engine == "auto") {
        switch (c.cls) {
            case cqa::QueryClass::fo: engine = "fo"; break;
            case cqa::QueryClass::ptime_not_fo: engine = "ptime"; break;
            case cqa::QueryClass::conp_complete: engine = "oracle"; break;
        }
    }

    bool result;
    if (engine == "fo") {
        result = cqa::certain_fo(q, db);
    } else if (engine == "ptime") {
        cqa::PtimeOptions popts;
        popts.gblock_cap = opt.cap;
        if (opt.trace) popts.trace = &std::cerr;
        result = cqa::certain_ptime(q, db, popts);
    } else {
        result = cqa::certain_oracle(q, db, opt.cap);
    }

    json report = cqa::report_envelope("certain");
    report["class"] = cqa::to_string(c.cls);
    report["evidence"] = cqa::classification_json(q, c);
    report["result"] = result;
    report["stats"] = {{"engine", engine},
                       {"atoms", q.size()},
                       {"facts", db.fact_count()}};
    emit(opt, report, std::string(result ? "true" : "false") + "\n");
    return 0;
}

int cmd_oracle(const Options& opt) {
    cqa::Query q = cqa::parse_query(slurp(opt.query_path));
    cqa::Database db = cqa::parse_database(slurp(opt.db_path), q);

    std::uint64_t repairs = cqa::count_repairs(db, opt.cap);
    bool result = cqa::certain_oracle(q, db, opt.cap);

    std::ostringstream text;
    if (opt.count) text << "repairs: " << repairs << "\n";
    text << (result ? "true" : "false") << "\n";

    json report = cqa::report_envelope("oracle");
    report["result"] = result;
    report["stats"] = {{"repairs", repairs}, {"facts", db.fact_count()}};
    if (opt.witness && !result) {
        auto bad = cqa::falsifying_repair(q, db, opt.cap);
        json facts = json::array();
        if (bad)
            for (const cqa::Fact& f : bad->facts()) {
                facts.push_back(f.display());
                text << f.display() << "\n";
            }
        report["evidence"] = {{"falsifying_repair", facts}};
    }
    emit(opt, report, text.str());
    return 0;
}

int cmd_explain(const Options& opt) {
    cqa::Query q = cqa::parse_query(slurp(opt.query_path));
    cqa::FDSet fds = cqa::fd_of_query(q);
    cqa::AttackGraph g = cqa::attack_graph(q);

    std::ostringstream text;
    text << "query:";
    for (const cqa::Atom& a : q.atoms) text << " " << a.display();
    text << "\nFD(q):\n";
    for (int i = 0; i < q.size(); ++i) {
        const cqa::Atom& a = q.at(i);
        text << "  " << a.relation() << ": " << set_display(a.key_var_set()) << " -> "
             << set_display(a.var_set()) << "\n";
    }
    text << "closures:\n";
    for (int i = 0; i < q.size(); ++i) {
        text << "  K(" << q.at(i).relation() << ")  = "
             << set_display(cqa::k_closure(q, i, false)) << "\n";
        text << "  K+(" << q.at(i).relation() << ") = "
             << set_display(cqa::k_closure(q, i, true)) << "\n";
    }
    text << "attacks:\n";
    if (g.edges.empty()) text << "  none\n";
    for (const cqa::AttackEdge& e : g.edges) {
        text << "  " << q.at(e.from).relation() << " -> " << q.at(e.to).relation()
             << " [" << strength_name(e.strength) << "] path "
             << witness_path(q, e.witness) << "\n";
        if (e.strength == cqa::AttackStrength::weak) {
            // weakness means key(from) determines key(to); show one proof per
            // target key variable
            for (const std::string& y : q.at(e.to).key_vars()) {
                auto proof = cqa::sequential_proof(q, q.at(e.from).key_var_set(), y);
                if (!proof) continue;
                text << "    proof " << set_display(q.at(e.from).key_var_set())
                     << " -> " << y << ":";
                if (proof->empty()) text << " (trivial)";
                for (int h : *proof) text << " " << q.at(h).relation();
                text << "\n";
            }
        }
    }

    json report = cqa::report_envelope("explain");
    json closures = json::array();
    for (int i = 0; i < q.size(); ++i) {
        json k = json::array(), kp = json::array();
        for (const std::string& v : cqa::k_closure(q, i, false)) k.push_back(v);
        for (const std::string& v : cqa::k_closure(q, i, true)) kp.push_back(v);
        closures.push_back(
            {{"atom", q.at(i).relation()}, {"K", k}, {"K_plus", kp}});
    }
    report["evidence"] = {{"closures", closures}};
    report["stats"] = {{"atoms", q.size()}, {"edges", g.edges.size()}};
    emit(opt, report, text.str());
    return 0;
}

int cmd_fuzz(const Options& opt) {
    cqa::FuzzReport r = cqa::run_fuzz(opt.seed, opt.cases, opt.workers);

    std::ostringstream text;
    text << "cases: " << r.cases << "\n"
         << "fo checked: " << r.fo_checked << "\n"
         << "ptime checked: " << r.ptime_checked << "\n"
         << "stage checks: " << r.stages_checked << "\n"
         << "failures: " << r.failures.size() << "\n";
    for (const cqa::FuzzFailure& f : r.failures) {
        text << "--- case " << f.case_index << " [" << cqa::to_string(f.check)
             << "] " << f.detail << "\n";
        text << cqa::print_query(f.query);
        text << cqa::print_database(f.database);
    }

    json report = cqa::report_envelope("fuzz");
    json failures = json::array();
    for (const cqa::FuzzFailure& f : r.failures)
        failures.push_back({{"case", f.case_index},
                            {"check", cqa::to_string(f.check)},
                            {"detail", f.detail},
                            {"query", query_json(f.query)},
                            {"database", cqa::print_database(f.database)}});
    report["result"] = r.failures.empty();
    report["evidence"] = {{"failures", failures}};
    report["stats"] = {{"cases", r.cases},
                       {"fo_checked", r.fo_checked},
                       {"ptime_checked", r.ptime_checked},
                       {"stage_checks", r.stages_checked}};
    emit(opt, report, text.str());
    return r.failures.empty() ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"certain query answering over uncertain databases"};
    app.require_subcommand(1);

    Options opt;
    app.add_flag("--json", opt.as_json, "emit one JSON object instead of text");

    auto add_query = [&](CLI::App* sub) {
        sub->add_option("query", opt.query_path, "query file")->required();
        sub->fallthrough();
    };
    auto add_db = [&](CLI::App* sub) {
        sub->add_option("database", opt.db_path, "database file")->required();
    };

    CLI::App* classify = app.add_subcommand("classify", "trichotomy class of a query");
    add_query(classify);

    CLI::App* attack = app.add_subcommand("attack-graph", "attack graph with witnesses");
    add_query(attack);
    attack->add_flag("--dot", opt.dot, "GraphViz output");

    CLI::App* markov = app.add_subcommand("markov", "Markov graph on variables");
    add_query(markov);
    markov->add_flag("--dot", opt.dot, "GraphViz output");

    CLI::App* rewrite = app.add_subcommand("rewrite", "first-order certain rewriting");
    add_query(rewrite);

    CLI::App* certain = app.add_subcommand("certain", "certain answer of a query");
    add_query(certain);
    add_db(certain);
    certain->add_option("--engine", opt.engine, "auto|fo|ptime|oracle")
        ->check(CLI::IsMember({"auto", "fo", "ptime", "oracle"}))
        ->capture_default_str();
    certain->add_option("--cap", opt.cap, "repair-space cap")->capture_default_str();
    certain->add_flag("--trace", opt.trace, "pipeline trace on stderr");

    CLI::App* oracle = app.add_subcommand("oracle", "exhaustive repair enumeration");
    add_query(oracle);
    add_db(oracle);
    oracle->add_flag("--count", opt.count, "print the repair count");
    oracle->add_flag("--witness", opt.witness, "print a falsifying repair");
    oracle->add_option("--cap", opt.cap, "repair-space cap")->capture_default_str();

    CLI::App* explain = app.add_subcommand("explain", "closures, attacks and proofs");
    add_query(explain);

    CLI::App* fuzz = app.add_subcommand("fuzz", "differential testing vs the oracle");
    fuzz->fallthrough();
    fuzz->add_option("--seed", opt.seed, "RNG seed")->capture_default_str();
    fuzz->add_option("--cases", opt.cases, "number of cases")->capture_default_str();
    fuzz->add_option("--workers", opt.workers, "worker threads")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n";
        return 1;
    }

    try {
        if (classify->parsed()) return cmd_classify(opt);
        if (attack->parsed()) return cmd_attack_graph(opt);
        if (markov->parsed()) return cmd_markov(opt);
        if (rewrite->parsed()) return cmd_rewrite(opt);
        if (certain->parsed()) return cmd_certain(opt);
        if (oracle->parsed()) return cmd_oracle(opt);
        if (explain->parsed()) return cmd_explain(opt);
        if (fuzz->parsed()) return cmd_fuzz(opt);
        std::cerr << "no command\n";
        return 1;
    } catch (const cqa::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const cqa::NotFOQuery& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const cqa::PreconditionError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const cqa::RepairSpaceTooLarge& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const cqa::UnsupportedStructure& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
