#include "cqa/fuzz.hpp"

#include <algorithm>
#include <atomic>
#include <functional>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "cqa/classify.hpp"
#include "cqa/fo_engine.hpp"
#include "cqa/oracle.hpp"
#include "cqa/ptime_engine.hpp"

namespace cqa {

namespace {

const char* kRelationNames[] = {"P", "Q", "R", "S", "T", "U", "V", "W"};
const char* kVariableNames[] = {"x", "y", "z", "v", "w", "s", "t"};
const char* kConstantNames[] = {"0", "1", "2", "3", "4"};

std::map<std::string, RelationDecl> schema_of(const Query& q) {
    std::map<std::string, RelationDecl> out;
    for (const Atom& a : q.atoms) out[a.decl.name] = a.decl;
    return out;
}

} // namespace

Query random_query(Rng& rng, int max_atoms) {
    int natoms = 2;
    std::uint64_t roll = rng.below(100);
    if (roll < 15) natoms = 1;
    else if (roll < 45) natoms = 2;
    else if (roll < 75) natoms = 3;
    else if (roll < 90) natoms = 4;
    else natoms = 5;
    natoms = std::min(natoms, max_atoms);

    int nvars = rng.range(2, 5);
    Query q;
    for (int i = 0; i < natoms; ++i) {
        Atom a;
        a.decl.name = kRelationNames[i];
        a.decl.arity = rng.range(1, 3);
        a.decl.key_len = rng.range(1, a.decl.arity);
        a.decl.mode = rng.chance(20) ? Mode::c : Mode::i;
        for (int p = 0; p < a.decl.arity; ++p) {
            if (rng.chance(22))
                a.terms.push_back(Term::constant(
                    Value{kConstantNames[rng.below(3)], ""}));
            else
                a.terms.push_back(Term::variable(
                    kVariableNames[rng.below(static_cast<std::uint64_t>(nvars))]));
        }
        q.atoms.push_back(std::move(a));
    }
    return q;
}

Database random_database(Rng& rng, const Query& q, int max_facts) {
    Database db(schema_of(q));
    auto random_value = [&rng] {
        return Value{kConstantNames[rng.below(5)], ""};
    };

    // a few full valuations so q is satisfiable reasonably often
    int images = rng.range(0, 2);
    for (int i = 0; i < images; ++i) {
        Valuation v;
        for (const std::string& var : q.vars()) v[var] = random_value();
        for (const Atom& a : q.atoms) db.insert(apply_valuation(a, v));
    }

    int noise = rng.range(0, std::max(0, max_facts - static_cast<int>(db.fact_count())));
    for (int i = 0; i < noise; ++i) {
        const Atom& a = q.at(static_cast<int>(rng.below(static_cast<std::uint64_t>(q.size()))));
        Fact f{a.decl.name, {}};
        for (int p = 0; p < a.decl.arity; ++p) f.values.push_back(random_value());
        db.insert(f);
    }

    // thin mode-c relations back down to one fact per block
    for (const auto& [rel, decl] : db.schema()) {
        if (decl.mode != Mode::c) continue;
        for (const Block& b : db.blocks(rel))
            for (size_t i = 1; i < b.facts.size(); ++i) db.erase(b.facts[i]);
    }
    db.validate_consistent();
    return db;
}

Query rename_vars(Rng& rng, const Query& q) {
    std::vector<std::string> vars = q.vars();
    std::vector<size_t> perm(vars.size());
    for (size_t i = 0; i < perm.size(); ++i) perm[i] = i;
    for (size_t i = perm.size(); i > 1; --i)
        std::swap(perm[i - 1], perm[rng.below(i)]);
    std::map<std::string, std::string> ren;
    for (size_t i = 0; i < vars.size(); ++i)
        ren[vars[i]] = "m" + std::to_string(perm[i] + 1);
    Query out = q;
    for (Atom& a : out.atoms)
        for (Term& t : a.terms)
            if (t.is_var()) t.var = ren.at(t.var);
    return out;
}

Query shuffle_atoms(Rng& rng, const Query& q) {
    Query out = q;
    for (size_t i = out.atoms.size(); i > 1; --i)
        std::swap(out.atoms[i - 1], out.atoms[rng.below(i)]);
    return out;
}

std::string to_string(FuzzCheck c) {
    switch (c) {
        case FuzzCheck::fo_vs_oracle: return "fo_vs_oracle";
        case FuzzCheck::ptime_vs_oracle: return "ptime_vs_oracle";
        case FuzzCheck::stage_purify: return "stage_purify";
        case FuzzCheck::stage_simplify: return "stage_simplify";
        case FuzzCheck::stage_type_tag: return "stage_type_tag";
        case FuzzCheck::stage_saturate: return "stage_saturate";
        case FuzzCheck::stage_gpurify: return "stage_gpurify";
    }
    return "unknown";
}

namespace {

std::uint64_t mix(std::uint64_t seed, std::uint64_t i) {
    // splitmix64 step over (seed, case index)
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (i + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

struct CaseOutcome {
    bool fo_checked = false;
    bool ptime_checked = false;
    std::uint64_t stages_checked = 0;
    std::vector<FuzzFailure> failures;
};

using CheckFn = std::function<bool(const Query&, const Database&)>;

// Shrink a failing pair by dropping facts, then atoms, while the check still
// reports a failure. `fails` returns true when the bug reproduces.
void minimize(Query& q, Database& db, const CheckFn& fails) {
    bool shrunk = true;
    while (shrunk) {
        shrunk = false;
        for (const Fact& f : db.facts()) {
            Database smaller = db;
            smaller.erase(f);
            if (fails(q, smaller)) {
                db = smaller;
                shrunk = true;
                break;
            }
        }
        if (shrunk) continue;
        for (int i = 0; i < q.size(); ++i) {
            Query sq = q.without(i);
            Database sdb(schema_of(sq));
            for (const Fact& f : db.facts())
                if (sdb.has_relation(f.relation)) sdb.insert(f);
            if (fails(sq, sdb)) {
                q = sq;
                db = sdb;
                shrunk = true;
                break;
            }
        }
    }
}

void record_failure(CaseOutcome& out, std::uint64_t index, FuzzCheck check,
                    std::string detail, const Query& q, const Database& db,
                    const CheckFn& fails) {
    FuzzFailure f;
    f.case_index = index;
    f.check = check;
    f.detail = std::move(detail);
    f.query = q;
    f.database = db;
    try {
        minimize(f.query, f.database, fails);
    } catch (const std::exception&) {
        // keep the unminimized reproducer
    }
    out.failures.push_back(std::move(f));
}

CaseOutcome run_case(std::uint64_t seed, std::uint64_t index) {
    CaseOutcome out;
    Rng rng(mix(seed, index));
    Query q = random_query(rng);
    Database db = random_database(rng, q);

    Classification cls = classify(q);
    bool expected;
    try {
        expected = certain_oracle(q, db);
    } catch (const RepairSpaceTooLarge&) {
        return out;
    }

    auto oracle_or = [](const Query& qq, const Database& dd, bool fallback) {
        try {
            return certain_oracle(qq, dd);
        } catch (const RepairSpaceTooLarge&) {
            return fallback;
        }
    };

    if (cls.cls == QueryClass::fo) {
        out.fo_checked = true;
        CheckFn fails = [](const Query& qq, const Database& dd) {
            try {
                return classify(qq).cls == QueryClass::fo &&
                       certain_fo(qq, dd) != certain_oracle(qq, dd);
            } catch (const std::exception&) {
                return true;
            }
        };
        try {
            bool got = certain_fo(q, db);
            if (got != expected) {
                std::ostringstream os;
                os << "certain_fo=" << got << " oracle=" << expected;
                record_failure(out, index, FuzzCheck::fo_vs_oracle, os.str(), q, db,
                               fails);
            }
        } catch (const std::exception& e) {
            record_failure(out, index, FuzzCheck::fo_vs_oracle,
                           std::string("exception: ") + e.what(), q, db, fails);
        }
    }

    if (cls.cls != QueryClass::conp_complete) {
        out.ptime_checked = true;
        CheckFn fails = [](const Query& qq, const Database& dd) {
            try {
                return classify(qq).cls != QueryClass::conp_complete &&
                       certain_ptime(qq, dd) != certain_oracle(qq, dd);
            } catch (const RepairSpaceTooLarge&) {
                return false;
            } catch (const std::exception&) {
                return true;
            }
        };
        try {
            bool got = certain_ptime(q, db);
            if (got != expected) {
                std::ostringstream os;
                os << "certain_ptime=" << got << " oracle=" << expected;
                record_failure(out, index, FuzzCheck::ptime_vs_oracle, os.str(), q, db,
                               fails);
            }
        } catch (const RepairSpaceTooLarge&) {
            // gblock spaces can legitimately blow past the cap
        } catch (const std::exception& e) {
            record_failure(out, index, FuzzCheck::ptime_vs_oracle,
                           std::string("exception: ") + e.what(), q, db, fails);
        }
    }

    struct Stage {
        FuzzCheck check;
        bool applicable;
        std::function<std::pair<Query, Database>(const Query&, const Database&)> run;
    };
    bool no_strong = cls.cls != QueryClass::conp_complete;
    std::vector<Stage> stages = {
        {FuzzCheck::stage_purify, true,
         [](const Query& qq, const Database& dd) {
             return std::make_pair(qq, purify(qq, dd));
         }},
        {FuzzCheck::stage_simplify, true,
         [](const Query& qq, const Database& dd) {
             SimplifyResult r = simplify(qq, dd);
             return std::make_pair(r.query, r.db);
         }},
        {FuzzCheck::stage_type_tag, true,
         [](const Query& qq, const Database& dd) {
             SimplifyResult r = simplify(qq, dd);
             return std::make_pair(r.query, type_tag(r.query, r.db));
         }},
        {FuzzCheck::stage_saturate, no_strong,
         [](const Query& qq, const Database& dd) {
             SimplifyResult r = simplify(qq, dd);
             SaturateResult s = saturate(r.query, type_tag(r.query, r.db));
             return std::make_pair(s.query, s.db);
         }},
        {FuzzCheck::stage_gpurify, true,
         [](const Query& qq, const Database& dd) {
             return std::make_pair(qq, gpurify(qq, dd));
         }},
    };

    for (const Stage& stage : stages) {
        if (!stage.applicable) continue;
        auto runner = stage.run;
        CheckFn fails = [runner](const Query& qq, const Database& dd) {
            try {
                auto aa = runner(qq, dd);
                return certain_oracle(aa.first, aa.second) != certain_oracle(qq, dd);
            } catch (const RepairSpaceTooLarge&) {
                return false;
            } catch (const std::exception&) {
                return true;
            }
        };
        std::pair<Query, Database> after;
        try {
            after = stage.run(q, db);
        } catch (const RepairSpaceTooLarge&) {
            continue;
        } catch (const std::exception& e) {
            record_failure(out, index, stage.check,
                           std::string("exception: ") + e.what(), q, db, fails);
            continue;
        }
        ++out.stages_checked;
        bool got = oracle_or(after.first, after.second, expected);
        if (got == expected) continue;
        std::ostringstream os;
        os << "oracle " << expected << " -> " << got << " after stage";
        record_failure(out, index, stage.check, os.str(), q, db, fails);
    }
    return out;
}

} // namespace

FuzzReport run_fuzz(std::uint64_t seed, std::uint64_t cases, int workers) {
    FuzzReport report;
    report.cases = cases;
    if (workers < 1) workers = 1;

    std::atomic<std::uint64_t> cursor{0};
    std::mutex merge_mutex;
    auto work = [&] {
        while (true) {
            std::uint64_t i = cursor.fetch_add(1);
            if (i >= cases) return;
            CaseOutcome out = run_case(seed, i);
            std::lock_guard<std::mutex> lock(merge_mutex);
            report.fo_checked += out.fo_checked ? 1 : 0;
            report.ptime_checked += out.ptime_checked ? 1 : 0;
            report.stages_checked += out.stages_checked;
            for (FuzzFailure& f : out.failures) report.failures.push_back(std::move(f));
        }
    };

    if (workers == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < workers; ++t) pool.emplace_back(work);
        for (std::thread& t : pool) t.join();
    }
    std::sort(report.failures.begin(), report.failures.end(),
              [](const FuzzFailure& a, const FuzzFailure& b) {
                  return a.case_index < b.case_index;
              });
    return report;
}

} // namespace cqa
