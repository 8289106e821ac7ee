#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "cqa/model.hpp"

namespace cqa {

// Deterministic RNG wrapper. All draws go through explicit modulo reduction
// so results are identical across platforms for a given seed.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }
    // Uniform-ish value in [0, n).
    std::uint64_t below(std::uint64_t n) { return n ? engine_() % n : 0; }
    int range(int lo, int hi) { return lo + static_cast<int>(below(static_cast<std::uint64_t>(hi - lo + 1))); }
    bool chance(int percent) { return range(1, 100) <= percent; }

private:
    std::mt19937_64 engine_;
};

// Random self-join-free query: at most max_atoms atoms (biased toward 2-3),
// shared variables, occasional constants and mode-c atoms.
Query random_query(Rng& rng, int max_atoms = 5);

// Random database for q with at most max_facts facts, seeded from a few
// random valuations plus noise; mode-c relations stay consistent.
Database random_database(Rng& rng, const Query& q, int max_facts = 12);

// Rename variables by a fresh bijection / permute atom order. The renaming
// leaves constants alone.
Query rename_vars(Rng& rng, const Query& q);
Query shuffle_atoms(Rng& rng, const Query& q);

enum class FuzzCheck {
    fo_vs_oracle,
    ptime_vs_oracle,
    stage_purify,
    stage_simplify,
    stage_type_tag,
    stage_saturate,
    stage_gpurify,
};

struct FuzzFailure {
    std::uint64_t case_index = 0;
    FuzzCheck check = FuzzCheck::fo_vs_oracle;
    std::string detail;
    Query query;       // minimized
    Database database; // minimized
};

struct FuzzReport {
    std::uint64_t cases = 0;
    std::uint64_t fo_checked = 0;
    std::uint64_t ptime_checked = 0;
    std::uint64_t stages_checked = 0;
    std::vector<FuzzFailure> failures;
};

std::string to_string(FuzzCheck c);

// Differential fuzzing: per case, compare certain_fo (FO class) and
// certain_ptime (FO and PTIME classes) against the repair oracle and check
// that every applicable preparation stage preserves the oracle verdict.
// Case i derives its own RNG from (seed, i), so results are independent of
// worker count.
FuzzReport run_fuzz(std::uint64_t seed, std::uint64_t cases, int workers = 1);

} // namespace cqa
