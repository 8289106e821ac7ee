#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "cqa/model.hpp"

namespace cqa {

inline constexpr std::uint64_t kDefaultRepairCap = std::uint64_t{1} << 20;

// Mixed-radix enumeration of repairs: blocks sorted by (relation, key), one
// fact chosen per block. Construction throws RepairSpaceTooLarge when the
// repair count exceeds the cap.
class RepairEnumerator {
public:
    RepairEnumerator(const Database& db, std::uint64_t cap = kDefaultRepairCap);

    std::uint64_t count() const { return count_; }

    // The repair at the current cursor, as a database over the same schema.
    Database current() const;
    bool advance(); // false once all repairs have been visited

private:
    const Database* db_;
    std::vector<Block> blocks_;
    std::vector<size_t> choice_;
    std::uint64_t count_ = 1;
    bool done_ = false;
};

// Product of block sizes. Throws RepairSpaceTooLarge beyond the cap.
std::uint64_t count_repairs(const Database& db, std::uint64_t cap = kDefaultRepairCap);

// Ground truth by exhaustive repair enumeration.
bool certain_oracle(const Query& q, const Database& db,
                    std::uint64_t cap = kDefaultRepairCap);

// First repair in enumeration order that falsifies q, if any.
std::optional<Database> falsifying_repair(const Query& q, const Database& db,
                                          std::uint64_t cap = kDefaultRepairCap);

} // namespace cqa
