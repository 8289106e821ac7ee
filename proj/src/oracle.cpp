#include "cqa/oracle.hpp"

#include "cqa/errors.hpp"

namespace cqa {

namespace {

std::uint64_t checked_product(const std::vector<Block>& blocks, std::uint64_t cap) {
    std::uint64_t n = 1;
    for (const Block& b : blocks) {
        std::uint64_t size = b.facts.size();
        if (size == 0) continue;
        if (n > cap / size)
            throw RepairSpaceTooLarge("repair space exceeds cap of " + std::to_string(cap));
        n *= size;
        if (n > cap)
            throw RepairSpaceTooLarge("repair space exceeds cap of " + std::to_string(cap));
    }
    return n;
}

} // namespace

RepairEnumerator::RepairEnumerator(const Database& db, std::uint64_t cap)
    : db_(&db), blocks_(db.all_blocks()), choice_(blocks_.size(), 0) {
    count_ = checked_product(blocks_, cap);
}

Database RepairEnumerator::current() const {
    Database repair(db_->schema());
    for (size_t i = 0; i < blocks_.size(); ++i)
        repair.insert(blocks_[i].facts[choice_[i]]);
    return repair;
}

bool RepairEnumerator::advance() {
    if (done_) return false;
    for (size_t i = 0; i < blocks_.size(); ++i) {
        if (++choice_[i] < blocks_[i].facts.size()) return true;
        choice_[i] = 0;
    }
    done_ = true;
    return false;
}

std::uint64_t count_repairs(const Database& db, std::uint64_t cap) {
    return checked_product(db.all_blocks(), cap);
}

bool certain_oracle(const Query& q, const Database& db, std::uint64_t cap) {
    RepairEnumerator e(db, cap);
    do {
        if (!eval_bcq(q, e.current())) return false;
    } while (e.advance());
    return true;
}

std::optional<Database> falsifying_repair(const Query& q, const Database& db,
                                          std::uint64_t cap) {
    RepairEnumerator e(db, cap);
    do {
        Database r = e.current();
        if (!eval_bcq(q, r)) return r;
    } while (e.advance());
    return std::nullopt;
}

} // namespace cqa
