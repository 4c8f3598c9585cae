#pragma once

#include <optional>
#include <vector>

#include "stdlab/common.hpp"
#include "stdlab/rng.hpp"

namespace stdlab {

// One in-flight reverse trajectory: clean origin, current state, prompt, position.
// omega is the trajectory's frozen guidance scale when fixed_omega_per_trajectory
// is on; otherwise it is ignored and each visit uses the iteration's draw.
struct BankEntry {
    Vec x0;
    Vec state;
    Condition cond;
    int t = 0;
    double omega = 0.0;
};

// Capacity-bounded store of teacher trajectory states. Slot indices are stable
// between sample() and commit(). Single-writer; no concurrent access contract.
class TrajectoryBank {
public:
    explicit TrajectoryBank(int capacity);

    int capacity() const { return static_cast<int>(slots_.size()); }
    int occupancy() const { return occupied_; }
    bool empty() const { return occupied_ == 0; }

    // lowest free slot index, or nullopt when full; does not occupy
    std::optional<int> try_reserve() const;

    // uniform draw over occupied slots; returns a copy, bank unchanged
    std::pair<int, BankEntry> sample(Rng& rng) const;

    // first occupancy of a reserved slot (state already advanced one step)
    void place(int index, BankEntry entry);

    // advance a resident entry; new_t == 0 pops the slot
    void commit(int index, const Vec& new_state, int new_t);

    const std::optional<BankEntry>& slot(int index) const { return slots_[check_index(index)]; }

private:
    size_t check_index(int index) const;
    std::vector<std::optional<BankEntry>> slots_;
    int occupied_ = 0;
};

}  // namespace stdlab
