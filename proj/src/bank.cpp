#include "stdlab/bank.hpp"

namespace stdlab {

TrajectoryBank::TrajectoryBank(int capacity) {
    if (capacity < 1) throw std::invalid_argument("TrajectoryBank: capacity must be >= 1");
    slots_.resize(static_cast<size_t>(capacity));
}

size_t TrajectoryBank::check_index(int index) const {
    if (index < 0 || static_cast<size_t>(index) >= slots_.size()) {
        throw std::invalid_argument("TrajectoryBank: slot index out of range");
    }
    return static_cast<size_t>(index);
}

std::optional<int> TrajectoryBank::try_reserve() const {
    if (occupied_ >= capacity()) return std::nullopt;
    for (size_t i = 0; i < slots_.size(); ++i) {
        if (!slots_[i].has_value()) return static_cast<int>(i);
    }
    return std::nullopt;  // unreachable while occupied_ is maintained correctly
}

std::pair<int, BankEntry> TrajectoryBank::sample(Rng& rng) const {
    if (occupied_ == 0) throw std::logic_error("TrajectoryBank::sample: bank is empty");
    int pick = rng.uniform_int(0, occupied_ - 1);
    for (size_t i = 0; i < slots_.size(); ++i) {
        if (!slots_[i].has_value()) continue;
        if (pick == 0) return {static_cast<int>(i), *slots_[i]};
        --pick;
    }
    throw std::logic_error("TrajectoryBank::sample: occupancy bookkeeping broken");
}

void TrajectoryBank::place(int index, BankEntry entry) {
    size_t i = check_index(index);
    if (slots_[i].has_value()) throw std::logic_error("TrajectoryBank::place: slot already occupied");
    if (entry.t <= 0) throw std::invalid_argument("TrajectoryBank::place: entry must sit at t > 0");
    slots_[i] = std::move(entry);
    ++occupied_;
}

void TrajectoryBank::commit(int index, const Vec& new_state, int new_t) {
    size_t i = check_index(index);
    if (!slots_[i].has_value()) throw std::logic_error("TrajectoryBank::commit: slot is free");
    BankEntry& e = *slots_[i];
    if (new_t >= e.t) {
        throw std::invalid_argument("TrajectoryBank::commit: timestep must strictly decrease");
    }
    if (new_t < 0) throw std::invalid_argument("TrajectoryBank::commit: negative timestep");
    if (new_t == 0) {
        slots_[i].reset();  // trajectory finished, pop
        --occupied_;
        return;
    }
    e.state = new_state;
    e.t = new_t;
}

}  // namespace stdlab
