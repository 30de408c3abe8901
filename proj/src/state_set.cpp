#include "stopchain/state_set.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace stopchain {

namespace {

void check_index(StateIndex x, std::size_t n) {
    if (x >= n) {
        throw std::out_of_range("state index " + std::to_string(x) + " out of range for " +
                                std::to_string(n) + " states");
    }
}

}  // namespace

StateSet::StateSet(std::size_t universe_size, bool full) : bits_(universe_size, full) {}

StateSet StateSet::from_indices(std::size_t universe_size, std::span<const StateIndex> indices) {
    StateSet s(universe_size);
    for (StateIndex x : indices) {
        s.insert(x);
    }
    return s;
}

bool StateSet::contains(StateIndex x) const {
    check_index(x, bits_.size());
    return bits_[x];
}

void StateSet::insert(StateIndex x) {
    check_index(x, bits_.size());
    bits_[x] = true;
}

void StateSet::erase(StateIndex x) {
    check_index(x, bits_.size());
    bits_[x] = false;
}

std::size_t StateSet::count() const noexcept {
    return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), true));
}

std::vector<StateIndex> StateSet::indices() const {
    std::vector<StateIndex> out;
    for (std::size_t i = 0; i < bits_.size(); ++i) {
        if (bits_[i]) {
            out.push_back(i);
        }
    }
    return out;
}

bool StateSet::is_subset_of(const StateSet& other) const {
    if (other.bits_.size() != bits_.size()) {
        return false;
    }
    for (std::size_t i = 0; i < bits_.size(); ++i) {
        if (bits_[i] && !other.bits_[i]) {
            return false;
        }
    }
    return true;
}

std::vector<StateIndex> StateSet::difference(const StateSet& other) const {
    std::vector<StateIndex> out;
    for (std::size_t i = 0; i < bits_.size(); ++i) {
        if (bits_[i] && (i >= other.bits_.size() || !other.bits_[i])) {
            out.push_back(i);
        }
    }
    return out;
}

}  // namespace stopchain
