#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace stopchain {

using StateIndex = std::size_t;

/// Membership set over the state indices 0..universe_size()-1.
class StateSet {
public:
    StateSet() = default;
    explicit StateSet(std::size_t universe_size, bool full = false);

    static StateSet from_indices(std::size_t universe_size, std::span<const StateIndex> indices);

    std::size_t universe_size() const noexcept { return bits_.size(); }
    bool contains(StateIndex x) const;
    void insert(StateIndex x);
    void erase(StateIndex x);

    std::size_t count() const noexcept;
    bool empty() const noexcept { return count() == 0; }
    std::vector<StateIndex> indices() const;

    bool is_subset_of(const StateSet& other) const;

    /// Indices in *this that are not in `other`.
    std::vector<StateIndex> difference(const StateSet& other) const;

    friend bool operator==(const StateSet&, const StateSet&) = default;

private:
    std::vector<bool> bits_;
};

}  // namespace stopchain
