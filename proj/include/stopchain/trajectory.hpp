#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "stopchain/generator.hpp"
#include "stopchain/rng.hpp"

namespace stopchain {

/// Simulation bound: stop at the first jump past max_time or after max_jumps jumps.
struct Horizon {
    double max_time = std::numeric_limits<double>::infinity();
    std::size_t max_jumps = 1'000'000;
};

/// Piecewise-constant path: states[k] is held on [jump_times[k], jump_times[k+1]).
struct Trajectory {
    std::vector<double> jump_times;
    std::vector<StateIndex> states;
    bool absorbed = false;
};

/// One jump of the chain from a non-absorbing state.
struct Jump {
    double holding_time;
    StateIndex next;
};

/// Draws holding time ~ Exp(L(x)) and successor ~ L(x, .)/L(x).
Jump sample_jump(const Generator& gen, StateIndex x, Engine& engine);

Trajectory sample_trajectory(const Generator& gen, StateIndex start, const Horizon& horizon,
                             std::uint64_t seed, std::uint64_t stream = 0);

}  // namespace stopchain
