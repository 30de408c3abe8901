#include "stopchain/trajectory.hpp"

#include <stdexcept>

namespace stopchain {

Jump sample_jump(const Generator& gen, StateIndex x, Engine& engine) {
    const double total = gen.exit_rate(x);
    std::exponential_distribution<double> holding(total);
    const double dt = holding(engine);

    const auto targets = gen.targets(x);
    const auto rates = gen.rates(x);
    std::uniform_real_distribution<double> unit(0.0, total);
    const double pick = unit(engine);
    double cumulative = 0.0;
    StateIndex next = targets.back();
    for (std::size_t k = 0; k < targets.size(); ++k) {
        cumulative += rates[k];
        if (pick < cumulative && rates[k] > 0.0) {
            next = targets[k];
            break;
        }
    }
    // Guard against rounding in the last bucket landing on a zero-rate target.
    if (gen.rate(x, next) <= 0.0) {
        for (std::size_t k = targets.size(); k-- > 0;) {
            if (rates[k] > 0.0) {
                next = targets[k];
                break;
            }
        }
    }
    return {dt, next};
}

Trajectory sample_trajectory(const Generator& gen, StateIndex start, const Horizon& horizon,
                             std::uint64_t seed, std::uint64_t stream) {
    if (start >= gen.size()) {
        throw std::out_of_range("sample_trajectory: start state out of range");
    }
    if (!(horizon.max_time > 0.0) || horizon.max_jumps == 0) {
        throw std::invalid_argument("sample_trajectory: horizon must be positive");
    }
    Engine engine = make_engine(seed, stream);
    Trajectory path;
    path.jump_times.push_back(0.0);
    path.states.push_back(start);

    StateIndex x = start;
    double t = 0.0;
    for (std::size_t jumps = 0; jumps < horizon.max_jumps; ++jumps) {
        if (gen.is_absorbing(x)) {
            path.absorbed = true;
            break;
        }
        const Jump j = sample_jump(gen, x, engine);
        if (t + j.holding_time > horizon.max_time) {
            break;
        }
        t += j.holding_time;
        x = j.next;
        path.jump_times.push_back(t);
        path.states.push_back(x);
    }
    if (!path.absorbed && gen.is_absorbing(x)) {
        path.absorbed = true;
    }
    return path;
}

}  // namespace stopchain
