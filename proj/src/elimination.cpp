#include "stopchain/elimination.hpp"

namespace stopchain {

StateSet initial_stopping_set(const Generator& gen, const PayoffVector& payoff,
                              const SolverConfig& cfg) {
    const ChainModel model(gen, payoff, cfg.allow_zero_discount);
    return detail::surviving_states(model, StateSet(gen.size(), true), payoff.values,
                                    cfg.test_tolerance);
}

std::vector<double> solve_continuation(const Generator& gen, const PayoffVector& payoff,
                                       const StateSet& stop_set, const SolverConfig& cfg) {
    const ChainModel model(gen, payoff, cfg.allow_zero_discount);
    return model.continuation(stop_set, cfg).value;
}

SolverState eliminate_step(const Generator& gen, const PayoffVector& payoff,
                           const SolverState& state, const SolverConfig& cfg) {
    const ChainModel model(gen, payoff, cfg.allow_zero_discount);
    return eliminate_step(model, state, cfg);
}

SolverReport run(const Generator& gen, const PayoffVector& payoff, const SolverConfig& cfg) {
    const ChainModel model(gen, payoff, cfg.allow_zero_discount);
    return run_elimination(model, cfg);
}

}  // namespace stopchain
