#pragma once

#include <chrono>
#include <concepts>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "stopchain/generator.hpp"
#include "stopchain/payoff.hpp"
#include "stopchain/state_set.hpp"

namespace stopchain {

struct SolverConfig {
    /// Bound on the normwise relative residual of each continuation solve.
    double linear_tolerance = 1e-12;
    /// Slack in the elimination test K[u](x) <= (r + L(x)) u(x) + test_tolerance.
    double test_tolerance = 0.0;
    /// Cap on the number of stopping sets produced; defaults to n_states + 1.
    std::optional<std::size_t> max_iterations;
    /// Continuation systems with more unknowns than this use the iterative solver.
    std::size_t direct_solver_max_states = 50'000;
    std::size_t max_inner_iterations = 10'000;
    /// Permit r = 0, provided every continuation state can reach the stopping set.
    bool allow_zero_discount = false;
    /// Keep every (D_n, u_n) in SolverReport::history.
    bool keep_history = false;
};

/// The pair (D_n, u_n) after n elimination rounds.
struct SolverState {
    std::size_t iteration = 0;
    StateSet stopping_set;
    std::vector<double> value;
};

struct TraceEntry {
    std::size_t iteration = 0;
    std::vector<StateIndex> eliminated;
    double max_residual = 0.0;
    std::size_t set_size = 0;
    double seconds = 0.0;
};

struct SolverReport {
    std::vector<double> final_value;
    StateSet final_stopping_set;
    std::size_t iterations = 0;
    std::vector<TraceEntry> trace;
    bool converged = false;
    std::vector<SolverState> history;
};

struct ContinuationSolution {
    std::vector<double> value;
    double residual = 0.0;
};

/// Interface the elimination loop needs from a problem.
///
/// excess(u)[x] is the sign-carrying quantity K[u](x) - (r + L(x)) u(x) (or a
/// positive multiple of it); continuation(S) solves u = phi on S and
/// (r + L(x)) u(x) = K[u](x) off S.
template <class M>
concept EliminationModel = requires(const M& m, std::span<const double> u, const StateSet& s,
                                    const SolverConfig& cfg) {
    { m.size() } -> std::convertible_to<std::size_t>;
    { m.payoff() } -> std::convertible_to<std::span<const double>>;
    { m.excess(u) } -> std::same_as<std::vector<double>>;
    { m.continuation(s, cfg) } -> std::same_as<ContinuationSolution>;
};

/// Finite CTMC optimal stopping problem: generator plus discounted payoff.
class ChainModel {
public:
    ChainModel(const Generator& gen, const PayoffVector& payoff, bool allow_zero_discount = false);

    std::size_t size() const noexcept { return gen_->size(); }
    std::span<const double> payoff() const noexcept { return payoff_->values; }
    double discount_rate() const noexcept { return payoff_->discount_rate; }
    const Generator& generator() const noexcept { return *gen_; }

    /// L[u](x) - r u(x) for every x.
    std::vector<double> excess(std::span<const double> u) const;
    ContinuationSolution continuation(const StateSet& stop_set, const SolverConfig& cfg) const;

private:
    const Generator* gen_;
    const PayoffVector* payoff_;
};

/// D_1 = {x : L[phi](x) - r phi(x) <= test_tolerance}.
StateSet initial_stopping_set(const Generator& gen, const PayoffVector& payoff,
                              const SolverConfig& cfg = {});

/// Value of hitting stop_set: phi on the set, continuation equations elsewhere.
std::vector<double> solve_continuation(const Generator& gen, const PayoffVector& payoff,
                                       const StateSet& stop_set, const SolverConfig& cfg = {});

SolverState eliminate_step(const Generator& gen, const PayoffVector& payoff,
                           const SolverState& state, const SolverConfig& cfg = {});

SolverReport run(const Generator& gen, const PayoffVector& payoff, const SolverConfig& cfg = {});

// ---------------------------------------------------------------------------
// Generic elimination loop.

namespace detail {

inline std::size_t iteration_cap(std::size_t n, const SolverConfig& cfg) {
    return cfg.max_iterations.value_or(n + 1);
}

template <EliminationModel M>
StateSet surviving_states(const M& model, const StateSet& current, std::span<const double> u,
                          double tolerance) {
    const std::vector<double> ex = model.excess(u);
    StateSet next = current;
    for (StateIndex x = 0; x < model.size(); ++x) {
        if (current.contains(x) && !(ex[x] <= tolerance)) {
            next.erase(x);
        }
    }
    return next;
}

}  // namespace detail

/// One round: D_{n+1} = {x in D_n : excess(u_n)(x) <= tol}, u_{n+1} hits D_{n+1}.
/// A fixed point is returned unchanged (same iteration number).
template <EliminationModel M>
SolverState eliminate_step(const M& model, const SolverState& state, const SolverConfig& cfg,
                           TraceEntry* trace = nullptr) {
    const auto t0 = std::chrono::steady_clock::now();
    StateSet next = detail::surviving_states(model, state.stopping_set, state.value,
                                             cfg.test_tolerance);
    if (next == state.stopping_set) {
        return state;
    }
    ContinuationSolution sol = model.continuation(next, cfg);
    if (trace != nullptr) {
        trace->iteration = state.iteration + 1;
        trace->eliminated = state.stopping_set.difference(next);
        trace->max_residual = sol.residual;
        trace->set_size = next.count();
        trace->seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
    return {state.iteration + 1, std::move(next), std::move(sol.value)};
}

/// Runs elimination from (D_0, u_0) = (V, phi) until D_{n+1} = D_n or the cap.
template <EliminationModel M>
SolverReport run_elimination(const M& model, const SolverConfig& cfg) {
    const std::size_t n = model.size();
    const std::size_t cap = detail::iteration_cap(n, cfg);
    const auto phi = model.payoff();

    SolverState state{0, StateSet(n, true), std::vector<double>(phi.begin(), phi.end())};
    SolverReport report;
    if (cfg.keep_history) {
        report.history.push_back(state);
    }
    for (;;) {
        if (state.iteration >= cap) {
            // One more test decides whether the cap was hit at a fixed point.
            const StateSet next = detail::surviving_states(model, state.stopping_set, state.value,
                                                           cfg.test_tolerance);
            report.converged = state.iteration > 0 && next == state.stopping_set;
            break;
        }
        TraceEntry entry;
        SolverState next = eliminate_step(model, state, cfg, &entry);
        if (next.iteration == state.iteration) {
            if (state.iteration == 0) {
                // D_1 = V: u_1 = phi, recorded as the first stage.
                next.iteration = 1;
                entry = TraceEntry{1, {}, 0.0, n, 0.0};
            } else {
                report.converged = true;
                break;
            }
        }
        state = std::move(next);
        report.trace.push_back(std::move(entry));
        if (cfg.keep_history) {
            report.history.push_back(state);
        }
    }
    report.iterations = state.iteration;
    report.final_stopping_set = std::move(state.stopping_set);
    report.final_value = std::move(state.value);
    return report;
}

}  // namespace stopchain
