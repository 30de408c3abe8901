#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "stopchain/state_set.hpp"

namespace stopchain {

/// Off-diagonal transition rate L(from, to).
struct Rate {
    StateIndex from;
    StateIndex to;
    double value;
};

/// Sparse generator of a continuous-time Markov chain on 0..size()-1.
///
/// Only off-diagonal rates are stored, row by row in ascending target order;
/// the diagonal is implied by the cached exit rates L(x) = sum_{y != x} L(x, y).
/// Numerical defects (negative or non-finite rates) are kept as given and
/// reported by validate(); structural defects (self-loops, indices out of
/// range) are rejected at construction.
class Generator {
public:
    Generator() = default;
    Generator(std::size_t n_states, std::vector<Rate> rates);

    /// Builds a generator whose cached exit rates are taken verbatim, so that
    /// validate() can be exercised on inconsistent caches.
    static Generator with_cached_exit_rates(std::size_t n_states, std::vector<Rate> rates,
                                            std::vector<double> exit_rates);

    std::size_t size() const noexcept { return exit_.size(); }
    std::size_t nonzeros() const noexcept { return targets_.size(); }

    double exit_rate(StateIndex x) const;
    bool is_absorbing(StateIndex x) const { return exit_rate(x) == 0.0; }

    std::span<const StateIndex> targets(StateIndex x) const;
    std::span<const double> rates(StateIndex x) const;

    /// L(from, to) for from != to, 0 when no rate is stored.
    double rate(StateIndex from, StateIndex to) const;

    /// Sum of the stored off-diagonal rates of row x, ascending target order.
    double recompute_exit_rate(StateIndex x) const;

    std::vector<Rate> triplets() const;

private:
    void check_state(StateIndex x) const;

    std::vector<std::size_t> row_begin_;
    std::vector<StateIndex> targets_;
    std::vector<double> values_;
    std::vector<double> exit_;
};

/// Returns one message per broken generator invariant; empty iff valid.
std::vector<std::string> validate(const Generator& gen);

/// K[f](x) = sum_{y != x} L(x, y) f(y), summed in ascending target order.
double apply_K(const Generator& gen, std::span<const double> f, StateIndex x);

/// L[f](x) = K[f](x) - L(x) f(x).
double generator_apply(const Generator& gen, std::span<const double> f, StateIndex x);

/// Continuous-time chain with generator lambda (P - Id) for a row-stochastic P.
Generator poissonize(const Eigen::MatrixXd& transition, double lambda);

}  // namespace stopchain
