#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "stopchain/generator.hpp"
#include "stopchain/payoff.hpp"
#include "stopchain/state_set.hpp"

namespace stopchain {

enum class OracleMethod { value_iteration, enumeration, monte_carlo };

std::string_view to_string(OracleMethod method) noexcept;

struct OracleResult {
    /// Per-state values, or per-start values when `states` is nonempty.
    std::vector<double> value;
    OracleMethod method = OracleMethod::value_iteration;
    /// Certified sup-norm bound (value iteration), 0 (enumeration) or the
    /// largest 3-standard-error half width (Monte Carlo).
    double error_bound = 0.0;
    std::size_t samples_or_sweeps = 0;

    std::vector<StateIndex> states;
    std::vector<double> standard_error;
    /// Monte Carlo only: bias bound from the time/jump caps.
    double truncation_bias = 0.0;
    /// Value iteration only: sup-norm change of every sweep.
    std::vector<double> sweep_updates;
    /// Enumeration only: every stopping set whose hitting value attains the
    /// pointwise maximum (within the tie tolerance), by ascending bitmask.
    std::vector<StateSet> optimal_sets;
};

/// Contraction factor max_x L(x) / (r + L(x)) of the uniformized Bellman map.
double contraction_factor(const Generator& gen, double discount_rate);

/// T[v](x) = max(phi(x), K[v](x) / (r + L(x))).
std::vector<double> bellman_sweep(const Generator& gen, const PayoffVector& payoff,
                                  std::span<const double> v);

/// Iterates T from phi until the a-posteriori bound certifies ||v - u|| <= tol.
OracleResult value_iteration(const Generator& gen, const PayoffVector& payoff,
                             double sup_norm_tol);

inline constexpr std::size_t kEnumerationMaxStates = 12;

/// Pointwise maximum of the hitting values of all 2^n stopping sets.
OracleResult enumerate_sets(const Generator& gen, const PayoffVector& payoff);

struct MonteCarloOptions {
    std::size_t max_jumps = 1'000'000;
    /// Discount truncation target: paths are cut at time ln(1/bias)/r.
    double relative_bias = 1e-12;
};

/// Estimates E_x[exp(-r tau_S) phi(X_{tau_S})] for each start by simulation.
OracleResult monte_carlo_value(const Generator& gen, const PayoffVector& payoff,
                               const StateSet& stop_set, std::span<const StateIndex> starts,
                               std::size_t n_paths, std::uint64_t seed,
                               const MonteCarloOptions& options = {});

/// Single-threaded reference versions of the OpenMP kernels above. They run
/// the same arithmetic in the same order and must agree bit for bit.
namespace reference {

std::vector<double> bellman_sweep(const Generator& gen, const PayoffVector& payoff,
                                  std::span<const double> v);
OracleResult value_iteration(const Generator& gen, const PayoffVector& payoff,
                             double sup_norm_tol);
OracleResult enumerate_sets(const Generator& gen, const PayoffVector& payoff);
OracleResult monte_carlo_value(const Generator& gen, const PayoffVector& payoff,
                               const StateSet& stop_set, std::span<const StateIndex> starts,
                               std::size_t n_paths, std::uint64_t seed,
                               const MonteCarloOptions& options = {});

}  // namespace reference

}  // namespace stopchain
