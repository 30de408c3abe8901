#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "stopchain/elimination.hpp"
#include "stopchain/generator.hpp"
#include "stopchain/oracle.hpp"

namespace stopchain::intervention {

/// Log-uniform price grid.
struct GridSpec {
    double x_min = 0.0;
    double x_max = 0.0;
    std::size_t n_points = 0;
};

/// Perpetual call (x - K)+ on dS/S = b dt + sigma dW, exercisable only at the
/// arrival times of an independent Poisson process of intensity lambda.
struct InterventionModel {
    double b = 0.0;
    double sigma = 0.0;
    double r = 0.0;
    double strike = 0.0;
    double lambda = 0.0;
    GridSpec grid;

    /// (1 + lambda / (r - b)) K: above this price the first-stage test always stops.
    double upper_bound() const noexcept { return (1.0 + lambda / (r - b)) * strike; }
};

/// Grid from 0.01 K to `margin` times the upper bound.
GridSpec default_grid(double b, double r, double strike, double lambda, std::size_t n_points,
                      double margin = 4.0);

std::vector<std::string> validate(const InterventionModel& model);

struct LogGrid {
    std::vector<double> x;
    double h = 0.0;  // spacing in log-price
};

LogGrid make_grid(const GridSpec& grid);

/// Birth-death chain on the log grid whose jumps match the log-price drift
/// b - sigma^2/2 and variance sigma^2; both grid ends absorbing.
Generator discretize_gbm(const InterventionModel& model);

/// g = (q I - G)^{-1} f.
std::vector<double> resolvent(const Generator& gen, double q, std::span<const double> f);

/// Factorizes q I - G once for repeated resolvent applications.
class ResolventSolver {
public:
    ResolventSolver(const Generator& gen, double q);
    ~ResolventSolver();
    ResolventSolver(ResolventSolver&&) noexcept;
    ResolventSolver& operator=(ResolventSolver&&) noexcept;

    std::vector<double> apply(std::span<const double> f) const;
    std::size_t size() const noexcept { return n_; }

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    std::size_t n_ = 0;
};

/// Intervention problem on the grid in the form the elimination loop
/// consumes. The one-jump kernel is lambda R_{r+lambda}; excess(u) is
/// (r + lambda)(lambda R_{r+lambda}[u] - u) and every continuation solve is a
/// single sparse system in w = R_{r+lambda}[u].
class InterventionChain {
public:
    explicit InterventionChain(const InterventionModel& model);
    ~InterventionChain();
    InterventionChain(InterventionChain&&) noexcept;

    std::size_t size() const noexcept { return grid_.x.size(); }
    std::span<const double> payoff() const noexcept { return payoff_; }
    const LogGrid& grid() const noexcept { return grid_; }
    const Generator& diffusion() const noexcept { return diffusion_; }

    std::vector<double> excess(std::span<const double> u) const;
    ContinuationSolution continuation(const StateSet& stop_set, const SolverConfig& cfg) const;

private:
    InterventionModel model_;
    LogGrid grid_;
    Generator diffusion_;
    std::vector<double> payoff_;
    ResolventSolver resolvent_;
};

/// Explicit Poissonized chain lambda (P - Id), P = (r + lambda) R_{r+lambda},
/// with discount r. Dense: meant for small grids and cross-checks.
Generator poissonized_generator(const InterventionModel& model);

struct EtaDiagnostic {
    std::vector<double> x;
    std::vector<double> eta;  // lambda R_{r+lambda}[phi] - phi
    bool positive_below_strike = false;
    bool non_increasing_above_strike = false;
    double max_increase_above_strike = 0.0;
    double tolerance = 0.0;
    /// First grid point above K with eta <= 0 (the first-stage threshold x1).
    std::size_t sign_change_index = 0;
    double sign_change_x = 0.0;
    bool sign_change_found = false;
    double eta_at_bound = 0.0;
};

EtaDiagnostic monotonicity_check_eta(const InterventionModel& model);

struct ThresholdReport {
    double x_star = 0.0;
    std::size_t x_star_index = 0;
    bool threshold_found = false;
    std::vector<double> x;
    std::vector<double> value;
    std::vector<double> payoff;
    StateSet stopping_set;
    double strike = 0.0;
    double upper_bound = 0.0;
    double h = 0.0;
    /// Width of the grid cell just below x_star.
    double cell_width = 0.0;
    /// Threshold of each stage, x_1 <= x_2 <= ...
    std::vector<double> stage_thresholds;
    bool nested_up_sets = false;
    SolverReport solver;
};

/// Runs elimination on the intervention chain and extracts x_star, the
/// smallest grid price above K in the final stopping set. threshold_found is
/// false when only the upper grid end stops.
ThresholdReport intervention_value(const InterventionModel& model, const SolverConfig& cfg = {});

std::string threshold_report_json(const InterventionModel& model, const ThresholdReport& report);
/// Columns x, v, payoff, in_stopping_set.
std::string value_curve_csv(const ThresholdReport& report);

struct RefinementStudy {
    std::vector<std::size_t> resolutions;
    std::vector<double> x_star;
    std::vector<double> cell_width;
};

RefinementStudy threshold_refinement(const InterventionModel& model,
                                     std::span<const std::size_t> resolutions);

/// Value of the rule "stop at the first intervention time with S >= x_star",
/// simulated with exact lognormal increments over Exp(lambda) waiting times.
OracleResult monte_carlo_threshold_value(const InterventionModel& model, double x_star,
                                         std::span<const double> start_prices,
                                         std::size_t n_paths, std::uint64_t seed,
                                         double relative_bias = 1e-12);

namespace reference {

OracleResult monte_carlo_threshold_value(const InterventionModel& model, double x_star,
                                         std::span<const double> start_prices,
                                         std::size_t n_paths, std::uint64_t seed,
                                         double relative_bias = 1e-12);

}  // namespace reference

}  // namespace stopchain::intervention
