#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "stopchain/oracle.hpp"

namespace stopchain {

std::string_view to_string(OracleMethod method) noexcept {
    switch (method) {
        case OracleMethod::value_iteration: return "value_iteration";
        case OracleMethod::enumeration: return "enumeration";
        case OracleMethod::monte_carlo: return "monte_carlo";
    }
    return "unknown";
}

double contraction_factor(const Generator& gen, double discount_rate) {
    double gamma = 0.0;
    for (StateIndex x = 0; x < gen.size(); ++x) {
        const double l = gen.exit_rate(x);
        gamma = std::max(gamma, l / (discount_rate + l));
    }
    return gamma;
}

namespace {

void check_inputs(const Generator& gen, const PayoffVector& payoff, double tol) {
    require_valid(gen, payoff);
    if (!(tol > 0.0)) {
        throw std::invalid_argument("value_iteration: tolerance must be positive");
    }
}

double bellman_at(const Generator& gen, const PayoffVector& payoff, std::span<const double> v,
                  StateIndex x) {
    const double cont = apply_K(gen, v, x) / (payoff.discount_rate + gen.exit_rate(x));
    return std::max(payoff.values[x], cont);
}

template <class Sweep>
OracleResult iterate(const Generator& gen, const PayoffVector& payoff, double tol, Sweep sweep) {
    check_inputs(gen, payoff, tol);
    const double gamma = contraction_factor(gen, payoff.discount_rate);
    const double stop_update =
        gamma > 0.0 ? tol * (1.0 - gamma) / gamma : std::numeric_limits<double>::infinity();

    OracleResult res;
    res.method = OracleMethod::value_iteration;
    std::vector<double> v = payoff.values;
    constexpr std::size_t kMaxSweeps = 200'000'000;
    for (std::size_t sweep_count = 1;; ++sweep_count) {
        std::vector<double> next = sweep(gen, payoff, v);
        double update = 0.0;
        for (std::size_t x = 0; x < v.size(); ++x) {
            update = std::max(update, std::abs(next[x] - v[x]));
        }
        v = std::move(next);
        res.sweep_updates.push_back(update);
        if (update <= stop_update) {
            res.samples_or_sweeps = sweep_count;
            res.error_bound = gamma > 0.0 ? gamma / (1.0 - gamma) * update : 0.0;
            break;
        }
        if (sweep_count >= kMaxSweeps) {
            throw std::runtime_error("value_iteration: sweep cap reached");
        }
    }
    res.value = std::move(v);
    return res;
}

}  // namespace

std::vector<double> bellman_sweep(const Generator& gen, const PayoffVector& payoff,
                                  std::span<const double> v) {
    const auto n = static_cast<std::ptrdiff_t>(gen.size());
    std::vector<double> out(gen.size());
#pragma omp parallel for schedule(static) if (n > 256)
    for (std::ptrdiff_t x = 0; x < n; ++x) {
        out[static_cast<std::size_t>(x)] =
            bellman_at(gen, payoff, v, static_cast<StateIndex>(x));
    }
    return out;
}

OracleResult value_iteration(const Generator& gen, const PayoffVector& payoff,
                             double sup_norm_tol) {
    return iterate(gen, payoff, sup_norm_tol,
                   [](const Generator& g, const PayoffVector& p, std::span<const double> v) {
                       return bellman_sweep(g, p, v);
                   });
}

namespace reference {

std::vector<double> bellman_sweep(const Generator& gen, const PayoffVector& payoff,
                                  std::span<const double> v) {
    std::vector<double> out(gen.size());
    for (StateIndex x = 0; x < gen.size(); ++x) {
        out[x] = bellman_at(gen, payoff, v, x);
    }
    return out;
}

OracleResult value_iteration(const Generator& gen, const PayoffVector& payoff,
                             double sup_norm_tol) {
    return iterate(gen, payoff, sup_norm_tol,
                   [](const Generator& g, const PayoffVector& p, std::span<const double> v) {
                       return reference::bellman_sweep(g, p, v);
                   });
}

}  // namespace reference

}  // namespace stopchain
