#pragma once

// Independent reference formulas for the tests. Nothing here calls the
// library's solvers.

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "stopchain/generator.hpp"
#include "stopchain/payoff.hpp"

namespace oracles {

/// Positive root of sigma^2/2 z(z-1) + b z - q = 0.
inline long double positive_root(long double b, long double sigma, long double q) {
    const long double a = 0.5L * sigma * sigma;
    const long double c1 = b - a;
    return (-c1 + std::sqrt(c1 * c1 + 4.0L * a * q)) / (2.0L * a);
}

inline long double negative_root(long double b, long double sigma, long double q) {
    const long double a = 0.5L * sigma * sigma;
    const long double c1 = b - a;
    return (-c1 - std::sqrt(c1 * c1 + 4.0L * a * q)) / (2.0L * a);
}

/// Perpetual call without exercise restrictions: beta/(beta-1) K.
inline double classical_call_threshold(double b, double sigma, double r, double strike) {
    const long double beta = positive_root(b, sigma, r);
    return static_cast<double>(beta / (beta - 1.0L) * strike);
}

/// Threshold of the perpetual call exercisable at Poisson(lambda) times.
/// Below x*: A x^beta. Above: B x^gamma + p(x), p = lambda x/(r+lambda-b) -
/// lambda K/(r+lambda), gamma the negative root at rate r + lambda. C^1 fit at
/// x* together with v(x*) = x* - K leaves one equation in x*, solved by bisection.
inline double poisson_call_threshold(double b, double sigma, double r, double strike,
                                     double lambda) {
    const long double beta = positive_root(b, sigma, r);
    const long double gamma = negative_root(b, sigma, r + lambda);
    const long double c = lambda / (r + lambda - static_cast<long double>(b));
    const long double d = lambda * static_cast<long double>(strike) / (r + lambda);
    auto f = [&](long double x) {
        const long double p = c * x - d;
        const long double bxg = (x * c - beta * p) / (beta - gamma);
        return bxg + p - (x - strike);
    };
    long double lo = strike;
    long double hi = (1.0L + lambda / (r - static_cast<long double>(b))) * strike;
    for (int i = 0; i < 200; ++i) {
        const long double mid = 0.5L * (lo + hi);
        if ((f(lo) < 0) == (f(mid) < 0)) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return static_cast<double>(0.5L * (lo + hi));
}

/// Probability that a walk with up-rate lambda, down-rate mu started at 0
/// reaches +up before -down.
inline double ruin_up_probability(double lambda, double mu, int down, int up) {
    if (lambda == mu) {
        return static_cast<double>(down) / static_cast<double>(down + up);
    }
    const long double rho = static_cast<long double>(mu) / lambda;
    return static_cast<double>((1.0L - std::pow(rho, down)) / (1.0L - std::pow(rho, down + up)));
}

struct RandomInstance {
    stopchain::Generator generator;
    stopchain::PayoffVector payoff;
};

/// Sparse chain with up to 12 states, rates in [0, 5], payoffs in [0, 10], r in [0.1, 2].
inline RandomInstance random_instance(std::uint64_t seed, std::size_t max_states = 12) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> size(2, max_states);
    std::uniform_real_distribution<double> rate(0.0, 5.0);
    std::uniform_real_distribution<double> pay(0.0, 10.0);
    std::uniform_real_distribution<double> disc(0.1, 2.0);
    std::bernoulli_distribution edge(0.35);
    std::bernoulli_distribution zero_payoff(0.15);

    const std::size_t n = size(rng);
    std::vector<stopchain::Rate> rates;
    for (std::size_t x = 0; x < n; ++x) {
        for (std::size_t y = 0; y < n; ++y) {
            if (x != y && edge(rng)) {
                rates.push_back({x, y, rate(rng)});
            }
        }
    }
    stopchain::PayoffVector p;
    p.discount_rate = disc(rng);
    for (std::size_t x = 0; x < n; ++x) {
        p.values.push_back(zero_payoff(rng) ? 0.0 : pay(rng));
    }
    return {stopchain::Generator(n, std::move(rates)), std::move(p)};
}

}  // namespace oracles
