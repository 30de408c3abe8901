#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "stopchain/errors.hpp"
#include "stopchain/intervention.hpp"
#include "stopchain/rng.hpp"

namespace stopchain::intervention {

namespace {

constexpr std::uint64_t kStream = label_hash("intervention/monte_carlo");
constexpr std::size_t kMaxSteps = 1'000'000;

struct PathParams {
    double drift;  // b - sigma^2 / 2
    double sigma;
    double r;
    double lambda;
    double strike;
    double x_star;
    double time_cap;
};

double simulate_path(const PathParams& p, double start, Engine& engine) {
    std::exponential_distribution<double> wait(p.lambda);
    std::normal_distribution<double> gauss(0.0, 1.0);
    double s = start;
    double t = 0.0;
    for (std::size_t step = 0; step < kMaxSteps; ++step) {
        if (s >= p.x_star) {
            return std::exp(-p.r * t) * std::max(s - p.strike, 0.0);
        }
        const double dt = wait(engine);
        t += dt;
        if (t > p.time_cap) {
            return 0.0;
        }
        s *= std::exp(p.drift * dt + p.sigma * std::sqrt(dt) * gauss(engine));
    }
    return 0.0;
}

template <class Fill>
OracleResult estimate(const InterventionModel& model, double x_star,
                      std::span<const double> starts, std::size_t n_paths, double bias,
                      Fill fill) {
    auto violations = validate(model);
    if (!violations.empty()) {
        throw ModelError(std::move(violations));
    }
    if (n_paths == 0 || !(bias > 0.0 && bias < 1.0) || !(x_star > 0.0)) {
        throw std::invalid_argument("monte_carlo_threshold_value: bad arguments");
    }
    // E[exp(-r t) S_t] = x exp(-(r - b) t) bounds what a truncated path can lose.
    const PathParams p{model.b - 0.5 * model.sigma * model.sigma, model.sigma, model.r,
                       model.lambda, model.strike, x_star,
                       std::log(1.0 / bias) / (model.r - model.b)};
    OracleResult res;
    res.method = OracleMethod::monte_carlo;
    res.samples_or_sweeps = n_paths;
    std::vector<double> samples(n_paths);
    for (std::size_t j = 0; j < starts.size(); ++j) {
        fill(samples, p, starts[j], j);
        double sum = 0.0;
        for (double v : samples) {
            sum += v;
        }
        const double mean = sum / static_cast<double>(n_paths);
        double sq = 0.0;
        for (double v : samples) {
            sq += (v - mean) * (v - mean);
        }
        const double var = n_paths > 1 ? sq / static_cast<double>(n_paths - 1) : 0.0;
        res.value.push_back(mean);
        res.standard_error.push_back(std::sqrt(var / static_cast<double>(n_paths)));
        res.truncation_bias = std::max(res.truncation_bias, bias * starts[j]);
    }
    for (double se : res.standard_error) {
        res.error_bound = std::max(res.error_bound, 3.0 * se);
    }
    return res;
}

}  // namespace

OracleResult monte_carlo_threshold_value(const InterventionModel& model, double x_star,
                                         std::span<const double> start_prices,
                                         std::size_t n_paths, std::uint64_t seed,
                                         double relative_bias) {
    return estimate(model, x_star, start_prices, n_paths, relative_bias,
                    [seed](std::vector<double>& samples, const PathParams& p, double start,
                           std::size_t j) {
                        const auto count = static_cast<std::ptrdiff_t>(samples.size());
#pragma omp parallel for schedule(static)
                        for (std::ptrdiff_t i = 0; i < count; ++i) {
                            Engine engine = make_engine(seed, kStream + j, static_cast<std::uint64_t>(i));
                            samples[static_cast<std::size_t>(i)] = simulate_path(p, start, engine);
                        }
                    });
}

namespace reference {

OracleResult monte_carlo_threshold_value(const InterventionModel& model, double x_star,
                                         std::span<const double> start_prices,
                                         std::size_t n_paths, std::uint64_t seed,
                                         double relative_bias) {
    return estimate(model, x_star, start_prices, n_paths, relative_bias,
                    [seed](std::vector<double>& samples, const PathParams& p, double start,
                           std::size_t j) {
                        for (std::size_t i = 0; i < samples.size(); ++i) {
                            Engine engine = make_engine(seed, kStream + j, i);
                            samples[i] = simulate_path(p, start, engine);
                        }
                    });
}

}  // namespace reference

}  // namespace stopchain::intervention
