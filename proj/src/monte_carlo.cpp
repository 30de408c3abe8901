#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "stopchain/oracle.hpp"
#include "stopchain/rng.hpp"
#include "stopchain/trajectory.hpp"

namespace stopchain {

namespace {

constexpr std::uint64_t kStream = label_hash("oracle/monte_carlo");

struct PathSetup {
    double time_cap;
    std::size_t max_jumps;
};

PathSetup setup(const Generator& gen, const PayoffVector& payoff, const StateSet& stop_set,
                std::span<const StateIndex> starts, std::size_t n_paths,
                const MonteCarloOptions& options) {
    require_valid(gen, payoff);
    if (n_paths == 0) {
        throw std::invalid_argument("monte_carlo_value: n_paths must be >= 1");
    }
    if (stop_set.universe_size() != gen.size()) {
        throw std::invalid_argument("monte_carlo_value: stopping set size mismatch");
    }
    const bool zero_payoff =
        std::all_of(payoff.values.begin(), payoff.values.end(), [](double v) { return v == 0.0; });
    if (stop_set.empty() && !zero_payoff) {
        throw std::invalid_argument("monte_carlo_value: empty stopping set with nonzero payoff");
    }
    for (StateIndex s : starts) {
        if (s >= gen.size()) {
            throw std::out_of_range("monte_carlo_value: start state out of range");
        }
    }
    if (!(options.relative_bias > 0.0 && options.relative_bias < 1.0)) {
        throw std::invalid_argument("monte_carlo_value: relative_bias must lie in (0, 1)");
    }
    return {std::log(1.0 / options.relative_bias) / payoff.discount_rate, options.max_jumps};
}

double simulate_path(const Generator& gen, const PayoffVector& payoff, const StateSet& stop_set,
                     StateIndex start, const PathSetup& cfg, Engine& engine) {
    StateIndex x = start;
    double t = 0.0;
    for (std::size_t jumps = 0;; ++jumps) {
        if (stop_set.contains(x)) {
            return std::exp(-payoff.discount_rate * t) * payoff.values[x];
        }
        if (gen.is_absorbing(x) || jumps >= cfg.max_jumps) {
            return 0.0;
        }
        const Jump j = sample_jump(gen, x, engine);
        t += j.holding_time;
        if (t > cfg.time_cap) {
            return 0.0;
        }
        x = j.next;
    }
}

template <class FillPaths>
OracleResult estimate(const Generator& gen, const PayoffVector& payoff, const StateSet& stop_set,
                      std::span<const StateIndex> starts, std::size_t n_paths,
                      const MonteCarloOptions& options, FillPaths fill) {
    const PathSetup cfg = setup(gen, payoff, stop_set, starts, n_paths, options);
    OracleResult res;
    res.method = OracleMethod::monte_carlo;
    res.samples_or_sweeps = n_paths;
    res.states.assign(starts.begin(), starts.end());
    const double max_phi = *std::max_element(payoff.values.begin(), payoff.values.end());
    res.truncation_bias = options.relative_bias * max_phi;

    std::vector<double> samples(n_paths);
    for (StateIndex s : starts) {
        if (stop_set.contains(s)) {
            res.value.push_back(payoff.values[s]);
            res.standard_error.push_back(0.0);
            continue;
        }
        if (gen.is_absorbing(s)) {
            res.value.push_back(0.0);
            res.standard_error.push_back(0.0);
            continue;
        }
        fill(samples, s, cfg);
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
    }
    for (double se : res.standard_error) {
        res.error_bound = std::max(res.error_bound, 3.0 * se);
    }
    return res;
}

}  // namespace

OracleResult monte_carlo_value(const Generator& gen, const PayoffVector& payoff,
                               const StateSet& stop_set, std::span<const StateIndex> starts,
                               std::size_t n_paths, std::uint64_t seed,
                               const MonteCarloOptions& options) {
    return estimate(gen, payoff, stop_set, starts, n_paths, options,
                    [&](std::vector<double>& samples, StateIndex s, const PathSetup& cfg) {
                        const auto count = static_cast<std::ptrdiff_t>(samples.size());
#pragma omp parallel for schedule(static)
                        for (std::ptrdiff_t i = 0; i < count; ++i) {
                            Engine engine =
                                make_engine(seed, kStream + s, static_cast<std::uint64_t>(i));
                            samples[static_cast<std::size_t>(i)] =
                                simulate_path(gen, payoff, stop_set, s, cfg, engine);
                        }
                    });
}

namespace reference {

OracleResult monte_carlo_value(const Generator& gen, const PayoffVector& payoff,
                               const StateSet& stop_set, std::span<const StateIndex> starts,
                               std::size_t n_paths, std::uint64_t seed,
                               const MonteCarloOptions& options) {
    return estimate(gen, payoff, stop_set, starts, n_paths, options,
                    [&](std::vector<double>& samples, StateIndex s, const PathSetup& cfg) {
                        for (std::size_t i = 0; i < samples.size(); ++i) {
                            Engine engine = make_engine(seed, kStream + s, i);
                            samples[i] = simulate_path(gen, payoff, stop_set, s, cfg, engine);
                        }
                    });
}

}  // namespace reference

}  // namespace stopchain
