#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>

#include <Eigen/Dense>

#include "stopchain/oracle.hpp"

namespace stopchain {

namespace {

// Hitting value of the set encoded by `mask`, via a dense solve of the
// restricted system. Deliberately shares nothing with ChainModel.
std::vector<double> hitting_value(const Generator& gen, const PayoffVector& payoff,
                                  std::uint32_t mask) {
    const std::size_t n = gen.size();
    const double r = payoff.discount_rate;
    std::vector<double> u(n, 0.0);
    std::vector<int> slot(n, -1);
    int m = 0;
    for (std::size_t x = 0; x < n; ++x) {
        if ((mask >> x) & 1U) {
            u[x] = payoff.values[x];
        } else {
            slot[x] = m++;
        }
    }
    if (m == 0) {
        return u;
    }
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(m, m);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(m);
    for (std::size_t x = 0; x < n; ++x) {
        if (slot[x] < 0) {
            continue;
        }
        double out_rate = 0.0;
        for (std::size_t y = 0; y < n; ++y) {
            if (y == x) {
                continue;
            }
            const double rate = gen.rate(x, y);
            out_rate += rate;
            if (slot[y] >= 0) {
                a(slot[x], slot[y]) -= rate;
            } else {
                b[slot[x]] += rate * payoff.values[y];
            }
        }
        a(slot[x], slot[x]) += r + out_rate;
    }
    const Eigen::VectorXd sol = a.fullPivLu().solve(b);
    for (std::size_t x = 0; x < n; ++x) {
        if (slot[x] >= 0) {
            u[x] = sol[slot[x]];
        }
    }
    return u;
}

void check_inputs(const Generator& gen, const PayoffVector& payoff) {
    require_valid(gen, payoff);
    if (gen.size() > kEnumerationMaxStates) {
        throw std::invalid_argument("enumerate_sets: " + std::to_string(gen.size()) +
                                    " states exceeds the cap of " +
                                    std::to_string(kEnumerationMaxStates));
    }
}

OracleResult reduce(const Generator& gen, const std::vector<std::vector<double>>& values) {
    const std::size_t n = gen.size();
    OracleResult res;
    res.method = OracleMethod::enumeration;
    res.samples_or_sweeps = values.size();
    res.value.assign(n, 0.0);
    for (const auto& u : values) {
        for (std::size_t x = 0; x < n; ++x) {
            res.value[x] = std::max(res.value[x], u[x]);
        }
    }
    double scale = 1.0;
    for (double v : res.value) {
        scale = std::max(scale, std::abs(v));
    }
    const double tie = 1e-10 * scale;
    for (std::size_t mask = 0; mask < values.size(); ++mask) {
        double gap = 0.0;
        for (std::size_t x = 0; x < n; ++x) {
            gap = std::max(gap, res.value[x] - values[mask][x]);
        }
        if (gap <= tie) {
            StateSet s(n);
            for (std::size_t x = 0; x < n; ++x) {
                if ((mask >> x) & 1U) {
                    s.insert(x);
                }
            }
            res.optimal_sets.push_back(std::move(s));
        }
    }
    return res;
}

}  // namespace

OracleResult enumerate_sets(const Generator& gen, const PayoffVector& payoff) {
    check_inputs(gen, payoff);
    const auto count = static_cast<std::ptrdiff_t>(std::size_t{1} << gen.size());
    std::vector<std::vector<double>> values(static_cast<std::size_t>(count));
#pragma omp parallel for schedule(dynamic, 16)
    for (std::ptrdiff_t mask = 0; mask < count; ++mask) {
        values[static_cast<std::size_t>(mask)] =
            hitting_value(gen, payoff, static_cast<std::uint32_t>(mask));
    }
    return reduce(gen, values);
}

namespace reference {

OracleResult enumerate_sets(const Generator& gen, const PayoffVector& payoff) {
    check_inputs(gen, payoff);
    const std::size_t count = std::size_t{1} << gen.size();
    std::vector<std::vector<double>> values(count);
    for (std::size_t mask = 0; mask < count; ++mask) {
        values[mask] = hitting_value(gen, payoff, static_cast<std::uint32_t>(mask));
    }
    return reduce(gen, values);
}

}  // namespace reference

}  // namespace stopchain
