#include "stopchain/generator.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "stopchain/errors.hpp"

namespace stopchain {

namespace {

std::string edge(StateIndex from, StateIndex to) {
    std::ostringstream os;
    os << '(' << from << ',' << to << ')';
    return os.str();
}

std::string join(const std::vector<std::string>& parts) {
    std::string out;
    for (const auto& p : parts) {
        if (!out.empty()) {
            out += "; ";
        }
        out += p;
    }
    return out;
}

}  // namespace

ModelError::ModelError(std::vector<std::string> violations)
    : std::runtime_error("invalid model: " + join(violations)), violations_(std::move(violations)) {}

ModelError::ModelError(const std::string& what, std::vector<std::string> violations)
    : std::runtime_error(what), violations_(std::move(violations)) {}

Generator::Generator(std::size_t n_states, std::vector<Rate> rates) {
    if (n_states == 0) {
        throw std::invalid_argument("generator needs at least one state");
    }
    for (const Rate& r : rates) {
        if (r.from >= n_states || r.to >= n_states) {
            throw std::out_of_range("rate " + edge(r.from, r.to) + " refers to a state >= " +
                                    std::to_string(n_states));
        }
        if (r.from == r.to) {
            throw std::invalid_argument("diagonal rate at " + edge(r.from, r.to) +
                                        " (diagonal entries are implied)");
        }
    }
    std::stable_sort(rates.begin(), rates.end(), [](const Rate& a, const Rate& b) {
        return a.from != b.from ? a.from < b.from : a.to < b.to;
    });

    row_begin_.assign(n_states + 1, 0);
    for (std::size_t i = 0; i < rates.size(); ++i) {
        const Rate& r = rates[i];
        if (!targets_.empty() && i > 0 && rates[i - 1].from == r.from && rates[i - 1].to == r.to) {
            values_.back() += r.value;  // duplicate edge: rates add
            continue;
        }
        targets_.push_back(r.to);
        values_.push_back(r.value);
        ++row_begin_[r.from + 1];
    }
    for (std::size_t x = 0; x < n_states; ++x) {
        row_begin_[x + 1] += row_begin_[x];
    }
    exit_.resize(n_states);
    for (std::size_t x = 0; x < n_states; ++x) {
        exit_[x] = recompute_exit_rate(x);
    }
}

Generator Generator::with_cached_exit_rates(std::size_t n_states, std::vector<Rate> rates,
                                            std::vector<double> exit_rates) {
    if (exit_rates.size() != n_states) {
        throw std::invalid_argument("exit rate cache has wrong length");
    }
    Generator g(n_states, std::move(rates));
    g.exit_ = std::move(exit_rates);
    return g;
}

void Generator::check_state(StateIndex x) const {
    if (x >= size()) {
        throw std::out_of_range("state index " + std::to_string(x) + " out of range for " +
                                std::to_string(size()) + " states");
    }
}

double Generator::exit_rate(StateIndex x) const {
    check_state(x);
    return exit_[x];
}

std::span<const StateIndex> Generator::targets(StateIndex x) const {
    check_state(x);
    return {targets_.data() + row_begin_[x], row_begin_[x + 1] - row_begin_[x]};
}

std::span<const double> Generator::rates(StateIndex x) const {
    check_state(x);
    return {values_.data() + row_begin_[x], row_begin_[x + 1] - row_begin_[x]};
}

double Generator::rate(StateIndex from, StateIndex to) const {
    check_state(to);
    const auto t = targets(from);
    const auto it = std::lower_bound(t.begin(), t.end(), to);
    if (it == t.end() || *it != to) {
        return 0.0;
    }
    return values_[row_begin_[from] + static_cast<std::size_t>(it - t.begin())];
}

double Generator::recompute_exit_rate(StateIndex x) const {
    double sum = 0.0;
    for (std::size_t k = row_begin_[x]; k < row_begin_[x + 1]; ++k) {
        sum += values_[k];
    }
    return sum;
}

std::vector<Rate> Generator::triplets() const {
    std::vector<Rate> out;
    out.reserve(targets_.size());
    for (std::size_t x = 0; x < size(); ++x) {
        for (std::size_t k = row_begin_[x]; k < row_begin_[x + 1]; ++k) {
            out.push_back({x, targets_[k], values_[k]});
        }
    }
    return out;
}

std::vector<std::string> validate(const Generator& gen) {
    std::vector<std::string> out;
    if (gen.size() == 0) {
        out.emplace_back("generator has no states");
        return out;
    }
    for (StateIndex x = 0; x < gen.size(); ++x) {
        const auto t = gen.targets(x);
        const auto v = gen.rates(x);
        for (std::size_t k = 0; k < t.size(); ++k) {
            if (!std::isfinite(v[k])) {
                out.push_back("non-finite rate at " + edge(x, t[k]));
            } else if (v[k] < 0.0) {
                out.push_back("negative rate at " + edge(x, t[k]));
            }
        }
        const double cached = gen.exit_rate(x);
        if (!std::isfinite(cached)) {
            out.push_back("non-finite exit_rate at " + std::to_string(x));
        } else if (cached != gen.recompute_exit_rate(x)) {
            out.push_back("exit_rate mismatch at " + std::to_string(x));
        }
    }
    return out;
}

double apply_K(const Generator& gen, std::span<const double> f, StateIndex x) {
    if (f.size() != gen.size()) {
        throw std::invalid_argument("function length does not match the state count");
    }
    const auto t = gen.targets(x);
    const auto v = gen.rates(x);
    double sum = 0.0;
    for (std::size_t k = 0; k < t.size(); ++k) {
        sum += v[k] * f[t[k]];
    }
    return sum;
}

double generator_apply(const Generator& gen, std::span<const double> f, StateIndex x) {
    return apply_K(gen, f, x) - gen.exit_rate(x) * f[x];
}

Generator poissonize(const Eigen::MatrixXd& transition, double lambda) {
    if (!(lambda > 0.0) || !std::isfinite(lambda)) {
        throw std::invalid_argument("poissonize: intensity must be positive and finite");
    }
    if (transition.rows() != transition.cols() || transition.rows() == 0) {
        throw std::invalid_argument("poissonize: transition matrix must be square and nonempty");
    }
    const auto n = static_cast<std::size_t>(transition.rows());
    std::vector<Rate> rates;
    for (std::size_t x = 0; x < n; ++x) {
        double row_sum = 0.0;
        for (std::size_t y = 0; y < n; ++y) {
            const double p = transition(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(y));
            if (!(p >= 0.0) || !std::isfinite(p)) {
                throw std::invalid_argument("poissonize: entry " + edge(x, y) +
                                            " is not a probability");
            }
            row_sum += p;
        }
        if (std::abs(row_sum - 1.0) > 1e-12) {
            std::ostringstream os;
            os.precision(17);
            os << "poissonize: row " << x << " sums to " << row_sum << ", not 1";
            throw std::invalid_argument(os.str());
        }
        for (std::size_t y = 0; y < n; ++y) {
            const double p = transition(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(y));
            if (y != x && p > 0.0) {
                rates.push_back({x, y, lambda * p});
            }
        }
    }
    return Generator(n, std::move(rates));
}

}  // namespace stopchain
