#include "stopchain/payoff.hpp"

#include <cmath>

#include "stopchain/errors.hpp"

namespace stopchain {

std::vector<std::string> validate(const PayoffVector& payoff, std::size_t n_states,
                                  bool allow_zero_discount) {
    std::vector<std::string> out;
    if (payoff.values.size() != n_states) {
        out.push_back("payoff has " + std::to_string(payoff.values.size()) + " values for " +
                      std::to_string(n_states) + " states");
    }
    for (std::size_t x = 0; x < payoff.values.size(); ++x) {
        const double v = payoff.values[x];
        if (!std::isfinite(v)) {
            out.push_back("non-finite payoff at " + std::to_string(x));
        } else if (v < 0.0) {
            out.push_back("negative payoff at " + std::to_string(x));
        }
    }
    const double r = payoff.discount_rate;
    if (!std::isfinite(r) || r < 0.0 || (r == 0.0 && !allow_zero_discount)) {
        out.emplace_back("discount rate r must be > 0 (got " + std::to_string(r) + ")");
    }
    return out;
}

void require_valid(const Generator& gen, const PayoffVector& payoff, bool allow_zero_discount) {
    auto violations = validate(gen);
    for (auto& v : validate(payoff, gen.size(), allow_zero_discount)) {
        violations.push_back(std::move(v));
    }
    if (!violations.empty()) {
        throw ModelError(std::move(violations));
    }
}

}  // namespace stopchain
