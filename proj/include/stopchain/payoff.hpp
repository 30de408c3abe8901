#pragma once

#include <span>
#include <string>
#include <vector>

#include "stopchain/generator.hpp"

namespace stopchain {

/// Payoff phi(x) >= 0 collected on stopping, discounted at rate r per unit time.
struct PayoffVector {
    std::vector<double> values;
    double discount_rate = 0.0;

    std::span<const double> view() const noexcept { return values; }
};

/// Violations of the payoff invariants for a chain with n_states states.
/// A zero discount rate is reported unless allow_zero_discount is set.
std::vector<std::string> validate(const PayoffVector& payoff, std::size_t n_states,
                                  bool allow_zero_discount = false);

/// Throws ModelError listing every generator and payoff violation.
void require_valid(const Generator& gen, const PayoffVector& payoff,
                   bool allow_zero_discount = false);

}  // namespace stopchain
