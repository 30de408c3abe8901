#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace stopchain {

/// A model (generator, payoff or parameters) breaks one of its invariants.
class ModelError : public std::runtime_error {
public:
    explicit ModelError(std::vector<std::string> violations);
    ModelError(const std::string& what, std::vector<std::string> violations);

    const std::vector<std::string>& violations() const noexcept { return violations_; }

private:
    std::vector<std::string> violations_;
};

/// A numerical step failed (singular system, residual above tolerance, ...).
class SolverError : public std::runtime_error {
public:
    explicit SolverError(const std::string& what, double residual = 0.0)
        : std::runtime_error(what), residual_(residual) {}

    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

}  // namespace stopchain
