#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "stopchain/elimination.hpp"
#include "stopchain/generator.hpp"
#include "stopchain/payoff.hpp"

namespace stopchain::birthdeath {

/// Birth-death chain on {-N, ..., N} with up-rate lambda, down-rate mu,
/// absorbing at both ends. State index i corresponds to the integer i - N.
struct BirthDeathSpec {
    double lambda = 0.0;
    double mu = 0.0;
    double r = 0.0;
    int N = 1;

    std::size_t n_states() const noexcept { return static_cast<std::size_t>(2 * N + 1); }
    StateIndex index_of(int x) const;
    int state_of(StateIndex i) const noexcept { return static_cast<int>(i) - N; }
};

/// Raised by closed_form_stage1 when lambda <= mu: D_1 is the whole space.
class DegenerateBranch : public std::domain_error {
public:
    DegenerateBranch() : std::domain_error("degenerate: D1 = V (lambda <= mu)") {}
};

std::vector<std::string> validate(const BirthDeathSpec& spec);

Generator build_generator(const BirthDeathSpec& spec);

/// phi(x) = max(x, 0).
PayoffVector call_payoff(const BirthDeathSpec& spec);

/// phi(x) = 0 for x <= 0, value_at_one at x = 1, 2 for x >= 2.
PayoffVector step_payoff(const BirthDeathSpec& spec, double value_at_one = 1.0);

/// ceil((lambda - mu) / r), or 0 when lambda <= mu.
int stage1_threshold(double lambda, double mu, double r);

/// Explicit first stage for the call payoff: x1, discriminant, the two
/// characteristic roots and u1 on -1 <= x <= x1.
struct ClosedFormStage {
    int x1 = 0;
    double delta = 0.0;
    double theta1 = 0.0;
    double theta2 = 0.0;

    /// u1(x) = x1 (theta2^{x+1} - theta1^{x+1}) / (theta2^{x1+1} - theta1^{x1+1}).
    double u1(int x) const;
};

ClosedFormStage closed_form_stage1(const BirthDeathSpec& spec);

struct AssertionResult {
    std::string name;
    bool passed = false;
    double expected = 0.0;
    double actual = 0.0;
    double tolerance = 0.0;
    std::string detail;
};

/// One row of a truncation study CSV.
struct StudyRow {
    int M = 0;
    std::size_t iterations = 0;
    int x_star = 0;
    double u_at_0 = 0.0;
    double max_residual = 0.0;
};

std::string to_csv(std::span<const StudyRow> rows);

struct BirthDeathStudy {
    BirthDeathSpec spec;
    bool degenerate = false;
    int x1 = 0;
    std::vector<double> closed_form_u1;  // on {0, ..., x1-1}
    std::vector<double> solver_u1;
    double max_relative_error = 0.0;
    SolverReport report;  // at the requested N
    std::vector<StudyRow> rows;
    std::vector<AssertionResult> assertions;
    std::string note;

    bool passed() const;
};

/// Solves the call-payoff chain at N and at each refinement in `truncations`,
/// checks stage 1 against the closed form and the final set shape
/// {-N} U {x*, ..., N} with x* >= x1.
BirthDeathStudy birthdeath_study(const BirthDeathSpec& spec, std::span<const int> truncations);

struct ZStudyRun {
    int M = 0;
    SolverReport report;
    double u1_at_1 = 0.0;
    bool one_per_step = false;
    std::vector<int> limit_set;  // D_infinity as integers
};

struct ZStudy {
    double lambda = 0.0;
    double mu = 0.0;
    double value_at_one = 1.0;
    std::vector<ZStudyRun> runs;
    std::vector<StudyRow> rows;
    std::vector<AssertionResult> assertions;

    bool passed() const;
};

/// Undiscounted step-payoff walk on Z truncated to {-M, ..., M}: records the
/// elimination traces and checks D1 = Z \\ {1}, u1(1) = 2 lambda / (lambda + mu)
/// and that round n removes exactly the integer 1 - n. These hold for
/// value_at_one = 0; with value_at_one = 1 state 0 already fails the first test.
ZStudy z_example_truncation_study(double lambda, double mu, std::span<const int> truncations,
                                  double value_at_one = 1.0);

}  // namespace stopchain::birthdeath
