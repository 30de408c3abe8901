// Acceptance gate: one PASS/FAIL line per criterion.
//
// A criterion whose statement is contradicted by the model it describes is
// printed as FAIL with the reason, and counts as documented only when the
// contradiction itself is verified in the same run. Any other FAIL makes the
// process exit nonzero.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "stopchain/birthdeath.hpp"
#include "stopchain/elimination.hpp"
#include "stopchain/intervention.hpp"
#include "stopchain/oracle.hpp"
#include "support/oracles.hpp"

using namespace stopchain;
namespace bd = stopchain::birthdeath;
namespace iv = stopchain::intervention;

namespace {

struct Outcome {
    bool passed = false;
    std::string detail;
    // Set when a failure is explained by a verified defect in the criterion.
    bool documented = false;
};

struct Criterion {
    std::string name;
    double limit_seconds;
    std::function<Outcome()> check;
};

double sup_diff(std::span<const double> a, std::span<const double> b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        d = std::max(d, std::abs(a[i] - b[i]));
    }
    return d;
}

double sup_norm(std::span<const double> v) {
    double m = 0.0;
    for (double x : v) {
        m = std::max(m, std::abs(x));
    }
    return m;
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

constexpr std::uint64_t kInstances = 250;

Outcome golden_closed_form() {
    Outcome o{true, ""};
    double worst = 0.0;
    for (auto [lambda, mu, r] : {std::tuple{2.0, 1.0, 0.5}, {3.0, 1.0, 1.0}, {1.5, 1.0, 0.25}}) {
        const bd::BirthDeathSpec spec{lambda, mu, r, 10};
        SolverConfig cfg;
        cfg.keep_history = true;
        const SolverReport rep = run(bd::build_generator(spec), bd::call_payoff(spec), cfg);
        const bd::ClosedFormStage cf = bd::closed_form_stage1(spec);
        const int x1 = static_cast<int>(std::ceil((lambda - mu) / r));
        const StateSet& d1 = rep.history.at(1).stopping_set;
        int first = spec.N + 1;
        for (int x = 1; x <= spec.N; ++x) {
            if (d1.contains(spec.index_of(x))) {
                first = x;
                break;
            }
        }
        if (first != x1 || cf.x1 != x1) {
            o.passed = false;
        }
        for (int x = 0; x < x1; ++x) {
            const double exact = cf.u1(x);
            worst = std::max(worst, std::abs(rep.history.at(1).value[spec.index_of(x)] - exact) /
                                        std::abs(exact));
        }
    }
    o.passed = o.passed && worst <= 1e-10;
    o.detail = "max relative error " + fmt(worst) + " (tol 1e-10), x1 exact";
    return o;
}

Outcome degenerate_branch() {
    Outcome o{true, ""};
    bool explained = true;
    std::ostringstream os;
    for (double lambda : {0.0, 0.5, 1.0}) {
        const bd::BirthDeathSpec spec{lambda, 1.0, 0.5, 10};
        SolverConfig cfg;
        cfg.keep_history = true;
        const SolverReport rep = run(bd::build_generator(spec), bd::call_payoff(spec), cfg);
        const StateSet& d1 = rep.history.at(1).stopping_set;
        const bool claim = d1.count() == spec.n_states() && rep.iterations == 1;
        o.passed = o.passed && claim;
        os << "lambda=" << lambda << ": |D1|=" << d1.count() << "/" << spec.n_states()
           << ", iterations=" << rep.iterations << "; ";
        if (lambda > 0.0) {
            StateSet all_but_zero(spec.n_states(), true);
            all_but_zero.erase(spec.index_of(0));
            explained = explained && d1 == all_but_zero;
        } else {
            explained = explained && claim;
        }
    }
    o.documented = !o.passed && explained;
    o.detail = os.str();
    if (o.documented) {
        o.detail += "L[phi](0) - r phi(0) = lambda > 0 removes state 0, so D1 = V only at lambda = 0";
    }
    return o;
}

Outcome oracle_equivalence() {
    double worst_en = 0.0;
    double worst_vi = 0.0;
    std::size_t unique = 0;
    std::size_t set_mismatch = 0;
    for (std::uint64_t seed = 1; seed <= kInstances; ++seed) {
        const auto inst = oracles::random_instance(seed);
        const SolverReport rep = run(inst.generator, inst.payoff);
        const OracleResult en = enumerate_sets(inst.generator, inst.payoff);
        const OracleResult vi = value_iteration(inst.generator, inst.payoff, 1e-11);
        worst_en = std::max(worst_en, sup_diff(rep.final_value, en.value));
        worst_vi = std::max(worst_vi, sup_diff(rep.final_value, vi.value));
        if (en.optimal_sets.size() == 1) {
            ++unique;
            set_mismatch += en.optimal_sets[0] == rep.final_stopping_set ? 0 : 1;
        }
    }
    Outcome o;
    o.passed = worst_en <= 1e-8 && worst_vi <= 1e-8 && set_mismatch == 0;
    o.detail = std::to_string(kInstances) + " chains; sup|u - enum| " + fmt(worst_en) +
               ", sup|u - VI| " + fmt(worst_vi) + " (tol 1e-8); D matches argmax on " +
               std::to_string(unique - set_mismatch) + "/" + std::to_string(unique) +
               " unique cases";
    return o;
}

Outcome invariants() {
    std::size_t violations = 0;
    double worst_drop = 0.0;
    double worst_residual = 0.0;
    std::size_t max_over = 0;
    for (std::uint64_t seed = 1; seed <= kInstances; ++seed) {
        const auto inst = oracles::random_instance(seed);
        SolverConfig cfg;
        cfg.keep_history = true;
        const SolverReport rep = run(inst.generator, inst.payoff, cfg);
        const std::size_t n = inst.generator.size();
        if (!rep.converged || rep.iterations > n + 1) {
            ++violations;
        }
        max_over = std::max(max_over, rep.iterations);
        for (std::size_t k = 1; k < rep.history.size(); ++k) {
            const auto& prev = rep.history[k - 1];
            const auto& cur = rep.history[k];
            if (!cur.stopping_set.is_subset_of(prev.stopping_set)) {
                ++violations;
            }
            for (std::size_t x = 0; x < n; ++x) {
                worst_drop = std::max(worst_drop, prev.value[x] - cur.value[x]);
            }
        }
        const ChainModel model(inst.generator, inst.payoff);
        const auto ex = model.excess(rep.final_value);
        const double scale = std::max(sup_norm(rep.final_value), 1e-300);
        worst_residual = std::max(worst_residual, *std::max_element(ex.begin(), ex.end()) / scale);
    }
    Outcome o;
    o.passed = violations == 0 && worst_drop <= 1e-9 && worst_residual <= 1e-9;
    o.detail = "nesting/termination violations " + std::to_string(violations) +
               ", max u_n - u_{n+1} " + fmt(worst_drop) + ", max excess/|u| " +
               fmt(worst_residual) + ", max iterations " + std::to_string(max_over);
    return o;
}

Outcome z_example() {
    const std::vector<int> ms{20};
    Outcome o{true, ""};
    bool explained = true;
    std::ostringstream os;
    for (auto [lambda, mu] : {std::pair{1.0, 1.0}, {3.0, 1.0}, {2.0, 0.5}}) {
        const bd::ZStudy printed = bd::z_example_truncation_study(lambda, mu, ms, 1.0);
        const bd::ZStudy zero = bd::z_example_truncation_study(lambda, mu, ms, 0.0);
        o.passed = o.passed && printed.passed();
        const auto& first = printed.runs[0].report.trace.at(0).eliminated;
        os << "(" << lambda << "," << mu << "): u1(1)=" << fmt(printed.runs[0].u1_at_1)
           << " vs " << fmt(2.0 * lambda / (lambda + mu)) << ", round 1 removes "
           << first.size() << " state(s); ";
        // phi(1) = 1 gives L[phi](0) = lambda > 0, so 0 leaves at round 1
        // and 1 leaves with it once lambda > mu.
        const bd::BirthDeathSpec spec{lambda, mu, 0.0, 20};
        std::vector<std::size_t> expected_first{spec.index_of(0)};
        if (lambda > mu) {
            expected_first.push_back(spec.index_of(1));
        }
        explained = explained && first == expected_first && zero.passed();
    }
    o.documented = !o.passed && explained;
    o.detail = "phi(1)=1 as printed: " + os.str();
    if (o.documented) {
        o.detail += "with phi(1)=0 every claim holds (D1 = Z\\{1}, u1(1) = 2 lambda/(lambda+mu), "
                    "round n removes 1-n)";
    }
    return o;
}

iv::InterventionModel section_model(double lambda, std::size_t points) {
    iv::InterventionModel m{0.02, 0.3, 0.06, 1.0, lambda, {}};
    m.grid = iv::default_grid(m.b, m.r, m.strike, m.lambda, points);
    return m;
}

Outcome threshold_bounds() {
    const iv::InterventionModel m = section_model(2.0, 2000);
    const iv::ThresholdReport rep = iv::intervention_value(m);
    const iv::EtaDiagnostic eta = iv::monotonicity_check_eta(m);
    const double upper = m.upper_bound() + rep.h;
    Outcome o;
    o.passed = rep.solver.converged && rep.threshold_found && m.strike < rep.x_star &&
               rep.x_star <= upper && eta.positive_below_strike && eta.non_increasing_above_strike;
    o.detail = "x_star " + fmt(rep.x_star) + " in (" + fmt(m.strike) + ", " + fmt(upper) +
               "]; eta > 0 below K: " + (eta.positive_below_strike ? "yes" : "no") +
               ", non-increasing above K: " + (eta.non_increasing_above_strike ? "yes" : "no") +
               " (max rise " + fmt(eta.max_increase_above_strike) + ")";
    return o;
}

Outcome large_lambda() {
    const iv::InterventionModel m = section_model(1e4, 4000);
    const iv::ThresholdReport rep = iv::intervention_value(m);
    const double classical = oracles::classical_call_threshold(m.b, m.sigma, m.r, m.strike);
    const double gap = std::abs(rep.x_star - classical);
    Outcome o;
    o.passed = rep.solver.converged && gap <= 2.0 * rep.cell_width;
    o.detail = "x_star " + fmt(rep.x_star) + " vs beta/(beta-1) K = " + fmt(classical) +
               ", gap " + fmt(gap / rep.cell_width) + " cells (limit 2), 4000-point grid";
    return o;
}

Outcome monte_carlo() {
    constexpr std::size_t kPaths = 100'000;
    constexpr std::uint64_t kSeed = 0;
    std::ostringstream os;
    bool ok = true;
    double worst = 0.0;

    const bd::BirthDeathSpec spec{2.0, 1.0, 0.5, 10};
    const Generator g = bd::build_generator(spec);
    const PayoffVector phi = bd::call_payoff(spec);
    const SolverReport rep = run(g, phi);
    const std::vector<StateIndex> starts{spec.index_of(-3), spec.index_of(0), spec.index_of(2)};
    const OracleResult mc = monte_carlo_value(g, phi, rep.final_stopping_set, starts, kPaths, kSeed);
    const OracleResult again = monte_carlo_value(g, phi, rep.final_stopping_set, starts, kPaths, kSeed);
    ok = ok && mc.value == again.value;
    for (std::size_t j = 0; j < starts.size(); ++j) {
        const double z = std::abs(mc.value[j] - rep.final_value[starts[j]]) / mc.standard_error[j];
        worst = std::max(worst, z);
        ok = ok && std::abs(mc.value[j] - rep.final_value[starts[j]]) <=
                       3.0 * mc.standard_error[j] + mc.truncation_bias;
    }

    const iv::InterventionModel m = section_model(2.0, 2000);
    const iv::ThresholdReport ivr = iv::intervention_value(m);
    std::vector<double> prices;
    std::vector<double> grid_values;
    for (double target : {0.8, 1.5, 2.5}) {
        const auto it = std::lower_bound(ivr.x.begin(), ivr.x.end(), target);
        prices.push_back(*it);
        grid_values.push_back(ivr.value[static_cast<std::size_t>(it - ivr.x.begin())]);
    }
    const OracleResult mc5 = iv::monte_carlo_threshold_value(m, ivr.x_star, prices, kPaths, kSeed);
    const OracleResult mc5b = iv::monte_carlo_threshold_value(m, ivr.x_star, prices, kPaths, kSeed);
    ok = ok && mc5.value == mc5b.value;
    for (std::size_t j = 0; j < prices.size(); ++j) {
        const double z = std::abs(mc5.value[j] - grid_values[j]) / mc5.standard_error[j];
        worst = std::max(worst, z);
        ok = ok && std::abs(mc5.value[j] - grid_values[j]) <=
                       3.0 * mc5.standard_error[j] + mc5.truncation_bias;
    }
    Outcome o;
    o.passed = ok;
    os << "6 starts, 1e5 paths, seed 0: max |MC - solver| = " << fmt(worst)
       << " SE (limit 3), reruns identical";
    o.detail = os.str();
    return o;
}

}  // namespace

int main() {
    const std::vector<Criterion> criteria{
        {"golden closed form (birth-death N=10)", 1.0, golden_closed_form},
        {"degenerate branch", 1.0, degenerate_branch},
        {"oracle equivalence", 120.0, oracle_equivalence},
        {"monotonicity and termination invariants", 120.0, invariants},
        {"integer-line chain", 60.0, z_example},
        {"threshold bounds", 30.0, threshold_bounds},
        {"large-lambda limit", 60.0, large_lambda},
        {"Monte Carlo consistency", 120.0, monte_carlo},
    };
    int unexpected = 0;
    int documented = 0;
    for (const Criterion& c : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.check();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const bool in_time = secs < c.limit_seconds;
        const bool pass = o.passed && in_time;
        const bool known = !pass && o.documented && in_time;
        std::printf("%s %s [%.2fs, limit %.0fs]%s: %s\n", pass ? "PASS" : "FAIL", c.name.c_str(),
                    secs, c.limit_seconds, known ? " [documented deviation]" : "",
                    o.detail.c_str());
        if (!pass) {
            (known ? documented : unexpected) += 1;
        }
    }
    std::printf("%d criteria, %d documented deviation(s), %d unexpected failure(s)\n",
                static_cast<int>(criteria.size()), documented, unexpected);
    return unexpected == 0 ? 0 : 1;
}
