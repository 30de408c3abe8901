#include <algorithm>
#include <cmath>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "stopchain/elimination.hpp"
#include "stopchain/errors.hpp"
#include "stopchain/intervention.hpp"
#include "support/oracles.hpp"

using namespace stopchain;
using namespace stopchain::intervention;

namespace {

InterventionModel reference_model(double lambda, std::size_t points) {
    InterventionModel m{0.02, 0.3, 0.06, 1.0, lambda, {}};
    m.grid = default_grid(m.b, m.r, m.strike, m.lambda, points);
    return m;
}

InterventionModel small_model() {
    InterventionModel m{0.02, 0.3, 0.06, 1.0, 2.0, {0.2, 110.0, 60}};
    return m;
}

bool mentions(const std::vector<std::string>& v, const std::string& needle) {
    return std::any_of(v.begin(), v.end(),
                       [&](const std::string& s) { return s.find(needle) != std::string::npos; });
}

}  // namespace

// mpmath, 40 digits
TEST(InterventionOracle, SupportFormulasMatchFrozenDigits) {
    EXPECT_NEAR(static_cast<double>(oracles::positive_root(0.02, 0.3, 0.06)),
                1.465419907023997228830894557657348577929, 1e-15);
    EXPECT_NEAR(oracles::classical_call_threshold(0.02, 0.3, 0.06, 1.0), 3.14859739540199688243,
                1e-14);
    EXPECT_NEAR(oracles::poisson_call_threshold(0.02, 0.3, 0.06, 1.0, 2.0),
                2.70195015420727628762, 1e-12);
    EXPECT_NEAR(oracles::poisson_call_threshold(0.02, 0.3, 0.06, 1.0, 10.0),
                2.94188980154705981430, 1e-12);
    EXPECT_NEAR(oracles::poisson_call_threshold(0.02, 0.3, 0.06, 1.0, 100.0),
                3.08221776699888738799, 1e-12);
    EXPECT_NEAR(oracles::poisson_call_threshold(0.02, 0.3, 0.06, 1.0, 1e4),
                3.14192216629447262531, 1e-11);
}

TEST(Intervention, GbmRatesMatchDriftAndVariance) {
    InterventionModel m{0.0, 0.2, 0.05, 1.0, 0.05, {0.1, 0.1 * std::exp(0.05 * 100), 101}};
    ASSERT_TRUE(validate(m).empty());
    const LogGrid grid = make_grid(m.grid);
    EXPECT_NEAR(grid.h, 0.05, 1e-15);
    const Generator g = discretize_gbm(m);
    EXPECT_NEAR(g.rate(10, 11), 7.8, 1e-12);
    EXPECT_NEAR(g.rate(10, 9), 8.2, 1e-12);
    EXPECT_TRUE(g.is_absorbing(0));
    EXPECT_TRUE(g.is_absorbing(100));
    // log-drift and log-variance of one unit of time
    const double h = grid.h;
    EXPECT_NEAR((g.rate(10, 11) - g.rate(10, 9)) * h, -0.02, 1e-12);
    EXPECT_NEAR((g.rate(10, 11) + g.rate(10, 9)) * h * h, 0.04, 1e-12);
}

TEST(Intervention, DefaultGridAndBound) {
    const InterventionModel m = reference_model(2.0, 2000);
    EXPECT_NEAR(m.upper_bound(), 51.0, 1e-12);
    EXPECT_NEAR(m.grid.x_min, 0.01, 1e-15);
    EXPECT_NEAR(m.grid.x_max, 204.0, 1e-12);
    EXPECT_TRUE(validate(m).empty());
}

TEST(Intervention, Validation) {
    InterventionModel m = reference_model(2.0, 2000);
    m.r = 0.02;
    EXPECT_TRUE(mentions(validate(m), "requires r > b"));
    EXPECT_THROW(discretize_gbm(m), ModelError);

    InterventionModel narrow = reference_model(2.0, 2000);
    narrow.grid.x_max = 60.0;
    EXPECT_TRUE(mentions(validate(narrow), "twice the bound"));

    InterventionModel coarse{0.5, 0.05, 0.6, 1.0, 1.0, {}};
    coarse.grid = default_grid(coarse.b, coarse.r, coarse.strike, coarse.lambda, 200);
    EXPECT_TRUE(mentions(validate(coarse), "grid too coarse"));

    InterventionModel above = reference_model(2.0, 2000);
    above.grid.x_min = 1.5;
    EXPECT_TRUE(mentions(validate(above), "below the strike"));
}

TEST(Intervention, ResolventOfConstant) {
    const InterventionModel m = small_model();
    const Generator g = discretize_gbm(m);
    const std::vector<double> ones(g.size(), 3.0);
    const auto r = resolvent(g, 2.5, ones);
    for (double v : r) {
        EXPECT_NEAR(v, 1.2, 1e-13);
    }
}

TEST(Intervention, ExcessMatchesPoissonizedChain) {
    const InterventionModel m = small_model();
    const InterventionChain chain(m);
    const Generator p = poissonized_generator(m);
    PayoffVector phi{{chain.payoff().begin(), chain.payoff().end()}, m.r};
    const ChainModel dense(p, phi);
    std::vector<double> u(chain.size());
    for (std::size_t i = 0; i < u.size(); ++i) {
        u[i] = std::sin(0.3 * static_cast<double>(i)) + 2.0;
    }
    const auto a = chain.excess(u);
    const auto b = dense.excess(u);
    for (std::size_t i = 0; i < u.size(); ++i) {
        EXPECT_NEAR(a[i], b[i], 1e-10) << i;
    }
}

TEST(Intervention, StructuredSolveMatchesDenseChain) {
    const InterventionModel m = small_model();
    const ThresholdReport rep = intervention_value(m);
    const Generator p = poissonized_generator(m);
    const PayoffVector phi{rep.payoff, m.r};
    const SolverReport dense = run(p, phi);
    EXPECT_EQ(rep.stopping_set, dense.final_stopping_set);
    EXPECT_EQ(rep.solver.iterations, dense.iterations);
    for (std::size_t i = 0; i < rep.value.size(); ++i) {
        EXPECT_NEAR(rep.value[i], dense.final_value[i], 1e-9 * std::max(1.0, rep.value[i])) << i;
    }
}

TEST(Intervention, ThresholdOnReferenceGrid) {
    const InterventionModel m = reference_model(2.0, 2000);
    const ThresholdReport rep = intervention_value(m);
    ASSERT_TRUE(rep.solver.converged);
    ASSERT_TRUE(rep.threshold_found);
    EXPECT_GT(rep.x_star, m.strike);
    EXPECT_LE(rep.x_star, m.upper_bound() + rep.h);
    EXPECT_EQ(rep.x_star_index, 1128u);
    EXPECT_NEAR(rep.x_star, 2.7030080437550343, 1e-12);
    EXPECT_LE(std::abs(rep.x_star - oracles::poisson_call_threshold(0.02, 0.3, 0.06, 1.0, 2.0)),
              rep.cell_width);
    EXPECT_TRUE(rep.nested_up_sets);
    EXPECT_TRUE(std::is_sorted(rep.stage_thresholds.begin(), rep.stage_thresholds.end()));
    EXPECT_EQ(rep.stage_thresholds.back(), rep.x_star);
    for (std::size_t i = 0; i < rep.value.size(); ++i) {
        EXPECT_GE(rep.value[i], rep.payoff[i]);
    }
    EXPECT_EQ(rep.value.front(), 0.0);
}

TEST(Intervention, EtaDiagnostic) {
    const InterventionModel m = reference_model(2.0, 2000);
    const EtaDiagnostic d = monotonicity_check_eta(m);
    EXPECT_TRUE(d.positive_below_strike);
    EXPECT_TRUE(d.non_increasing_above_strike) << d.max_increase_above_strike;
    ASSERT_TRUE(d.sign_change_found);
    EXPECT_GT(d.sign_change_x, m.strike);
    EXPECT_LE(d.sign_change_x, m.upper_bound());
    EXPECT_LT(d.eta_at_bound, 0.0);
    const ThresholdReport rep = intervention_value(m);
    EXPECT_EQ(d.sign_change_x, rep.stage_thresholds.front());
}

TEST(Intervention, ThresholdsIncreaseWithLambda) {
    double previous = 1.0;
    for (double lambda : {2.0, 10.0, 100.0}) {
        const ThresholdReport rep = intervention_value(reference_model(lambda, 3000));
        const double oracle = oracles::poisson_call_threshold(0.02, 0.3, 0.06, 1.0, lambda);
        EXPECT_LE(std::abs(rep.x_star - oracle), 2.0 * rep.cell_width) << lambda;
        EXPECT_GT(rep.x_star, previous);
        previous = rep.x_star;
    }
}

TEST(Intervention, LargeLambdaApproachesClassical) {
    const ThresholdReport rep = intervention_value(reference_model(1e4, 4000));
    const double classical = oracles::classical_call_threshold(0.02, 0.3, 0.06, 1.0);
    EXPECT_LE(std::abs(rep.x_star - classical), 2.0 * rep.cell_width);
}

TEST(Intervention, RefinementWithinOneCell) {
    const std::vector<std::size_t> res{2000, 4000};
    const RefinementStudy study = threshold_refinement(reference_model(2.0, 2000), res);
    ASSERT_EQ(study.x_star.size(), 2u);
    EXPECT_LE(std::abs(study.x_star[1] - study.x_star[0]), study.cell_width[0]);
    EXPECT_NEAR(study.cell_width[1] / study.cell_width[0], 0.5, 0.01);
}

TEST(Intervention, ReportJsonAndCsv) {
    const InterventionModel m = small_model();
    const ThresholdReport rep = intervention_value(m);
    const auto doc = nlohmann::json::parse(threshold_report_json(m, rep));
    EXPECT_EQ(doc["x_star"].get<double>(), rep.x_star);
    EXPECT_TRUE(doc["bound_check"]["satisfied"].get<bool>());
    EXPECT_EQ(doc["grid_resolutions"][0].get<std::size_t>(), 60u);
    const std::string csv = value_curve_csv(rep);
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "x,v,payoff,in_stopping_set");
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 61);
}

TEST(Intervention, MonteCarloMatchesGridValue) {
    const InterventionModel m = reference_model(2.0, 2000);
    const ThresholdReport rep = intervention_value(m);
    std::vector<double> starts;
    std::vector<double> expected;
    for (double target : {0.8, 1.5, 2.5}) {
        const auto it = std::lower_bound(rep.x.begin(), rep.x.end(), target);
        starts.push_back(*it);
        expected.push_back(rep.value[static_cast<std::size_t>(it - rep.x.begin())]);
    }
    const OracleResult mc = monte_carlo_threshold_value(m, rep.x_star, starts, 20000, 3);
    for (std::size_t j = 0; j < starts.size(); ++j) {
        EXPECT_LE(std::abs(mc.value[j] - expected[j]), 4.0 * mc.standard_error[j] + 1e-9)
            << starts[j];
    }
    const OracleResult ref = intervention::reference::monte_carlo_threshold_value(m, rep.x_star, starts, 20000, 3);
    EXPECT_EQ(mc.value, ref.value);
}

TEST(Intervention, MonteCarloStopsImmediatelyAboveThreshold) {
    const InterventionModel m = reference_model(2.0, 2000);
    const std::vector<double> starts{5.0};
    const OracleResult mc = monte_carlo_threshold_value(m, 2.7, starts, 10, 0);
    EXPECT_EQ(mc.value[0], 4.0);
    EXPECT_EQ(mc.standard_error[0], 0.0);
}
