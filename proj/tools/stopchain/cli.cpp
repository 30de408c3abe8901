#include "stopchain/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <omp.h>

#include "stopchain/birthdeath.hpp"
#include "stopchain/elimination.hpp"
#include "stopchain/errors.hpp"
#include "stopchain/intervention.hpp"
#include "stopchain/io.hpp"
#include "stopchain/oracle.hpp"

namespace stopchain::cli {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr double kUnset = std::numeric_limits<double>::quiet_NaN();

struct Options {
    std::string model;
    std::string out;
    std::string csv;
    std::string report;
    std::string emit_model;
    std::uint64_t seed = 0;
    bool cross_check = false;
    double tol = 1e-6;
    double test_tol = 0.0;
    std::size_t paths = 0;

    double lambda = kUnset;
    double mu = kUnset;
    double r = kUnset;
    int N = 10;
    std::vector<int> truncations;
    std::vector<int> Ms{20};
    double phi1 = 1.0;

    double b = kUnset;
    double sigma = kUnset;
    double strike = 1.0;
    double poisson_lambda = kUnset;
    double grid_min = kUnset;
    double grid_max = kUnset;
    std::size_t grid_points = 2000;
    bool refine = false;
};

void emit(const std::string& path, const std::string& text, std::ostream& out) {
    if (path == "-") {
        out << text;
    } else {
        write_text(path, text);
    }
}

std::string sibling_csv(const Options& o) {
    if (!o.csv.empty()) {
        return o.csv;
    }
    if (o.out == "-") {
        return {};
    }
    return fs::path(o.out).replace_extension(".csv").string();
}

std::string state_name(const Model& m, StateIndex x) {
    return m.labels.empty() ? std::to_string(x) : m.labels[x];
}

double sup_diff(std::span<const double> a, std::span<const double> b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        d = std::max(d, std::abs(a[i] - b[i]));
    }
    return d;
}

json assertions_json(std::span<const birthdeath::AssertionResult> results) {
    json arr = json::array();
    for (const auto& a : results) {
        arr.push_back({{"name", a.name},
                       {"passed", a.passed},
                       {"expected", a.expected},
                       {"actual", a.actual},
                       {"diff", a.actual - a.expected},
                       {"tolerance", a.tolerance},
                       {"detail", a.detail}});
    }
    return arr;
}

void print_assertions(std::span<const birthdeath::AssertionResult> results, std::ostream& out) {
    for (const auto& a : results) {
        out << (a.passed ? "PASS " : "FAIL ") << a.name;
        if (!a.passed) {
            out << ": expected " << format_double(a.expected) << ", got "
                << format_double(a.actual) << " (tol " << format_double(a.tolerance) << ")";
        }
        if (!a.detail.empty()) {
            out << " [" << a.detail << "]";
        }
        out << '\n';
    }
}

// ---------------------------------------------------------------------------

int cmd_solve(const Options& o, std::ostream& out) {
    const Model m = load_model(o.model);
    SolverConfig cfg;
    cfg.test_tolerance = o.test_tol;
    const SolverReport rep = run(m.generator, m.payoff, cfg);

    json doc = json::parse(report_to_json(rep));
    if (!m.labels.empty()) {
        json names = json::array();
        for (StateIndex x : rep.final_stopping_set.indices()) {
            names.push_back(m.labels[x]);
        }
        doc["stopping_labels"] = names;
    }
    bool cross_ok = true;
    if (o.cross_check) {
        const OracleResult vi = value_iteration(m.generator, m.payoff, 1e-3 * o.tol);
        const double d = sup_diff(rep.final_value, vi.value);
        cross_ok = d <= o.tol;
        doc["cross_check"] = {{"method", "value_iteration"},
                              {"sup_norm_discrepancy", d},
                              {"oracle_error_bound", vi.error_bound},
                              {"sweeps", vi.samples_or_sweeps},
                              {"tolerance", o.tol},
                              {"passed", cross_ok}};
    }
    emit(o.out, doc.dump(2) + "\n", out);

    std::string table = "state,payoff,value,in_D\n";
    for (StateIndex x = 0; x < m.generator.size(); ++x) {
        table += state_name(m, x) + ',' + format_double(m.payoff.values[x]) + ',' +
                 format_double(rep.final_value[x]) + ',' +
                 (rep.final_stopping_set.contains(x) ? "1" : "0") + '\n';
    }
    if (const std::string path = sibling_csv(o); !path.empty()) {
        write_text(path, table);
    }

    if (!rep.converged) {
        out << "not converged after " << rep.iterations << " iterations\n";
        return kNotConverged;
    }
    if (o.out != "-") {
        out << "converged in " << rep.iterations << " iterations; |D| = "
            << rep.final_stopping_set.count() << " of " << m.generator.size() << '\n';
    }
    if (!cross_ok) {
        out << "cross-check failed: value iteration discrepancy above " << format_double(o.tol)
            << '\n';
        return kCheckFailed;
    }
    return kOk;
}

int cmd_oracle_check(const Options& o, std::ostream& out) {
    const Model m = load_model(o.model);
    const std::size_t n = m.generator.size();
    SolverConfig cfg;
    cfg.test_tolerance = o.test_tol;
    const SolverReport rep = run(m.generator, m.payoff, cfg);

    json doc;
    doc["solver"] = json::parse(report_to_json(rep));
    doc["tolerance"] = o.tol;
    bool ok = rep.converged;

    const OracleResult vi = value_iteration(m.generator, m.payoff, 1e-3 * o.tol);
    const double vi_diff = sup_diff(rep.final_value, vi.value);
    ok = ok && vi_diff <= o.tol;
    doc["value_iteration"] = {{"sup_norm_discrepancy", vi_diff},
                              {"error_bound", vi.error_bound},
                              {"sweeps", vi.samples_or_sweeps},
                              {"passed", vi_diff <= o.tol}};

    if (n <= kEnumerationMaxStates) {
        const OracleResult en = enumerate_sets(m.generator, m.payoff);
        const double en_diff = sup_diff(rep.final_value, en.value);
        const bool unique = en.optimal_sets.size() == 1;
        const bool set_ok = !unique || en.optimal_sets.front() == rep.final_stopping_set;
        ok = ok && en_diff <= o.tol && set_ok;
        doc["enumeration"] = {{"sup_norm_discrepancy", en_diff},
                              {"optimal_sets", en.optimal_sets.size()},
                              {"argmax_unique", unique},
                              {"stopping_set_matches", set_ok},
                              {"passed", en_diff <= o.tol && set_ok}};
    } else {
        doc["enumeration"] = {{"skipped", "more than " + std::to_string(kEnumerationMaxStates) +
                                              " states"}};
    }

    if (o.paths > 0) {
        std::vector<StateIndex> starts;
        for (StateIndex x = 0; x < n; ++x) {
            if (!rep.final_stopping_set.contains(x)) {
                starts.push_back(x);
            }
        }
        const OracleResult mc = monte_carlo_value(m.generator, m.payoff, rep.final_stopping_set,
                                                  starts, o.paths, o.seed);
        json rows = json::array();
        for (std::size_t j = 0; j < starts.size(); ++j) {
            const double diff = mc.value[j] - rep.final_value[starts[j]];
            rows.push_back({{"state", state_name(m, starts[j])},
                            {"estimate", mc.value[j]},
                            {"standard_error", mc.standard_error[j]},
                            {"solver", rep.final_value[starts[j]]},
                            {"within_3se",
                             std::abs(diff) <= 3.0 * mc.standard_error[j] + mc.truncation_bias}});
        }
        doc["monte_carlo"] = {{"paths", o.paths},
                              {"seed", o.seed},
                              {"truncation_bias", mc.truncation_bias},
                              {"starts", rows}};
    }
    doc["passed"] = ok;
    emit(o.out, doc.dump(2) + "\n", out);
    if (!rep.converged) {
        return kNotConverged;
    }
    if (o.out != "-") {
        out << (ok ? "oracle check passed" : "oracle check FAILED") << '\n';
    }
    return ok ? kOk : kCheckFailed;
}

birthdeath::BirthDeathSpec birthdeath_spec(const Options& o) {
    return {o.lambda, o.mu, o.r, o.N};
}

int cmd_birthdeath(const Options& o, std::ostream& out) {
    const auto spec = birthdeath_spec(o);
    if (auto v = birthdeath::validate(spec); !v.empty()) {
        throw ModelError(std::move(v));
    }
    if (!o.emit_model.empty()) {
        Model m{birthdeath::build_generator(spec), birthdeath::call_payoff(spec), {}};
        for (StateIndex i = 0; i < spec.n_states(); ++i) {
            m.labels.push_back(std::to_string(spec.state_of(i)));
        }
        save_model(o.emit_model, m);
    }
    const birthdeath::BirthDeathStudy study = birthdeath::birthdeath_study(spec, o.truncations);
    write_text(o.out, birthdeath::to_csv(study.rows));
    if (study.degenerate) {
        out << study.note << '\n';
    } else {
        out << "x1 = " << study.x1 << ", stage-1 max relative error "
            << format_double(study.max_relative_error) << '\n';
    }
    print_assertions(study.assertions, out);
    if (!o.report.empty()) {
        json doc = {{"lambda", spec.lambda},
                    {"mu", spec.mu},
                    {"r", spec.r},
                    {"N", spec.N},
                    {"degenerate", study.degenerate},
                    {"note", study.note},
                    {"x1", study.x1},
                    {"max_relative_error", study.max_relative_error},
                    {"assertions", assertions_json(study.assertions)},
                    {"passed", study.passed()}};
        write_text(o.report, doc.dump(2) + "\n");
    }
    return study.passed() ? kOk : kCheckFailed;
}

int cmd_z_study(const Options& o, std::ostream& out) {
    const birthdeath::ZStudy study = birthdeath::z_example_truncation_study(o.lambda, o.mu, o.Ms, o.phi1);
    write_text(o.out, birthdeath::to_csv(study.rows));
    for (const auto& run : study.runs) {
        out << "M = " << run.M << ": u1(1) = " << format_double(run.u1_at_1) << ", "
            << run.report.iterations << " iterations\n";
    }
    print_assertions(study.assertions, out);
    if (!o.report.empty()) {
        json doc = {{"lambda", study.lambda},
                    {"mu", study.mu},
                    {"phi_at_1", study.value_at_one},
                    {"assertions", assertions_json(study.assertions)},
                    {"passed", study.passed()}};
        write_text(o.report, doc.dump(2) + "\n");
    }
    return study.passed() ? kOk : kCheckFailed;
}

int cmd_intervention(const Options& o, std::ostream& out, std::ostream& err) {
    intervention::InterventionModel model{o.b, o.sigma, o.r, o.strike, o.poisson_lambda, {}};
    if (o.r > o.b && o.poisson_lambda > 0.0) {
        model.grid = intervention::default_grid(o.b, o.r, o.strike, o.poisson_lambda, o.grid_points);
    }
    model.grid.n_points = o.grid_points;
    if (!std::isnan(o.grid_min)) {
        model.grid.x_min = o.grid_min;
    }
    if (!std::isnan(o.grid_max)) {
        model.grid.x_max = o.grid_max;
    }
    if (auto v = intervention::validate(model); !v.empty()) {
        throw ModelError(std::move(v));
    }

    SolverConfig cfg;
    cfg.test_tolerance = o.test_tol;
    const intervention::ThresholdReport rep = intervention::intervention_value(model, cfg);
    json doc = json::parse(intervention::threshold_report_json(model, rep));
    if (o.refine) {
        const std::vector<std::size_t> res{o.grid_points, 2 * o.grid_points};
        const intervention::RefinementStudy study = intervention::threshold_refinement(model, res);
        doc["grid_resolutions"] = study.resolutions;
        doc["refinement"] = {{"x_star", study.x_star},
                             {"cell_width", study.cell_width},
                             {"within_one_cell", std::abs(study.x_star[1] - study.x_star[0]) <=
                                                     study.cell_width[0]}};
    }
    emit(o.out, doc.dump(2) + "\n", out);
    if (const std::string path = sibling_csv(o); !path.empty()) {
        write_text(path, intervention::value_curve_csv(rep));
    }

    if (!rep.solver.converged) {
        err << "elimination did not converge\n";
        return kNotConverged;
    }
    if (!rep.threshold_found) {
        err << "threshold beyond grid: no interior stopping point above K below x_max = "
            << format_double(model.grid.x_max) << '\n';
        return kNotConverged;
    }
    if (o.out != "-") {
        out << "x_star = " << format_double(rep.x_star) << " in bound interval ("
            << format_double(rep.strike) << ", " << format_double(rep.upper_bound) << "]\n";
    }
    return kOk;
}

void apply_thread_cap(std::ostream& err) {
    const char* env = std::getenv("STOPCHAIN_THREADS");
    if (env == nullptr || *env == '\0') {
        return;
    }
    const std::string_view s(env);
    int n = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), n);
    if (ec != std::errc{} || ptr != s.data() + s.size() || n < 1) {
        err << "ignoring STOPCHAIN_THREADS=" << s << " (expected a positive integer)\n";
        return;
    }
    omp_set_num_threads(n);
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Optimal stopping on continuous-time Markov chains", "stopchain"};
    app.require_subcommand(1);
    Options o;

    auto* solve = app.add_subcommand("solve", "Run elimination on a model file");
    auto* oracle = app.add_subcommand("oracle-check", "Compare the solver with every oracle");
    auto* bd = app.add_subcommand("birthdeath-study", "Birth-death call example and truncation study");
    auto* z = app.add_subcommand("z-study", "Undiscounted walk on Z, truncated at M");
    auto* iv = app.add_subcommand("intervention", "Perpetual call with Poisson intervention times");

    for (auto* sub : {solve, oracle}) {
        sub->add_option("--model", o.model, "Model JSON file")->required();
        sub->add_option("--out", o.out, "Report JSON file ('-' for stdout)")->required();
        sub->add_option("--test-tol", o.test_tol, "Elimination test tolerance")->default_val(0.0);
        sub->add_option("--tol", o.tol, "Cross-check sup-norm tolerance")->default_val(1e-6);
        sub->add_option("--seed", o.seed, "Seed for simulation")->default_val(0);
    }
    solve->add_option("--csv", o.csv, "Value table CSV (default: next to --out)");
    solve->add_flag("--cross-check", o.cross_check, "Also run value iteration");
    oracle->add_option("--paths", o.paths, "Monte Carlo paths per start (0 = skip)");

    for (auto* sub : {bd, z}) {
        sub->add_option("--lambda", o.lambda, "Up rate")->required();
        sub->add_option("--mu", o.mu, "Down rate")->required();
        sub->add_option("--out", o.out, "Study CSV file")->required();
        sub->add_option("--report", o.report, "Assertion report JSON file");
        sub->add_option("--seed", o.seed, "Unused; accepted for uniformity")->default_val(0);
    }
    bd->add_option("--r", o.r, "Discount rate")->required();
    bd->add_option("--N", o.N, "Truncation: states -N..N")->default_val(10);
    bd->add_option("--truncations", o.truncations, "Extra truncation levels");
    bd->add_option("--emit-model", o.emit_model, "Also write the chain as a model file");
    z->add_option("--M,--N", o.Ms, "Truncation levels M")->default_val(std::vector<int>{20});
    z->add_option("--phi1", o.phi1, "Payoff at x = 1")->default_val(1.0);

    iv->add_option("--b", o.b, "Drift")->required();
    iv->add_option("--sigma", o.sigma, "Volatility")->required();
    iv->add_option("--r", o.r, "Discount rate")->required();
    iv->add_option("--strike", o.strike, "Strike K")->default_val(1.0);
    iv->add_option("--poisson-lambda", o.poisson_lambda, "Intervention intensity")->required();
    iv->add_option("--grid-min", o.grid_min, "Lowest grid price (default 0.01 K)");
    iv->add_option("--grid-max", o.grid_max, "Highest grid price (default 4 (1 + lambda/(r-b)) K)");
    iv->add_option("--grid-points", o.grid_points, "Grid size")->default_val(2000);
    iv->add_option("--out", o.out, "ThresholdReport JSON file ('-' for stdout)")->required();
    iv->add_option("--csv", o.csv, "Value curve CSV (default: next to --out)");
    iv->add_flag("--refine", o.refine, "Rerun at doubled resolution");
    iv->add_option("--test-tol", o.test_tol, "Elimination test tolerance")->default_val(0.0);
    iv->add_option("--seed", o.seed, "Unused; accepted for uniformity")->default_val(0);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kInvalidInput;
    }

    apply_thread_cap(err);
    try {
        if (solve->parsed()) {
            return cmd_solve(o, out);
        }
        if (oracle->parsed()) {
            return cmd_oracle_check(o, out);
        }
        if (bd->parsed()) {
            return cmd_birthdeath(o, out);
        }
        if (z->parsed()) {
            return cmd_z_study(o, out);
        }
        return cmd_intervention(o, out, err);
    } catch (const ModelError& e) {
        err << "error: " << e.what() << '\n';
        return kInvalidInput;
    } catch (const SolverError& e) {
        err << "solver error: " << e.what() << '\n';
        return kNotConverged;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kInvalidInput;
    }
}

}  // namespace stopchain::cli
