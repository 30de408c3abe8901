#include "stopchain/intervention.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <nlohmann/json.hpp>

#include "stopchain/errors.hpp"
#include "stopchain/io.hpp"

namespace stopchain::intervention {

namespace {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor>;

std::string num(double v) { return format_double(v); }

void require(const InterventionModel& model) {
    auto v = validate(model);
    if (!v.empty()) {
        throw ModelError(std::move(v));
    }
}

// q_x I - G with a per-state diagonal shift.
SparseMatrix shifted_matrix(const Generator& gen, std::span<const double> shift) {
    const auto n = static_cast<Eigen::Index>(gen.size());
    std::vector<Eigen::Triplet<double>> entries;
    entries.reserve(gen.nonzeros() + gen.size());
    for (StateIndex x = 0; x < gen.size(); ++x) {
        const auto i = static_cast<Eigen::Index>(x);
        entries.emplace_back(i, i, shift[x] + gen.exit_rate(x));
        const auto t = gen.targets(x);
        const auto v = gen.rates(x);
        for (std::size_t k = 0; k < t.size(); ++k) {
            entries.emplace_back(i, static_cast<Eigen::Index>(t[k]), -v[k]);
        }
    }
    SparseMatrix a(n, n);
    a.setFromTriplets(entries.begin(), entries.end());
    a.makeCompressed();
    return a;
}

std::pair<double, double> gbm_rates(double b, double sigma, double h) {
    const double diffusion = sigma * sigma / (2.0 * h * h);
    const double drift = (b - 0.5 * sigma * sigma) / (2.0 * h);
    return {diffusion + drift, diffusion - drift};
}

}  // namespace

GridSpec default_grid(double b, double r, double strike, double lambda, std::size_t n_points,
                      double margin) {
    const double bound = (1.0 + lambda / (r - b)) * strike;
    return {0.01 * strike, margin * bound, n_points};
}

std::vector<std::string> validate(const InterventionModel& m) {
    std::vector<std::string> out;
    for (auto [name, v] : {std::pair{"b", m.b}, {"sigma", m.sigma}, {"r", m.r},
                           {"strike", m.strike}, {"lambda", m.lambda}}) {
        if (!std::isfinite(v)) {
            out.push_back(std::string(name) + " must be finite");
        }
    }
    if (!(m.sigma > 0.0)) {
        out.emplace_back("sigma must be > 0");
    }
    if (!(m.r > m.b)) {
        out.emplace_back("requires r > b (got r = " + num(m.r) + ", b = " + num(m.b) + ")");
    }
    if (!(m.r > 0.0)) {
        out.emplace_back("requires r > 0");
    }
    if (!(m.strike > 0.0)) {
        out.emplace_back("strike K must be > 0");
    }
    if (!(m.lambda > 0.0)) {
        out.emplace_back("Poisson intensity lambda must be > 0");
    }
    const GridSpec& g = m.grid;
    if (!(g.x_min > 0.0)) {
        out.emplace_back("grid x_min must be > 0");
    }
    if (!(g.x_max > g.x_min)) {
        out.emplace_back("grid x_max must exceed x_min");
    }
    if (g.n_points < 50) {
        out.emplace_back("grid needs at least 50 points");
    }
    if (!out.empty()) {
        return out;
    }
    if (!(g.x_min < m.strike)) {
        out.emplace_back("grid x_min must lie below the strike");
    }
    if (g.x_max < 2.0 * m.upper_bound()) {
        out.emplace_back("grid x_max = " + num(g.x_max) + " must be at least twice the bound (1 + lambda/(r-b)) K = " +
                         num(m.upper_bound()));
    }
    const double h = std::log(g.x_max / g.x_min) / static_cast<double>(g.n_points - 1);
    const double nu = std::abs(m.b - 0.5 * m.sigma * m.sigma);
    if (nu > 0.0 && !(h < m.sigma * m.sigma / nu)) {
        out.emplace_back("grid too coarse for positive rates: h = " + num(h) +
                         " must be < sigma^2/|b - sigma^2/2| = " + num(m.sigma * m.sigma / nu));
    }
    return out;
}

LogGrid make_grid(const GridSpec& grid) {
    if (!(grid.x_min > 0.0) || !(grid.x_max > grid.x_min) || grid.n_points < 2) {
        throw ModelError({"invalid grid"});
    }
    LogGrid g;
    const double lo = std::log(grid.x_min);
    g.h = (std::log(grid.x_max) - lo) / static_cast<double>(grid.n_points - 1);
    g.x.resize(grid.n_points);
    for (std::size_t i = 0; i < grid.n_points; ++i) {
        g.x[i] = std::exp(lo + g.h * static_cast<double>(i));
    }
    g.x.front() = grid.x_min;
    g.x.back() = grid.x_max;
    return g;
}

Generator discretize_gbm(const InterventionModel& model) {
    require(model);
    const LogGrid grid = make_grid(model.grid);
    const auto [up, down] = gbm_rates(model.b, model.sigma, grid.h);
    const std::size_t n = grid.x.size();
    std::vector<Rate> rates;
    rates.reserve(2 * n);
    for (std::size_t i = 1; i + 1 < n; ++i) {
        rates.push_back({i, i + 1, up});
        rates.push_back({i, i - 1, down});
    }
    return Generator(n, std::move(rates));
}

// ---------------------------------------------------------------------------

struct ResolventSolver::Impl {
    Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu;
};

ResolventSolver::ResolventSolver(const Generator& gen, double q)
    : impl_(std::make_unique<Impl>()), n_(gen.size()) {
    if (!(q > 0.0)) {
        throw std::invalid_argument("resolvent rate must be > 0");
    }
    const std::vector<double> shift(gen.size(), q);
    impl_->lu.setPivotThreshold(0.0);
    impl_->lu.compute(shifted_matrix(gen, shift));
    if (impl_->lu.info() != Eigen::Success) {
        throw SolverError("resolvent factorization failed: " + impl_->lu.lastErrorMessage());
    }
}

ResolventSolver::~ResolventSolver() = default;
ResolventSolver::ResolventSolver(ResolventSolver&&) noexcept = default;
ResolventSolver& ResolventSolver::operator=(ResolventSolver&&) noexcept = default;

std::vector<double> ResolventSolver::apply(std::span<const double> f) const {
    if (f.size() != n_) {
        throw std::invalid_argument("resolvent: vector length mismatch");
    }
    const Eigen::Map<const Eigen::VectorXd> rhs(f.data(), static_cast<Eigen::Index>(n_));
    const Eigen::VectorXd g = impl_->lu.solve(rhs);
    return {g.data(), g.data() + g.size()};
}

std::vector<double> resolvent(const Generator& gen, double q, std::span<const double> f) {
    return ResolventSolver(gen, q).apply(f);
}

// ---------------------------------------------------------------------------

InterventionChain::InterventionChain(const InterventionModel& model)
    : model_(model),
      grid_(make_grid(model.grid)),
      diffusion_(discretize_gbm(model)),
      resolvent_(diffusion_, model.r + model.lambda) {
    payoff_.reserve(grid_.x.size());
    for (double x : grid_.x) {
        payoff_.push_back(std::max(x - model.strike, 0.0));
    }
}

InterventionChain::~InterventionChain() = default;
InterventionChain::InterventionChain(InterventionChain&&) noexcept = default;

std::vector<double> InterventionChain::excess(std::span<const double> u) const {
    const double lam = model_.lambda;
    const double q = model_.r + lam;
    std::vector<double> w = resolvent_.apply(u);
    for (std::size_t x = 0; x < w.size(); ++x) {
        w[x] = q * (lam * w[x] - u[x]);
    }
    return w;
}

ContinuationSolution InterventionChain::continuation(const StateSet& stop_set,
                                                     const SolverConfig& cfg) const {
    // With w = R_{r+lambda}[u]: ((r+lambda) I - G) w = u everywhere, and
    // u = lambda w off the stopping set. Eliminating u leaves one system:
    //   (r I - G) w = 0 off S,   ((r + lambda) I - G) w = phi on S.
    const std::size_t n = size();
    if (stop_set.universe_size() != n) {
        throw std::invalid_argument("stopping set does not match the grid");
    }
    const double lam = model_.lambda;
    std::vector<double> shift(n);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    double matrix_norm = 0.0;
    for (StateIndex x = 0; x < n; ++x) {
        const bool stop = stop_set.contains(x);
        shift[x] = stop ? model_.r + lam : model_.r;
        if (stop) {
            rhs[static_cast<Eigen::Index>(x)] = payoff_[x];
        }
        matrix_norm = std::max(matrix_norm, shift[x] + 2.0 * diffusion_.exit_rate(x));
    }
    const SparseMatrix a = shifted_matrix(diffusion_, shift);
    Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu;
    // Row diagonally dominant: diagonal pivots are stable and keep absorbing rows exact.
    lu.setPivotThreshold(0.0);
    lu.compute(a);
    if (lu.info() != Eigen::Success) {
        throw SolverError("intervention continuation factorization failed");
    }
    Eigen::VectorXd w = lu.solve(rhs);
    auto relative_residual = [&](const Eigen::VectorXd& v) {
        const double num = (a * v - rhs).lpNorm<Eigen::Infinity>();
        const double den = matrix_norm * v.lpNorm<Eigen::Infinity>() + rhs.lpNorm<Eigen::Infinity>();
        return den > 0.0 ? num / den : num;
    };
    double residual = relative_residual(w);
    for (int refine = 0; refine < 3 && residual > cfg.linear_tolerance; ++refine) {
        w += lu.solve(rhs - a * w);
        residual = relative_residual(w);
    }
    if (!std::isfinite(residual) || residual > cfg.linear_tolerance) {
        throw SolverError("intervention continuation residual above tolerance", residual);
    }
    ContinuationSolution sol;
    sol.residual = residual;
    sol.value.resize(n);
    for (StateIndex x = 0; x < n; ++x) {
        sol.value[x] = stop_set.contains(x) ? payoff_[x] : lam * w[static_cast<Eigen::Index>(x)];
    }
    return sol;
}

Generator poissonized_generator(const InterventionModel& model) {
    const Generator gen = discretize_gbm(model);
    const auto n = static_cast<Eigen::Index>(gen.size());
    const double q = model.r + model.lambda;
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
    for (StateIndex x = 0; x < gen.size(); ++x) {
        const auto i = static_cast<Eigen::Index>(x);
        a(i, i) = q + gen.exit_rate(x);
        const auto t = gen.targets(x);
        const auto v = gen.rates(x);
        for (std::size_t k = 0; k < t.size(); ++k) {
            a(i, static_cast<Eigen::Index>(t[k])) = -v[k];
        }
    }
    Eigen::MatrixXd p = q * a.partialPivLu().solve(Eigen::MatrixXd::Identity(n, n));
    // (qI - G)^{-1} is entrywise nonnegative; clear rounding noise of either sign
    // and put the row defect on the diagonal so P is stochastic to the last bit.
    // An absorbing state's row is exactly e_x.
    for (Eigen::Index i = 0; i < n; ++i) {
        if (gen.is_absorbing(static_cast<StateIndex>(i))) {
            p.row(i).setZero();
            p(i, i) = 1.0;
            continue;
        }
        double off = 0.0;
        for (Eigen::Index j = 0; j < n; ++j) {
            if (j == i) {
                continue;
            }
            if (p(i, j) < 1e-300) {
                p(i, j) = 0.0;
            }
            off += p(i, j);
        }
        p(i, i) = 1.0 - off;
    }
    return poissonize(p, model.lambda);
}

// ---------------------------------------------------------------------------

EtaDiagnostic monotonicity_check_eta(const InterventionModel& model) {
    require(model);
    const LogGrid grid = make_grid(model.grid);
    const Generator gen = discretize_gbm(model);
    std::vector<double> phi(grid.x.size());
    for (std::size_t i = 0; i < phi.size(); ++i) {
        phi[i] = std::max(grid.x[i] - model.strike, 0.0);
    }
    const std::vector<double> rphi = resolvent(gen, model.r + model.lambda, phi);

    EtaDiagnostic d;
    d.x = grid.x;
    d.eta.resize(phi.size());
    double scale = 0.0;
    for (std::size_t i = 0; i < phi.size(); ++i) {
        d.eta[i] = model.lambda * rphi[i] - phi[i];
        scale = std::max(scale, std::abs(d.eta[i]));
    }
    d.tolerance = 1e-12 * std::max(scale, 1.0);

    const std::size_t n = phi.size();
    d.positive_below_strike = true;
    for (std::size_t i = 1; i + 1 < n && grid.x[i] <= model.strike; ++i) {
        d.positive_below_strike = d.positive_below_strike && d.eta[i] > 0.0;
    }
    d.non_increasing_above_strike = true;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        if (grid.x[i] < model.strike) {
            continue;
        }
        const double inc = d.eta[i + 1] - d.eta[i];
        d.max_increase_above_strike = std::max(d.max_increase_above_strike, inc);
        if (inc > d.tolerance) {
            d.non_increasing_above_strike = false;
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (grid.x[i] > model.strike && d.eta[i] <= 0.0) {
            d.sign_change_found = true;
            d.sign_change_index = i;
            d.sign_change_x = grid.x[i];
            break;
        }
    }
    const auto at_bound =
        std::lower_bound(grid.x.begin(), grid.x.end(), model.upper_bound()) - grid.x.begin();
    d.eta_at_bound = d.eta[static_cast<std::size_t>(std::min<std::ptrdiff_t>(at_bound, static_cast<std::ptrdiff_t>(n) - 1))];
    return d;
}

ThresholdReport intervention_value(const InterventionModel& model, const SolverConfig& cfg_in) {
    require(model);
    const InterventionChain chain(model);
    SolverConfig cfg = cfg_in;
    cfg.keep_history = true;

    ThresholdReport rep;
    rep.solver = run_elimination(chain, cfg);
    rep.x = chain.grid().x;
    rep.h = chain.grid().h;
    rep.payoff.assign(chain.payoff().begin(), chain.payoff().end());
    rep.value = rep.solver.final_value;
    rep.stopping_set = rep.solver.final_stopping_set;
    rep.strike = model.strike;
    rep.upper_bound = model.upper_bound();

    const std::size_t n = rep.x.size();
    auto first_above_strike = [&](const StateSet& s) -> std::size_t {
        for (std::size_t i = 0; i < n; ++i) {
            if (rep.x[i] > model.strike && s.contains(i)) {
                return i;
            }
        }
        return n;
    };

    rep.nested_up_sets = true;
    std::size_t previous = 0;
    for (std::size_t k = 1; k < rep.solver.history.size(); ++k) {
        const StateSet& s = rep.solver.history[k].stopping_set;
        const std::size_t first = first_above_strike(s);
        bool up_set = first >= previous;
        for (std::size_t i = first; i < n && up_set; ++i) {
            up_set = s.contains(i);
        }
        rep.nested_up_sets = rep.nested_up_sets && up_set;
        previous = first;
        rep.stage_thresholds.push_back(first < n ? rep.x[first] : rep.x.back());
    }
    // history[0] (D_0 = V) is not a stage; drop the solver's copy of it.
    rep.solver.history.clear();

    const std::size_t idx = first_above_strike(rep.stopping_set);
    rep.threshold_found = idx + 1 < n;
    rep.x_star_index = std::min(idx, n - 1);
    rep.x_star = rep.x[rep.x_star_index];
    rep.cell_width = rep.x_star_index > 0 ? rep.x[rep.x_star_index] - rep.x[rep.x_star_index - 1] : 0.0;
    return rep;
}

std::string threshold_report_json(const InterventionModel& model, const ThresholdReport& report) {
    nlohmann::json doc;
    doc["model"] = {{"b", model.b},
                    {"sigma", model.sigma},
                    {"r", model.r},
                    {"strike", model.strike},
                    {"lambda", model.lambda},
                    {"grid", {{"x_min", model.grid.x_min},
                              {"x_max", model.grid.x_max},
                              {"n_points", model.grid.n_points}}}};
    doc["x_star"] = report.x_star;
    doc["x_star_index"] = report.x_star_index;
    doc["threshold_found"] = report.threshold_found;
    doc["bound_check"] = {{"strike", report.strike},
                          {"upper_bound", report.upper_bound},
                          {"grid_slack", report.x_star * std::expm1(report.h)},
                          {"satisfied", report.strike < report.x_star &&
                                            report.x_star <= report.upper_bound * std::exp(report.h)}};
    doc["h"] = report.h;
    doc["cell_width"] = report.cell_width;
    doc["iterations"] = report.solver.iterations;
    doc["converged"] = report.solver.converged;
    doc["stage_thresholds"] = report.stage_thresholds;
    doc["nested_up_sets"] = report.nested_up_sets;
    doc["grid_resolutions"] = std::vector<std::size_t>{model.grid.n_points};
    return doc.dump(2) + "\n";
}

std::string value_curve_csv(const ThresholdReport& report) {
    std::string out = "x,v,payoff,in_stopping_set\n";
    for (std::size_t i = 0; i < report.x.size(); ++i) {
        out += format_double(report.x[i]) + ',' + format_double(report.value[i]) + ',' +
               format_double(report.payoff[i]) + ',' + (report.stopping_set.contains(i) ? "1" : "0") +
               '\n';
    }
    return out;
}

RefinementStudy threshold_refinement(const InterventionModel& model,
                                     std::span<const std::size_t> resolutions) {
    RefinementStudy study;
    for (std::size_t n : resolutions) {
        InterventionModel m = model;
        m.grid.n_points = n;
        const ThresholdReport rep = intervention_value(m);
        study.resolutions.push_back(n);
        study.x_star.push_back(rep.x_star);
        study.cell_width.push_back(rep.cell_width);
    }
    return study;
}

}  // namespace stopchain::intervention
