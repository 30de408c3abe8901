#include <algorithm>
#include <cmath>
#include <deque>
#include <string>

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "stopchain/elimination.hpp"
#include "stopchain/errors.hpp"

namespace stopchain {

namespace {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor>;

// With r = 0 the restricted system is singular unless every unknown can reach
// the boundary; check that before handing it to the factorization.
void require_reachable(const Generator& gen, const StateSet& stop_set) {
    const std::size_t n = gen.size();
    std::vector<std::vector<StateIndex>> reverse(n);
    for (StateIndex x = 0; x < n; ++x) {
        const auto t = gen.targets(x);
        const auto v = gen.rates(x);
        for (std::size_t k = 0; k < t.size(); ++k) {
            if (v[k] > 0.0) {
                reverse[t[k]].push_back(x);
            }
        }
    }
    std::vector<bool> seen(n, false);
    std::deque<StateIndex> queue;
    for (StateIndex x : stop_set.indices()) {
        seen[x] = true;
        queue.push_back(x);
    }
    while (!queue.empty()) {
        const StateIndex y = queue.front();
        queue.pop_front();
        for (StateIndex x : reverse[y]) {
            if (!seen[x]) {
                seen[x] = true;
                queue.push_back(x);
            }
        }
    }
    for (StateIndex x = 0; x < n; ++x) {
        if (!seen[x]) {
            throw SolverError("undiscounted problem: state " + std::to_string(x) +
                              " cannot reach the stopping set");
        }
    }
}

}  // namespace

ChainModel::ChainModel(const Generator& gen, const PayoffVector& payoff, bool allow_zero_discount)
    : gen_(&gen), payoff_(&payoff) {
    require_valid(gen, payoff, allow_zero_discount);
}

std::vector<double> ChainModel::excess(std::span<const double> u) const {
    const double r = payoff_->discount_rate;
    std::vector<double> out(size());
    for (StateIndex x = 0; x < size(); ++x) {
        out[x] = generator_apply(*gen_, u, x) - r * u[x];
    }
    return out;
}

ContinuationSolution ChainModel::continuation(const StateSet& stop_set,
                                              const SolverConfig& cfg) const {
    const Generator& gen = *gen_;
    const auto& phi = payoff_->values;
    const double r = payoff_->discount_rate;
    const std::size_t n = gen.size();
    if (stop_set.universe_size() != n) {
        throw std::invalid_argument("stopping set does not match the state count");
    }
    if (!(r > 0.0)) {
        if (r == 0.0 && cfg.allow_zero_discount) {
            require_reachable(gen, stop_set);
        } else {
            throw SolverError("continuation solve requires r > 0");
        }
    }

    ContinuationSolution sol;
    sol.value.assign(phi.begin(), phi.end());

    std::vector<Eigen::Index> unknown(n, -1);
    std::vector<StateIndex> states;
    for (StateIndex x = 0; x < n; ++x) {
        if (!stop_set.contains(x)) {
            unknown[x] = static_cast<Eigen::Index>(states.size());
            states.push_back(x);
        }
    }
    const auto m = static_cast<Eigen::Index>(states.size());
    if (m == 0) {
        return sol;
    }

    // (r + L(x)) u(x) - sum_{y off S} L(x,y) u(y) = sum_{y in S} L(x,y) phi(y)
    std::vector<Eigen::Triplet<double>> entries;
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m);
    double matrix_norm = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
        const StateIndex x = states[static_cast<std::size_t>(i)];
        const double diag = r + gen.exit_rate(x);
        entries.emplace_back(i, i, diag);
        const auto t = gen.targets(x);
        const auto v = gen.rates(x);
        for (std::size_t k = 0; k < t.size(); ++k) {
            if (unknown[t[k]] >= 0) {
                entries.emplace_back(i, unknown[t[k]], -v[k]);
            } else {
                rhs[i] += v[k] * phi[t[k]];
            }
        }
        matrix_norm = std::max(matrix_norm, diag + gen.exit_rate(x));
    }
    SparseMatrix a(m, m);
    a.setFromTriplets(entries.begin(), entries.end());
    a.makeCompressed();

    auto relative_residual = [&](const Eigen::VectorXd& u) {
        const double num = (a * u - rhs).lpNorm<Eigen::Infinity>();
        const double den = matrix_norm * u.lpNorm<Eigen::Infinity>() + rhs.lpNorm<Eigen::Infinity>();
        return den > 0.0 ? num / den : num;
    };

    Eigen::VectorXd u;
    double residual = 0.0;
    if (static_cast<std::size_t>(m) <= cfg.direct_solver_max_states) {
        Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu;
        lu.setPivotThreshold(0.0);
        lu.compute(a);
        if (lu.info() != Eigen::Success) {
            throw SolverError("continuation system factorization failed: " + lu.lastErrorMessage());
        }
        u = lu.solve(rhs);
        residual = relative_residual(u);
        for (int refine = 0; refine < 3 && residual > cfg.linear_tolerance; ++refine) {
            u += lu.solve(rhs - a * u);
            residual = relative_residual(u);
        }
    } else {
        Eigen::BiCGSTAB<SparseMatrix, Eigen::IncompleteLUT<double>> it;
        it.preconditioner().setDroptol(1e-6);
        it.setMaxIterations(static_cast<Eigen::Index>(cfg.max_inner_iterations));
        it.setTolerance(std::max(cfg.linear_tolerance * 1e-2, 1e-16));
        it.compute(a);
        if (it.info() != Eigen::Success) {
            throw SolverError("continuation preconditioner setup failed");
        }
        u = it.solve(rhs);
        residual = relative_residual(u);
        for (int restart = 0; restart < 3 && residual > cfg.linear_tolerance; ++restart) {
            u = it.solveWithGuess(rhs, u);
            residual = relative_residual(u);
        }
    }
    if (!std::isfinite(residual) || residual > cfg.linear_tolerance) {
        throw SolverError("continuation solve did not reach the linear tolerance (residual " +
                              std::to_string(residual) + ")",
                          residual);
    }
    for (Eigen::Index i = 0; i < m; ++i) {
        sol.value[states[static_cast<std::size_t>(i)]] = u[i];
    }
    sol.residual = residual;
    return sol;
}

}  // namespace stopchain
