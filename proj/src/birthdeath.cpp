#include "stopchain/birthdeath.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "stopchain/errors.hpp"
#include "stopchain/io.hpp"

namespace stopchain::birthdeath {

StateIndex BirthDeathSpec::index_of(int x) const {
    if (x < -N || x > N) {
        throw std::out_of_range("integer " + std::to_string(x) + " outside {-N, ..., N}");
    }
    return static_cast<StateIndex>(x + N);
}

std::vector<std::string> validate(const BirthDeathSpec& spec) {
    std::vector<std::string> out;
    if (!std::isfinite(spec.lambda) || spec.lambda < 0.0) {
        out.emplace_back("lambda must be finite and >= 0");
    }
    if (!std::isfinite(spec.mu) || spec.mu < 0.0) {
        out.emplace_back("mu must be finite and >= 0");
    }
    if (!std::isfinite(spec.r) || spec.r < 0.0) {
        out.emplace_back("r must be finite and >= 0");
    }
    if (spec.N < 1) {
        out.emplace_back("N must be >= 1");
    }
    return out;
}

namespace {

void require(const BirthDeathSpec& spec) {
    auto v = validate(spec);
    if (!v.empty()) {
        throw ModelError(std::move(v));
    }
}

AssertionResult check_close(std::string name, double expected, double actual, double tol) {
    AssertionResult a;
    a.name = std::move(name);
    a.expected = expected;
    a.actual = actual;
    a.tolerance = tol;
    a.passed = std::abs(expected - actual) <= tol;
    return a;
}

AssertionResult check_true(std::string name, bool ok, std::string detail = {}) {
    AssertionResult a;
    a.name = std::move(name);
    a.passed = ok;
    a.expected = 1.0;
    a.actual = ok ? 1.0 : 0.0;
    a.detail = std::move(detail);
    return a;
}

double max_trace_residual(const SolverReport& report) {
    double r = 0.0;
    for (const auto& e : report.trace) {
        r = std::max(r, e.max_residual);
    }
    return r;
}

// Smallest integer x >= lo in the set, or N + 1 if there is none.
int first_member_from(const BirthDeathSpec& spec, const StateSet& set, int lo) {
    for (int x = lo; x <= spec.N; ++x) {
        if (set.contains(spec.index_of(x))) {
            return x;
        }
    }
    return spec.N + 1;
}

std::string describe(const BirthDeathSpec& spec, const StateSet& set) {
    std::ostringstream os;
    os << '{';
    bool first = true;
    for (StateIndex i : set.indices()) {
        os << (first ? "" : ",") << spec.state_of(i);
        first = false;
    }
    os << '}';
    return os.str();
}

}  // namespace

Generator build_generator(const BirthDeathSpec& spec) {
    require(spec);
    std::vector<Rate> rates;
    for (int x = -spec.N + 1; x <= spec.N - 1; ++x) {
        const StateIndex i = spec.index_of(x);
        if (spec.lambda > 0.0) {
            rates.push_back({i, i + 1, spec.lambda});
        }
        if (spec.mu > 0.0) {
            rates.push_back({i, i - 1, spec.mu});
        }
    }
    return Generator(spec.n_states(), std::move(rates));
}

PayoffVector call_payoff(const BirthDeathSpec& spec) {
    PayoffVector p;
    p.discount_rate = spec.r;
    for (int x = -spec.N; x <= spec.N; ++x) {
        p.values.push_back(std::max(x, 0));
    }
    return p;
}

PayoffVector step_payoff(const BirthDeathSpec& spec, double value_at_one) {
    PayoffVector p;
    p.discount_rate = spec.r;
    for (int x = -spec.N; x <= spec.N; ++x) {
        p.values.push_back(x <= 0 ? 0.0 : (x == 1 ? value_at_one : 2.0));
    }
    return p;
}

int stage1_threshold(double lambda, double mu, double r) {
    if (lambda <= mu) {
        return 0;
    }
    return static_cast<int>(std::ceil((lambda - mu) / r));
}

double ClosedFormStage::u1(int x) const {
    if (x < -1 || x > x1) {
        throw std::out_of_range("u1 is defined on -1 <= x <= x1");
    }
    if (x == x1) {
        return x1;
    }
    // theta2^{x - x1} through exp/log so large x1 cannot overflow.
    const double rho = theta1 / theta2;
    const double scale = std::exp(static_cast<double>(x - x1) * std::log(theta2));
    const double num = -std::expm1(static_cast<double>(x + 1) * std::log(rho));
    const double den = -std::expm1(static_cast<double>(x1 + 1) * std::log(rho));
    if (rho == 0.0) {
        return x1 * scale;
    }
    return x1 * scale * num / den;
}

ClosedFormStage closed_form_stage1(const BirthDeathSpec& spec) {
    require(spec);
    if (!(spec.r > 0.0)) {
        throw std::invalid_argument("closed_form_stage1 requires r > 0");
    }
    if (spec.lambda <= spec.mu) {
        throw DegenerateBranch();
    }
    ClosedFormStage s;
    s.x1 = stage1_threshold(spec.lambda, spec.mu, spec.r);
    const double sum = spec.r + spec.lambda + spec.mu;
    s.delta = sum * sum - 4.0 * spec.lambda * spec.mu;
    const double root = std::sqrt(s.delta);
    s.theta2 = (sum + root) / (2.0 * spec.lambda);
    // Product form theta1 = (mu/lambda)/theta2 avoids cancellation in sum - sqrt(delta).
    s.theta1 = 2.0 * spec.mu / (sum + root);
    return s;
}

std::string to_csv(std::span<const StudyRow> rows) {
    std::string out = "M,iterations,x_star,u_at_0,max_residual\n";
    for (const StudyRow& r : rows) {
        out += std::to_string(r.M) + ',' + std::to_string(r.iterations) + ',' +
               std::to_string(r.x_star) + ',' + format_double(r.u_at_0) + ',' +
               format_double(r.max_residual) + '\n';
    }
    return out;
}

bool BirthDeathStudy::passed() const {
    return std::all_of(assertions.begin(), assertions.end(),
                       [](const AssertionResult& a) { return a.passed; });
}

bool ZStudy::passed() const {
    return std::all_of(assertions.begin(), assertions.end(),
                       [](const AssertionResult& a) { return a.passed; });
}

BirthDeathStudy birthdeath_study(const BirthDeathSpec& spec, std::span<const int> truncations) {
    require(spec);
    BirthDeathStudy study;
    study.spec = spec;
    study.degenerate = spec.lambda <= spec.mu;
    study.x1 = stage1_threshold(spec.lambda, spec.mu, spec.r);

    SolverConfig cfg;
    cfg.keep_history = true;
    const Generator gen = build_generator(spec);
    const PayoffVector phi = call_payoff(spec);
    study.report = run(gen, phi, cfg);
    const SolverReport& rep = study.report;
    study.assertions.push_back(check_true("converged", rep.converged));

    const StateSet& d1 = rep.history.at(1).stopping_set;
    // L[phi] - r phi is 0 on {-N+1..-1}, lambda at 0 and lambda - mu - r x for x >= 1.
    StateSet expected_d1(gen.size());
    for (int x = -spec.N; x <= spec.N; ++x) {
        const bool interior = x > -spec.N && x < spec.N;
        const double ex = !interior ? 0.0 : (x < 0 ? 0.0 : (x == 0 ? spec.lambda : spec.lambda - spec.mu - spec.r * x));
        if (ex <= 0.0) {
            expected_d1.insert(spec.index_of(x));
        }
    }
    if (study.degenerate) {
        study.note = spec.lambda == 0.0
                         ? "degenerate branch: D1 = V, one iteration"
                         : "degenerate branch: x1 = 0 but L[phi](0) - r phi(0) = lambda > 0, so D1 = V \\ {0}";
        study.assertions.push_back(check_true("degenerate branch: D1 = {-N..-1} U {1..N} (V if lambda = 0)",
                                              d1 == expected_d1, describe(spec, d1)));
        if (spec.lambda == 0.0) {
            study.assertions.push_back(check_close("degenerate branch: one iteration", 1.0,
                                                   static_cast<double>(rep.iterations), 0.0));
        }
    } else {
        study.assertions.push_back(check_true("D1 = {-N..-1} U {x1..N}", d1 == expected_d1,
                                              describe(spec, d1)));
        study.assertions.push_back(check_close("x1 = ceil((lambda-mu)/r)",
                                               static_cast<double>(study.x1),
                                               first_member_from(spec, d1, 1), 0.0));
        if (study.x1 <= spec.N) {
            const ClosedFormStage cf = closed_form_stage1(spec);
            const auto& u1 = rep.history.at(1).value;
            for (int x = 0; x < study.x1; ++x) {
                const double exact = cf.u1(x);
                const double got = u1[spec.index_of(x)];
                study.closed_form_u1.push_back(exact);
                study.solver_u1.push_back(got);
                study.max_relative_error =
                    std::max(study.max_relative_error, std::abs(got - exact) / std::abs(exact));
            }
            study.assertions.push_back(
                check_close("stage-1 closed form (max relative error)", 0.0,
                            study.max_relative_error, 1e-10));
        }
    }
    const StateSet& d = rep.final_stopping_set;
    const int x_star = first_member_from(spec, d, -spec.N + 1);
    bool shape = d.contains(spec.index_of(-spec.N)) && (study.degenerate || x_star >= study.x1);
    for (int x = x_star; x <= spec.N && shape; ++x) {
        shape = d.contains(spec.index_of(x));
    }
    study.assertions.push_back(
        check_true("final set {-N} U {x*..N}, x* >= x1 unless degenerate", shape, describe(spec, d)));

    std::vector<int> sizes{spec.N};
    for (int m : truncations) {
        if (m != spec.N) {
            sizes.push_back(m);
        }
    }
    for (int m : sizes) {
        BirthDeathSpec s = spec;
        s.N = m;
        const SolverReport r =
            m == spec.N ? study.report : run(build_generator(s), call_payoff(s), SolverConfig{});
        StudyRow row;
        row.M = m;
        row.iterations = r.iterations;
        row.x_star = first_member_from(s, r.final_stopping_set, 0);
        row.u_at_0 = r.final_value[s.index_of(0)];
        row.max_residual = max_trace_residual(r);
        study.rows.push_back(row);
    }
    return study;
}

ZStudy z_example_truncation_study(double lambda, double mu, std::span<const int> truncations,
                                  double value_at_one) {
    if (!(lambda >= mu)) {
        throw std::invalid_argument("z-study requires lambda >= mu");
    }
    ZStudy study;
    study.lambda = lambda;
    study.mu = mu;
    study.value_at_one = value_at_one;
    const double expected_u1 = 2.0 * lambda / (lambda + mu);
    for (int m : truncations) {
        const BirthDeathSpec spec{lambda, mu, 0.0, m};
        require(spec);
        if (m < 2) {
            throw std::invalid_argument("z-study truncation must be >= 2");
        }
        SolverConfig cfg;
        cfg.allow_zero_discount = true;
        cfg.keep_history = true;
        ZStudyRun zr;
        zr.M = m;
        zr.report = run(build_generator(spec), step_payoff(spec, value_at_one), cfg);
        const SolverReport& rep = zr.report;
        const std::string tag = "M=" + std::to_string(m) + ": ";

        zr.u1_at_1 = rep.history.at(1).value[spec.index_of(1)];
        study.assertions.push_back(
            check_close(tag + "u1(1) = 2 lambda/(lambda+mu)", expected_u1, zr.u1_at_1, 1e-10));

        StateSet expected_d1(spec.n_states(), true);
        expected_d1.erase(spec.index_of(1));
        study.assertions.push_back(check_true(tag + "D1 = Z \\ {1}",
                                              rep.history.at(1).stopping_set == expected_d1,
                                              describe(spec, rep.history.at(1).stopping_set)));

        // Round n >= 1 turns D_n into D_{n+1} = D_n \ {1 - n}, down to -M + 1.
        bool one_per_step = rep.trace.size() == static_cast<std::size_t>(m) + 1;
        for (std::size_t k = 1; k < rep.trace.size() && one_per_step; ++k) {
            const int n = static_cast<int>(k);
            const auto& gone = rep.trace[k].eliminated;
            one_per_step = gone.size() == 1 && spec.state_of(gone.front()) == 1 - n;
        }
        zr.one_per_step = one_per_step;
        study.assertions.push_back(check_true(tag + "round n removes exactly 1 - n",
                                              one_per_step));
        for (StateIndex i : rep.final_stopping_set.indices()) {
            zr.limit_set.push_back(spec.state_of(i));
        }
        study.assertions.push_back(check_true(tag + "converged", rep.converged));

        StudyRow row;
        row.M = m;
        row.iterations = rep.iterations;
        row.x_star = first_member_from(spec, rep.final_stopping_set, 1);
        row.u_at_0 = rep.final_value[spec.index_of(0)];
        row.max_residual = max_trace_residual(rep);
        study.rows.push_back(row);
        study.runs.push_back(std::move(zr));
    }
    return study;
}

}  // namespace stopchain::birthdeath
