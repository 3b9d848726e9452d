#include "cirl/autotune.hpp"

#include "cirl/errors.hpp"

#include <cmath>
#include <sstream>

namespace cirl {

AutotuneConfig AutotuneConfig::defaults(int num_states, double reward_bound) {
    AutotuneConfig cfg;
    cfg.lambda_lo = 0.0;
    cfg.lambda_hi = 10.0 * num_states;
    cfg.epsilon = 1e-3 * cfg.lambda_hi;
    cfg.zero_tol = 1e-6 * reward_bound;
    return cfg;
}

void AutotuneConfig::validate() const {
    if (!std::isfinite(lambda_lo) || !std::isfinite(lambda_hi) || lambda_lo < 0.0)
        throw InvalidInput("lambda bracket must be finite with lambda_lo >= 0");
    if (!(lambda_lo < lambda_hi)) throw InvalidInput("lambda_lo must be smaller than lambda_hi");
    if (!(epsilon > 0.0)) throw InvalidInput("epsilon must be positive");
    if (!(zero_tol > 0.0)) throw InvalidInput("zero_tol must be positive");
}

int max_autotune_solves(const AutotuneConfig& config) {
    const double ratio = (config.lambda_hi - config.lambda_lo) / config.epsilon;
    return 2 + (ratio > 1.0 ? static_cast<int>(std::ceil(std::log2(ratio))) : 0);
}

AutotuneResult autotune(const CirlProblem& problem, const AutotuneConfig& config, const LpOptions& options) {
    config.validate();
    const CirlLayout layout = cirl_layout(problem.model.num_states(), problem.model.num_actions());

    CirlProblem probe_problem = problem;
    probe_problem.lambda = config.lambda_lo;
    LpSolver solver(assemble(probe_problem), options);

    AutotuneResult result;
    auto probe = [&](double lambda) {
        probe_problem.lambda = lambda;
        const LpSolution lp = solver.resolve_with_objective(cirl_objective(layout, lambda));
        ++result.num_solves;
        CirlSolution sol = decode(probe_problem, lp);
        const double norm = sol.reward.values.cwiseAbs().maxCoeff();
        result.trace.push_back({lambda, norm, sol.objective_value, sol.status});
        if (sol.status != LpStatus::optimal) {
            std::ostringstream msg;
            msg << "solve at lambda = " << lambda << " ended with status " << to_string(sol.status);
            throw NumericalError(msg.str());
        }
        return std::pair{norm > config.zero_tol, std::move(sol)};
    };

    auto [lo_nonzero, lo_solution] = probe(config.lambda_lo);
    if (!lo_nonzero)
        throw BracketError("the problem admits only r = 0 above lambda_lo", result.trace);
    auto [hi_nonzero, hi_solution] = probe(config.lambda_hi);
    if (hi_nonzero) throw BracketError("solution at lambda_hi is nonzero; increase lambda_hi", result.trace);

    double lo = config.lambda_lo;
    double hi = config.lambda_hi;
    CirlSolution best = std::move(lo_solution);
    while (hi - lo > config.epsilon) {
        const double mid = 0.5 * (lo + hi);
        auto [nonzero, sol] = probe(mid);
        if (nonzero) {
            lo = mid;
            best = std::move(sol);
        } else {
            hi = mid;
        }
    }

    result.lambda_star = lo;
    result.bracket_lo = lo;
    result.bracket_hi = hi;
    result.solution = std::move(best);
    result.bracket_valid = true;
    return result;
}

}  // namespace cirl
