#pragma once

#include "cirl/problem.hpp"

#include <stdexcept>
#include <string>
#include <vector>

namespace cirl {

/// Bisection bracket for the sparsity weight. The solve at lambda_lo must give
/// a nonzero reward and the solve at lambda_hi the zero reward; a reward
/// counts as zero when ||r*||_inf <= zero_tol.
struct AutotuneConfig {
    double lambda_lo = 0.0;
    double lambda_hi = 1.0;
    double epsilon = 1e-3;
    double zero_tol = 1e-4;

    /// lambda_lo = 0, lambda_hi = 10 m, epsilon = 1e-3 lambda_hi, zero_tol = 1e-6 r_max.
    static AutotuneConfig defaults(int num_states, double reward_bound);

    /// Throws InvalidInput unless 0 <= lambda_lo < lambda_hi and epsilon, zero_tol > 0.
    void validate() const;
};

struct AutotuneProbe {
    double lambda;
    double reward_norm;  // ||r*||_inf
    double objective;
    LpStatus status;
};

struct AutotuneResult {
    double lambda_star = 0.0;
    double bracket_lo = 0.0;
    double bracket_hi = 0.0;
    CirlSolution solution;  // solution at lambda_star, nonzero reward
    std::vector<AutotuneProbe> trace;
    bool bracket_valid = false;
    int num_solves = 0;
};

/// The initial bracket does not straddle the nonzero -> zero transition.
class BracketError : public std::runtime_error {
public:
    BracketError(const std::string& what, std::vector<AutotuneProbe> trace)
        : std::runtime_error(what), trace_(std::move(trace)) {}
    const std::vector<AutotuneProbe>& trace() const { return trace_; }

private:
    std::vector<AutotuneProbe> trace_;
};

/// Largest lambda (to within epsilon) whose solution still has a nonzero
/// reward. problem.lambda is ignored. The LP is assembled once; each probe
/// only swaps the objective. Returns the lower end of the final bracket.
AutotuneResult autotune(const CirlProblem& problem, const AutotuneConfig& config, const LpOptions& options = {});

/// Upper bound on the number of LP solves autotune performs.
int max_autotune_solves(const AutotuneConfig& config);

}  // namespace cirl
