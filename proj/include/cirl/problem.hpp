#pragma once

#include "cirl/lp.hpp"
#include "cirl/mdp.hpp"

#include <vector>

namespace cirl {

inline constexpr double kDefaultRewardBound = 100.0;
inline constexpr double kDefaultLambda = 1.0;

/// Reward-recovery problem: expert policy on a known MDP plus the sparsity
/// weight and the reward box.
struct CirlProblem {
    TransitionModel model;
    Policy expert;
    double lambda = kDefaultLambda;
    double reward_bound = kDefaultRewardBound;
    bool lower_bound_zero = false;  // box becomes 0 <= r <= r_max

    /// Throws InvalidInput unless lambda >= 0, r_max > 0 and the expert is valid.
    void validate() const;
};

/// Row and column layout of the assembled LP. Variables are stacked as
/// (s, r, t), each of length m. Rows come in four blocks:
///   margin      m(k-1)  -g_{i,a}^T r - s_i <= 0   (state-major, actions ascending)
///   optimality  m(k-1)  -g_{i,a}^T r <= 0         (action-major, states ascending)
///   box         2m      r <= r_max, -r <= r_max (or -r <= 0)
///   l1          2m      r - t <= 0, -r - t <= 0
/// The first three blocks together hold exactly 2mk rows.
struct CirlLayout {
    int num_states = 0;
    int num_actions = 0;

    int s_offset() const { return 0; }
    int r_offset() const { return num_states; }
    int t_offset() const { return 2 * num_states; }
    int num_variables() const { return 3 * num_states; }

    int margin_begin() const { return 0; }
    int optimality_begin() const { return num_states * (num_actions - 1); }
    int box_begin() const { return 2 * num_states * (num_actions - 1); }
    int l1_begin() const { return box_begin() + 2 * num_states; }
    int num_rows() const { return l1_begin() + 2 * num_states; }

    /// Rows of the margin, optimality and box blocks.
    int core_rows() const { return l1_begin(); }
};

CirlLayout cirl_layout(int num_states, int num_actions);

/// G_a = (P_pi - P_a)(I - gamma P_pi)^{-1}, via a transposed LU solve.
Matrix advantage_operator(const TransitionModel& model, const Policy& expert, int action);

/// G_a for every action, sharing one factorization of I - gamma P_pi.
std::vector<Matrix> advantage_operators(const TransitionModel& model, const Policy& expert);

/// Objective (1, ..., 1, 0, ..., 0, lambda, ..., lambda). With a single
/// action there is no margin term, so the s weights are zero as well.
Vector cirl_objective(const CirlLayout& layout, double lambda);

LinearProgram assemble(const CirlProblem& problem);

struct CirlSolution {
    RewardVector reward;
    Vector epigraph;        // s*
    Vector margin_values;   // -s*: the smallest advantage of the expert action per state
    double objective_value = 0.0;  // 1^T s* + lambda ||r*||_1, recomputed from the decoded vectors
    double lp_objective = 0.0;     // c^T x* as reported by the solver
    LpStatus status = LpStatus::iteration_limit;
    int iterations = 0;
    KktResiduals kkt;
};

/// Splits an LP solution of assemble(problem) back into (s*, r*).
CirlSolution decode(const CirlProblem& problem, const LpSolution& lp_solution);

/// Assembles, solves and decodes. An infeasible or unbounded answer means the
/// assembly is broken (r = s = t = 0 is always feasible and the box keeps the
/// LP bounded) and raises NumericalError; an iteration limit is returned as
/// the status.
CirlSolution solve_cirl(const CirlProblem& problem, const LpOptions& options = {});

struct OptimalityViolation {
    int state;
    int action;
    double residual;  // (g_{state,action})^T r, below -tol
};

struct OptimalityReport {
    bool optimal = true;
    double min_residual = 0.0;  // smallest g_{i,a}^T r over non-expert pairs (0 if none)
    std::vector<OptimalityViolation> violations;
};

/// Checks the Bellman optimality condition G_a r >= -tol for every
/// non-expert action.
OptimalityReport verify_optimality(const TransitionModel& model, const Policy& expert, const Vector& reward,
                                   double tol);

}  // namespace cirl
