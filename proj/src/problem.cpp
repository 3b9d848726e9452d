#include "cirl/problem.hpp"

#include "cirl/errors.hpp"

#include <algorithm>
#include <cmath>

namespace cirl {

void CirlProblem::validate() const {
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw InvalidInput("lambda must be a finite nonnegative number");
    if (!(reward_bound > 0.0) || !std::isfinite(reward_bound))
        throw InvalidInput("reward bound must be a finite positive number");
    check_policy(model, expert);
}

CirlLayout cirl_layout(int num_states, int num_actions) {
    if (num_states < 1 || num_actions < 1) throw InvalidInput("layout needs at least one state and one action");
    return CirlLayout{num_states, num_actions};
}

namespace {

Eigen::PartialPivLU<Matrix> factor_evaluation(const TransitionModel& model, const Matrix& p_pi) {
    const int m = model.num_states();
    Eigen::PartialPivLU<Matrix> lu(Matrix::Identity(m, m) - model.discount() * p_pi);
    return lu;
}

Matrix advantage_from_factor(const Eigen::PartialPivLU<Matrix>& lu, const Matrix& p_pi, const Matrix& p_a) {
    // (I - gamma P_pi)^T G_a^T = (P_pi - P_a)^T
    const Matrix rhs = (p_pi - p_a).transpose();
    Matrix gt = lu.transpose().solve(rhs);
    if (!gt.allFinite()) throw NumericalError("advantage operator solve produced non-finite values");
    return gt.transpose();
}

}  // namespace

Matrix advantage_operator(const TransitionModel& model, const Policy& expert, int action) {
    const Matrix p_pi = policy_transition_matrix(model, expert);
    const auto lu = factor_evaluation(model, p_pi);
    return advantage_from_factor(lu, p_pi, model.matrix(action));
}

std::vector<Matrix> advantage_operators(const TransitionModel& model, const Policy& expert) {
    const Matrix p_pi = policy_transition_matrix(model, expert);
    const auto lu = factor_evaluation(model, p_pi);
    std::vector<Matrix> ops;
    ops.reserve(model.num_actions());
    for (int a = 0; a < model.num_actions(); ++a) ops.push_back(advantage_from_factor(lu, p_pi, model.matrix(a)));
    return ops;
}

Vector cirl_objective(const CirlLayout& layout, double lambda) {
    const int m = layout.num_states;
    Vector c = Vector::Zero(layout.num_variables());
    if (layout.num_actions > 1) c.segment(layout.s_offset(), m).setOnes();
    c.segment(layout.t_offset(), m).setConstant(lambda);
    return c;
}

LinearProgram assemble(const CirlProblem& problem) {
    problem.validate();
    const TransitionModel& model = problem.model;
    const Policy& expert = problem.expert;
    const int m = model.num_states();
    const int k = model.num_actions();
    const CirlLayout layout = cirl_layout(m, k);

    LinearProgram lp;
    lp.objective = cirl_objective(layout, problem.lambda);
    lp.ineq_matrix = Matrix::Zero(layout.num_rows(), layout.num_variables());
    lp.ineq_rhs = Vector::Zero(layout.num_rows());
    Matrix& g = lp.ineq_matrix;
    Vector& h = lp.ineq_rhs;

    if (k > 1) {
        const std::vector<Matrix> ops = advantage_operators(model, expert);
        int row = layout.margin_begin();
        for (int i = 0; i < m; ++i) {
            for (int a = 0; a < k; ++a) {
                if (a == expert[i]) continue;
                g.row(row).segment(layout.r_offset(), m) = -ops[a].row(i);
                g(row, layout.s_offset() + i) = -1.0;
                ++row;
            }
        }
        for (int a = 0; a < k; ++a) {
            for (int i = 0; i < m; ++i) {
                if (a == expert[i]) continue;
                g.row(row).segment(layout.r_offset(), m) = -ops[a].row(i);
                ++row;
            }
        }
    }

    const int box = layout.box_begin();
    const int l1 = layout.l1_begin();
    for (int i = 0; i < m; ++i) {
        g(box + i, layout.r_offset() + i) = 1.0;
        h[box + i] = problem.reward_bound;
        g(box + m + i, layout.r_offset() + i) = -1.0;
        h[box + m + i] = problem.lower_bound_zero ? 0.0 : problem.reward_bound;

        g(l1 + i, layout.r_offset() + i) = 1.0;
        g(l1 + i, layout.t_offset() + i) = -1.0;
        g(l1 + m + i, layout.r_offset() + i) = -1.0;
        g(l1 + m + i, layout.t_offset() + i) = -1.0;
    }
    return lp;
}

CirlSolution decode(const CirlProblem& problem, const LpSolution& lp_solution) {
    const int m = problem.model.num_states();
    const CirlLayout layout = cirl_layout(m, problem.model.num_actions());
    if (lp_solution.x.size() != layout.num_variables()) throw InvalidInput("LP solution has the wrong length");

    CirlSolution out;
    out.epigraph = lp_solution.x.segment(layout.s_offset(), m);
    out.reward.values = lp_solution.x.segment(layout.r_offset(), m);
    out.reward.bound = problem.reward_bound;
    out.margin_values = -out.epigraph;
    const double margin_weight = layout.num_actions > 1 ? 1.0 : 0.0;
    out.objective_value = margin_weight * out.epigraph.sum() + problem.lambda * out.reward.values.lpNorm<1>();
    out.lp_objective = lp_solution.objective_value;
    out.status = lp_solution.status;
    out.iterations = lp_solution.iterations;
    out.kkt = lp_solution.kkt;
    return out;
}

CirlSolution solve_cirl(const CirlProblem& problem, const LpOptions& options) {
    LpSolver solver(assemble(problem), options);
    const LpSolution sol = solver.solve();
    if (sol.status == LpStatus::infeasible || sol.status == LpStatus::unbounded)
        throw NumericalError("reward-recovery LP reported " + to_string(sol.status) +
                             "; the assembled problem is always feasible and bounded");
    return decode(problem, sol);
}

OptimalityReport verify_optimality(const TransitionModel& model, const Policy& expert, const Vector& reward,
                                   double tol) {
    check_policy(model, expert);
    // G_a r = (P_pi - P_a) v with v the expert's value under r.
    const Vector v = policy_value(model, expert, reward);
    const Matrix q = action_values(model, v);

    OptimalityReport report;
    bool any = false;
    for (int i = 0; i < model.num_states(); ++i) {
        const double expert_q = q(i, expert[i]);
        for (int a = 0; a < model.num_actions(); ++a) {
            if (a == expert[i]) continue;
            const double residual = expert_q - q(i, a);
            report.min_residual = any ? std::min(report.min_residual, residual) : residual;
            any = true;
            if (residual < -tol) report.violations.push_back({i, a, residual});
        }
    }
    report.optimal = report.violations.empty();
    return report;
}

}  // namespace cirl
