#pragma once

#include "cirl/mdp.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace cirl {

/// minimize c^T x subject to G x <= h, x free.
struct LinearProgram {
    Vector objective;    // c, length n
    Matrix ineq_matrix;  // G, p x n
    Vector ineq_rhs;     // h, length p

    int num_variables() const { return static_cast<int>(objective.size()); }
    int num_constraints() const { return static_cast<int>(ineq_matrix.rows()); }

    /// Throws InvalidInput on inconsistent dimensions or non-finite data.
    void validate() const;
};

enum class LpStatus { optimal, infeasible, unbounded, iteration_limit };

std::string to_string(LpStatus status);

/// Scaled KKT residuals of the returned iterate:
///   primal = ||G x + s - h||_inf / (1 + ||h||_inf)   (s >= 0 are the slacks)
///   dual   = ||G^T z + c||_inf / (1 + ||c||_inf)      (z >= 0 are the multipliers)
///   gap    = max(s^T z, |c^T x + h^T z|) / (1 + min(|c^T x|, |h^T z|))
struct KktResiduals {
    double primal = 0.0;
    double dual = 0.0;
    double gap = 0.0;
};

struct LpSolution {
    Vector x;
    Vector multipliers;  // z, one per inequality row
    double objective_value = 0.0;
    LpStatus status = LpStatus::iteration_limit;
    int iterations = 0;
    KktResiduals kkt;
};

struct LpOptions {
    double feas_tol = 1e-8;
    double opt_tol = 1e-8;
    int max_iter = 100000;
};

/// Dense primal-dual interior-point solver on the homogeneous self-dual
/// embedding of the inequality-form LP, with Mehrotra predictor-corrector
/// steps. Infeasibility and unboundedness are reported only once a Farkas
/// certificate (y >= 0, G^T y = 0, h^T y = -1) or a recession direction
/// (G d <= 0, c^T d = -1) has been verified to feas_tol.
///
/// The constraint data is fixed at construction; the objective may be
/// swapped between solves. Every solve starts from the same deterministic
/// point, so identical inputs give bit-identical results.
class LpSolver {
public:
    explicit LpSolver(LinearProgram lp, LpOptions options = {});

    LpSolution solve();

    /// Replaces c and solves again. Reuses the factorization of G^T G that
    /// defines the starting point.
    LpSolution resolve_with_objective(const Vector& objective);

    const LinearProgram& program() const { return lp_; }
    const LpOptions& options() const { return options_; }

private:
    void classify_rows();
    void assemble_normal_matrix(const Vector& weights, Matrix& out) const;

    LinearProgram lp_;
    LpOptions options_;
    Eigen::LLT<Matrix> gram_factor_;  // G^T G + delta I
    Vector primal_start_;             // least-squares x for G x ~ h

    // Rows with few nonzeros are accumulated into the normal matrix by
    // explicit outer products, the rest through a dense block product
    // restricted to the columns they touch.
    std::vector<int> dense_rows_;
    std::vector<int> dense_cols_;
    Matrix dense_block_;
    struct SparseRow {
        int row;
        std::vector<std::pair<int, double>> entries;
    };
    std::vector<SparseRow> sparse_rows_;
};

/// One-shot convenience wrapper.
LpSolution solve(const LinearProgram& lp, const LpOptions& options = {});

/// Plain-text dump of (c, G, h) for offline inspection:
///   lp <n> <p>
///   c <c_0> ... <c_{n-1}>
///   row <i> <h_i> <nnz> (<col> <value>)*
/// Values are printed with 17 significant digits.
void write_debug_dump(std::ostream& out, const LinearProgram& lp);

}  // namespace cirl
