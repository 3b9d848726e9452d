#include "cirl/lp.hpp"

#include "cirl/errors.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>

namespace cirl {

namespace {

constexpr int kSparseRowMaxNonzeros = 16;
constexpr double kStepFraction = 0.99;
constexpr int kRefinementSteps = 10;
constexpr double kNearTolerance = 100.0;
constexpr int kStallIterations = 30;

double inf_norm(const Vector& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

/// Largest alpha in (0, 1] keeping v + alpha dv >= 0.
double max_step(const Vector& v, const Vector& dv) {
    double alpha = 1.0;
    for (Eigen::Index i = 0; i < v.size(); ++i)
        if (dv[i] < 0.0) alpha = std::min(alpha, -v[i] / dv[i]);
    return alpha;
}

double max_step(double v, double dv) { return dv < 0.0 ? std::min(1.0, -v / dv) : 1.0; }

/// Cholesky of a symmetric positive semidefinite matrix with a diagonal
/// shift large enough to succeed. Returns the shift used.
double factor_with_shift(const Matrix& m, Eigen::LLT<Matrix>& llt) {
    const double scale = std::max(1.0, m.diagonal().cwiseAbs().maxCoeff());
    double shift = 0.0;
    const Eigen::Index n = m.rows();
    for (int attempt = 0; attempt < 13; ++attempt, shift = shift == 0.0 ? 1e-13 * scale : shift * 100.0) {
        llt.compute(m + shift * Matrix::Identity(n, n));
        if (llt.info() == Eigen::Success) return shift;
    }
    throw NumericalError("normal-equation matrix could not be factored");
}

/// Cholesky of D^{-1/2} M D^{-1/2} + shift I with D = diag(M). The symmetric
/// diagonal scaling keeps the shift relative to every column, which matters
/// once the interior-point weights spread over many orders of magnitude.
class ScaledCholesky {
public:
    void compute(const Matrix& m) {
        scale_ = m.diagonal().cwiseMax(std::numeric_limits<double>::min()).cwiseSqrt().cwiseInverse();
        factor_with_shift(scale_.asDiagonal() * m * scale_.asDiagonal(), llt_);
    }
    Vector solve(const Vector& rhs) const { return scale_.cwiseProduct(llt_.solve(scale_.cwiseProduct(rhs))); }

private:
    Vector scale_;
    Eigen::LLT<Matrix> llt_;
};

/// Solve (m_true) x = rhs using the regularized factor, refined.
Vector refined_solve(const ScaledCholesky& chol, const Matrix& m_true, const Vector& rhs) {
    Vector x = chol.solve(rhs);
    double last = inf_norm(rhs - m_true * x);
    for (int k = 0; k < kRefinementSteps; ++k) {
        const Vector next = x + chol.solve(rhs - m_true * x);
        const double res = inf_norm(rhs - m_true * next);
        if (!(res < last)) break;
        x = next;
        last = res;
    }
    return x;
}

}  // namespace

std::string to_string(LpStatus status) {
    switch (status) {
        case LpStatus::optimal: return "optimal";
        case LpStatus::infeasible: return "infeasible";
        case LpStatus::unbounded: return "unbounded";
        case LpStatus::iteration_limit: return "iteration-limit";
    }
    return "unknown";
}

void LinearProgram::validate() const {
    if (objective.size() == 0) throw InvalidInput("linear program has no variables");
    if (ineq_matrix.cols() != objective.size())
        throw InvalidInput("constraint matrix column count does not match the objective length");
    if (ineq_matrix.rows() != ineq_rhs.size())
        throw InvalidInput("constraint matrix row count does not match the right-hand side length");
    if (!objective.allFinite() || !ineq_matrix.allFinite() || !ineq_rhs.allFinite())
        throw InvalidInput("linear program data contains NaN or Inf");
}

LpSolver::LpSolver(LinearProgram lp, LpOptions options) : lp_(std::move(lp)), options_(options) {
    lp_.validate();
    if (!(options_.feas_tol > 0.0) || !(options_.opt_tol > 0.0))
        throw InvalidInput("LP tolerances must be positive");
    if (options_.max_iter < 1) throw InvalidInput("LP iteration limit must be positive");

    classify_rows();
    Matrix gram(lp_.num_variables(), lp_.num_variables());
    assemble_normal_matrix(Vector::Ones(lp_.num_constraints()), gram);
    factor_with_shift(gram, gram_factor_);
    primal_start_ = gram_factor_.solve(lp_.ineq_matrix.transpose() * lp_.ineq_rhs);
}

void LpSolver::classify_rows() {
    const Matrix& g = lp_.ineq_matrix;
    std::vector<bool> col_used(g.cols(), false);
    for (int i = 0; i < g.rows(); ++i) {
        SparseRow row{i, {}};
        for (int j = 0; j < g.cols(); ++j)
            if (g(i, j) != 0.0) row.entries.emplace_back(j, g(i, j));
        if (static_cast<int>(row.entries.size()) <= kSparseRowMaxNonzeros) {
            sparse_rows_.push_back(std::move(row));
        } else {
            dense_rows_.push_back(i);
            for (const auto& [j, v] : row.entries) col_used[j] = true;
        }
    }
    for (int j = 0; j < g.cols(); ++j)
        if (col_used[j]) dense_cols_.push_back(j);
    dense_block_ = g(dense_rows_, dense_cols_);
}

void LpSolver::assemble_normal_matrix(const Vector& weights, Matrix& out) const {
    const int n = lp_.num_variables();
    out.setZero(n, n);
    if (!dense_rows_.empty()) {
        const Vector root = weights(dense_rows_).cwiseSqrt();
        const Matrix scaled = root.asDiagonal() * dense_block_;
        Matrix block = Matrix::Zero(scaled.cols(), scaled.cols());
        block.selfadjointView<Eigen::Lower>().rankUpdate(scaled.transpose());
        block.triangularView<Eigen::StrictlyUpper>() = block.transpose();
        out(dense_cols_, dense_cols_) = block;
    }
    for (const SparseRow& row : sparse_rows_) {
        const double w = weights[row.row];
        for (const auto& [j, vj] : row.entries)
            for (const auto& [k, vk] : row.entries) out(j, k) += w * vj * vk;
    }
}

LpSolution LpSolver::resolve_with_objective(const Vector& objective) {
    if (objective.size() != lp_.num_variables())
        throw InvalidInput("replacement objective has the wrong length");
    if (!objective.allFinite()) throw InvalidInput("replacement objective contains NaN or Inf");
    lp_.objective = objective;
    return solve();
}

LpSolution LpSolver::solve() {
    const Vector& c = lp_.objective;
    const Matrix& g = lp_.ineq_matrix;
    const Vector& h = lp_.ineq_rhs;
    const int n = lp_.num_variables();
    const int p = lp_.num_constraints();

    const double c_norm = inf_norm(c);
    const double h_norm = inf_norm(h);

    if (p == 0) {
        LpSolution out;
        out.multipliers = Vector::Zero(0);
        out.kkt = {0.0, 0.0, 0.0};
        if (c_norm == 0.0) {
            out.status = LpStatus::optimal;
            out.x = Vector::Zero(n);
        } else {
            out.status = LpStatus::unbounded;
            out.x = -c / c.squaredNorm();
            out.objective_value = -1.0;
        }
        return out;
    }

    // Starting point: least-squares primal slack and minimum-norm dual
    // multiplier, each shifted into the positive orthant.
    Vector x = primal_start_;
    Vector s = h - g * x;
    Vector z = g * (-gram_factor_.solve(c));
    if (p > 0) {
        const double sp = -s.minCoeff();
        if (sp >= 0.0) s.array() += 1.0 + sp;
        const double zp = -z.minCoeff();
        if (zp >= 0.0) z.array() += 1.0 + zp;
    }
    double tau = 1.0;
    double kappa = 1.0;

    LpSolution out;
    out.status = LpStatus::iteration_limit;

    auto record = [&](LpStatus status, const KktResiduals& kkt, int iterations) {
        out.status = status;
        out.kkt = kkt;
        out.iterations = iterations;
        if (status == LpStatus::infeasible) {
            out.x = x / tau;
            out.multipliers = z / (-h.dot(z));
        } else if (status == LpStatus::unbounded) {
            out.x = x / (-c.dot(x));
            out.multipliers = z / tau;
        } else {
            out.x = x / tau;
            out.multipliers = z / tau;
        }
        out.objective_value = c.dot(out.x);
    };

    Matrix normal(n, n);
    ScaledCholesky llt;
    int stalled = 0;

    // Best iterate seen, measured in multiples of the tolerances. Near a
    // degenerate optimum the residuals can hit a rounding floor slightly above
    // the tolerance; a stalled solve within kNearTolerance of it is accepted.
    struct Snapshot {
        Vector x, z;
        double tau = 1.0;
        KktResiduals kkt;
        double merit = std::numeric_limits<double>::infinity();
        int iter = 0;
    } best;
    auto accept_best = [&](int iter) {
        if (best.merit > kNearTolerance) return false;
        x = best.x;
        z = best.z;
        tau = best.tau;
        record(LpStatus::optimal, best.kkt, iter);
        return true;
    };

    for (int iter = 0;; ++iter) {
        const Vector rx = g.transpose() * z + c * tau;
        const Vector rz = s + g * x - h * tau;
        const double cx = c.dot(x);
        const double hz = h.dot(z);
        const double rtau = kappa + cx + hz;
        const double sz = s.dot(z);
        const double mu = (sz + tau * kappa) / (p + 1);

        KktResiduals kkt;
        kkt.primal = inf_norm(rz) / tau / (1.0 + h_norm);
        kkt.dual = inf_norm(rx) / tau / (1.0 + c_norm);
        const double pobj = cx / tau;
        const double dobj = -hz / tau;
        kkt.gap = std::max(sz / (tau * tau), std::abs(pobj - dobj)) /
                  (1.0 + std::min(std::abs(pobj), std::abs(dobj)));

        if (kkt.primal <= options_.feas_tol && kkt.dual <= options_.feas_tol && kkt.gap <= options_.opt_tol) {
            record(LpStatus::optimal, kkt, iter);
            return out;
        }
        const double merit =
            std::max({kkt.primal / options_.feas_tol, kkt.dual / options_.feas_tol, kkt.gap / options_.opt_tol});
        if (merit < best.merit) best = {x, z, tau, kkt, merit, iter};
        // Farkas certificate for primal infeasibility: y = z / (-h^T z).
        if (hz < 0.0 && inf_norm(g.transpose() * z) / (-hz) <= options_.feas_tol) {
            record(LpStatus::infeasible, kkt, iter);
            return out;
        }
        // Recession direction d = x / (-c^T x) with G d <= 0.
        if (cx < 0.0) {
            const Vector gd = g * x / (-cx);
            if (p == 0 || gd.maxCoeff() <= options_.feas_tol) {
                record(LpStatus::unbounded, kkt, iter);
                return out;
            }
        }
        if (iter >= options_.max_iter || stalled >= 5 || iter - best.iter >= kStallIterations) {
            if (!accept_best(iter)) record(LpStatus::iteration_limit, kkt, iter);
            return out;
        }

        // Normal equations G^T W^{-2} G with W^{-2} = diag(z / s).
        const Vector w = z.cwiseQuotient(s);
        assemble_normal_matrix(w, normal);
        llt.compute(normal);

        const Vector x1 = refined_solve(llt, normal, g.transpose() * w.cwiseProduct(h) - c);
        const Vector z1 = w.cwiseProduct(g * x1 - h);
        const double denom = c.dot(x1) + h.dot(z1) - kappa / tau;

        struct Direction {
            Vector dx, ds, dz;
            double dtau, dkappa;
        };
        // Linearized embedding:
        //   G^T dz + c dtau = bx,  G dx + ds - h dtau = bz,  c^T dx + h^T dz + dkappa = btau,
        //   z.ds + s.dz = dc,      kappa dtau + tau dkappa = dk.
        auto solve_direction = [&](const Vector& bx, const Vector& bz, double btau, const Vector& dc, double dk) {
            const Vector bz_red = bz - dc.cwiseQuotient(z);
            const double btau_red = btau - dk / tau;
            const Vector x2 = refined_solve(llt, normal, bx + g.transpose() * w.cwiseProduct(bz_red));
            const Vector z2 = w.cwiseProduct(g * x2 - bz_red);
            Direction d;
            d.dtau = (btau_red - c.dot(x2) - h.dot(z2)) / denom;
            d.dx = x2 + d.dtau * x1;
            d.dz = z2 + d.dtau * z1;
            d.ds = (dc - s.cwiseProduct(d.dz)).cwiseQuotient(z);
            d.dkappa = (dk - kappa * d.dtau) / tau;
            return d;
        };
        auto step_length = [&](const Direction& d) {
            return std::min({max_step(s, d.ds), max_step(z, d.dz), max_step(tau, d.dtau), max_step(kappa, d.dkappa)});
        };

        const Direction affine = solve_direction(-rx, -rz, -rtau, -s.cwiseProduct(z), -tau * kappa);
        const double alpha_aff = step_length(affine);
        const double sigma = std::clamp(std::pow(1.0 - alpha_aff, 3), 0.0, 1.0);

        const double eta = 1.0 - sigma;
        const Vector dc = (-s.cwiseProduct(z) - affine.ds.cwiseProduct(affine.dz)).array() + sigma * mu;
        const double dk = -tau * kappa - affine.dtau * affine.dkappa + sigma * mu;
        const Direction step = solve_direction(-eta * rx, -eta * rz, -eta * rtau, dc, dk);
        const double alpha = std::min(1.0, kStepFraction * step_length(step));

        if (!std::isfinite(alpha) || !step.dx.allFinite() || !step.dz.allFinite() || !step.ds.allFinite() ||
            !std::isfinite(step.dtau) || !std::isfinite(step.dkappa)) {
            if (!accept_best(iter)) record(LpStatus::iteration_limit, kkt, iter);
            return out;
        }
        x += alpha * step.dx;
        s += alpha * step.ds;
        z += alpha * step.dz;
        tau += alpha * step.dtau;
        kappa += alpha * step.dkappa;
        stalled = alpha < 1e-10 ? stalled + 1 : 0;
        // The embedding is homogeneous; keep tau near one so nothing overflows.
        if (tau > 1e8 || tau < 1e-8) {
            const double k = 1.0 / tau;
            x *= k;
            s *= k;
            z *= k;
            kappa *= k;
            tau = 1.0;
        }
    }
}

LpSolution solve(const LinearProgram& lp, const LpOptions& options) {
    LpSolver solver(lp, options);
    return solver.solve();
}

void write_debug_dump(std::ostream& out, const LinearProgram& lp) {
    const auto old_precision = out.precision(17);
    out << "lp " << lp.num_variables() << ' ' << lp.num_constraints() << '\n';
    out << 'c';
    for (Eigen::Index j = 0; j < lp.objective.size(); ++j) out << ' ' << lp.objective[j];
    out << '\n';
    for (int i = 0; i < lp.num_constraints(); ++i) {
        int nnz = 0;
        for (int j = 0; j < lp.num_variables(); ++j) nnz += lp.ineq_matrix(i, j) != 0.0;
        out << "row " << i << ' ' << lp.ineq_rhs[i] << ' ' << nnz;
        for (int j = 0; j < lp.num_variables(); ++j)
            if (lp.ineq_matrix(i, j) != 0.0) out << ' ' << j << ' ' << lp.ineq_matrix(i, j);
        out << '\n';
    }
    out.precision(old_precision);
}

}  // namespace cirl
