#pragma once

#include <Eigen/Dense>

#include <vector>

namespace cirl {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Finite MDP dynamics: one row-stochastic m x m matrix per action plus the
/// discount factor. Immutable after construction; the constructor validates
/// every invariant and throws InvalidInput otherwise.
class TransitionModel {
public:
    static constexpr double kRowSumTolerance = 1e-9;

    TransitionModel(std::vector<Matrix> matrices, double discount);

    int num_states() const { return num_states_; }
    int num_actions() const { return static_cast<int>(matrices_.size()); }
    double discount() const { return discount_; }

    const Matrix& matrix(int action) const;
    const std::vector<Matrix>& matrices() const { return matrices_; }

private:
    std::vector<Matrix> matrices_;
    double discount_;
    int num_states_;
};

/// Deterministic policy, one action index per state.
struct Policy {
    std::vector<int> actions;

    int size() const { return static_cast<int>(actions.size()); }
    int operator[](int state) const { return actions[state]; }
    bool operator==(const Policy&) const = default;
};

/// Reward on states together with the box bound it is meant to respect.
struct RewardVector {
    Vector values;
    double bound = 100.0;

    bool within_bound(double tol) const;
};

/// Throws InvalidInput unless the policy has one valid action per state.
void check_policy(const TransitionModel& model, const Policy& policy);

/// P_pi: row i is row i of P_{pi(i)}.
Matrix policy_transition_matrix(const TransitionModel& model, const Policy& policy);

/// v = (I - gamma P_pi)^{-1} r, computed with a pivoted LU solve.
Vector policy_value(const TransitionModel& model, const Policy& policy, const Vector& reward);

/// Q(i, a) = p_{i,a}^T v for every state and action (m x k).
Matrix action_values(const TransitionModel& model, const Vector& value);

/// Relative tolerance under which two action values are treated as tied.
inline constexpr double kTieTolerance = 1e-12;

/// Index of the largest entry; near-ties (within kTieTolerance relative to
/// max(1, |max|)) resolve to the lowest index.
int argmax_lowest(const Eigen::Ref<const Eigen::RowVectorXd>& row);

/// pi(i) = argmax_a p_{i,a}^T v, ties to the lowest action index.
Policy greedy_policy(const TransitionModel& model, const Vector& value);

struct ValueIterationResult {
    Vector value;
    Policy policy;
    bool converged = false;
    int iterations = 0;
    double residual = 0.0;  // ||v - T v||_inf at the returned v
};

/// Synchronous value iteration v <- max_a (r + gamma P_a v) from v = 0.
/// Stops once the Bellman residual of the current v is <= tol; otherwise
/// returns converged = false after max_iter sweeps.
ValueIterationResult value_iteration(const TransitionModel& model, const Vector& reward,
                                     double tol = 1e-8, int max_iter = 100000);

}  // namespace cirl
