#include "cirl/mdp.hpp"

#include "cirl/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace cirl {

TransitionModel::TransitionModel(std::vector<Matrix> matrices, double discount)
    : matrices_(std::move(matrices)), discount_(discount), num_states_(0) {
    if (matrices_.empty()) throw InvalidInput("transition model needs at least one action");
    if (!(discount_ >= 0.0 && discount_ < 1.0))
        throw InvalidInput("discount must lie in [0, 1), got " + std::to_string(discount_));
    num_states_ = static_cast<int>(matrices_.front().rows());
    if (num_states_ < 1) throw InvalidInput("transition model needs at least one state");

    for (std::size_t a = 0; a < matrices_.size(); ++a) {
        const Matrix& p = matrices_[a];
        if (p.rows() != num_states_ || p.cols() != num_states_)
            throw InvalidInput("transition matrix " + std::to_string(a) + " is not " +
                               std::to_string(num_states_) + "x" + std::to_string(num_states_));
        if (!p.allFinite()) throw InvalidInput("transition matrix " + std::to_string(a) + " has non-finite entries");
        if ((p.array() < 0.0).any())
            throw InvalidInput("transition matrix " + std::to_string(a) + " has negative entries");
        for (int i = 0; i < num_states_; ++i) {
            const double sum = p.row(i).sum();
            if (std::abs(sum - 1.0) > kRowSumTolerance)
                throw InvalidInput("row " + std::to_string(i) + " of transition matrix " + std::to_string(a) +
                                   " sums to " + std::to_string(sum));
        }
    }
}

const Matrix& TransitionModel::matrix(int action) const {
    if (action < 0 || action >= num_actions()) throw InvalidInput("action index out of range");
    return matrices_[action];
}

bool RewardVector::within_bound(double tol) const {
    return values.size() == 0 || values.cwiseAbs().maxCoeff() <= bound + tol;
}

void check_policy(const TransitionModel& model, const Policy& policy) {
    if (policy.size() != model.num_states())
        throw InvalidInput("policy has " + std::to_string(policy.size()) + " entries, model has " +
                           std::to_string(model.num_states()) + " states");
    for (int i = 0; i < policy.size(); ++i) {
        if (policy[i] < 0 || policy[i] >= model.num_actions())
            throw InvalidInput("policy action at state " + std::to_string(i) + " is out of range");
    }
}

Matrix policy_transition_matrix(const TransitionModel& model, const Policy& policy) {
    check_policy(model, policy);
    const int m = model.num_states();
    Matrix p(m, m);
    for (int i = 0; i < m; ++i) p.row(i) = model.matrix(policy[i]).row(i);
    return p;
}

Vector policy_value(const TransitionModel& model, const Policy& policy, const Vector& reward) {
    const int m = model.num_states();
    if (reward.size() != m) throw InvalidInput("reward length does not match the number of states");
    Matrix system = Matrix::Identity(m, m) - model.discount() * policy_transition_matrix(model, policy);
    Eigen::PartialPivLU<Matrix> lu(system);
    Vector v = lu.solve(reward);

    const double scale = std::max(1.0, reward.size() ? reward.cwiseAbs().maxCoeff() : 0.0);
    const double residual = (system * v - reward).cwiseAbs().maxCoeff();
    if (!std::isfinite(residual) || residual > 1e-8 * scale)
        throw NumericalError("policy evaluation residual " + std::to_string(residual) + " exceeds tolerance");
    return v;
}

Matrix action_values(const TransitionModel& model, const Vector& value) {
    if (value.size() != model.num_states()) throw InvalidInput("value length does not match the number of states");
    Matrix q(model.num_states(), model.num_actions());
    for (int a = 0; a < model.num_actions(); ++a) q.col(a).noalias() = model.matrix(a) * value;
    return q;
}

int argmax_lowest(const Eigen::Ref<const Eigen::RowVectorXd>& row) {
    const double best = row.maxCoeff();
    const double slack = kTieTolerance * std::max(1.0, std::abs(best));
    for (Eigen::Index a = 0; a < row.size(); ++a)
        if (row[a] >= best - slack) return static_cast<int>(a);
    return 0;
}

Policy greedy_policy(const TransitionModel& model, const Vector& value) {
    const Matrix q = action_values(model, value);
    Policy pi;
    pi.actions.resize(model.num_states());
    for (int i = 0; i < model.num_states(); ++i) pi.actions[i] = argmax_lowest(q.row(i));
    return pi;
}

ValueIterationResult value_iteration(const TransitionModel& model, const Vector& reward, double tol,
                                     int max_iter) {
    if (!(tol > 0.0)) throw InvalidInput("value iteration tolerance must be positive");
    if (max_iter < 1) throw InvalidInput("value iteration needs a positive iteration limit");
    if (reward.size() != model.num_states()) throw InvalidInput("reward length does not match the number of states");

    const double gamma = model.discount();
    ValueIterationResult out;
    Vector v = Vector::Zero(model.num_states());
    for (int it = 0;; ++it) {
        const Matrix q = action_values(model, v);
        Vector backup = reward + gamma * q.rowwise().maxCoeff();
        const double residual = (backup - v).cwiseAbs().maxCoeff();
        if (residual <= tol || it >= max_iter) {
            out.converged = residual <= tol;
            out.iterations = it;
            out.residual = residual;
            break;
        }
        v = std::move(backup);
    }
    out.policy = greedy_policy(model, v);
    out.value = std::move(v);
    return out;
}

}  // namespace cirl
