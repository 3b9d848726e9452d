#include "cirl/metrics.hpp"

#include "cirl/errors.hpp"

#include <algorithm>
#include <cmath>

namespace cirl {

Vector normalize_01(const Vector& r) {
    if (r.size() == 0) return r;
    const double lo = r.minCoeff();
    const double hi = r.maxCoeff();
    if (!(hi > lo)) return Vector::Zero(r.size());
    return (r.array() - lo) / (hi - lo);
}

double cosine_similarity(const Vector& a, const Vector& b) {
    if (a.size() != b.size()) throw InvalidInput("cosine similarity needs vectors of equal length");
    const double na = a.norm();
    const double nb = b.norm();
    if (na == 0.0 || nb == 0.0) return 0.0;
    return std::clamp(a.dot(b) / (na * nb), -1.0, 1.0);
}

double normalized_cosine_similarity(const Vector& truth, const Vector& recovered) {
    return cosine_similarity(normalize_01(truth), normalize_01(recovered));
}

bool action_is_greedy(const Matrix& action_values, int state, int action) {
    const double best = action_values.row(state).maxCoeff();
    return action_values(state, action) >= best - kPolicyMatchTolerance * std::max(1.0, std::abs(best));
}

PolicyMatch policy_match(const TransitionModel& model, const Policy& expert, const Vector& recovered_reward) {
    check_policy(model, expert);
    const ValueIterationResult vi = value_iteration(model, recovered_reward);
    if (!vi.converged) throw NumericalError("value iteration on the recovered reward did not converge");
    const Matrix q = action_values(model, vi.value);

    PolicyMatch out;
    out.recovered = vi.policy;
    out.converged = true;
    int hits = 0;
    for (int i = 0; i < model.num_states(); ++i) hits += action_is_greedy(q, i, expert[i]);
    out.fraction = static_cast<double>(hits) / model.num_states();
    return out;
}

}  // namespace cirl
