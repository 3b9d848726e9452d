#pragma once

#include "cirl/mdp.hpp"

namespace cirl {

/// (r - min) / (max - min); a constant vector maps to all zeros.
Vector normalize_01(const Vector& r);

/// a^T b / (||a|| ||b||), or 0 when either vector is zero.
double cosine_similarity(const Vector& a, const Vector& b);

/// Cosine similarity after mapping both vectors to [0, 1].
double normalized_cosine_similarity(const Vector& truth, const Vector& recovered);

/// Tolerance under which the expert action still counts as a maximizer.
inline constexpr double kPolicyMatchTolerance = 1e-9;

/// True when the expert action attains max_a p_{i,a}^T v within kPolicyMatchTolerance.
bool action_is_greedy(const Matrix& action_values, int state, int action);

struct PolicyMatch {
    double fraction = 0.0;
    Policy recovered;      // greedy policy of the recovered reward
    bool converged = false;
};

/// Fraction of states where the expert action is optimal under the recovered
/// reward (value iteration on the same model). Throws NumericalError if value
/// iteration does not converge.
PolicyMatch policy_match(const TransitionModel& model, const Policy& expert, const Vector& recovered_reward);

struct MetricsReport {
    double cosine_similarity = 0.0;
    double policy_match_fraction = 0.0;
    double per_segment_argmax_hits = 0.0;
    double wall_time_ms = 0.0;
    int solver_iterations = 0;
};

}  // namespace cirl
