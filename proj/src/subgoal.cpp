#include "cirl/subgoal.hpp"

#include "cirl/errors.hpp"

#include <algorithm>

namespace cirl {

void Trajectory::validate(const TransitionModel& model) const {
    for (std::size_t t = 0; t < steps.size(); ++t) {
        const Step& st = steps[t];
        if (st.state < 0 || st.state >= model.num_states() || st.action < 0 || st.action >= model.num_actions())
            throw InvalidInput("trajectory step " + std::to_string(t) + " has an out-of-range state or action");
    }
    if (partition.size() < 2) throw InvalidPartition("partition needs at least two indices");
    if (partition.front() != 0) throw InvalidPartition("partition must start at 0");
    if (partition.back() != static_cast<int>(steps.size()))
        throw InvalidPartition("partition must end at the number of steps");
    for (std::size_t j = 0; j + 1 < partition.size(); ++j)
        if (partition[j + 1] <= partition[j])
            throw InvalidPartition("partition indices must be strictly increasing (empty segment at " +
                                   std::to_string(j) + ")");
}

int TrajectorySegment::local_index(int global_state) const {
    const auto it = std::lower_bound(visited_states.begin(), visited_states.end(), global_state);
    if (it == visited_states.end() || *it != global_state) return -1;
    return static_cast<int>(it - visited_states.begin());
}

std::vector<TrajectorySegment> segment(const Trajectory& trajectory) {
    const auto& part = trajectory.partition;
    if (part.size() < 2 || part.front() != 0 || part.back() != static_cast<int>(trajectory.steps.size()))
        throw InvalidPartition("partition must run from 0 to the number of steps");

    std::vector<TrajectorySegment> out;
    out.reserve(part.size() - 1);
    for (std::size_t j = 0; j + 1 < part.size(); ++j) {
        if (part[j + 1] <= part[j]) throw InvalidPartition("empty segment " + std::to_string(j));
        TrajectorySegment seg;
        seg.begin = part[j];
        seg.steps.assign(trajectory.steps.begin() + part[j], trajectory.steps.begin() + part[j + 1]);

        // state -> (action -> count), plus first-seen position per (state, action)
        std::map<int, std::map<int, int>> counts;
        std::map<std::pair<int, int>, int> first_seen;
        for (std::size_t t = 0; t < seg.steps.size(); ++t) {
            const Step& st = seg.steps[t];
            ++counts[st.state][st.action];
            first_seen.try_emplace({st.state, st.action}, static_cast<int>(t));
        }
        for (const auto& [state, per_action] : counts) {
            int chosen = -1;
            for (const auto& [action, n] : per_action) {
                if (chosen < 0) {
                    chosen = action;
                    continue;
                }
                const int best = per_action.at(chosen);
                if (n > best || (n == best && first_seen[{state, action}] < first_seen[{state, chosen}]))
                    chosen = action;
            }
            seg.visited_states.push_back(state);
            seg.local_policy.push_back(chosen);
            if (per_action.size() > 1) seg.conflicts.push_back({state, chosen, per_action});
        }
        out.push_back(std::move(seg));
    }
    return out;
}

LocalModel extract_local_model(const TransitionModel& model, const TrajectorySegment& seg) {
    const auto& idx = seg.visited_states;
    const int n = seg.num_local_states();
    for (int s : idx)
        if (s < 0 || s >= model.num_states()) throw InvalidInput("segment visits a state outside the model");

    LocalModel local;
    local.discount = model.discount();
    local.submatrices.reserve(model.num_actions());
    for (int a = 0; a < model.num_actions(); ++a) {
        const Matrix& full = model.matrix(a);
        Matrix sub = full(idx, idx);
        for (int i = 0; i < n; ++i) {
            const double mass = sub.row(i).sum();
            // Rows that lose no mass stay bit-identical to the global model.
            if (mass == full.row(idx[i]).sum()) continue;
            if (mass > kZeroRowMass) {
                sub.row(i) /= mass;
            } else {
                sub.row(i).setZero();
                sub(i, i) = 1.0;
            }
        }
        local.submatrices.push_back(std::move(sub));
    }
    return local;
}

CirlProblem local_problem(const TransitionModel& model, const TrajectorySegment& seg, double lambda,
                          double reward_bound, bool lower_bound_zero) {
    if (seg.local_policy.size() != seg.visited_states.size())
        throw InvalidInput("segment policy does not cover its visited states");
    return CirlProblem{extract_local_model(model, seg).to_model(), Policy{seg.local_policy}, lambda, reward_bound,
                       lower_bound_zero};
}

SegmentSolution solve_segment(const TransitionModel& model, const TrajectorySegment& seg, double lambda,
                              double reward_bound, const LpOptions& options) {
    SegmentSolution out;
    out.local = solve_cirl(local_problem(model, seg, lambda, reward_bound), options);
    out.global_reward = Vector::Zero(model.num_states());
    for (int i = 0; i < seg.num_local_states(); ++i) out.global_reward[seg.visited_states[i]] = out.local.reward.values[i];
    return out;
}

}  // namespace cirl
