#pragma once

#include "cirl/mdp.hpp"
#include "cirl/problem.hpp"

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace cirl {

struct Step {
    int state;
    int action;
    bool operator==(const Step&) const = default;
};

/// A demonstration split into consecutive pieces. Segment j covers steps
/// [partition[j], partition[j+1]); partition runs from 0 to steps.size().
struct Trajectory {
    std::vector<Step> steps;
    std::vector<int> partition;

    int num_segments() const { return partition.empty() ? 0 : static_cast<int>(partition.size()) - 1; }

    /// Throws InvalidPartition or InvalidInput (bad indices for the model).
    void validate(const TransitionModel& model) const;
};

class InvalidPartition : public std::invalid_argument {
public:
    explicit InvalidPartition(const std::string& what) : std::invalid_argument(what) {}
};

/// A state visited with more than one action inside a segment.
struct ActionConflict {
    int state;
    int chosen_action;
    std::map<int, int> counts;  // action -> occurrences
};

struct TrajectorySegment {
    int begin = 0;  // first step index in the trajectory
    std::vector<Step> steps;
    std::vector<int> visited_states;  // ascending global indices
    std::vector<int> local_policy;    // action per visited state, same order
    std::vector<ActionConflict> conflicts;

    int num_local_states() const { return static_cast<int>(visited_states.size()); }
    /// Local index of a global state, or -1 when the state was not visited.
    int local_index(int global_state) const;
};

/// Splits the trajectory along its partition. A state seen with several
/// actions takes the most frequent one; ties go to the action seen first.
std::vector<TrajectorySegment> segment(const Trajectory& trajectory);

/// Submatrices of every P_a restricted to rows and columns of the visited
/// states, with each row renormalized to sum 1. Rows whose mass inside the
/// subset is at most kZeroRowMass become a self-loop.
inline constexpr double kZeroRowMass = 1e-12;

struct LocalModel {
    std::vector<Matrix> submatrices;
    double discount = 0.0;

    TransitionModel to_model() const { return TransitionModel(submatrices, discount); }
};

LocalModel extract_local_model(const TransitionModel& model, const TrajectorySegment& seg);

struct SegmentSolution {
    CirlSolution local;   // over the visited states, in segment order
    Vector global_reward; // length m, zero outside the visited states
};

/// The reward-recovery problem restricted to one segment.
CirlProblem local_problem(const TransitionModel& model, const TrajectorySegment& seg, double lambda,
                          double reward_bound, bool lower_bound_zero = false);

SegmentSolution solve_segment(const TransitionModel& model, const TrajectorySegment& seg, double lambda,
                              double reward_bound, const LpOptions& options = {});

}  // namespace cirl
