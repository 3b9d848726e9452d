#pragma once

#include "cirl/autotune.hpp"
#include "cirl/metrics.hpp"
#include "cirl/problem.hpp"
#include "cirl/subgoal.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace cirl {

enum ExitCode : int {
    kExitOk = 0,
    kExitInputError = 1,    // unreadable file, schema violation, invalid option values
    kExitSolverStatus = 2,  // a solve finished without an optimal status
    kExitBracket = 3,       // autotune bracket does not straddle the transition
    kExitInternal = 4,
};

/// Runs one CLI invocation (args exclude the program name). Diagnostics go to
/// err, progress and timings to out.
int run_pipeline(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Result file writers, exposed for tests.
std::string format_solution(const CirlSolution& sol, double lambda);
std::string format_metrics(const MetricsReport& report, bool normalized_cosine);
std::string format_trace(const std::vector<AutotuneProbe>& trace);

/// Reads the "reward <i> <value>" records back from a solution file.
Vector parse_solution_reward(const std::string& text);

/// Per-segment evaluation produced by the segments subcommand.
struct SegmentReport {
    int index = 0;
    int begin = 0;
    int end = 0;
    SegmentSolution solution;
    int argmax_state = -1;     // global state with the largest recovered reward
    int truth_state = -1;      // -1 when no ground truth was given
    int matched_actions = 0;   // steps whose action is greedy under the local reward
    double wall_time_ms = 0.0;
};

/// Solves every segment (optionally on `threads` workers) and evaluates the
/// argmax and action-match metrics. Results are in segment order.
std::vector<SegmentReport> evaluate_segments(const TransitionModel& model, const std::vector<TrajectorySegment>& segs,
                                             const std::vector<int>* truth, double lambda, double reward_bound,
                                             int threads, int repeats);

/// Median of the samples (mean of the middle two for even counts).
double median(std::vector<double> samples);

}  // namespace cirl
