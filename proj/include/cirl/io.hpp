#pragma once

// File formats.
//
// MDP document (JSON):
//   {
//     "format": "cirl-mdp", "version": 1,
//     "num_states": m, "num_actions": k, "discount": gamma,
//     "transitions": [ one entry per action, either
//         {"dense":  [[p_00, ..., p_0(m-1)], ...]}            (m rows of m)
//       or {"sparse": [[row, col, p], ...]} ],                (missing entries are 0)
//     "expert_policy": [a_0, ..., a_(m-1)],                   (optional)
//     "reward": [r_0, ..., r_(m-1)],                          (optional ground truth)
//     "grid_side": side                                        (optional)
//   }
//
// Trajectory document (JSON):
//   {
//     "format": "cirl-trajectory", "version": 1,
//     "steps": [[state, action], ...],
//     "partition": [0, t_1, ..., n],
//     "reward_states": [s_0, ..., s_(p-1)]                    (optional ground truth)
//   }
//
// Result files are line-oriented text: "# <header>" then one record per line,
// fields separated by single spaces, reals printed with 12 significant digits.

#include "cirl/mdp.hpp"
#include "cirl/subgoal.hpp"

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace cirl {

class SchemaError : public std::runtime_error {
public:
    explicit SchemaError(const std::string& what) : std::runtime_error(what) {}
};

struct MdpDocument {
    TransitionModel model;
    std::optional<Policy> expert;
    std::optional<Vector> reward;
    std::optional<int> grid_side;
};

struct TrajectoryDocument {
    Trajectory trajectory;
    std::optional<std::vector<int>> reward_states;
};

MdpDocument parse_mdp(const std::string& text);
std::string serialize_mdp(const MdpDocument& doc, bool sparse = true);
MdpDocument read_mdp_file(const std::string& path);

TrajectoryDocument parse_trajectory(const std::string& text);
std::string serialize_trajectory(const TrajectoryDocument& doc);
TrajectoryDocument read_trajectory_file(const std::string& path);

std::string read_text_file(const std::string& path);

/// Writes to "<path>.tmp" and renames over path.
void write_file_atomic(const std::string& path, const std::string& content);

/// 12 significant digits, "%.12g" style; negative zero prints as 0.
std::string format_real(double value);

}  // namespace cirl
