#pragma once

#include "cirl/mdp.hpp"
#include "cirl/subgoal.hpp"

#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace cirl {

inline constexpr double kDefaultDiscount = 0.95;
/// Short horizon used for the static gridworld. With long horizons the
/// lambda = 2 solution is dominated by spurious reward pairs.
inline constexpr double kGridworldDiscount = 0.2;

/// Gridworld actions, in index order.
enum GridAction : int { kLeft = 0, kRight = 1, kUp = 2, kDown = 3, kStay = 4 };
inline constexpr int kGridActions = 5;

/// How the slip probability is spread:
///   uniform_all  - slip mass spread over all 5 moves, the intended one included
///   others_only  - slip mass spread over the 4 non-intended moves
enum class SlipMode { uniform_all, others_only };

std::string to_string(SlipMode mode);
SlipMode parse_slip_mode(const std::string& text);

struct RewardCell {
    int cell;
    double value;
};

/// Square grid, cells numbered row-major (cell = row * side + col); "up"
/// decreases the row. Moves off the grid leave the agent in place.
struct GridworldSpec {
    int side = 16;
    double slip = 0.1;
    SlipMode slip_mode = SlipMode::uniform_all;
    std::vector<RewardCell> reward_cells;
    double discount = kGridworldDiscount;
};

struct Gridworld {
    TransitionModel model;
    Vector reward;
};

Gridworld build_gridworld(const GridworldSpec& spec);

/// Successor cell of a deterministic move.
int grid_move(int side, int cell, int action);

/// Seeded sparse ground-truth layout: two distinct cells with values in [0.5, 1).
std::vector<RewardCell> seeded_reward_layout(int side, std::uint64_t seed);

struct SnakeSpec {
    int side = 12;
    double slip = 0.1;
    SlipMode slip_mode = SlipMode::uniform_all;
    int num_reward_relocations = 8;  // number of reward locations, one segment each
    std::uint64_t seed = 0;
    double discount = kDefaultDiscount;
    std::optional<int> start_cell;         // drawn uniformly when absent
    std::optional<int> first_reward_cell;  // drawn uniformly (excluding the start) when absent
    int max_steps_per_segment = 0;         // 0 means 50 * side * side
};

struct SnakeEpisode {
    TransitionModel model;
    Trajectory trajectory;
    std::vector<int> reward_states;  // ground-truth rewarded cell per segment
};

class GenerationError : public std::runtime_error {
public:
    explicit GenerationError(const std::string& what) : std::runtime_error(what) {}
};

/// Greedy-snake demonstration: the expert follows the optimal policy for a
/// single rewarded cell until it stands on it (that step is recorded too),
/// then the reward moves to a uniformly drawn different cell.
SnakeEpisode build_snake_episode(const SnakeSpec& spec);

/// Rows drawn uniformly from the probability simplex (normalized
/// exponentials), reproducible from the seed on every platform.
TransitionModel random_mdp(int num_states, int num_actions, std::uint64_t seed, double discount = kDefaultDiscount);

/// mt19937_64-backed draws with a fixed, library-independent mapping.
class SeededRng {
public:
    explicit SeededRng(std::uint64_t seed) : engine_(seed) {}
    double uniform();              // [0, 1)
    int uniform_int(int upper);    // [0, upper)
    double exponential();          // rate 1

private:
    std::mt19937_64 engine_;
};

}  // namespace cirl
