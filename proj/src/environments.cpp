#include "cirl/environments.hpp"

#include "cirl/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace cirl {

double SeededRng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

int SeededRng::uniform_int(int upper) {
    if (upper < 1) throw InvalidInput("uniform_int needs a positive upper bound");
    const std::uint64_t range = static_cast<std::uint64_t>(upper);
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % range;
    std::uint64_t draw;
    do {
        draw = engine_();
    } while (draw >= limit);
    return static_cast<int>(draw % range);
}

double SeededRng::exponential() { return -std::log1p(-uniform()); }

std::string to_string(SlipMode mode) { return mode == SlipMode::uniform_all ? "uniform-all" : "others-only"; }

SlipMode parse_slip_mode(const std::string& text) {
    if (text == "uniform-all") return SlipMode::uniform_all;
    if (text == "others-only") return SlipMode::others_only;
    throw InvalidInput("unknown slip mode '" + text + "' (expected uniform-all or others-only)");
}

int grid_move(int side, int cell, int action) {
    const int row = cell / side;
    const int col = cell % side;
    switch (action) {
        case kLeft: return col > 0 ? cell - 1 : cell;
        case kRight: return col + 1 < side ? cell + 1 : cell;
        case kUp: return row > 0 ? cell - side : cell;
        case kDown: return row + 1 < side ? cell + side : cell;
        case kStay: return cell;
        default: throw InvalidInput("gridworld action out of range");
    }
}

namespace {

TransitionModel grid_dynamics(int side, double slip, SlipMode mode, double discount) {
    if (side < 1) throw InvalidInput("grid side must be positive");
    if (!(slip >= 0.0 && slip < 1.0)) throw InvalidInput("slip must lie in [0, 1)");
    const int m = side * side;
    std::vector<Matrix> mats(kGridActions, Matrix::Zero(m, m));
    for (int a = 0; a < kGridActions; ++a) {
        for (int cell = 0; cell < m; ++cell) {
            mats[a](cell, grid_move(side, cell, a)) += 1.0 - slip;
            for (int d = 0; d < kGridActions; ++d) {
                if (mode == SlipMode::uniform_all)
                    mats[a](cell, grid_move(side, cell, d)) += slip / kGridActions;
                else if (d != a)
                    mats[a](cell, grid_move(side, cell, d)) += slip / (kGridActions - 1);
            }
        }
    }
    return TransitionModel(std::move(mats), discount);
}

int sample_row(SeededRng& rng, const Eigen::Ref<const Eigen::RowVectorXd>& row) {
    const double u = rng.uniform();
    double acc = 0.0;
    int last = 0;
    for (Eigen::Index j = 0; j < row.size(); ++j) {
        if (row[j] <= 0.0) continue;
        acc += row[j];
        last = static_cast<int>(j);
        if (u < acc) return last;
    }
    return last;
}

}  // namespace

Gridworld build_gridworld(const GridworldSpec& spec) {
    TransitionModel model = grid_dynamics(spec.side, spec.slip, spec.slip_mode, spec.discount);
    Vector reward = Vector::Zero(model.num_states());
    for (const RewardCell& rc : spec.reward_cells) {
        if (rc.cell < 0 || rc.cell >= model.num_states()) throw InvalidInput("reward cell outside the grid");
        reward[rc.cell] = rc.value;
    }
    return Gridworld{std::move(model), std::move(reward)};
}

std::vector<RewardCell> seeded_reward_layout(int side, std::uint64_t seed) {
    if (side < 1) throw InvalidInput("grid side must be positive");
    SeededRng rng(seed);
    const int m = side * side;
    const int count = std::min(m, 2);
    std::vector<RewardCell> cells;
    while (static_cast<int>(cells.size()) < count) {
        const int cell = rng.uniform_int(m);
        if (std::any_of(cells.begin(), cells.end(), [&](const RewardCell& rc) { return rc.cell == cell; })) continue;
        cells.push_back({cell, 0.5 + 0.5 * rng.uniform()});
    }
    std::sort(cells.begin(), cells.end(), [](const RewardCell& a, const RewardCell& b) { return a.cell < b.cell; });
    return cells;
}

SnakeEpisode build_snake_episode(const SnakeSpec& spec) {
    if (spec.num_reward_relocations < 1) throw InvalidInput("snake needs at least one reward location");
    TransitionModel model = grid_dynamics(spec.side, spec.slip, spec.slip_mode, spec.discount);
    const int m = model.num_states();
    const int cap = spec.max_steps_per_segment > 0 ? spec.max_steps_per_segment : 50 * m;
    SeededRng rng(spec.seed);

    auto draw_other = [&](int exclude) {
        if (m == 1) return 0;
        int cell = rng.uniform_int(m - 1);
        return cell >= exclude ? cell + 1 : cell;
    };

    int state = spec.start_cell ? *spec.start_cell : rng.uniform_int(m);
    if (state < 0 || state >= m) throw InvalidInput("snake start cell outside the grid");
    int goal = spec.first_reward_cell ? *spec.first_reward_cell : draw_other(state);
    if (goal < 0 || goal >= m) throw InvalidInput("snake reward cell outside the grid");

    SnakeEpisode ep{std::move(model), {}, {}};
    ep.trajectory.partition.push_back(0);
    for (int seg = 0; seg < spec.num_reward_relocations; ++seg) {
        if (seg > 0) goal = draw_other(state);
        Vector reward = Vector::Zero(m);
        reward[goal] = 1.0;
        const ValueIterationResult vi = value_iteration(ep.model, reward);
        if (!vi.converged) throw GenerationError("value iteration did not converge for snake segment");

        for (int steps = 0;; ++steps) {
            if (steps >= cap)
                throw GenerationError("snake did not reach its reward within " + std::to_string(cap) + " steps");
            const int action = vi.policy[state];
            ep.trajectory.steps.push_back({state, action});
            if (state == goal) break;
            state = sample_row(rng, ep.model.matrix(action).row(state));
        }
        ep.trajectory.partition.push_back(static_cast<int>(ep.trajectory.steps.size()));
        ep.reward_states.push_back(goal);
    }
    return ep;
}

TransitionModel random_mdp(int num_states, int num_actions, std::uint64_t seed, double discount) {
    if (num_states < 1 || num_actions < 1) throw InvalidInput("random MDP needs at least one state and action");
    SeededRng rng(seed);
    std::vector<Matrix> mats(num_actions, Matrix(num_states, num_states));
    for (auto& p : mats) {
        for (int i = 0; i < num_states; ++i) {
            for (int j = 0; j < num_states; ++j) p(i, j) = rng.exponential();
            p.row(i) /= p.row(i).sum();
        }
    }
    return TransitionModel(std::move(mats), discount);
}

}  // namespace cirl
