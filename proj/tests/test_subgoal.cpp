#include "doctest.h"
#include "oracles.hpp"

#include "cirl/environments.hpp"
#include "cirl/errors.hpp"
#include "cirl/subgoal.hpp"

using namespace cirl;

namespace {

Trajectory make_trajectory(std::vector<Step> steps, std::vector<int> partition) {
    return Trajectory{std::move(steps), std::move(partition)};
}

/// Three-state chain where action 0 leaks 10% of the mass from states 0 and
/// 1 into state 2; action 1 stays.
TransitionModel leaky_chain() {
    Matrix right(3, 3);
    right << 0.5, 0.4, 0.1, 0.3, 0.6, 0.1, 0.0, 0.0, 1.0;
    return TransitionModel({right, Matrix::Identity(3, 3)}, 0.9);
}

}  // namespace

TEST_CASE("trajectory validation") {
    const TransitionModel model = random_mdp(4, 2, 1);
    const std::vector<Step> steps{{0, 1}, {1, 0}, {2, 1}, {3, 0}};
    CHECK_NOTHROW(make_trajectory(steps, {0, 2, 4}).validate(model));
    CHECK_THROWS_AS(make_trajectory(steps, {1, 4}).validate(model), InvalidPartition);
    CHECK_THROWS_AS(make_trajectory(steps, {0, 3}).validate(model), InvalidPartition);
    CHECK_THROWS_AS(make_trajectory(steps, {0, 2, 2, 4}).validate(model), InvalidPartition);
    CHECK_THROWS_AS(make_trajectory(steps, {0, 3, 2, 4}).validate(model), InvalidPartition);
    CHECK_THROWS_AS(make_trajectory(steps, {0}).validate(model), InvalidPartition);
    CHECK_THROWS_AS(make_trajectory({{0, 2}}, {0, 1}).validate(model), InvalidInput);
    CHECK_THROWS_AS(make_trajectory({{4, 0}}, {0, 1}).validate(model), InvalidInput);
    CHECK_THROWS_AS(segment(make_trajectory(steps, {0, 2, 2, 4})), InvalidPartition);
}

TEST_CASE("segmenting a trajectory") {
    SUBCASE("one segment") {
        const auto segs = segment(make_trajectory({{2, 0}, {0, 1}, {2, 0}}, {0, 3}));
        REQUIRE(segs.size() == 1);
        CHECK(segs[0].visited_states == std::vector<int>{0, 2});
        CHECK(segs[0].local_policy == std::vector<int>{1, 0});
        CHECK(segs[0].conflicts.empty());
    }
    SUBCASE("two segments of two steps") {
        const auto segs = segment(make_trajectory({{0, 0}, {1, 1}, {2, 0}, {3, 1}}, {0, 2, 4}));
        REQUIRE(segs.size() == 2);
        CHECK(segs[0].begin == 0);
        CHECK(segs[1].begin == 2);
        CHECK(segs[0].steps.size() == 2);
        CHECK(segs[1].visited_states == std::vector<int>{2, 3});
        CHECK(segs[1].local_index(3) == 1);
        CHECK(segs[1].local_index(0) == -1);
    }
    SUBCASE("conflicts use the majority, then the earliest action") {
        const auto segs = segment(make_trajectory({{5, 2}, {5, 1}, {5, 1}, {7, 3}, {7, 0}}, {0, 5}));
        REQUIRE(segs.size() == 1);
        CHECK(segs[0].local_policy == std::vector<int>{1, 3});
        REQUIRE(segs[0].conflicts.size() == 2);
        CHECK(segs[0].conflicts[0].state == 5);
        CHECK(segs[0].conflicts[0].chosen_action == 1);
        CHECK(segs[0].conflicts[0].counts.at(2) == 1);
        CHECK(segs[0].conflicts[1].chosen_action == 3);
    }
    SUBCASE("segments tile the trajectory") {
        SnakeSpec spec;
        spec.side = 6;
        spec.num_reward_relocations = 5;
        spec.seed = 3;
        const SnakeEpisode ep = build_snake_episode(spec);
        const auto segs = segment(ep.trajectory);
        REQUIRE(segs.size() == 5);
        std::vector<Step> joined;
        for (const auto& seg : segs) {
            CHECK(seg.begin == static_cast<int>(joined.size()));
            joined.insert(joined.end(), seg.steps.begin(), seg.steps.end());
            std::vector<int> states;
            for (const Step& st : seg.steps) states.push_back(st.state);
            std::sort(states.begin(), states.end());
            states.erase(std::unique(states.begin(), states.end()), states.end());
            CHECK(states == seg.visited_states);
        }
        REQUIRE(joined.size() == ep.trajectory.steps.size());
        for (std::size_t t = 0; t < joined.size(); ++t) {
            CHECK(joined[t].state == ep.trajectory.steps[t].state);
            CHECK(joined[t].action == ep.trajectory.steps[t].action);
        }
    }
}

TEST_CASE("local model extraction") {
    SUBCASE("all states keeps the model bit for bit") {
        const TransitionModel model = random_mdp(5, 3, 12, 0.8);
        std::vector<Step> steps;
        for (int i = 0; i < 5; ++i) steps.push_back({i, i % 3});
        const auto segs = segment(make_trajectory(steps, {0, 5}));
        const LocalModel local = extract_local_model(model, segs[0]);
        CHECK(local.discount == model.discount());
        for (int a = 0; a < 3; ++a) CHECK(local.submatrices[a] == model.matrix(a));
    }
    SUBCASE("deterministic exit becomes a self-loop") {
        Matrix p(3, 3);
        p << 0, 0, 1, 0, 0, 1, 0, 0, 1;
        const TransitionModel model({p}, 0.9);
        const auto segs = segment(make_trajectory({{0, 0}, {1, 0}}, {0, 2}));
        const LocalModel local = extract_local_model(model, segs[0]);
        CHECK(local.submatrices[0] == Matrix::Identity(2, 2));
        CHECK_NOTHROW(local.to_model());
    }
    SUBCASE("leaked mass is renormalized") {
        const TransitionModel model = leaky_chain();
        const auto segs = segment(make_trajectory({{0, 0}, {1, 0}}, {0, 2}));
        const LocalModel local = extract_local_model(model, segs[0]);
        Matrix expected(2, 2);
        expected << 0.5 / 0.9, 0.4 / 0.9, 0.3 / 0.9, 0.6 / 0.9;
        CHECK((local.submatrices[0] - expected).cwiseAbs().maxCoeff() <= 1e-15);
        CHECK(local.submatrices[1] == Matrix::Identity(2, 2));
    }
    SUBCASE("rows stay stochastic on adversarial models") {
        for (std::uint64_t seed = 1; seed <= 20; ++seed) {
            SeededRng rng(seed);
            const int m = 6;
            std::vector<Matrix> mats;
            for (int a = 0; a < 3; ++a) {
                Matrix p = Matrix::Zero(m, m);
                for (int i = 0; i < m; ++i) {
                    if (rng.uniform() < 0.5) {
                        p(i, rng.uniform_int(m)) = 1.0;
                    } else {
                        const int j = rng.uniform_int(m);
                        p(i, j) = 1.0 - 1e-13;
                        p(i, (j + 1) % m) += 1e-13;
                    }
                }
                mats.push_back(p);
            }
            const TransitionModel model(mats, 0.95);
            std::vector<Step> steps;
            for (int t = 0; t < 4; ++t) steps.push_back({rng.uniform_int(m), rng.uniform_int(3)});
            const auto segs = segment(make_trajectory(steps, {0, 4}));
            const LocalModel local = extract_local_model(model, segs[0]);
            for (const Matrix& sub : local.submatrices) {
                CHECK((sub.rowwise().sum().array() - 1.0).abs().maxCoeff() <= 1e-9);
                CHECK(sub.minCoeff() >= 0.0);
            }
            CHECK_NOTHROW(local.to_model());
        }
    }
}

TEST_CASE("segment solves") {
    SUBCASE("full subset reproduces the unrelaxed program") {
        const CirlProblem full = oracle::random_cirl_problem(4, 3, 5);
        std::vector<Step> steps;
        for (int i = 3; i >= 0; --i) steps.push_back({i, full.expert[i]});
        const auto segs = segment(make_trajectory(steps, {0, 4}));
        const CirlProblem local = local_problem(full.model, segs[0], full.lambda, full.reward_bound,
                                                full.lower_bound_zero);
        const LinearProgram a = assemble(full);
        const LinearProgram b = assemble(local);
        CHECK(a.objective == b.objective);
        CHECK(a.ineq_matrix == b.ineq_matrix);
        CHECK(a.ineq_rhs == b.ineq_rhs);
    }
    SUBCASE("no alternatives locally gives r = 0") {
        // Both actions have the same dynamics, so no action is better than another.
        const TransitionModel base = random_mdp(4, 1, 3);
        const TransitionModel model({base.matrix(0), base.matrix(0)}, 0.9);
        const auto segs = segment(make_trajectory({{0, 1}, {2, 0}, {3, 1}}, {0, 3}));
        const SegmentSolution sol = solve_segment(model, segs[0], 0.5, 100.0);
        REQUIRE(sol.local.status == LpStatus::optimal);
        CHECK(sol.local.reward.values.cwiseAbs().maxCoeff() <= 1e-6);
    }
    SUBCASE("two-state local problem matches vertex enumeration") {
        for (std::uint64_t seed = 1; seed <= 10; ++seed) {
            const TransitionModel model = random_mdp(5, 2, seed, 0.9);
            const auto segs = segment(make_trajectory({{1, 0}, {3, 1}, {1, 0}}, {0, 3}));
            const CirlProblem local = local_problem(model, segs[0], 0.3, 100.0);
            const SegmentSolution sol = solve_segment(model, segs[0], 0.3, 100.0);
            REQUIRE(sol.local.status == LpStatus::optimal);
            const auto expected = oracle::lp_vertex_min(assemble(local));
            REQUIRE(expected.has_value());
            CHECK(std::abs(sol.local.objective_value - *expected) <= 1e-6);
            CHECK(std::abs(sol.local.objective_value - oracle::cirl_vertex_min(local)) <= 1e-6);
        }
    }
    SUBCASE("global reward is scattered onto the visited states") {
        const TransitionModel model = random_mdp(6, 3, 8, 0.9);
        const auto segs = segment(make_trajectory({{4, 2}, {1, 0}, {5, 1}}, {0, 3}));
        const SegmentSolution sol = solve_segment(model, segs[0], 0.1, 100.0);
        for (int s : {0, 2, 3}) CHECK(sol.global_reward[s] == 0.0);
        for (int i = 0; i < 3; ++i) CHECK(sol.global_reward[segs[0].visited_states[i]] == sol.local.reward.values[i]);
    }
    SUBCASE("snake segment argmax hits its reward cell") {
        SnakeSpec spec;
        spec.side = 8;
        spec.num_reward_relocations = 3;
        spec.seed = 2;
        const SnakeEpisode ep = build_snake_episode(spec);
        const auto segs = segment(ep.trajectory);
        for (std::size_t j = 0; j < segs.size(); ++j) {
            const SegmentSolution sol = solve_segment(ep.model, segs[j], 0.5, 100.0);
            REQUIRE(sol.local.status == LpStatus::optimal);
            Eigen::Index best = 0;
            sol.local.reward.values.maxCoeff(&best);
            CHECK(segs[j].visited_states[best] == ep.reward_states[j]);
        }
    }
}
