#include "doctest.h"
#include "oracles.hpp"

#include "cirl/autotune.hpp"
#include "cirl/environments.hpp"
#include "cirl/errors.hpp"

#include <algorithm>

using namespace cirl;

namespace {

CirlProblem three_state_problem() {
    TransitionModel model = random_mdp(3, 2, 42, 0.9);
    Vector r(3);
    r << 0.0, 1.0, 0.2;
    Policy expert = value_iteration(model, r).policy;
    return CirlProblem{std::move(model), std::move(expert), 0.0, 100.0, false};
}

double reward_norm_at(const CirlProblem& base, double lambda) {
    CirlProblem p = base;
    p.lambda = lambda;
    return solve_cirl(p).reward.values.cwiseAbs().maxCoeff();
}

}  // namespace

TEST_CASE("config defaults and validation") {
    const AutotuneConfig cfg = AutotuneConfig::defaults(7, 50.0);
    CHECK(cfg.lambda_lo == 0.0);
    CHECK(cfg.lambda_hi == 70.0);
    CHECK(cfg.epsilon == doctest::Approx(0.07));
    CHECK(cfg.zero_tol == doctest::Approx(5e-5));
    CHECK_NOTHROW(cfg.validate());

    AutotuneConfig bad = cfg;
    bad.lambda_lo = 80.0;
    CHECK_THROWS_AS(bad.validate(), InvalidInput);
    bad = cfg;
    bad.lambda_lo = -1.0;
    CHECK_THROWS_AS(bad.validate(), InvalidInput);
    bad = cfg;
    bad.epsilon = 0.0;
    CHECK_THROWS_AS(bad.validate(), InvalidInput);
    bad = cfg;
    bad.zero_tol = -1.0;
    CHECK_THROWS_AS(bad.validate(), InvalidInput);
    CHECK_THROWS_AS(autotune(three_state_problem(), bad), InvalidInput);
}

TEST_CASE("bisection lands next to the swept transition") {
    const CirlProblem p = three_state_problem();
    AutotuneConfig cfg = AutotuneConfig::defaults(3, p.reward_bound);
    cfg.epsilon = 1e-4 * cfg.lambda_hi;

    // Oracle: coarse sweep, then a finer sweep inside the bracketing cell.
    const double zero_tol = cfg.zero_tol;
    double lo = 0.0;
    double hi = cfg.lambda_hi;
    for (double step : {1.0, 0.01}) {
        double prev = lo;
        for (double lambda = lo + step; lambda <= hi + 1e-12; lambda += step) {
            if (reward_norm_at(p, lambda) <= zero_tol) {
                lo = prev;
                hi = lambda;
                break;
            }
            prev = lambda;
        }
    }
    REQUIRE(hi - lo <= 0.01 + 1e-12);

    const AutotuneResult res = autotune(p, cfg);
    CHECK(res.bracket_valid);
    CHECK(res.lambda_star == res.bracket_lo);
    CHECK(res.bracket_hi - res.bracket_lo <= cfg.epsilon);
    CHECK(res.lambda_star >= lo - 0.01);
    CHECK(res.lambda_star <= hi);
    CHECK(res.solution.reward.values.cwiseAbs().maxCoeff() > cfg.zero_tol);
    CHECK(res.num_solves <= max_autotune_solves(cfg));
    CHECK(res.num_solves == static_cast<int>(res.trace.size()));

    SUBCASE("zero rewards persist at larger lambda along the trace") {
        auto trace = res.trace;
        std::sort(trace.begin(), trace.end(), [](const auto& a, const auto& b) { return a.lambda < b.lambda; });
        bool seen_zero = false;
        for (const auto& probe : trace) {
            if (seen_zero) CHECK(probe.reward_norm <= cfg.zero_tol);
            seen_zero = seen_zero || probe.reward_norm <= cfg.zero_tol;
            CHECK(probe.status == LpStatus::optimal);
        }
    }
    SUBCASE("fresh solve at lambda_star reproduces the objective") {
        CirlProblem q = p;
        q.lambda = res.lambda_star;
        CHECK(std::abs(solve_cirl(q).objective_value - res.solution.objective_value) <= 1e-6);
    }
    SUBCASE("above the bracket the reward is zero") {
        for (double factor : {1.0, 1.5, 10.0})
            CHECK(reward_norm_at(p, factor * res.bracket_hi) <= 1e-6 * p.reward_bound);
    }
}

TEST_CASE("epsilon wider than the bracket returns after two solves") {
    const CirlProblem p = three_state_problem();
    AutotuneConfig cfg = AutotuneConfig::defaults(3, p.reward_bound);
    cfg.epsilon = cfg.lambda_hi - cfg.lambda_lo;
    const AutotuneResult res = autotune(p, cfg);
    CHECK(res.num_solves == 2);
    CHECK(res.lambda_star == cfg.lambda_lo);
    CHECK(max_autotune_solves(cfg) == 2);
}

TEST_CASE("invalid brackets") {
    const CirlProblem p = three_state_problem();
    SUBCASE("lambda_hi too small") {
        AutotuneConfig cfg = AutotuneConfig::defaults(3, p.reward_bound);
        cfg.lambda_hi = 1e-6;
        cfg.epsilon = 1e-8;
        try {
            autotune(p, cfg);
            FAIL("expected BracketError");
        } catch (const BracketError& e) {
            CHECK(e.trace().size() == 2);
            CHECK(std::string(e.what()).find("increase lambda_hi") != std::string::npos);
        }
    }
    SUBCASE("only r = 0 at lambda_lo") {
        AutotuneConfig cfg = AutotuneConfig::defaults(3, p.reward_bound);
        cfg.lambda_lo = 0.9 * cfg.lambda_hi;
        CHECK_THROWS_AS(autotune(p, cfg), BracketError);
    }
    SUBCASE("single action has no nonzero solution") {
        const CirlProblem q{random_mdp(3, 1, 4), Policy{{0, 0, 0}}, 0.0, 100.0, false};
        CHECK_THROWS_AS(autotune(q, AutotuneConfig::defaults(3, 100.0)), BracketError);
    }
}

TEST_CASE("solve-count bound") {
    AutotuneConfig cfg;
    cfg.lambda_lo = 0.0;
    cfg.lambda_hi = 30.0;
    cfg.epsilon = 0.003;
    CHECK(max_autotune_solves(cfg) == 2 + 14);
}
