#include "doctest.h"

#include "cirl/environments.hpp"
#include "cirl/io.hpp"
#include "cirl/pipeline.hpp"

#include <filesystem>
#include <sstream>

using namespace cirl;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run run(std::vector<std::string> args) {
    std::ostringstream out;
    std::ostringstream err;
    const int code = run_pipeline(args, out, err);
    return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("cirl_cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

/// Value of "<key> <value>" in a result file.
double field(const std::string& text, const std::string& key) {
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        std::istringstream fields(line);
        std::string k;
        double v;
        if (fields >> k && k == key && fields >> v) return v;
    }
    FAIL("missing field " << key);
    return 0.0;
}

}  // namespace

TEST_CASE("usage errors") {
    CHECK(run({}).code == kExitInputError);
    CHECK(run({"frobnicate"}).code == kExitInputError);
    CHECK(run({"solve"}).code == kExitInputError);
    CHECK(run({"solve", "--mdp", "/nonexistent/file.json"}).code == kExitInputError);
    CHECK(run({"--help"}).code == kExitOk);
}

TEST_CASE("small gridworld end to end") {
    const fs::path dir = scratch("grid");
    const std::string d = dir.string();
    REQUIRE(run({"gen-gridworld", "--side", "5", "--seed", "3", "--output-dir", d}).code == kExitOk);
    const std::string mdp = (dir / "gridworld.json").string();
    const MdpDocument doc = read_mdp_file(mdp);
    CHECK(doc.model.num_states() == 25);
    CHECK(doc.grid_side == 5);

    const Run solved = run({"solve", "--mdp", mdp, "--lambda", "2", "--rmax", "100", "--output-dir", d,
                            "--repeats", "1", "--dump-lp"});
    REQUIRE(solved.code == kExitOk);
    const std::string solution = read_text_file((dir / "solution.txt").string());
    CHECK(solution.rfind("# cirl solution v1\n", 0) == 0);
    CHECK(field(solution, "num_states") == 25);
    CHECK(parse_solution_reward(solution).size() == 25);
    const std::string metrics = read_text_file((dir / "metrics.txt").string());
    CHECK(field(metrics, "policy_match_fraction") >= 0.0);
    CHECK(fs::exists(dir / "lp_dump.txt"));

    SUBCASE("metrics subcommand agrees with solve") {
        const fs::path mdir = dir / "m";
        REQUIRE(run({"metrics", "--mdp", mdp, "--solution", (dir / "solution.txt").string(), "--output-dir",
                     mdir.string()})
                    .code == kExitOk);
        // The solution file carries 12 significant digits, so agreement is to that precision.
        const std::string again = read_text_file((mdir / "metrics.txt").string());
        CHECK(field(again, "cosine_similarity") == doctest::Approx(field(metrics, "cosine_similarity")).epsilon(1e-9));
        CHECK(field(again, "policy_match_fraction") == field(metrics, "policy_match_fraction"));
    }
    SUBCASE("autotune") {
        const Run tuned = run({"autotune", "--mdp", mdp, "--output-dir", d});
        CHECK(tuned.code == kExitOk);
        CHECK(read_text_file((dir / "trace.txt").string()).rfind("# cirl autotune trace v1\n", 0) == 0);
    }
    SUBCASE("autotune with an inverted bracket") {
        const Run bad = run({"autotune", "--mdp", mdp, "--lambda-lo", "5", "--lambda-hi", "1", "--output-dir", d});
        CHECK(bad.code == kExitInputError);
        CHECK(bad.err.find("lambda_lo") != std::string::npos);
    }
    SUBCASE("autotune with a bracket that misses the transition") {
        const Run bad = run({"autotune", "--mdp", mdp, "--lambda-hi", "1e-9", "--epsilon", "1e-12", "--output-dir", d});
        CHECK(bad.code == kExitBracket);
    }
    SUBCASE("negative lambda") {
        CHECK(run({"solve", "--mdp", mdp, "--lambda", "-1", "--output-dir", d}).code == kExitInputError);
    }
    fs::remove_all(dir);
}

TEST_CASE("snake segments end to end") {
    const fs::path dir = scratch("snake");
    const std::string d = dir.string();
    REQUIRE(run({"gen-snake", "--side", "6", "--relocations", "4", "--seed", "2", "--output-dir", d}).code ==
            kExitOk);
    const std::string mdp = (dir / "snake_mdp.json").string();
    const std::string traj = (dir / "snake_trajectory.json").string();
    const Run seg = run({"segments", "--mdp", mdp, "--trajectory", traj, "--lambda", "0.5", "--output-dir", d,
                         "--parallel", "2", "--repeats", "1"});
    REQUIRE(seg.code == kExitOk);
    const std::string report = read_text_file((dir / "segments.txt").string());
    CHECK(field(report, "num_segments") == 4);
    CHECK(field(report, "argmax_hit_fraction") == 1.0);

    SUBCASE("parallel and sequential runs write the same files") {
        const fs::path seq = dir / "seq";
        REQUIRE(run({"segments", "--mdp", mdp, "--trajectory", traj, "--lambda", "0.5", "--output-dir", seq.string(),
                     "--repeats", "1"})
                    .code == kExitOk);
        CHECK(read_text_file((seq / "segments.txt").string()) == report);
        CHECK(read_text_file((seq / "segment_rewards.txt").string()) ==
              read_text_file((dir / "segment_rewards.txt").string()));
    }
    SUBCASE("trajectory referencing unknown states") {
        TrajectoryDocument bad;
        bad.trajectory.steps = {{100, 0}};
        bad.trajectory.partition = {0, 1};
        const std::string path = (dir / "bad.json").string();
        write_file_atomic(path, serialize_trajectory(bad));
        CHECK(run({"segments", "--mdp", mdp, "--trajectory", path, "--output-dir", d}).code == kExitInputError);
    }
    fs::remove_all(dir);
}

TEST_CASE("result formats") {
    CirlSolution sol;
    sol.reward.values = Vector::LinSpaced(3, -1.0, 1.0);
    sol.epigraph = Vector::Zero(3);
    sol.status = LpStatus::optimal;
    const std::string text = format_solution(sol, 0.5);
    CHECK(parse_solution_reward(text) == sol.reward.values);
    CHECK_THROWS_AS(parse_solution_reward("reward 0 1\n"), SchemaError);
    CHECK_THROWS_AS(parse_solution_reward("num_states 2\nreward 0 1\n"), SchemaError);
    CHECK_THROWS_AS(parse_solution_reward("num_states 1\nreward 3 1\n"), SchemaError);

    const std::string trace = format_trace({{0.5, 2.0, -1.0, LpStatus::optimal}});
    CHECK(trace == "# cirl autotune trace v1\nprobe 0 0.5 2 -1 optimal\n");
    CHECK(median({3.0, 1.0, 2.0}) == 2.0);
    CHECK(median({4.0, 1.0}) == 2.5);
    CHECK(median({}) == 0.0);
}
