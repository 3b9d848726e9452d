#include "cirl/pipeline.hpp"

#include "cirl/environments.hpp"
#include "cirl/errors.hpp"
#include "cirl/io.hpp"

#include "CLI11.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <thread>

namespace cirl {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
    return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

std::string join_path(const std::string& dir, const std::string& name) {
    return (std::filesystem::path(dir) / name).string();
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw SchemaError("cannot create output directory '" + dir + "': " + ec.message());
}

TransitionModel with_discount(const TransitionModel& model, std::optional<double> gamma) {
    if (!gamma) return model;
    return TransitionModel(model.matrices(), *gamma);
}

int argmax_index(const Vector& v) {
    Eigen::Index idx = 0;
    v.maxCoeff(&idx);
    return static_cast<int>(idx);
}

struct Options {
    std::string output_dir = ".";
    std::string mdp_path;
    std::string trajectory_path;
    std::string solution_path;
    std::optional<double> lambda;
    double rmax = kDefaultRewardBound;
    std::optional<double> gamma;
    std::optional<double> epsilon;
    std::optional<double> lambda_lo;
    std::optional<double> lambda_hi;
    std::optional<double> zero_tol;
    std::uint64_t seed = 1;
    double slip = 0.1;
    std::string slip_mode = "uniform-all";
    int parallel = 1;
    int repeats = 3;
    int side = 0;
    int relocations = 8;
    bool raw_cosine = false;
    bool nonneg = false;
    bool dump_lp = false;
};

int cmd_solve(const Options& opt, std::ostream& out) {
    MdpDocument doc = read_mdp_file(opt.mdp_path);
    if (!doc.expert) throw SchemaError(opt.mdp_path + ": solve needs an expert_policy");
    const double lambda = opt.lambda.value_or(kDefaultLambda);
    CirlProblem problem{with_discount(doc.model, opt.gamma), *doc.expert, lambda, opt.rmax, opt.nonneg};
    problem.validate();

    ensure_dir(opt.output_dir);
    if (opt.dump_lp) {
        std::ostringstream dump;
        write_debug_dump(dump, assemble(problem));
        write_file_atomic(join_path(opt.output_dir, "lp_dump.txt"), dump.str());
    }

    std::vector<double> times;
    CirlSolution sol;
    for (int rep = 0; rep < std::max(1, opt.repeats); ++rep) {
        const auto t0 = Clock::now();
        sol = solve_cirl(problem);
        times.push_back(elapsed_ms(t0));
    }
    write_file_atomic(join_path(opt.output_dir, "solution.txt"), format_solution(sol, lambda));

    MetricsReport report;
    report.solver_iterations = sol.iterations;
    report.wall_time_ms = median(times);
    if (doc.reward) {
        report.cosine_similarity = opt.raw_cosine ? cosine_similarity(*doc.reward, sol.reward.values)
                                                  : normalized_cosine_similarity(*doc.reward, sol.reward.values);
        report.policy_match_fraction = policy_match(problem.model, problem.expert, sol.reward.values).fraction;
        write_file_atomic(join_path(opt.output_dir, "metrics.txt"), format_metrics(report, !opt.raw_cosine));
    }

    out << "status " << to_string(sol.status) << "\n"
        << "objective " << format_real(sol.objective_value) << "\n"
        << "iterations " << sol.iterations << "\n";
    if (doc.reward)
        out << "cosine_similarity " << format_real(report.cosine_similarity) << "\n"
            << "policy_match_fraction " << format_real(report.policy_match_fraction) << "\n";
    out << "wall_time_ms " << format_real(report.wall_time_ms) << " (median of " << times.size() << ")\n";
    return sol.status == LpStatus::optimal ? kExitOk : kExitSolverStatus;
}

int cmd_autotune(const Options& opt, std::ostream& out, std::ostream& err) {
    MdpDocument doc = read_mdp_file(opt.mdp_path);
    if (!doc.expert) throw SchemaError(opt.mdp_path + ": autotune needs an expert_policy");
    CirlProblem problem{with_discount(doc.model, opt.gamma), *doc.expert, 0.0, opt.rmax, opt.nonneg};
    problem.validate();

    AutotuneConfig cfg = AutotuneConfig::defaults(problem.model.num_states(), opt.rmax);
    if (opt.lambda_lo) cfg.lambda_lo = *opt.lambda_lo;
    if (opt.lambda_hi) {
        cfg.lambda_hi = *opt.lambda_hi;
        if (!opt.epsilon) cfg.epsilon = 1e-3 * cfg.lambda_hi;
    }
    if (opt.epsilon) cfg.epsilon = *opt.epsilon;
    if (opt.zero_tol) cfg.zero_tol = *opt.zero_tol;
    cfg.validate();

    ensure_dir(opt.output_dir);
    const auto t0 = Clock::now();
    try {
        const AutotuneResult res = autotune(problem, cfg);
        const double ms = elapsed_ms(t0);
        write_file_atomic(join_path(opt.output_dir, "trace.txt"), format_trace(res.trace));
        write_file_atomic(join_path(opt.output_dir, "solution.txt"), format_solution(res.solution, res.lambda_star));
        out << "lambda_star " << format_real(res.lambda_star) << "\n"
            << "bracket " << format_real(res.bracket_lo) << " " << format_real(res.bracket_hi) << "\n"
            << "solves " << res.num_solves << "\n"
            << "wall_time_ms " << format_real(ms) << "\n";
        return kExitOk;
    } catch (const BracketError& e) {
        write_file_atomic(join_path(opt.output_dir, "trace.txt"), format_trace(e.trace()));
        err << "error: " << e.what() << "\n";
        return kExitBracket;
    }
}

int cmd_segments(const Options& opt, std::ostream& out) {
    MdpDocument doc = read_mdp_file(opt.mdp_path);
    TrajectoryDocument traj = read_trajectory_file(opt.trajectory_path);
    const TransitionModel model = with_discount(doc.model, opt.gamma);
    try {
        traj.trajectory.validate(model);
    } catch (const std::invalid_argument& e) {
        throw SchemaError(opt.trajectory_path + ": " + e.what());
    }
    const std::vector<TrajectorySegment> segs = segment(traj.trajectory);
    if (traj.reward_states && static_cast<int>(traj.reward_states->size()) != static_cast<int>(segs.size()))
        throw SchemaError(opt.trajectory_path + ": reward_states must have one entry per segment");
    const double lambda = opt.lambda.value_or(kDefaultLambda);
    if (!(lambda >= 0.0) || !(opt.rmax > 0.0)) throw InvalidInput("lambda must be >= 0 and rmax > 0");

    const auto reports = evaluate_segments(model, segs, traj.reward_states ? &*traj.reward_states : nullptr, lambda,
                                           opt.rmax, opt.parallel, opt.repeats);

    std::ostringstream main;
    std::ostringstream rewards;
    main << "# cirl segments v1\n"
         << "lambda " << format_real(lambda) << "\n"
         << "reward_bound " << format_real(opt.rmax) << "\n"
         << "num_segments " << reports.size() << "\n";
    rewards << "# cirl segment rewards v1\n";
    int hits = 0;
    int matched = 0;
    int steps = 0;
    bool all_optimal = true;
    std::vector<double> times;
    for (const SegmentReport& rep : reports) {
        const CirlSolution& local = rep.solution.local;
        all_optimal = all_optimal && local.status == LpStatus::optimal;
        hits += rep.truth_state >= 0 && rep.truth_state == rep.argmax_state;
        matched += rep.matched_actions;
        steps += rep.end - rep.begin;
        times.push_back(rep.wall_time_ms);
        main << "segment " << rep.index << " begin " << rep.begin << " end " << rep.end << " states "
             << segs[rep.index].num_local_states() << " status " << to_string(local.status) << " argmax "
             << rep.argmax_state << " truth " << rep.truth_state << " hit "
             << (rep.truth_state >= 0 && rep.truth_state == rep.argmax_state) << " objective "
             << format_real(local.objective_value) << " iterations " << local.iterations << " conflicts "
             << segs[rep.index].conflicts.size() << "\n";
        for (int i = 0; i < segs[rep.index].num_local_states(); ++i)
            rewards << "reward " << rep.index << " " << segs[rep.index].visited_states[i] << " "
                    << format_real(local.reward.values[i]) << "\n";
    }
    const double hit_fraction = traj.reward_states && !reports.empty() ? double(hits) / reports.size() : 0.0;
    const double match_fraction = steps > 0 ? double(matched) / steps : 0.0;
    if (traj.reward_states) main << "argmax_hit_fraction " << format_real(hit_fraction) << "\n";
    main << "action_match_fraction " << format_real(match_fraction) << "\n";

    ensure_dir(opt.output_dir);
    write_file_atomic(join_path(opt.output_dir, "segments.txt"), main.str());
    write_file_atomic(join_path(opt.output_dir, "segment_rewards.txt"), rewards.str());

    out << "segments " << reports.size() << "\n";
    if (traj.reward_states) out << "argmax_hit_fraction " << format_real(hit_fraction) << "\n";
    out << "action_match_fraction " << format_real(match_fraction) << "\n";
    if (!times.empty())
        out << "segment_time_ms median " << format_real(median(times)) << " max "
            << format_real(*std::max_element(times.begin(), times.end())) << "\n";
    return all_optimal ? kExitOk : kExitSolverStatus;
}

int cmd_gen_gridworld(const Options& opt, std::ostream& out) {
    GridworldSpec spec;
    spec.side = opt.side > 0 ? opt.side : 16;
    spec.slip = opt.slip;
    spec.slip_mode = parse_slip_mode(opt.slip_mode);
    spec.discount = opt.gamma.value_or(kGridworldDiscount);
    spec.reward_cells = seeded_reward_layout(spec.side, opt.seed);
    Gridworld gw = build_gridworld(spec);
    const ValueIterationResult vi = value_iteration(gw.model, gw.reward);
    if (!vi.converged) throw NumericalError("value iteration on the ground-truth reward did not converge");

    MdpDocument doc{std::move(gw.model), vi.policy, gw.reward, spec.side};
    ensure_dir(opt.output_dir);
    const std::string path = join_path(opt.output_dir, "gridworld.json");
    write_file_atomic(path, serialize_mdp(doc));
    out << "wrote " << path << "\n";
    return kExitOk;
}

int cmd_gen_snake(const Options& opt, std::ostream& out) {
    SnakeSpec spec;
    spec.side = opt.side > 0 ? opt.side : 12;
    spec.slip = opt.slip;
    spec.slip_mode = parse_slip_mode(opt.slip_mode);
    spec.num_reward_relocations = opt.relocations;
    spec.seed = opt.seed;
    spec.discount = opt.gamma.value_or(kDefaultDiscount);
    SnakeEpisode ep = build_snake_episode(spec);

    MdpDocument mdp{ep.model, std::nullopt, std::nullopt, spec.side};
    TrajectoryDocument traj{ep.trajectory, ep.reward_states};
    ensure_dir(opt.output_dir);
    const std::string mdp_path = join_path(opt.output_dir, "snake_mdp.json");
    const std::string traj_path = join_path(opt.output_dir, "snake_trajectory.json");
    write_file_atomic(mdp_path, serialize_mdp(mdp));
    write_file_atomic(traj_path, serialize_trajectory(traj));
    out << "wrote " << mdp_path << " and " << traj_path << " (" << ep.trajectory.steps.size() << " steps, "
        << ep.trajectory.num_segments() << " segments)\n";
    return kExitOk;
}

int cmd_metrics(const Options& opt, std::ostream& out) {
    const MdpDocument doc = read_mdp_file(opt.mdp_path);
    if (!doc.expert || !doc.reward) throw SchemaError(opt.mdp_path + ": metrics needs expert_policy and reward");
    const Vector recovered = parse_solution_reward(read_text_file(opt.solution_path));
    if (recovered.size() != doc.model.num_states())
        throw SchemaError(opt.solution_path + ": reward length does not match the MDP");
    const TransitionModel model = with_discount(doc.model, opt.gamma);

    MetricsReport report;
    report.cosine_similarity = opt.raw_cosine ? cosine_similarity(*doc.reward, recovered)
                                              : normalized_cosine_similarity(*doc.reward, recovered);
    report.policy_match_fraction = policy_match(model, *doc.expert, recovered).fraction;
    ensure_dir(opt.output_dir);
    write_file_atomic(join_path(opt.output_dir, "metrics.txt"), format_metrics(report, !opt.raw_cosine));
    out << "cosine_similarity " << format_real(report.cosine_similarity) << "\n"
        << "policy_match_fraction " << format_real(report.policy_match_fraction) << "\n";
    return kExitOk;
}

}  // namespace

double median(std::vector<double> samples) {
    if (samples.empty()) return 0.0;
    std::sort(samples.begin(), samples.end());
    const std::size_t n = samples.size();
    return n % 2 ? samples[n / 2] : 0.5 * (samples[n / 2 - 1] + samples[n / 2]);
}

std::string format_solution(const CirlSolution& sol, double lambda) {
    std::ostringstream s;
    const int m = static_cast<int>(sol.reward.values.size());
    s << "# cirl solution v1\n"
      << "status " << to_string(sol.status) << "\n"
      << "lambda " << format_real(lambda) << "\n"
      << "reward_bound " << format_real(sol.reward.bound) << "\n"
      << "objective " << format_real(sol.objective_value) << "\n"
      << "iterations " << sol.iterations << "\n"
      << "num_states " << m << "\n";
    for (int i = 0; i < m; ++i) s << "reward " << i << " " << format_real(sol.reward.values[i]) << "\n";
    for (int i = 0; i < m; ++i) s << "epigraph " << i << " " << format_real(sol.epigraph[i]) << "\n";
    return s.str();
}

std::string format_metrics(const MetricsReport& report, bool normalized_cosine) {
    std::ostringstream s;
    s << "# cirl metrics v1\n"
      << "cosine_mode " << (normalized_cosine ? "normalized" : "raw") << "\n"
      << "cosine_similarity " << format_real(report.cosine_similarity) << "\n"
      << "policy_match_fraction " << format_real(report.policy_match_fraction) << "\n";
    if (report.solver_iterations > 0) s << "solver_iterations " << report.solver_iterations << "\n";
    return s.str();
}

std::string format_trace(const std::vector<AutotuneProbe>& trace) {
    std::ostringstream s;
    s << "# cirl autotune trace v1\n";
    for (std::size_t i = 0; i < trace.size(); ++i)
        s << "probe " << i << " " << format_real(trace[i].lambda) << " " << format_real(trace[i].reward_norm) << " "
          << format_real(trace[i].objective) << " " << to_string(trace[i].status) << "\n";
    return s.str();
}

Vector parse_solution_reward(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    std::vector<std::pair<int, double>> entries;
    int declared = -1;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream fields(line);
        std::string key;
        fields >> key;
        if (key == "num_states") {
            fields >> declared;
        } else if (key == "reward") {
            int i = -1;
            double v = 0.0;
            if (!(fields >> i >> v)) throw SchemaError("malformed reward record: " + line);
            entries.emplace_back(i, v);
        }
    }
    if (declared < 0) throw SchemaError("solution file lacks num_states");
    Vector r = Vector::Zero(declared);
    std::vector<bool> seen(declared, false);
    for (const auto& [i, v] : entries) {
        if (i < 0 || i >= declared || seen[i]) throw SchemaError("reward index out of range or repeated");
        seen[i] = true;
        r[i] = v;
    }
    if (std::find(seen.begin(), seen.end(), false) != seen.end()) throw SchemaError("solution file misses reward entries");
    return r;
}

std::vector<SegmentReport> evaluate_segments(const TransitionModel& model, const std::vector<TrajectorySegment>& segs,
                                             const std::vector<int>* truth, double lambda, double reward_bound,
                                             int threads, int repeats) {
    std::vector<SegmentReport> reports(segs.size());
    auto work = [&](std::size_t j) {
        const TrajectorySegment& seg = segs[j];
        SegmentReport& rep = reports[j];
        rep.index = static_cast<int>(j);
        rep.begin = seg.begin;
        rep.end = seg.begin + static_cast<int>(seg.steps.size());
        std::vector<double> times;
        for (int r = 0; r < std::max(1, repeats); ++r) {
            const auto t0 = Clock::now();
            rep.solution = solve_segment(model, seg, lambda, reward_bound);
            times.push_back(elapsed_ms(t0));
        }
        rep.wall_time_ms = median(times);
        rep.argmax_state = seg.visited_states[argmax_index(rep.solution.local.reward.values)];
        rep.truth_state = truth ? (*truth)[j] : -1;

        // The recovered reward lives on the visited states, so the predicted
        // action is the greedy one in the renormalized local model.
        const TransitionModel local = extract_local_model(model, seg).to_model();
        const ValueIterationResult vi = value_iteration(local, rep.solution.local.reward.values);
        const Matrix q = action_values(local, vi.value);
        for (const Step& st : seg.steps) rep.matched_actions += action_is_greedy(q, seg.local_index(st.state), st.action);
    };

    const int workers = std::clamp(threads, 1, std::max(1, static_cast<int>(segs.size())));
    if (workers == 1) {
        for (std::size_t j = 0; j < segs.size(); ++j) work(j);
        return reports;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (std::size_t j = next++; j < segs.size(); j = next++) work(j);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    return reports;
}

int run_pipeline(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Reward recovery for finite MDPs via l1-regularized linear programming"};
    app.require_subcommand(1);
    Options opt;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--output-dir", opt.output_dir, "Directory for result files");
        sub->add_option("--gamma", opt.gamma, "Override the discount factor");
    };
    auto add_problem = [&](CLI::App* sub) {
        sub->add_option("--mdp", opt.mdp_path, "MDP document (JSON)")->required();
        sub->add_option("--lambda", opt.lambda, "Sparsity weight");
        sub->add_option("--rmax", opt.rmax, "Reward box bound");
        sub->add_flag("--nonneg", opt.nonneg, "Use the box 0 <= r <= rmax");
    };

    CLI::App* solve = app.add_subcommand("solve", "Recover a reward from an expert policy");
    add_common(solve);
    add_problem(solve);
    solve->add_option("--repeats", opt.repeats, "Timing repeats (median reported)");
    solve->add_flag("--raw-cosine", opt.raw_cosine, "Cosine similarity on raw instead of [0,1]-normalized vectors");
    solve->add_flag("--dump-lp", opt.dump_lp, "Also write the assembled LP to lp_dump.txt");

    CLI::App* tune = app.add_subcommand("autotune", "Bisection search for the largest useful lambda");
    add_common(tune);
    add_problem(tune);
    tune->add_option("--lambda-lo", opt.lambda_lo, "Lower end of the lambda bracket");
    tune->add_option("--lambda-hi", opt.lambda_hi, "Upper end of the lambda bracket");
    tune->add_option("--epsilon", opt.epsilon, "Stop once the bracket is this narrow");
    tune->add_option("--zero-tol", opt.zero_tol, "Rewards with max |r| below this count as zero");

    CLI::App* segs = app.add_subcommand("segments", "Recover one reward per trajectory segment");
    add_common(segs);
    segs->add_option("--mdp", opt.mdp_path, "MDP document (JSON)")->required();
    segs->add_option("--trajectory", opt.trajectory_path, "Trajectory document (JSON)")->required();
    segs->add_option("--lambda", opt.lambda, "Sparsity weight");
    segs->add_option("--rmax", opt.rmax, "Reward box bound");
    segs->add_option("--parallel", opt.parallel, "Worker threads for independent segments");
    segs->add_option("--repeats", opt.repeats, "Timing repeats per segment (median reported)");

    CLI::App* gen_grid = app.add_subcommand("gen-gridworld", "Write a seeded gridworld with its expert policy");
    add_common(gen_grid);
    gen_grid->add_option("--side", opt.side, "Grid side length (default 16)");
    gen_grid->add_option("--seed", opt.seed, "Layout seed");
    gen_grid->add_option("--slip", opt.slip, "Random-move probability");
    gen_grid->add_option("--slip-mode", opt.slip_mode, "uniform-all or others-only");

    CLI::App* gen_snake = app.add_subcommand("gen-snake", "Write a seeded greedy-snake episode");
    add_common(gen_snake);
    gen_snake->add_option("--side", opt.side, "Grid side length (default 12)");
    gen_snake->add_option("--relocations", opt.relocations, "Number of reward locations");
    gen_snake->add_option("--seed", opt.seed, "Episode seed");
    gen_snake->add_option("--slip", opt.slip, "Random-move probability");
    gen_snake->add_option("--slip-mode", opt.slip_mode, "uniform-all or others-only");

    CLI::App* metrics = app.add_subcommand("metrics", "Score a recovered reward against the ground truth");
    add_common(metrics);
    metrics->add_option("--mdp", opt.mdp_path, "MDP document with expert_policy and reward")->required();
    metrics->add_option("--solution", opt.solution_path, "solution.txt from solve or autotune")->required();
    metrics->add_flag("--raw-cosine", opt.raw_cosine, "Cosine similarity on raw vectors");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            out << app.help();
            return kExitOk;
        }
        err << "error: " << e.what() << "\n";
        return kExitInputError;
    }

    try {
        if (*solve) return cmd_solve(opt, out);
        if (*tune) return cmd_autotune(opt, out, err);
        if (*segs) return cmd_segments(opt, out);
        if (*gen_grid) return cmd_gen_gridworld(opt, out);
        if (*gen_snake) return cmd_gen_snake(opt, out);
        if (*metrics) return cmd_metrics(opt, out);
    } catch (const SchemaError& e) {
        err << "error: " << e.what() << "\n";
        return kExitInputError;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << "\n";
        return kExitInputError;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << "\n";
        return kExitInternal;
    }
    return kExitInputError;
}

}  // namespace cirl
