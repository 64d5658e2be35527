#include <maupf/error.hpp>
#include <maupf/harness.hpp>

#include <CLI11.hpp>

#include <chrono>
#include <fstream>
#include <iostream>
#include <sstream>

using namespace maupf;

namespace {

constexpr int exit_feasible = 0;
constexpr int exit_infeasible = 1;
constexpr int exit_timeout = 2;
constexpr int exit_usage = 64;

struct UsageError : Error
{
    using Error::Error;
};

// Flags shared by every command that builds a single configuration.
struct InstanceFlags
{
    std::string map_path;
    std::string config_path;
    std::optional<int> agents;
    std::optional<std::string> sensor;
    std::optional<std::string> goals;
    std::optional<std::string> scenario;
    bool traffic_with_default = false;
};

struct BudgetFlags
{
    std::optional<double> timeout;
    std::optional<std::uint64_t> max_nodes;

    auto budget() const -> Budget { return Budget{timeout, max_nodes}; }
};

auto add_instance_flags(CLI::App * cmd, InstanceFlags & f) -> void
{
    cmd->add_option("--map", f.map_path, "Map file ('.' free, '#' blocked)")->required();
    cmd->add_option("--config", f.config_path, "Config file with key = value lines");
    cmd->add_option("-n,--agents", f.agents, "Number of agents");
    cmd->add_option("--sensor", f.sensor, "Sensor range: a radius or 'full'");
    cmd->add_option("--goals", f.goals, "Goal profile, e.g. \"((0,0),(2,3))\"");
    cmd->add_option("--scenario", f.scenario, "none, default, lastmin, myopic, traffic-loc or traffic-free");
    cmd->add_flag("--traffic-with-default", f.traffic_with_default, "Greedy default when a traffic agent sees nobody");
}

auto add_budget_flags(CLI::App * cmd, BudgetFlags & b) -> void
{
    cmd->add_option("--timeout", b.timeout, "Wall-clock limit in seconds")->check(CLI::PositiveNumber);
    cmd->add_option("--max-nodes", b.max_nodes, "Search node limit");
}

auto resolve_scenario(std::optional<Scenario> s, bool with_default) -> Scenario
{
    auto scenario = s.value_or(Scenario{});
    if (with_default) {
        if (! scenario.is_traffic())
            throw UsageError("--traffic-with-default needs a traffic scenario");
        scenario.with_default = true;
    }
    return scenario;
}

auto build_configuration(const InstanceFlags & f) -> Configuration
{
    ConfigFile file;
    if (! f.config_path.empty())
        file = load_config(f.config_path);
    Configuration cfg{GridMap::load(f.map_path), 1, SensorRange::full(), GoalProfile{}, Scenario{}};
    if (f.agents)
        file.agents = *f.agents;
    if (f.sensor)
        file.sensor = parse_sensor(*f.sensor);
    if (f.goals)
        file.goals = GoalProfile{parse_cells(*f.goals)};
    if (f.scenario)
        file.scenario = parse_scenario(*f.scenario);
    if (! file.goals)
        throw UsageError("no goal profile given (use --goals or a config file)");
    cfg.goals = *file.goals;
    cfg.agents = file.agents.value_or(static_cast<int>(cfg.goals.goals.size()));
    cfg.sensor = file.sensor.value_or(SensorRange::full());
    cfg.scenario = resolve_scenario(file.scenario, f.traffic_with_default);
    cfg.validate();
    if (! is_proper(cfg.map, cfg.goals))
        std::cerr << "warning: goal profile " << to_string(cfg.goals)
                  << " is not proper; no feasible policy can exist\n";
    return cfg;
}

auto status_exit(SolveStatus s) -> int
{
    switch (s) {
    case SolveStatus::Feasible: return exit_feasible;
    case SolveStatus::Infeasible: return exit_infeasible;
    case SolveStatus::TimedOut: return exit_timeout;
    }
    return exit_infeasible;
}

auto print_summary(std::ostream & out, const StateSpace & space) -> void
{
    out << "global states: " << space.global_count() << '\n';
    for (int i = 0; i < space.agents(); ++i)
        out << "local states agent " << i << ": " << space.local_count(i) << '\n';
}

auto write_policy_file(const std::string & path, const PolicyProfile & p) -> void
{
    if (path.empty())
        return;
    std::ofstream out(path);
    if (! out)
        throw Error("cannot write policy file '" + path + "'");
    write_policy(out, p);
}

auto load_policy_file(const std::string & path, std::shared_ptr<const StateSpace> space) -> PolicyProfile
{
    std::ifstream in(path);
    if (! in)
        throw Error("cannot open policy file '" + path + "'");
    return read_policy(in, std::move(space));
}

auto split_list(const std::string & text) -> std::vector<std::string>
{
    std::vector<std::string> items;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ','))
        if (! item.empty())
            items.push_back(item);
    return items;
}

auto read_profiles_file(const std::string & path) -> std::vector<GoalProfile>
{
    std::ifstream in(path);
    if (! in)
        throw Error("cannot open profile list '" + path + "'");
    std::vector<GoalProfile> profiles;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos || line.front() == '#')
            continue;
        try {
            profiles.push_back(GoalProfile{parse_cells(line)});
        }
        catch (const std::exception & e) {
            throw FormatError(line_no, e.what());
        }
    }
    return profiles;
}

} // namespace

int main(int argc, char ** argv)
{
    CLI::App app{"Decentralized universal plans for partially observable agents on grid maps"};
    app.require_subcommand(1);

    InstanceFlags inst;
    BudgetFlags bud;
    std::string policy_out;
    std::string policy_in;
    std::optional<std::uint64_t> seed;

    auto * solve_cmd = app.add_subcommand("solve", "Synthesize a feasible policy profile");
    add_instance_flags(solve_cmd, inst);
    add_budget_flags(solve_cmd, bud);
    solve_cmd->add_option("-o,--output", policy_out, "Write the policy profile here");
    solve_cmd->add_option("--seed", seed, "Randomize the value order with this seed");
    bool no_restarts = false;
    solve_cmd->add_flag("--no-restarts", no_restarts, "Single deterministic search without restarts");
    std::vector<std::string> fallback;
    solve_cmd->add_option("--fallback", fallback, "Further scenarios to try, in order, if the first is infeasible")
        ->delimiter(',');

    bool prove_optimal = false;
    auto * optimize_cmd = app.add_subcommand("optimize", "Anytime minimization of sum-of-makespan");
    add_instance_flags(optimize_cmd, inst);
    add_budget_flags(optimize_cmd, bud);
    optimize_cmd->add_option("-o,--output", policy_out, "Write the best policy profile here");
    optimize_cmd->add_option("--initial", policy_in, "Start from this feasible policy file");
    optimize_cmd->add_flag("--prove-optimal", prove_optimal, "Search until optimality is proved (no default timeout)");

    std::string init_text;
    std::size_t max_steps = 0;
    auto * simulate_cmd = app.add_subcommand("simulate", "Run a policy profile from one instantiation");
    add_instance_flags(simulate_cmd, inst);
    simulate_cmd->add_option("--policy", policy_in, "Policy file")->required();
    simulate_cmd->add_option("--init", init_text, "Initial positions, e.g. \"((0,0),(1,1))\"")->required();
    simulate_cmd->add_option("--max-steps", max_steps, "Step budget (default: number of global states + 1)");

    auto * verify_cmd = app.add_subcommand("verify", "Check a policy profile from every instantiation");
    add_instance_flags(verify_cmd, inst);
    verify_cmd->add_option("--policy", policy_in, "Policy file")->required();

    std::string sweep_map;
    int sweep_agents = 2;
    std::string sweep_sensors = "2";
    std::string sweep_scenarios = "none";
    std::string sweep_profiles;
    std::optional<std::size_t> sweep_sample;
    std::uint64_t sweep_seed = 1;
    std::string csv_path;
    std::size_t jobs = 0;
    bool allow_improper = false;
    auto * sweep_cmd = app.add_subcommand("sweep", "Solve every goal profile and count feasible ones");
    sweep_cmd->add_option("--map", sweep_map, "Map file")->required();
    sweep_cmd->add_option("-n,--agents", sweep_agents, "Number of agents")->check(CLI::PositiveNumber);
    sweep_cmd->add_option("--sensors", sweep_sensors, "Comma-separated sensor ranges");
    sweep_cmd->add_option("--scenarios", sweep_scenarios, "Comma-separated scenarios");
    sweep_cmd->add_option("--profiles", sweep_profiles, "File with one goal profile per line");
    sweep_cmd->add_option("--sample", sweep_sample, "Solve a seeded random sample of this many profiles")
        ->check(CLI::PositiveNumber);
    sweep_cmd->add_option("--seed", sweep_seed, "Seed for --sample");
    sweep_cmd->add_option("--csv", csv_path, "Write per-profile rows here");
    sweep_cmd->add_option("-j,--jobs", jobs, "Worker threads (default: MAUPF_JOBS or 1)");
    sweep_cmd->add_flag("--allow-improper", allow_improper, "Solve improper profiles from --profiles too");
    sweep_cmd->add_flag("--no-restarts", no_restarts, "Single deterministic search per solve");
    add_budget_flags(sweep_cmd, bud);
    sweep_cmd->get_option("--profiles")->excludes(sweep_cmd->get_option("--sample"));

    std::uint64_t est_m = 0;
    std::uint64_t est_k = 0;
    std::uint64_t est_n = 0;
    auto * estimate_cmd = app.add_subcommand("estimate", "Upper bound on local states per agent: M * sum C(K,j) (M-K)^(n-1-j)");
    estimate_cmd->add_option("-m,--cells", est_m, "Free cells M")->required();
    estimate_cmd->add_option("-k,--fov", est_k, "Cells K in the field of view, excluding the own cell")->required();
    estimate_cmd->add_option("-n,--agents", est_n, "Number of agents")->required();

    int rm_rows = 0;
    int rm_cols = 0;
    double rm_density = 0.0;
    std::uint64_t rm_seed = 1;
    auto * random_cmd = app.add_subcommand("random-map", "Print a seeded random obstacle map");
    random_cmd->add_option("--rows", rm_rows, "Rows")->required()->check(CLI::PositiveNumber);
    random_cmd->add_option("--cols", rm_cols, "Columns")->required()->check(CLI::PositiveNumber);
    random_cmd->add_option("--density", rm_density, "Fraction of blocked cells")->check(CLI::Range(0.0, 1.0));
    random_cmd->add_option("--seed", rm_seed, "Seed");

    try {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError & e) {
        auto code = app.exit(e);
        return code == 0 ? 0 : exit_usage;
    }

    try {
        if (*solve_cmd) {
            auto cfg = build_configuration(inst);
            auto space = std::make_shared<const StateSpace>(cfg);
            print_summary(std::cout, *space);
            std::vector<Scenario> chain{cfg.scenario};
            for (const auto & s : fallback)
                chain.push_back(parse_scenario(s));
            SolverOptions options;
            options.seed = seed;
            if (no_restarts)
                options.restart_nodes = 0;
            auto outcome = solve_with_restriction_fallback(space, chain, bud.budget(), options);
            if (chain.size() > 1)
                for (const auto & [s, st] : outcome.attempts)
                    std::cout << "attempt " << to_string(s) << ": " << to_string(st) << '\n';
            std::cout << "status: " << to_string(outcome.status) << '\n';
            if (outcome.status == SolveStatus::Feasible) {
                std::cout << "scenario: " << to_string(*outcome.scenario) << '\n';
                std::cout << "cost: " << *outcome.cost << '\n';
                write_policy_file(policy_out, *outcome.policy);
            }
            std::cout << "nodes: " << outcome.stats.nodes << '\n';
            std::cout << "seconds: " << outcome.stats.seconds << '\n';
            return status_exit(outcome.status);
        }

        if (*optimize_cmd) {
            auto cfg = build_configuration(inst);
            auto space = std::make_shared<const StateSpace>(cfg);
            print_summary(std::cout, *space);
            auto budget = bud.budget();
            if (! prove_optimal && ! budget.seconds && ! budget.nodes)
                budget.seconds = 60.0;
            std::optional<PolicyProfile> initial;
            if (! policy_in.empty())
                initial = load_policy_file(policy_in, space);
            SearchProblem problem(build_candidates(space, cfg.scenario));
            auto start = std::chrono::steady_clock::now();
            auto outcome = optimize(problem, budget, initial, [&](const PolicyProfile &, std::uint64_t cost) {
                std::chrono::duration<double> t = std::chrono::steady_clock::now() - start;
                std::cout << "improved cost=" << cost << " t=" << t.count() << std::endl;
            });
            std::cout << "status: " << to_string(outcome.status) << '\n';
            if (outcome.cost) {
                std::cout << "cost: " << *outcome.cost << '\n';
                std::cout << "optimal: " << (outcome.optimal ? "yes" : "no") << '\n';
                write_policy_file(policy_out, *outcome.policy);
            }
            std::cout << "nodes: " << outcome.stats.nodes << '\n';
            std::cout << "seconds: " << outcome.stats.seconds << '\n';
            if (outcome.status == SolveStatus::TimedOut && outcome.cost)
                return exit_timeout;
            return status_exit(outcome.status);
        }

        if (*simulate_cmd) {
            auto cfg = build_configuration(inst);
            auto space = std::make_shared<const StateSpace>(cfg);
            auto policy = load_policy_file(policy_in, space);
            auto steps = max_steps > 0 ? max_steps : space->global_count() + 1;
            auto trace = simulate(policy, parse_global_state(init_text), steps);
            write_trace(std::cout, trace);
            return trace.status == TraceStatus::Goal ? 0 : 1;
        }

        if (*verify_cmd) {
            auto cfg = build_configuration(inst);
            auto space = std::make_shared<const StateSpace>(cfg);
            auto policy = load_policy_file(policy_in, space);
            auto report = verify(policy);
            if (report.feasible) {
                std::cout << "feasible\n";
                std::cout << "cost: " << sum_of_makespan(report) << '\n';
                return exit_feasible;
            }
            const auto & ce = *report.counterexample;
            std::cout << "infeasible: " << to_string(ce.kind) << " from " << to_string(ce.initial) << '\n';
            for (std::size_t t = 0; t < ce.trace.size(); ++t)
                std::cout << "t=" << t << ' ' << to_string(ce.trace[t]) << '\n';
            if (ce.conflict)
                std::cout << "conflict: " << to_string(*ce.conflict) << '\n';
            return exit_infeasible;
        }

        if (*sweep_cmd) {
            ExperimentSpec spec;
            spec.map = GridMap::load(sweep_map);
            spec.agents = sweep_agents;
            for (const auto & s : split_list(sweep_sensors))
                spec.sensors.push_back(parse_sensor(s));
            for (const auto & s : split_list(sweep_scenarios))
                spec.scenarios.push_back(parse_scenario(s));
            if (! sweep_profiles.empty()) {
                spec.source = ProfileSource::Explicit;
                spec.profiles = read_profiles_file(sweep_profiles);
            }
            else if (sweep_sample) {
                spec.source = ProfileSource::RandomSample;
                spec.sample_count = *sweep_sample;
                spec.seed = sweep_seed;
            }
            spec.budget = bud.budget();
            spec.jobs = jobs > 0 ? jobs : jobs_from_environment(1);
            spec.allow_improper = allow_improper;
            if (no_restarts)
                spec.options.restart_nodes = 0;
            auto result = run_sweep(spec);
            if (! csv_path.empty()) {
                std::ofstream out(csv_path);
                if (! out)
                    throw Error("cannot write '" + csv_path + "'");
                write_sweep_csv(out, result);
            }
            for (std::size_t a = 0; a < spec.sensors.size(); ++a)
                for (std::size_t b = 0; b < spec.scenarios.size(); ++b) {
                    auto c = result.counts(a, b);
                    std::cout << "sensor=" << to_string(spec.sensors[a]) << " scenario=" << to_string(spec.scenarios[b])
                              << " feasible/proper/total=" << c.feasible << '/' << c.proper << '/' << c.total << '\n';
                }
            return 0;
        }

        if (*estimate_cmd) {
            std::cout << estimate_local_state_count(est_m, est_k, est_n) << '\n';
            return 0;
        }

        if (*random_cmd) {
            std::cout << random_map(rm_rows, rm_cols, rm_density, rm_seed).to_string();
            return 0;
        }
    }
    catch (const UsageError & e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_usage;
    }
    catch (const std::exception & e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_usage;
    }
    return 0;
}
