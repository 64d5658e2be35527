#include <maupf/error.hpp>
#include <maupf/harness.hpp>

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <istream>
#include <mutex>
#include <ostream>
#include <random>
#include <sstream>
#include <thread>

namespace maupf {

namespace {

auto trim(std::string_view s) -> std::string_view
{
    while (! s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
        s.remove_prefix(1);
    while (! s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
        s.remove_suffix(1);
    return s;
}

auto parse_bool(std::string_view s) -> std::optional<bool>
{
    if (s == "true" || s == "yes" || s == "1" || s == "on")
        return true;
    if (s == "false" || s == "no" || s == "0" || s == "off")
        return false;
    return std::nullopt;
}

} // namespace

auto parse_config(std::istream & in) -> ConfigFile
{
    ConfigFile cfg;
    std::optional<bool> with_default;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        auto hash = line.find('#');
        auto content = trim(std::string_view(line).substr(0, hash));
        if (content.empty())
            continue;
        auto eq = content.find('=');
        if (eq == std::string_view::npos)
            throw FormatError(line_no, "expected 'key = value'");
        auto key = trim(content.substr(0, eq));
        auto value = trim(content.substr(eq + 1));
        try {
            if (key == "n" || key == "agents") {
                auto parsed = std::stoi(std::string(value));
                if (parsed < 1)
                    throw InvalidConfiguration("agent count must be positive");
                cfg.agents = parsed;
            }
            else if (key == "sensor")
                cfg.sensor = parse_sensor(value);
            else if (key == "goals")
                cfg.goals = GoalProfile{parse_cells(value)};
            else if (key == "scenario")
                cfg.scenario = parse_scenario(value);
            else if (key == "traffic_with_default") {
                with_default = parse_bool(value);
                if (! with_default)
                    throw InvalidConfiguration("expected true or false");
            }
            else
                throw InvalidConfiguration("unknown key '" + std::string(key) + "'");
        }
        catch (const FormatError &) {
            throw;
        }
        catch (const std::exception & e) {
            throw FormatError(line_no, e.what());
        }
    }
    if (with_default && *with_default) {
        if (! cfg.scenario || ! cfg.scenario->is_traffic())
            throw FormatError(line_no, "traffic_with_default needs a traffic scenario");
        cfg.scenario->with_default = true;
    }
    return cfg;
}

auto load_config(const std::string & path) -> ConfigFile
{
    std::ifstream in(path);
    if (! in)
        throw Error("cannot open config file '" + path + "'");
    return parse_config(in);
}

auto enumerate_profiles(const GridMap & map, int agents) -> std::vector<GoalProfile>
{
    if (agents < 1)
        throw InvalidConfiguration("agent count must be positive");
    Configuration cfg{map, agents, SensorRange::full(), GoalProfile{}, Scenario{}};
    if (static_cast<std::size_t>(agents) > map.free_count())
        return {};
    std::vector<GoalProfile> result;
    for (auto & s : enumerate_global_states(cfg))
        result.push_back(GoalProfile{std::move(s.positions)});
    return result;
}

auto sample_profiles(const GridMap & map, int agents, std::size_t count, std::uint64_t seed) -> std::vector<GoalProfile>
{
    auto all = enumerate_profiles(map, agents);
    count = std::min(count, all.size());
    std::mt19937_64 rng(seed);
    std::vector<std::size_t> order(all.size());
    for (std::size_t k = 0; k < order.size(); ++k)
        order[k] = k;
    for (std::size_t k = 0; k < count; ++k)
        std::swap(order[k], order[k + static_cast<std::size_t>(rng() % (order.size() - k))]);
    order.resize(count);
    std::sort(order.begin(), order.end());
    std::vector<GoalProfile> result;
    for (auto k : order)
        result.push_back(all[k]);
    return result;
}

auto ExperimentSpec::validate() const -> void
{
    if (agents < 1)
        throw InvalidConfiguration("agent count must be positive");
    if (sensors.empty() || scenarios.empty())
        throw InvalidConfiguration("a sweep needs at least one sensor range and one scenario");
    if (source == ProfileSource::RandomSample && sample_count < 1)
        throw InvalidConfiguration("sample count must be at least 1");
    if (source == ProfileSource::Explicit)
        for (const auto & g : profiles) {
            if (g.goals.size() != static_cast<std::size_t>(agents))
                throw InvalidConfiguration("profile " + to_string(g) + " does not have one goal per agent");
            if (! allow_improper && ! is_proper(map, g))
                throw InvalidConfiguration("profile " + to_string(g) + " is not proper (use --allow-improper)");
        }
    for (const auto & s : scenarios)
        if (s.is_traffic() && agents != 2)
            throw UnsupportedConfiguration("traffic scenarios need exactly two agents");
}

auto SweepResult::counts(std::size_t sensor_index, std::size_t scenario_index) const -> SweepCounts
{
    SweepCounts c;
    c.total = rows.size();
    auto column = sensor_index * scenarios.size() + scenario_index;
    for (const auto & row : rows) {
        if (row.proper)
            ++c.proper;
        if (! row.cells.empty() && row.cells[column].status == SolveStatus::Feasible)
            ++c.feasible;
    }
    return c;
}

auto run_sweep(const ExperimentSpec & spec) -> SweepResult
{
    spec.validate();
    std::vector<GoalProfile> profiles;
    switch (spec.source) {
    case ProfileSource::AllProper: profiles = enumerate_profiles(spec.map, spec.agents); break;
    case ProfileSource::Explicit: profiles = spec.profiles; break;
    case ProfileSource::RandomSample:
        profiles = sample_profiles(spec.map, spec.agents, spec.sample_count, spec.seed);
        break;
    }

    SweepResult result{spec.sensors, spec.scenarios, std::vector<SweepRow>(profiles.size())};
    std::atomic<std::size_t> next{0};
    std::mutex error_mutex;
    std::exception_ptr error;

    auto worker = [&] {
        while (true) {
            auto k = next.fetch_add(1);
            if (k >= profiles.size())
                return;
            try {
                auto & row = result.rows[k];
                row.profile = profiles[k];
                row.proper = is_proper(spec.map, row.profile);
                bool solve_it = row.proper || (spec.source == ProfileSource::Explicit && spec.allow_improper);
                if (! solve_it)
                    continue;
                for (auto sensor : spec.sensors) {
                    auto space = std::make_shared<const StateSpace>(
                        Configuration{spec.map, spec.agents, sensor, row.profile, Scenario{}});
                    for (const auto & scenario : spec.scenarios) {
                        SearchProblem problem(build_candidates(space, scenario));
                        auto outcome = solve(problem, spec.budget, spec.options);
                        row.cells.push_back(SweepCell{sensor, scenario, outcome.status, outcome.cost,
                            outcome.stats.nodes, outcome.stats.seconds});
                    }
                }
            }
            catch (...) {
                std::lock_guard lock(error_mutex);
                if (! error)
                    error = std::current_exception();
                next = profiles.size();
                return;
            }
        }
    };

    auto jobs = std::max<std::size_t>(1, spec.jobs);
    if (jobs == 1)
        worker();
    else {
        std::vector<std::thread> threads;
        for (std::size_t t = 0; t < jobs; ++t)
            threads.emplace_back(worker);
        for (auto & t : threads)
            t.join();
    }
    if (error)
        std::rethrow_exception(error);
    return result;
}

auto write_sweep_csv(std::ostream & out, const SweepResult & result) -> void
{
    out << "profile,proper,sensor,scenario,status,cost,nodes,seconds\n";
    for (const auto & row : result.rows) {
        std::size_t column = 0;
        for (auto sensor : result.sensors)
            for (const auto & scenario : result.scenarios) {
                out << '"' << to_string(row.profile) << "\"," << (row.proper ? 1 : 0) << ',' << to_string(sensor)
                    << ',' << to_string(scenario) << ',';
                if (row.cells.empty())
                    out << "improper,,0,0";
                else {
                    const auto & cell = row.cells[column];
                    out << to_string(cell.status) << ',';
                    if (cell.cost)
                        out << *cell.cost;
                    out << ',' << cell.nodes << ',' << std::fixed << std::setprecision(4) << cell.seconds;
                    out.unsetf(std::ios::floatfield);
                }
                out << '\n';
                ++column;
            }
    }
}

auto read_sweep_csv(std::istream & in) -> std::vector<CsvRecord>
{
    std::vector<CsvRecord> records;
    std::string line;
    std::size_t line_no = 0;
    if (! std::getline(in, line) || trim(line) != "profile,proper,sensor,scenario,status,cost,nodes,seconds")
        throw FormatError(1, "missing sweep CSV header");
    ++line_no;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty())
            continue;
        if (line.front() != '"')
            throw FormatError(line_no, "profile field must be quoted");
        auto close = line.find('"', 1);
        if (close == std::string::npos || close + 1 >= line.size() || line[close + 1] != ',')
            throw FormatError(line_no, "unterminated profile field");
        CsvRecord rec;
        try {
            rec.profile = GoalProfile{parse_cells(line.substr(1, close - 1))};
            std::vector<std::string> fields;
            std::stringstream rest(line.substr(close + 2));
            std::string field;
            while (std::getline(rest, field, ','))
                fields.push_back(field);
            if (fields.size() == 6 && line.back() == ',')
                fields.emplace_back();
            if (fields.size() != 7)
                throw InvalidConfiguration("expected 8 columns");
            rec.proper = fields[0] == "1";
            rec.sensor = fields[1];
            rec.scenario = fields[2];
            rec.status = fields[3];
            if (! fields[4].empty())
                rec.cost = std::stoull(fields[4]);
            rec.nodes = std::stoull(fields[5]);
            rec.seconds = std::stod(fields[6]);
        }
        catch (const std::exception & e) {
            throw FormatError(line_no, e.what());
        }
        records.push_back(std::move(rec));
    }
    return records;
}

auto jobs_from_environment(std::size_t fallback) -> std::size_t
{
    if (const char * env = std::getenv("MAUPF_JOBS")) {
        try {
            auto parsed = std::stol(env);
            if (parsed > 0)
                return static_cast<std::size_t>(parsed);
        }
        catch (const std::exception &) {
        }
    }
    return fallback;
}

} // namespace maupf
