#pragma once

#include <maupf/solver.hpp>

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace maupf {

/// Contents of a `key = value` configuration file. Every key is optional so that command-line
/// flags can fill or override them. Recognised keys: n, sensor, goals, scenario, traffic_with_default.
struct ConfigFile
{
    std::optional<int> agents;
    std::optional<SensorRange> sensor;
    std::optional<GoalProfile> goals;
    std::optional<Scenario> scenario;
};

auto parse_config(std::istream & in) -> ConfigFile;
auto load_config(const std::string & path) -> ConfigFile;

/// Every ordered tuple of n distinct free cells, lexicographic in free-cell order.
auto enumerate_profiles(const GridMap & map, int agents) -> std::vector<GoalProfile>;

/// `count` distinct profiles drawn from enumerate_profiles() by a seeded partial Fisher-Yates
/// shuffle on raw mt19937_64 output, returned in lexicographic order.
auto sample_profiles(const GridMap & map, int agents, std::size_t count, std::uint64_t seed) -> std::vector<GoalProfile>;

enum class ProfileSource
{
    AllProper,
    Explicit,
    RandomSample
};

struct ExperimentSpec
{
    GridMap map = GridMap::empty(1, 1);
    int agents = 2;
    std::vector<SensorRange> sensors;
    std::vector<Scenario> scenarios;
    ProfileSource source = ProfileSource::AllProper;
    std::vector<GoalProfile> profiles;
    std::size_t sample_count = 1;
    std::uint64_t seed = 1;
    Budget budget;
    SolverOptions options;
    std::size_t jobs = 1;
    bool allow_improper = false;

    /// Throws InvalidConfiguration.
    auto validate() const -> void;
};

struct SweepCell
{
    SensorRange sensor;
    Scenario scenario;
    SolveStatus status = SolveStatus::Infeasible;
    std::optional<std::uint64_t> cost;
    std::uint64_t nodes = 0;
    double seconds = 0.0;
};

struct SweepRow
{
    GoalProfile profile;
    bool proper = false;
    /// One per (sensor, scenario) in spec order; empty for improper profiles that were skipped.
    std::vector<SweepCell> cells;
};

struct SweepCounts
{
    std::size_t feasible = 0;
    std::size_t proper = 0;
    std::size_t total = 0;

    friend auto operator==(const SweepCounts &, const SweepCounts &) -> bool = default;
};

struct SweepResult
{
    std::vector<SensorRange> sensors;
    std::vector<Scenario> scenarios;
    std::vector<SweepRow> rows;

    auto counts(std::size_t sensor_index, std::size_t scenario_index) const -> SweepCounts;
};

/// Solves every selected profile under every (sensor, scenario); rows are in profile order
/// regardless of `jobs`. Timeouts are recorded as such and never counted feasible.
auto run_sweep(const ExperimentSpec & spec) -> SweepResult;

/// One line per (profile, sensor, scenario) with header `profile,proper,sensor,scenario,status,cost,nodes,seconds`.
/// Improper, unsolved profiles get status `improper`.
auto write_sweep_csv(std::ostream & out, const SweepResult & result) -> void;

struct CsvRecord
{
    GoalProfile profile;
    bool proper = false;
    std::string sensor;
    std::string scenario;
    std::string status;
    std::optional<std::uint64_t> cost;
    std::uint64_t nodes = 0;
    double seconds = 0.0;
};

auto read_sweep_csv(std::istream & in) -> std::vector<CsvRecord>;

/// Jobs from MAUPF_JOBS when set and positive, else `fallback`.
auto jobs_from_environment(std::size_t fallback) -> std::size_t;

} // namespace maupf
