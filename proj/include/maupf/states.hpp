#pragma once

#include <maupf/grid.hpp>
#include <maupf/scenario.hpp>

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

namespace maupf {

/// Square field of view of Chebyshev radius r, or the whole map.
class SensorRange
{
public:
    static auto full() -> SensorRange { return SensorRange{}; }
    static auto of(int radius) -> SensorRange;

    auto is_full() const -> bool { return ! _radius.has_value(); }
    auto radius() const -> std::optional<int> { return _radius; }

    friend auto operator==(const SensorRange &, const SensorRange &) -> bool = default;

private:
    std::optional<int> _radius;
};

auto to_string(SensorRange r) -> std::string;
/// Accepts a non-negative integer or "full".
auto parse_sensor(std::string_view text) -> SensorRange;

/// True iff a != b and b lies in the square FoV of a. Obstacles do not occlude.
auto within_fov(SensorRange r, Cell a, Cell b) -> bool;

/// The problem instance.
struct Configuration
{
    GridMap map;
    int agents = 1;
    SensorRange sensor = SensorRange::full();
    GoalProfile goals;
    Scenario scenario;

    /// Throws InvalidConfiguration on a goal count mismatch or bad goals.
    auto validate() const -> void;
};

struct GlobalState
{
    std::vector<Cell> positions;

    friend auto operator<=>(const GlobalState &, const GlobalState &) = default;
};

auto to_string(const GlobalState & s) -> std::string;
auto parse_global_state(std::string_view text) -> GlobalState;

/// One agent's observation. Slot k holds the k-th other agent in ascending agent order.
struct LocalState
{
    Cell self;
    std::vector<std::optional<Cell>> others;
    Cell goal;

    auto sees_anyone() const -> bool
    {
        for (const auto & o : others)
            if (o)
                return true;
        return false;
    }

    friend auto operator<=>(const LocalState &, const LocalState &) = default;
};

/// Canonical form `self=(r,c);o1=(r,c)|ABS;...;goal=(r,c)`.
auto serialize(const LocalState & ls) -> std::string;
auto parse_local_state(std::string_view text) -> LocalState;

auto observe(const Configuration & cfg, const GlobalState & s, int agent) -> LocalState;

/// All n-tuples of pairwise distinct free cells in lexicographic (row-major index) order. Throws NoStates.
auto enumerate_global_states(const Configuration & cfg) -> std::vector<GlobalState>;

/// Exactly the local states realizable by observe(); sorted.
auto enumerate_local_states(const Configuration & cfg, int agent) -> std::vector<LocalState>;

/// M * binomial(K + n - 1, n - 1). Throws Overflow.
auto estimate_local_state_count(std::uint64_t m, std::uint64_t k, std::uint64_t n) -> std::uint64_t;

enum class ConflictKind
{
    Vertex,
    Edge
};

struct Conflict
{
    ConflictKind kind;
    int first;
    int second;
    /// Shared destination for a vertex conflict; first agent's origin for an edge conflict.
    Cell where;

    friend auto operator==(const Conflict &, const Conflict &) -> bool = default;
};

auto to_string(const Conflict & c) -> std::string;

using TransitionResult = std::variant<GlobalState, Conflict>;

/// Joint move. Reports the first conflicting pair (i < j, vertex before edge). Throws InvalidAction.
auto transition(const Configuration & cfg, const GlobalState & s, std::span<const Action> acts) -> TransitionResult;

/// Indexed view of one configuration's global and local state spaces plus the observation table.
/// Immutable once built.
class StateSpace
{
public:
    explicit StateSpace(Configuration cfg);

    auto config() const -> const Configuration & { return _cfg; }
    auto agents() const -> int { return _cfg.agents; }

    auto global_count() const -> std::size_t { return _global_count; }
    auto global(std::size_t s) const -> GlobalState;
    /// Free-cell indices of agents in state s.
    auto cells(std::size_t s) const -> std::span<const std::uint16_t>
    {
        return {_positions.data() + s * _cfg.agents, static_cast<std::size_t>(_cfg.agents)};
    }
    auto find_global(const GlobalState & s) const -> std::optional<std::size_t>;
    auto goal_index() const -> std::size_t { return _goal; }

    auto local_count(int agent) const -> std::size_t { return _locals[agent].size(); }
    auto local(int agent, std::size_t id) const -> const LocalState & { return _locals[agent][id]; }
    auto locals(int agent) const -> const std::vector<LocalState> & { return _locals[agent]; }
    auto find_local(int agent, const LocalState & ls) const -> std::optional<std::size_t>;
    auto at_goal(int agent, std::size_t id) const -> bool { return _locals[agent][id].self == _locals[agent][id].goal; }

    /// Local state id that agent i observes in global state s.
    auto observation(std::size_t s, int agent) const -> std::uint32_t { return _obs[s * _cfg.agents + agent]; }

    /// Free-cell index after action a, or -1 when the action is not available.
    auto move(std::uint16_t cell, Action a) const -> int
    {
        return _moves[cell * action_count + static_cast<std::size_t>(a)];
    }

    /// Index-level transition; actions must be available.
    auto successor(std::size_t s, std::span<const Action> acts) const -> std::variant<std::size_t, Conflict>;

    auto available(std::uint16_t cell) const -> ActionSet;

private:
    auto code_of(std::span<const std::uint16_t> cells) const -> std::uint64_t;
    auto local_code(int agent, const LocalState & ls) const -> std::optional<std::uint64_t>;

    Configuration _cfg;
    std::size_t _global_count = 0;
    std::vector<std::uint16_t> _positions;
    std::vector<std::int32_t> _dense_index;
    std::unordered_map<std::uint64_t, std::uint32_t> _sparse_index;
    std::size_t _goal = 0;
    std::vector<std::vector<LocalState>> _locals;
    std::vector<std::unordered_map<std::uint64_t, std::uint32_t>> _local_index;
    std::vector<std::uint32_t> _obs;
    std::vector<std::int32_t> _moves;
};

} // namespace maupf
