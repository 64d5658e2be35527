#pragma once

#include <maupf/scenario.hpp>
#include <maupf/states.hpp>

#include <limits>
#include <memory>
#include <optional>
#include <vector>

namespace maupf {

inline constexpr int infinite_cost = std::numeric_limits<int>::max();

/// Manhattan distance from the cell reached by `a` to the own goal; infinite_cost if `a` is not available.
auto action_cost(const GridMap & map, const LocalState & ls, Action a) -> int;

/// Available actions of minimum cost. {Nil} at the goal.
auto greedy_actions(const GridMap & map, const LocalState & ls) -> ActionSet;

/// Manhattan distance at most 2.
auto is_lastmin(Cell a, Cell b) -> bool;

struct LocalKey
{
    int agent;
    std::uint32_t local;

    friend auto operator<=>(const LocalKey &, const LocalKey &) = default;
};

/// Candidate actions per (agent, local state), plus classes of keys forced to share one action.
class CandidateModel
{
public:
    CandidateModel(std::shared_ptr<const StateSpace> space, Scenario scenario,
        std::vector<std::vector<ActionSet>> candidates, std::vector<std::vector<LocalKey>> tie_groups);

    auto space() const -> const StateSpace & { return *_space; }
    auto shared_space() const -> const std::shared_ptr<const StateSpace> & { return _space; }
    auto scenario() const -> const Scenario & { return _scenario; }

    auto candidates(int agent, std::size_t local) const -> ActionSet { return _candidates[agent][local]; }
    auto tie_groups() const -> const std::vector<std::vector<LocalKey>> & { return _tie_groups; }
    /// Index into tie_groups(), or nullopt for an untied key.
    auto group_of(int agent, std::size_t local) const -> std::optional<std::size_t>;

private:
    std::shared_ptr<const StateSpace> _space;
    Scenario _scenario;
    std::vector<std::vector<ActionSet>> _candidates;
    std::vector<std::vector<LocalKey>> _tie_groups;
    std::vector<std::vector<std::int32_t>> _group;
};

/// Builds the candidate model of a scenario. Traffic kinds need exactly two agents
/// (UnsupportedConfiguration otherwise).
auto build_candidates(std::shared_ptr<const StateSpace> space, const Scenario & scenario) -> CandidateModel;

} // namespace maupf
