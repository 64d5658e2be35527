#pragma once

#include <maupf/policy.hpp>
#include <maupf/restrict.hpp>

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace maupf {

/// Search limits. Unset members are unlimited.
struct Budget
{
    std::optional<double> seconds;
    std::optional<std::uint64_t> nodes;
};

struct SolverOptions
{
    /// Failed-value probing (singleton inference) at the root.
    bool probe = true;
    /// Opt-in randomized value order; search is deterministic when unset.
    std::optional<std::uint64_t> seed;
    /// solve() only: restart with doubling node limits, randomizing the value order from the second
    /// run on (seeds derived from `seed`, so runs stay reproducible). Each run is complete, so an
    /// exhausted run still proves infeasibility. Zero disables restarts.
    std::uint64_t restart_nodes = 1000;
};

struct SolveStats
{
    std::uint64_t nodes = 0;
    std::uint64_t propagations = 0;
    std::uint64_t failures = 0;
    double seconds = 0.0;
};

enum class SolveStatus
{
    Feasible,
    Infeasible,
    TimedOut
};

auto to_string(SolveStatus s) -> std::string_view;

struct SolveOutcome
{
    SolveStatus status = SolveStatus::Infeasible;
    /// Feasible: the policy. TimedOut: best policy so far, if any.
    std::optional<PolicyProfile> policy;
    std::optional<std::uint64_t> cost;
    /// optimize() only: the search space was exhausted, so `cost` is minimal within the candidate model.
    bool optimal = false;
    SolveStats stats;
    /// solve_with_restriction_fallback(): scenario that produced the outcome, and every attempt made.
    std::optional<Scenario> scenario;
    std::vector<std::pair<Scenario, SolveStatus>> attempts;
};

/// A candidate model compiled for search: one variable per decision key (a tie group is one key),
/// every global state's collision-free, non-stationary joint moves, and the reverse edges.
class SearchProblem
{
public:
    explicit SearchProblem(CandidateModel model);

    auto model() const -> const CandidateModel & { return _model; }
    auto space() const -> const StateSpace & { return _model.space(); }

    auto variable_count() const -> std::size_t { return _var_domain.size(); }
    /// Variables with more than one candidate action.
    auto decision_count() const -> std::size_t { return _order.size(); }
    auto variable_of(int agent, std::size_t local) const -> std::uint32_t
    {
        return _var_of_key[_key_offset[agent] + local];
    }
    auto initial_domain(std::uint32_t var) const -> ActionSet { return ActionSet{_var_domain[var]}; }
    auto edge_count() const -> std::size_t { return _edge_succ.size(); }

private:
    friend class SearchEngine;

    CandidateModel _model;
    int _agents;
    std::size_t _states;
    std::size_t _goal;

    std::vector<std::size_t> _key_offset;
    std::vector<std::uint32_t> _var_of_key;
    std::vector<std::uint8_t> _var_domain;
    std::vector<std::int64_t> _var_cost;

    std::vector<std::uint32_t> _state_var;
    std::vector<std::uint32_t> _occ_offset;
    std::vector<std::uint32_t> _occ_states;

    std::vector<std::uint32_t> _edge_offset;
    std::vector<std::uint32_t> _edge_succ;
    std::vector<std::uint32_t> _edge_src;
    std::vector<std::uint32_t> _edge_acts;
    std::vector<std::uint32_t> _pred_offset;
    std::vector<std::uint32_t> _pred_edges;

    std::vector<std::uint32_t> _order;
};

/// Complete search for a feasible policy profile. Any policy returned has passed verify().
auto solve(const SearchProblem & problem, const Budget & budget = {}, const SolverOptions & options = {})
    -> SolveOutcome;

/// Sum over global states of the shortest distance to the goal in the graph of all candidate-consistent
/// moves, after root propagation. No feasible profile costs less; nullopt when propagation alone
/// proves infeasibility.
auto lower_bound(const SearchProblem & problem, const SolverOptions & options = {}) -> std::optional<std::uint64_t>;

using ImprovementCallback = std::function<void(const PolicyProfile &, std::uint64_t)>;

/// Anytime branch-and-bound on sum-of-makespan. `on_improve` is called synchronously with each
/// strictly better policy (starting with `initial`, when given) while the search continues.
auto optimize(const SearchProblem & problem, const Budget & budget = {},
    const std::optional<PolicyProfile> & initial = std::nullopt, const ImprovementCallback & on_improve = {},
    const SolverOptions & options = {}) -> SolveOutcome;

/// Tries each scenario in order (strictest first) and returns the first feasible outcome.
auto solve_with_restriction_fallback(std::shared_ptr<const StateSpace> space, std::span<const Scenario> chain,
    const Budget & budget = {}, const SolverOptions & options = {}) -> SolveOutcome;

} // namespace maupf
