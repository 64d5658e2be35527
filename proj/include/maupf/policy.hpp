#pragma once

#include <maupf/states.hpp>

#include <iosfwd>
#include <memory>
#include <optional>
#include <vector>

namespace maupf {

/// One deterministic, memoryless policy per agent, total over that agent's local states.
///
/// Construction enforces the at-goal rule (Nil at the own goal) and that every action is
/// available at the local state's own cell.
class PolicyProfile
{
public:
    PolicyProfile(std::shared_ptr<const StateSpace> space, std::vector<std::vector<Action>> table);

    auto space() const -> const StateSpace & { return *_space; }
    auto shared_space() const -> const std::shared_ptr<const StateSpace> & { return _space; }
    auto agents() const -> int { return _space->agents(); }

    auto action(int agent, std::size_t local) const -> Action { return _table[agent][local]; }
    /// Throws InvalidPolicy for a local state the agent can never observe.
    auto action(int agent, const LocalState & ls) const -> Action;
    auto table(int agent) const -> const std::vector<Action> & { return _table[agent]; }

    /// Joint action in global state s.
    auto joint_action(std::size_t s) const -> std::vector<Action>;

private:
    std::shared_ptr<const StateSpace> _space;
    std::vector<std::vector<Action>> _table;
};

auto step(const PolicyProfile & p, const GlobalState & s) -> TransitionResult;

enum class FailureKind
{
    Collision,
    LivelockCycle
};

auto to_string(FailureKind k) -> std::string_view;

struct Counterexample
{
    GlobalState initial;
    FailureKind kind;
    /// Starts at `initial`; ends at the state whose move collides, or at the first revisited state.
    std::vector<GlobalState> trace;
    std::optional<Conflict> conflict;
};

struct VerificationReport
{
    bool feasible = false;
    /// Indexed like the state space's global states; empty unless feasible.
    std::vector<std::uint64_t> dist;
    std::optional<Counterexample> counterexample;
};

/// Walks the deterministic successor graph from every global state with three-colour cycle detection.
auto verify(const PolicyProfile & p) -> VerificationReport;

/// Sum over every instantiation of the number of joint steps to the goal state. Throws UndefinedMetric.
auto sum_of_makespan(const PolicyProfile & p) -> std::uint64_t;
auto sum_of_makespan(const VerificationReport & report) -> std::uint64_t;

enum class TraceStatus
{
    Goal,
    Collision,
    Cycle,
    BudgetExhausted
};

auto to_string(TraceStatus s) -> std::string_view;

struct Trace
{
    std::vector<GlobalState> states;
    TraceStatus status = TraceStatus::BudgetExhausted;
    std::optional<Conflict> conflict;
};

/// Emits at most max_steps states starting from init. Throws InvalidInstantiation.
auto simulate(const PolicyProfile & p, const GlobalState & init, std::size_t max_steps) -> Trace;

/// `t=<k> ((r,c),...)` per state, then `status=<goal|collision|cycle|budget-exhausted>`.
auto write_trace(std::ostream & out, const Trace & t) -> void;

/// Header `maupf-policy v1`, then `agent=<i> <local state> action=<ACTION>` per local state.
auto write_policy(std::ostream & out, const PolicyProfile & p) -> void;

/// Throws FormatError (with line number) on malformed lines, unknown local states, duplicates or gaps.
auto read_policy(std::istream & in, std::shared_ptr<const StateSpace> space) -> PolicyProfile;

} // namespace maupf
