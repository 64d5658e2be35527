#include <maupf/error.hpp>
#include <maupf/policy.hpp>

#include <istream>
#include <ostream>
#include <string>

namespace maupf {

PolicyProfile::PolicyProfile(std::shared_ptr<const StateSpace> space, std::vector<std::vector<Action>> table) :
    _space(std::move(space)),
    _table(std::move(table))
{
    if (! _space)
        throw InvalidPolicy("policy needs a state space");
    const auto & map = _space->config().map;
    if (_table.size() != static_cast<std::size_t>(_space->agents()))
        throw InvalidPolicy("policy has " + std::to_string(_table.size()) + " agent tables for "
            + std::to_string(_space->agents()) + " agents");
    for (int i = 0; i < _space->agents(); ++i) {
        if (_table[i].size() != _space->local_count(i))
            throw InvalidPolicy("policy of agent " + std::to_string(i) + " is not total over its local states");
        for (std::size_t id = 0; id < _table[i].size(); ++id) {
            const auto & ls = _space->local(i, id);
            if (ls.self == ls.goal && _table[i][id] != Action::Nil)
                throw InvalidPolicy("agent " + std::to_string(i) + " must stop at its goal in " + serialize(ls));
            if (! available_actions(map, ls.self).contains(_table[i][id]))
                throw InvalidPolicy("action " + std::string(to_string(_table[i][id])) + " is not available in "
                    + serialize(ls));
        }
    }
}

auto PolicyProfile::action(int agent, const LocalState & ls) const -> Action
{
    auto id = _space->find_local(agent, ls);
    if (! id)
        throw InvalidPolicy("agent " + std::to_string(agent) + " never observes " + serialize(ls));
    return _table[agent][*id];
}

auto PolicyProfile::joint_action(std::size_t s) const -> std::vector<Action>
{
    std::vector<Action> acts(_table.size());
    for (std::size_t i = 0; i < _table.size(); ++i)
        acts[i] = _table[i][_space->observation(s, static_cast<int>(i))];
    return acts;
}

auto step(const PolicyProfile & p, const GlobalState & s) -> TransitionResult
{
    const auto & cfg = p.space().config();
    std::vector<Action> acts;
    for (int i = 0; i < cfg.agents; ++i)
        acts.push_back(p.action(i, observe(cfg, s, i)));
    return transition(cfg, s, acts);
}

auto to_string(FailureKind k) -> std::string_view
{
    return k == FailureKind::Collision ? "collision" : "livelock-cycle";
}

auto verify(const PolicyProfile & p) -> VerificationReport
{
    const auto & space = p.space();
    auto g = space.global_count();
    constexpr std::uint8_t white = 0, grey = 1, black = 2;
    std::vector<std::uint8_t> colour(g, white);
    std::vector<std::uint64_t> dist(g, 0);
    colour[space.goal_index()] = black;

    std::vector<std::size_t> path;
    for (std::size_t start = 0; start < g; ++start) {
        if (colour[start] != white)
            continue;
        path.clear();
        std::size_t s = start;
        while (colour[s] == white) {
            colour[s] = grey;
            path.push_back(s);
            auto next = step(p, space.global(s));
            if (auto conflict = std::get_if<Conflict>(&next)) {
                Counterexample cx{space.global(start), FailureKind::Collision, {}, *conflict};
                for (auto t : path)
                    cx.trace.push_back(space.global(t));
                return VerificationReport{false, {}, std::move(cx)};
            }
            s = *space.find_global(std::get<GlobalState>(next));
        }
        if (colour[s] == grey) {
            Counterexample cx{space.global(start), FailureKind::LivelockCycle, {}, std::nullopt};
            for (auto t : path)
                cx.trace.push_back(space.global(t));
            cx.trace.push_back(space.global(s));
            return VerificationReport{false, {}, std::move(cx)};
        }
        auto d = dist[s];
        for (auto it = path.rbegin(); it != path.rend(); ++it) {
            dist[*it] = ++d;
            colour[*it] = black;
        }
    }
    return VerificationReport{true, std::move(dist), std::nullopt};
}

auto sum_of_makespan(const VerificationReport & report) -> std::uint64_t
{
    if (! report.feasible)
        throw UndefinedMetric("sum-of-makespan is undefined for an infeasible policy");
    std::uint64_t total = 0;
    for (auto d : report.dist)
        total += d;
    return total;
}

auto sum_of_makespan(const PolicyProfile & p) -> std::uint64_t
{
    return sum_of_makespan(verify(p));
}

auto to_string(TraceStatus s) -> std::string_view
{
    switch (s) {
    case TraceStatus::Goal: return "goal";
    case TraceStatus::Collision: return "collision";
    case TraceStatus::Cycle: return "cycle";
    case TraceStatus::BudgetExhausted: return "budget-exhausted";
    }
    return "?";
}

auto simulate(const PolicyProfile & p, const GlobalState & init, std::size_t max_steps) -> Trace
{
    const auto & space = p.space();
    auto start = space.find_global(init);
    if (! start)
        throw InvalidInstantiation("initial placement " + to_string(init)
            + " is not a valid instantiation (agents must occupy distinct free cells)");
    Trace trace;
    std::vector<std::uint8_t> seen(space.global_count());
    auto s = *start;
    while (true) {
        if (trace.states.size() == max_steps) {
            trace.status = TraceStatus::BudgetExhausted;
            return trace;
        }
        trace.states.push_back(space.global(s));
        if (s == space.goal_index()) {
            trace.status = TraceStatus::Goal;
            return trace;
        }
        seen[s] = 1;
        auto next = step(p, space.global(s));
        if (auto conflict = std::get_if<Conflict>(&next)) {
            trace.status = TraceStatus::Collision;
            trace.conflict = *conflict;
            return trace;
        }
        s = *space.find_global(std::get<GlobalState>(next));
        if (seen[s]) {
            if (trace.states.size() < max_steps)
                trace.states.push_back(space.global(s));
            trace.status = TraceStatus::Cycle;
            return trace;
        }
    }
}

auto write_trace(std::ostream & out, const Trace & t) -> void
{
    for (std::size_t k = 0; k < t.states.size(); ++k)
        out << "t=" << k << " " << to_string(t.states[k]) << "\n";
    out << "status=" << to_string(t.status);
    if (t.conflict)
        out << " " << to_string(*t.conflict);
    out << "\n";
}

namespace {

constexpr std::string_view policy_header = "maupf-policy v1";

} // namespace

auto write_policy(std::ostream & out, const PolicyProfile & p) -> void
{
    out << policy_header << "\n";
    for (int i = 0; i < p.agents(); ++i)
        for (std::size_t id = 0; id < p.space().local_count(i); ++id)
            out << "agent=" << i << " " << serialize(p.space().local(i, id)) << " action=" << to_string(p.action(i, id))
                << "\n";
}

auto read_policy(std::istream & in, std::shared_ptr<const StateSpace> space) -> PolicyProfile
{
    std::string line;
    std::size_t line_no = 0;
    if (! std::getline(in, line))
        throw FormatError(1, "empty policy file");
    ++line_no;
    if (! line.empty() && line.back() == '\r')
        line.pop_back();
    if (line != policy_header)
        throw FormatError(line_no, "expected header '" + std::string(policy_header) + "'");

    auto n = space->agents();
    std::vector<std::vector<Action>> table(n);
    std::vector<std::vector<std::uint8_t>> seen(n);
    for (int i = 0; i < n; ++i) {
        table[i].assign(space->local_count(i), Action::Nil);
        seen[i].assign(space->local_count(i), 0);
    }

    while (std::getline(in, line)) {
        ++line_no;
        if (! line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty())
            continue;
        auto first = line.find(' ');
        auto last = line.rfind(' ');
        if (first == std::string::npos || first == last || line.compare(0, 6, "agent=") != 0
            || line.compare(last + 1, 7, "action=") != 0)
            throw FormatError(line_no, "expected 'agent=<i> <local state> action=<ACTION>'");
        int agent = -1;
        try {
            std::size_t used = 0;
            agent = std::stoi(line.substr(6, first - 6), &used);
            if (used != first - 6)
                agent = -1;
        }
        catch (const std::exception &) {
            agent = -1;
        }
        if (agent < 0 || agent >= n)
            throw FormatError(line_no, "agent index out of range");
        std::optional<std::size_t> id;
        Action action;
        try {
            auto ls = parse_local_state(std::string_view(line).substr(first + 1, last - first - 1));
            id = space->find_local(agent, ls);
            action = parse_action(std::string_view(line).substr(last + 8));
        }
        catch (const Error & e) {
            throw FormatError(line_no, e.what());
        }
        if (! id)
            throw FormatError(line_no, "unknown local state for agent " + std::to_string(agent));
        if (seen[agent][*id])
            throw FormatError(line_no, "duplicate entry for local state");
        seen[agent][*id] = 1;
        table[agent][*id] = action;
    }
    for (int i = 0; i < n; ++i)
        for (std::size_t id = 0; id < seen[i].size(); ++id)
            if (! seen[i][id])
                throw FormatError(line_no, "policy of agent " + std::to_string(i) + " has no entry for "
                    + serialize(space->local(i, id)));
    try {
        return PolicyProfile(std::move(space), std::move(table));
    }
    catch (const InvalidPolicy & e) {
        throw FormatError(line_no, e.what());
    }
}

} // namespace maupf
