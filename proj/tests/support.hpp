#pragma once

// Generators and reference implementations shared by the test suites. The oracles here only use
// the public cell-level API (available_actions, transition, observe) and never the solver.

#include <maupf/harness.hpp>

#include <algorithm>
#include <deque>
#include <map>
#include <random>
#include <set>

namespace testing {

using namespace maupf;

/// Random obstacle mask with at least `min_free` free cells; not necessarily connected. Widens
/// the grid when it is too small to hold that many.
inline auto random_grid(std::mt19937_64 & rng, int rows, int cols, double density, std::size_t min_free) -> GridMap
{
    while (static_cast<std::size_t>(rows * cols) < min_free)
        ++cols;
    while (true) {
        std::vector<Cell> blocked;
        std::bernoulli_distribution coin(density);
        for (int r = 0; r < rows; ++r)
            for (int c = 0; c < cols; ++c)
                if (coin(rng))
                    blocked.push_back(Cell{r, c});
        if (static_cast<std::size_t>(rows * cols) - blocked.size() >= min_free)
            return GridMap(rows, cols, blocked);
    }
}

/// n distinct free cells drawn uniformly.
inline auto random_cells(std::mt19937_64 & rng, const GridMap & map, int n) -> std::vector<Cell>
{
    auto cells = map.free_cells();
    std::shuffle(cells.begin(), cells.end(), rng);
    cells.resize(static_cast<std::size_t>(n));
    return cells;
}

/// Shortest-path distances to `target` over free cells, skipping `avoid`; -1 when unreachable.
inline auto bfs_distances(const GridMap & map, Cell target, const std::set<Cell> & avoid = {}) -> std::map<Cell, int>
{
    std::map<Cell, int> dist;
    for (auto c : map.free_cells())
        dist[c] = -1;
    dist[target] = 0;
    std::deque<Cell> queue{target};
    while (! queue.empty()) {
        auto c = queue.front();
        queue.pop_front();
        for (Cell d : {Cell{c.row - 1, c.col}, Cell{c.row + 1, c.col}, Cell{c.row, c.col - 1}, Cell{c.row, c.col + 1}})
            if (map.is_free(d) && ! avoid.contains(d) && dist[d] < 0) {
                dist[d] = dist[c] + 1;
                queue.push_back(d);
            }
    }
    return dist;
}

/// Properness by transitive closure (Warshall) instead of search.
inline auto proper_by_closure(const GridMap & map, const GoalProfile & g) -> bool
{
    for (std::size_t i = 0; i < g.goals.size(); ++i) {
        std::vector<Cell> cells;
        for (auto c : map.free_cells())
            if (std::find(g.goals.begin(), g.goals.end(), c) == g.goals.end() || c == g.goals[i])
                cells.push_back(c);
        auto m = cells.size();
        std::vector<std::vector<char>> reach(m, std::vector<char>(m, 0));
        for (std::size_t a = 0; a < m; ++a)
            for (std::size_t b = 0; b < m; ++b)
                reach[a][b] = a == b || manhattan(cells[a], cells[b]) == 1;
        for (std::size_t k = 0; k < m; ++k)
            for (std::size_t a = 0; a < m; ++a)
                for (std::size_t b = 0; b < m; ++b)
                    if (reach[a][k] && reach[k][b])
                        reach[a][b] = 1;
        auto target = std::find(cells.begin(), cells.end(), g.goals[i]) - cells.begin();
        for (std::size_t a = 0; a < m; ++a)
            if (! reach[a][static_cast<std::size_t>(target)])
                return false;
    }
    return true;
}

/// Exhaustive enumeration of candidate-consistent policy profiles with sound pruning: a partial
/// profile is abandoned once some fully determined global state collides, the determined
/// successor chains close a cycle, or some state can no longer reach the goal through any move
/// the partial profile still allows. Complete assignments are checked with verify(). In minimize
/// mode the search continues past the first solution and drops branches whose sum of shortest
/// allowed distances cannot beat the best cost found.
class BruteForce
{
public:
    BruteForce(const CandidateModel & model, bool minimize) :
        _model(model),
        _space(model.space()),
        _cfg(_space.config()),
        _minimize(minimize)
    {
        auto n = _space.agents();
        // one variable per key, tie groups merged
        _var_of.resize(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i)
            _var_of[i].assign(_space.local_count(i), -1);
        for (const auto & group : model.tie_groups()) {
            for (const auto & key : group)
                _var_of[key.agent][key.local] = static_cast<int>(_domains.size());
            _domains.push_back(model.candidates(group.front().agent, group.front().local).actions());
        }
        for (int i = 0; i < n; ++i)
            for (std::size_t id = 0; id < _space.local_count(i); ++id)
                if (_var_of[i][id] < 0) {
                    _var_of[i][id] = static_cast<int>(_domains.size());
                    _domains.push_back(model.candidates(i, id).actions());
                }

        // order variables by the first global state that observes them
        _states = enumerate_global_states(_cfg);
        std::vector<char> placed(_domains.size(), 0);
        _completes.assign(_domains.size(), {});
        for (std::size_t s = 0; s < _states.size(); ++s) {
            int last = -1;
            for (int i = 0; i < n; ++i) {
                auto v = var_at(s, i);
                if (! placed[v]) {
                    placed[v] = 1;
                    _position[v] = _order.size();
                    _order.push_back(v);
                }
                last = std::max(last, static_cast<int>(_position[v]));
            }
            _completes[_order[static_cast<std::size_t>(last)]].push_back(s);
        }
        _value.assign(_domains.size(), Action::Nil);
        _assigned.assign(_domains.size(), 0);
        _succ.assign(_states.size(), unknown);
        for (std::size_t s = 0; s < _states.size(); ++s)
            _index[_states[s]] = s;
        _goal = _index.at(GlobalState{_cfg.goals.goals});

        // every conflict-free joint move of each state, as (variables, actions, successor)
        _moves.resize(_states.size());
        for (std::size_t s = 0; s < _states.size(); ++s) {
            std::vector<std::size_t> vars;
            for (int i = 0; i < n; ++i)
                vars.push_back(var_at(s, i));
            std::vector<Action> acts(static_cast<std::size_t>(n));
            auto rec = [&](auto & self, int i) -> void {
                if (i == n) {
                    auto r = transition(_cfg, _states[s], acts);
                    if (auto * t = std::get_if<GlobalState>(&r))
                        _moves[s].push_back(Move{vars, acts, _index.at(*t)});
                    return;
                }
                for (auto a : _domains[vars[i]]) {
                    // a variable shared by two agents takes one action
                    bool clash = false;
                    for (int j = 0; j < i; ++j)
                        clash = clash || (vars[j] == vars[i] && acts[j] != a);
                    if (clash)
                        continue;
                    acts[i] = a;
                    self(self, i + 1);
                }
            };
            rec(rec, 0);
        }
    }

    /// True when some candidate-consistent profile is feasible.
    auto feasible() -> bool
    {
        _found.clear();
        if (allowed_distance_sum())
            search(0);
        return ! _found.empty();
    }

    /// Costs of the feasible profiles found, strictly decreasing in minimize mode.
    auto costs() const -> const std::vector<std::uint64_t> & { return _found; }
    auto minimum() const -> std::optional<std::uint64_t>
    {
        if (_found.empty())
            return std::nullopt;
        return *std::min_element(_found.begin(), _found.end());
    }
    auto leaves() const -> std::uint64_t { return _leaves; }

private:
    static constexpr std::size_t unknown = static_cast<std::size_t>(-1);
    static constexpr std::size_t conflict = static_cast<std::size_t>(-2);

    auto var_at(std::size_t s, int agent) -> std::size_t
    {
        auto ls = observe(_cfg, _states[s], agent);
        auto id = *_space.find_local(agent, ls);
        return static_cast<std::size_t>(_var_of[agent][id]);
    }

    auto determine(std::size_t s) -> std::size_t
    {
        std::vector<Action> acts;
        for (int i = 0; i < _space.agents(); ++i)
            acts.push_back(_value[var_at(s, i)]);
        auto r = transition(_cfg, _states[s], acts);
        if (std::holds_alternative<Conflict>(r))
            return conflict;
        return _index.at(std::get<GlobalState>(r));
    }

    // follows determined successors from s; false on a cycle that avoids the goal
    auto acyclic_from(std::size_t s) const -> bool
    {
        std::set<std::size_t> seen;
        auto goal = _goal;
        while (s != unknown && s != goal) {
            if (! seen.insert(s).second)
                return false;
            s = _succ[s];
        }
        return true;
    }

    // backward search from the goal over moves the partial assignment still allows; the sum of
    // distances, or nullopt when some state is cut off
    auto allowed_distance_sum() const -> std::optional<std::uint64_t>
    {
        std::vector<std::vector<std::size_t>> preds(_states.size());
        for (std::size_t s = 0; s < _states.size(); ++s)
            for (const auto & m : _moves[s]) {
                bool allowed = true;
                for (std::size_t i = 0; allowed && i < m.vars.size(); ++i)
                    allowed = ! _assigned[m.vars[i]] || _value[m.vars[i]] == m.acts[i];
                if (allowed)
                    preds[m.next].push_back(s);
            }
        std::vector<std::uint64_t> dist(_states.size(), 0);
        std::vector<char> seen(_states.size(), 0);
        seen[_goal] = 1;
        std::deque<std::size_t> queue{_goal};
        std::size_t count = 1;
        std::uint64_t total = 0;
        while (! queue.empty()) {
            auto t = queue.front();
            queue.pop_front();
            for (auto s : preds[t])
                if (! seen[s]) {
                    seen[s] = 1;
                    dist[s] = dist[t] + 1;
                    total += dist[s];
                    ++count;
                    queue.push_back(s);
                }
        }
        if (count != _states.size())
            return std::nullopt;
        return total;
    }

    auto search(std::size_t depth) -> void
    {
        if (! _found.empty() && ! _minimize)
            return;
        if (depth == _order.size()) {
            ++_leaves;
            std::vector<std::vector<Action>> table(static_cast<std::size_t>(_space.agents()));
            for (int i = 0; i < _space.agents(); ++i)
                for (std::size_t id = 0; id < _space.local_count(i); ++id)
                    table[i].push_back(_value[static_cast<std::size_t>(_var_of[i][id])]);
            PolicyProfile p(_model.shared_space(), std::move(table));
            auto report = verify(p);
            if (report.feasible && (_found.empty() || sum_of_makespan(report) < _found.back()))
                _found.push_back(sum_of_makespan(report));
            return;
        }
        auto v = _order[depth];
        _assigned[v] = 1;
        for (auto a : _domains[v]) {
            _value[v] = a;
            bool ok = true;
            for (auto s : _completes[v]) {
                _succ[s] = determine(s);
                if (_succ[s] == conflict)
                    ok = false;
            }
            for (std::size_t k = 0; ok && k < _completes[v].size(); ++k)
                ok = acyclic_from(_completes[v][k]);
            if (ok) {
                auto bound = allowed_distance_sum();
                if (bound && (_found.empty() || *bound < _found.back()))
                    search(depth + 1);
            }
            for (auto s : _completes[v])
                _succ[s] = unknown;
            if (! _found.empty() && ! _minimize)
                break;
        }
        _assigned[v] = 0;
    }

    struct Move
    {
        std::vector<std::size_t> vars;
        std::vector<Action> acts;
        std::size_t next;
    };

    const CandidateModel & _model;
    const StateSpace & _space;
    const Configuration & _cfg;
    bool _minimize;
    std::vector<std::vector<int>> _var_of;
    std::vector<std::vector<Action>> _domains;
    std::vector<GlobalState> _states;
    std::map<GlobalState, std::size_t> _index;
    std::map<std::size_t, std::size_t> _position;
    std::vector<std::size_t> _order;
    std::vector<std::vector<std::size_t>> _completes;
    std::vector<Action> _value;
    std::vector<char> _assigned;
    std::vector<std::size_t> _succ;
    std::size_t _goal = 0;
    std::vector<std::vector<Move>> _moves;
    std::vector<std::uint64_t> _found;
    std::uint64_t _leaves = 0;
};

/// Minimum sum-of-makespan when every agent observes the whole state: each state independently
/// takes a first move of some shortest joint path, so the optimum is the sum of BFS distances
/// in the centralized joint graph (agents at their goals stay put). nullopt if some state is stuck.
inline auto centralized_optimum(const GridMap & map, const GoalProfile & goals) -> std::optional<std::uint64_t>
{
    auto n = static_cast<int>(goals.goals.size());
    Configuration cfg{map, n, SensorRange::full(), goals, Scenario{}};
    auto states = enumerate_global_states(cfg);
    std::map<GlobalState, std::vector<GlobalState>> preds;
    for (const auto & s : states) {
        std::vector<ActionSet> options;
        for (int i = 0; i < n; ++i)
            options.push_back(s.positions[i] == goals.goals[i] ? ActionSet{Action::Nil}
                                                               : available_actions(map, s.positions[i]));
        std::vector<Action> acts(static_cast<std::size_t>(n));
        auto rec = [&](auto & self, int i) -> void {
            if (i == n) {
                auto r = transition(cfg, s, acts);
                if (auto * t = std::get_if<GlobalState>(&r); t && *t != s)
                    preds[*t].push_back(s);
                return;
            }
            for (auto a : options[i].actions()) {
                acts[i] = a;
                self(self, i + 1);
            }
        };
        rec(rec, 0);
    }
    std::map<GlobalState, std::uint64_t> dist;
    GlobalState goal{goals.goals};
    dist[goal] = 0;
    std::deque<GlobalState> queue{goal};
    std::uint64_t total = 0;
    while (! queue.empty()) {
        auto t = queue.front();
        queue.pop_front();
        for (const auto & s : preds[t])
            if (! dist.contains(s)) {
                dist[s] = dist[t] + 1;
                total += dist[s];
                queue.push_back(s);
            }
    }
    if (dist.size() != states.size())
        return std::nullopt;
    return total;
}

inline auto model_for(const GridMap & map, const GoalProfile & goals, SensorRange sensor, Scenario scenario)
    -> CandidateModel
{
    auto space = std::make_shared<const StateSpace>(
        Configuration{map, static_cast<int>(goals.goals.size()), sensor, goals, Scenario{}});
    return build_candidates(space, scenario);
}

/// Greedy single-agent policy that descends the BFS distance (first improving action in enum order).
inline auto descent_policy(std::shared_ptr<const StateSpace> space) -> PolicyProfile
{
    const auto & map = space->config().map;
    auto dist = bfs_distances(map, space->config().goals.goals[0]);
    std::vector<std::vector<Action>> table(1);
    for (const auto & ls : space->locals(0)) {
        auto best = Action::Nil;
        for (auto a : all_actions)
            if (auto d = apply_action(map, ls.self, a); d && dist[*d] >= 0 && dist[*d] < dist[ls.self]) {
                best = a;
                break;
            }
        table[0].push_back(best);
    }
    return PolicyProfile(std::move(space), std::move(table));
}

} // namespace testing
