#include <maupf/error.hpp>
#include <maupf/solver.hpp>

#include <algorithm>
#include <chrono>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

namespace maupf {

namespace {

constexpr std::uint32_t no_edge = std::numeric_limits<std::uint32_t>::max();
constexpr std::uint32_t unreached = std::numeric_limits<std::uint32_t>::max();
constexpr int max_agents = 10;

inline auto packed_action(std::uint32_t acts, int agent) -> unsigned { return (acts >> (3 * agent)) & 7u; }

} // namespace

auto to_string(SolveStatus s) -> std::string_view
{
    switch (s) {
    case SolveStatus::Feasible: return "feasible";
    case SolveStatus::Infeasible: return "infeasible";
    case SolveStatus::TimedOut: return "timeout";
    }
    return "?";
}

SearchProblem::SearchProblem(CandidateModel model) :
    _model(std::move(model))
{
    const auto & space = _model.space();
    const auto & map = space.config().map;
    _agents = space.agents();
    _states = space.global_count();
    _goal = space.goal_index();
    if (_agents > max_agents)
        throw UnsupportedConfiguration("search supports at most " + std::to_string(max_agents) + " agents");
    auto n = static_cast<std::size_t>(_agents);

    _key_offset.assign(n + 1, 0);
    for (std::size_t i = 0; i < n; ++i)
        _key_offset[i + 1] = _key_offset[i] + space.local_count(static_cast<int>(i));

    // variables: one per tie group, then one per untied key
    const auto & groups = _model.tie_groups();
    _var_of_key.assign(_key_offset[n], 0);
    _var_domain.clear();
    for (const auto & group : groups) {
        auto v = static_cast<std::uint32_t>(_var_domain.size());
        _var_domain.push_back(_model.candidates(group.front().agent, group.front().local).bits());
        for (const auto & key : group)
            _var_of_key[_key_offset[key.agent] + key.local] = v;
    }
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t id = 0; id < space.local_count(static_cast<int>(i)); ++id) {
            if (_model.group_of(static_cast<int>(i), id))
                continue;
            _var_of_key[_key_offset[i] + id] = static_cast<std::uint32_t>(_var_domain.size());
            _var_domain.push_back(_model.candidates(static_cast<int>(i), id).bits());
        }

    // value-order cost: summed action cost over the keys sharing the variable
    _var_cost.assign(_var_domain.size() * action_count, 0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t id = 0; id < space.local_count(static_cast<int>(i)); ++id) {
            auto v = _var_of_key[_key_offset[i] + id];
            const auto & ls = space.local(static_cast<int>(i), id);
            for (auto a : all_actions) {
                auto c = action_cost(map, ls, a);
                _var_cost[v * action_count + static_cast<std::size_t>(a)] += c == infinite_cost ? 1'000'000 : c;
            }
        }

    _state_var.resize(_states * n);
    std::vector<std::uint32_t> occ_count(_var_domain.size(), 0);
    for (std::size_t s = 0; s < _states; ++s)
        for (std::size_t i = 0; i < n; ++i) {
            auto v = _var_of_key[_key_offset[i] + space.observation(s, static_cast<int>(i))];
            _state_var[s * n + i] = v;
            bool repeat = false;
            for (std::size_t j = 0; j < i; ++j)
                repeat = repeat || _state_var[s * n + j] == v;
            if (! repeat)
                ++occ_count[v];
        }
    _occ_offset.assign(_var_domain.size() + 1, 0);
    for (std::size_t v = 0; v < _var_domain.size(); ++v)
        _occ_offset[v + 1] = _occ_offset[v] + occ_count[v];
    _occ_states.resize(_occ_offset.back());
    {
        std::vector<std::uint32_t> fill(_occ_offset.begin(), _occ_offset.end() - 1);
        for (std::size_t s = 0; s < _states; ++s)
            for (std::size_t i = 0; i < n; ++i) {
                auto v = _state_var[s * n + i];
                bool repeat = false;
                for (std::size_t j = 0; j < i; ++j)
                    repeat = repeat || _state_var[s * n + j] == v;
                if (! repeat)
                    _occ_states[fill[v]++] = static_cast<std::uint32_t>(s);
            }
    }

    // joint moves over the initial domains; colliding and stationary ones never help a non-goal state
    _edge_offset.assign(_states + 1, 0);
    std::vector<Action> acts(n);
    std::vector<std::vector<Action>> choices(n);
    for (std::size_t s = 0; s < _states; ++s) {
        _edge_offset[s] = static_cast<std::uint32_t>(_edge_succ.size());
        if (s == _goal)
            continue;
        for (std::size_t i = 0; i < n; ++i)
            choices[i] = ActionSet{_var_domain[_state_var[s * n + i]]}.actions();
        std::vector<std::size_t> digit(n, 0);
        while (true) {
            bool coherent = true;
            std::uint32_t packed = 0;
            for (std::size_t i = 0; i < n; ++i) {
                acts[i] = choices[i][digit[i]];
                packed |= static_cast<std::uint32_t>(acts[i]) << (3 * i);
                for (std::size_t j = 0; j < i; ++j)
                    if (_state_var[s * n + j] == _state_var[s * n + i] && acts[j] != acts[i])
                        coherent = false;
            }
            if (coherent) {
                auto next = space.successor(s, acts);
                if (auto t = std::get_if<std::size_t>(&next); t && *t != s) {
                    _edge_succ.push_back(static_cast<std::uint32_t>(*t));
                    _edge_src.push_back(static_cast<std::uint32_t>(s));
                    _edge_acts.push_back(packed);
                }
            }
            std::size_t k = 0;
            while (k < n && ++digit[k] == choices[k].size())
                digit[k++] = 0;
            if (k == n)
                break;
        }
    }
    _edge_offset[_states] = static_cast<std::uint32_t>(_edge_succ.size());

    _pred_offset.assign(_states + 1, 0);
    for (auto t : _edge_succ)
        ++_pred_offset[t + 1];
    std::partial_sum(_pred_offset.begin(), _pred_offset.end(), _pred_offset.begin());
    _pred_edges.resize(_edge_succ.size());
    {
        std::vector<std::uint32_t> fill(_pred_offset.begin(), _pred_offset.end() - 1);
        for (std::uint32_t e = 0; e < _edge_succ.size(); ++e)
            _pred_edges[fill[_edge_succ[e]]++] = e;
    }

    for (std::uint32_t v = 0; v < _var_domain.size(); ++v)
        if (ActionSet{_var_domain[v]}.size() > 1)
            _order.push_back(v);
    std::stable_sort(_order.begin(), _order.end(), [&](std::uint32_t a, std::uint32_t b) {
        return _occ_offset[a + 1] - _occ_offset[a] > _occ_offset[b + 1] - _occ_offset[b];
    });
}

/// Depth-first search over variable domains with collision-support pruning and a reachability
/// certificate (rank + witness move per state) that proves every state can still reach the goal.
class SearchEngine
{
public:
    SearchEngine(const SearchProblem & p, const Budget & budget, const SolverOptions & options) :
        _p(p),
        _n(static_cast<std::size_t>(p._agents)),
        _budget(budget),
        _options(options),
        _domain(p._var_domain),
        _rank(p._states, unreached),
        _witness(p._states, no_edge),
        _var_queued(p._var_domain.size(), 0),
        _state_queued(p._states, 0),
        _broken_flag(p._states, 0),
        _start(std::chrono::steady_clock::now())
    {
        if (options.seed)
            _rng.seed(*options.seed);
    }

    /// Runs the search. For plain solving, stops at the first solution; when optimizing, keeps
    /// going with a strict upper bound until the space is exhausted.
    auto run(bool optimizing, std::optional<std::uint64_t> incumbent,
        const std::function<void(std::vector<std::vector<Action>>, std::uint64_t)> & on_solution,
        const std::vector<std::int8_t> & phase) -> SolveStatus
    {
        _optimizing = optimizing;
        _best = incumbent;
        _phase = &phase;
        bool found = false;

        for (std::uint32_t s = 0; s < _p._states; ++s)
            queue_state(s);
        bool ok = propagate(true);
        if (ok && _options.probe)
            ok = probe();

        struct Frame
        {
            std::size_t mark;
            std::uint32_t var;
            Action value;
            bool negated;
            std::size_t order_pos;
        };
        std::vector<Frame> frames;
        std::size_t order_pos = 0;

        while (true) {
            if (ok && _optimizing && _best && _rank_sum >= *_best)
                ok = false;
            if (ok) {
                if (out_of_budget())
                    return SolveStatus::TimedOut;
                while (order_pos < _p._order.size() && ActionSet{_domain[_p._order[order_pos]]}.size() == 1)
                    ++order_pos;
                if (order_pos == _p._order.size()) {
                    found = true;
                    // every state now has one move and a finite rank, so the rank sum is the exact cost
                    on_solution(extract(), _rank_sum);
                    if (! _optimizing)
                        return SolveStatus::Feasible;
                    _best = _rank_sum;
                    ok = false;
                    continue;
                }
                auto var = _p._order[order_pos];
                auto value = choose_value(var);
                frames.push_back(Frame{_trail.size(), var, value, false, order_pos});
                ++_stats.nodes;
                assign(var, ActionSet{value});
                ok = propagate(_optimizing);
                continue;
            }

            ++_stats.failures;
            bool resumed = false;
            while (! frames.empty()) {
                auto & f = frames.back();
                undo(f.mark);
                if (! f.negated) {
                    f.negated = true;
                    order_pos = f.order_pos;
                    auto rest = ActionSet{_domain[f.var]};
                    rest.erase(f.value);
                    assign(f.var, rest);
                    ok = propagate(_optimizing);
                    resumed = true;
                    break;
                }
                frames.pop_back();
            }
            if (! resumed)
                return found ? SolveStatus::Feasible : SolveStatus::Infeasible;
        }
    }

    auto root_bound() -> std::optional<std::uint64_t>
    {
        for (std::uint32_t s = 0; s < _p._states; ++s)
            queue_state(s);
        if (! propagate(true) || (_options.probe && ! probe()) || ! rebuild_certificate())
            return std::nullopt;
        return _rank_sum;
    }

    auto stats() -> SolveStats
    {
        _stats.seconds = elapsed();
        return _stats;
    }

private:
    auto elapsed() const -> double
    {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - _start).count();
    }

    auto out_of_budget() -> bool
    {
        if (_budget.nodes && _stats.nodes >= *_budget.nodes)
            return true;
        if (_budget.seconds && (++_budget_checks & 15) == 0 && elapsed() > *_budget.seconds)
            return true;
        return false;
    }

    auto consistent(std::uint32_t e) const -> bool
    {
        auto src = _p._edge_src[e];
        auto acts = _p._edge_acts[e];
        const auto * vars = &_p._state_var[src * _n];
        for (std::size_t i = 0; i < _n; ++i)
            if (! ((_domain[vars[i]] >> packed_action(acts, static_cast<int>(i))) & 1u))
                return false;
        return true;
    }

    auto assign(std::uint32_t var, ActionSet value) -> void
    {
        _trail.emplace_back(var, _domain[var]);
        _domain[var] = value.bits();
        if (! _var_queued[var]) {
            _var_queued[var] = 1;
            _var_queue.push_back(var);
        }
    }

    auto undo(std::size_t mark) -> void
    {
        while (_trail.size() > mark) {
            _domain[_trail.back().first] = _trail.back().second;
            _trail.pop_back();
        }
    }

    auto queue_state(std::uint32_t s) -> void
    {
        if (! _state_queued[s]) {
            _state_queued[s] = 1;
            _state_queue.push_back(s);
        }
    }

    auto clear_queues() -> void
    {
        for (auto v : _var_queue)
            _var_queued[v] = 0;
        _var_queue.clear();
        for (auto s : _state_queue)
            _state_queued[s] = 0;
        _state_queue.clear();
        for (auto s : _broken)
            _broken_flag[s] = 0;
        _broken.clear();
    }

    /// Drops values only used by colliding or stationary joint moves of s. False if s has no move left.
    auto revise(std::uint32_t s) -> bool
    {
        ++_stats.propagations;
        std::uint8_t support[max_agents] = {};
        const auto * vars = &_p._state_var[s * _n];
        bool any = false, witness_ok = false;
        for (auto e = _p._edge_offset[s]; e < _p._edge_offset[s + 1]; ++e) {
            auto acts = _p._edge_acts[e];
            bool ok = true;
            for (std::size_t i = 0; i < _n && ok; ++i)
                ok = (_domain[vars[i]] >> packed_action(acts, static_cast<int>(i))) & 1u;
            if (! ok)
                continue;
            any = true;
            witness_ok = witness_ok || e == _witness[s];
            for (std::size_t i = 0; i < _n; ++i)
                support[i] |= static_cast<std::uint8_t>(1u << packed_action(acts, static_cast<int>(i)));
        }
        if (! any)
            return false;
        for (std::size_t i = 0; i < _n; ++i) {
            auto narrowed = static_cast<std::uint8_t>(_domain[vars[i]] & support[i]);
            if (narrowed != _domain[vars[i]])
                assign(vars[i], ActionSet{narrowed});
        }
        if (! witness_ok && ! _broken_flag[s]) {
            _broken_flag[s] = 1;
            _broken.push_back(s);
        }
        return true;
    }

    auto propagate(bool force_bfs) -> bool
    {
        while (! _var_queue.empty() || ! _state_queue.empty()) {
            while (! _var_queue.empty()) {
                auto v = _var_queue.back();
                _var_queue.pop_back();
                _var_queued[v] = 0;
                for (auto k = _p._occ_offset[v]; k < _p._occ_offset[v + 1]; ++k)
                    queue_state(_p._occ_states[k]);
            }
            while (! _state_queue.empty()) {
                auto s = _state_queue.back();
                _state_queue.pop_back();
                _state_queued[s] = 0;
                if (s == _p._goal)
                    continue;
                if (! revise(s)) {
                    clear_queues();
                    return false;
                }
            }
        }

        bool rebuild = force_bfs || ! _certificate;
        for (auto s : _broken) {
            _broken_flag[s] = 0;
            if (! rebuild && ! repair(s))
                rebuild = true;
        }
        _broken.clear();
        return rebuild ? rebuild_certificate() : true;
    }

    /// Re-anchors s on a consistent move into a strictly lower-ranked state.
    auto repair(std::uint32_t s) -> bool
    {
        if (_witness[s] != no_edge && consistent(_witness[s]))
            return true;
        for (auto e = _p._edge_offset[s]; e < _p._edge_offset[s + 1]; ++e)
            if (_rank[_p._edge_succ[e]] < _rank[s] && consistent(e)) {
                _witness[s] = e;
                return true;
            }
        return false;
    }

    /// Backward BFS from the goal over moves consistent with the current domains. Ranks become the
    /// shortest distances in the nondeterministic move graph, a lower bound on any completion's dist.
    auto rebuild_certificate() -> bool
    {
        std::fill(_rank.begin(), _rank.end(), unreached);
        _bfs.clear();
        _bfs.push_back(static_cast<std::uint32_t>(_p._goal));
        _rank[_p._goal] = 0;
        _witness[_p._goal] = no_edge;
        std::uint64_t sum = 0;
        for (std::size_t head = 0; head < _bfs.size(); ++head) {
            auto t = _bfs[head];
            auto next_rank = _rank[t] + 1;
            for (auto k = _p._pred_offset[t]; k < _p._pred_offset[t + 1]; ++k) {
                auto e = _p._pred_edges[k];
                auto src = _p._edge_src[e];
                if (_rank[src] != unreached || ! consistent(e))
                    continue;
                _rank[src] = next_rank;
                _witness[src] = e;
                sum += next_rank;
                _bfs.push_back(src);
            }
        }
        _certificate = _bfs.size() == _p._states;
        _rank_sum = sum;
        return _certificate;
    }

    /// Removes every value whose assignment alone propagates to a failure; repeats to a fixpoint.
    auto probe() -> bool
    {
        bool changed = true;
        while (changed) {
            changed = false;
            for (auto var : _p._order) {
                for (auto a : ActionSet{_domain[var]}.actions()) {
                    if (ActionSet{_domain[var]}.size() < 2)
                        break;
                    if (out_of_budget())
                        return true;
                    auto mark = _trail.size();
                    assign(var, ActionSet{a});
                    bool ok = propagate(false);
                    undo(mark);
                    if (ok)
                        continue;
                    auto rest = ActionSet{_domain[var]};
                    rest.erase(a);
                    assign(var, rest);
                    if (! propagate(false))
                        return false;
                    changed = true;
                }
            }
        }
        return _optimizing ? rebuild_certificate() : true;
    }

    auto choose_value(std::uint32_t var) -> Action
    {
        auto values = ActionSet{_domain[var]}.actions();
        if ((*_phase).size() > var && (*_phase)[var] >= 0) {
            auto preferred = static_cast<Action>((*_phase)[var]);
            if (ActionSet{_domain[var]}.contains(preferred))
                return preferred;
        }
        if (_options.seed) {
            return values[_rng() % values.size()];
        }
        const auto * cost = &_p._var_cost[var * action_count];
        return *std::min_element(values.begin(), values.end(), [&](Action a, Action b) {
            auto ca = cost[static_cast<std::size_t>(a)], cb = cost[static_cast<std::size_t>(b)];
            return ca != cb ? ca < cb : a < b;
        });
    }

    auto extract() const -> std::vector<std::vector<Action>>
    {
        const auto & space = _p.space();
        std::vector<std::vector<Action>> table(_n);
        for (std::size_t i = 0; i < _n; ++i) {
            table[i].resize(space.local_count(static_cast<int>(i)));
            for (std::size_t id = 0; id < table[i].size(); ++id)
                table[i][id] = ActionSet{_domain[_p._var_of_key[_p._key_offset[i] + id]]}.only();
        }
        return table;
    }

    const SearchProblem & _p;
    std::size_t _n;
    Budget _budget;
    SolverOptions _options;
    std::vector<std::uint8_t> _domain;
    std::vector<std::pair<std::uint32_t, std::uint8_t>> _trail;
    std::vector<std::uint32_t> _rank;
    std::vector<std::uint32_t> _witness;
    bool _certificate = false;
    std::uint64_t _rank_sum = 0;
    std::vector<std::uint32_t> _var_queue;
    std::vector<std::uint8_t> _var_queued;
    std::vector<std::uint32_t> _state_queue;
    std::vector<std::uint8_t> _state_queued;
    std::vector<std::uint32_t> _broken;
    std::vector<std::uint8_t> _broken_flag;
    std::vector<std::uint32_t> _bfs;
    bool _optimizing = false;
    std::optional<std::uint64_t> _best;
    const std::vector<std::int8_t> * _phase = nullptr;
    std::mt19937_64 _rng;
    SolveStats _stats;
    std::uint64_t _budget_checks = 0;
    std::chrono::steady_clock::time_point _start;
};

namespace {

auto certified(const SearchProblem & problem, std::vector<std::vector<Action>> table) -> std::pair<PolicyProfile, std::uint64_t>
{
    PolicyProfile policy(problem.model().shared_space(), std::move(table));
    auto report = verify(policy);
    if (! report.feasible)
        throw std::logic_error("search produced a policy that fails verification");
    return {std::move(policy), sum_of_makespan(report)};
}

auto elapsed_since(std::chrono::steady_clock::time_point start) -> double
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

auto solve_once(const SearchProblem & problem, const Budget & budget, const SolverOptions & options) -> SolveOutcome
{
    SearchEngine engine(problem, budget, options);
    SolveOutcome outcome;
    std::vector<std::int8_t> no_phase;
    outcome.status = engine.run(false, std::nullopt,
        [&](std::vector<std::vector<Action>> table, std::uint64_t) {
            auto [policy, cost] = certified(problem, std::move(table));
            outcome.policy = std::move(policy);
            outcome.cost = cost;
        },
        no_phase);
    outcome.stats = engine.stats();
    return outcome;
}

} // namespace

auto solve(const SearchProblem & problem, const Budget & budget, const SolverOptions & options) -> SolveOutcome
{
    if (options.restart_nodes == 0)
        return solve_once(problem, budget, options);

    auto start = std::chrono::steady_clock::now();
    SolveStats total;
    auto limit = options.restart_nodes;
    auto seed = options.seed.value_or(0x5eed);
    for (std::uint64_t run = 0;; ++run) {
        Budget slice{budget.seconds, limit};
        if (budget.seconds)
            slice.seconds = *budget.seconds - elapsed_since(start);
        if (budget.nodes)
            slice.nodes = std::min(limit, *budget.nodes - std::min(*budget.nodes, total.nodes));
        auto run_options = options;
        if (run > 0 || options.seed)
            run_options.seed = seed + run * 0x9e3779b97f4a7c15ull;

        auto outcome = solve_once(problem, slice, run_options);
        total.nodes += outcome.stats.nodes;
        total.propagations += outcome.stats.propagations;
        total.failures += outcome.stats.failures;
        total.seconds = elapsed_since(start);
        outcome.stats = total;
        if (outcome.status != SolveStatus::TimedOut)
            return outcome;
        bool out_of_time = budget.seconds && total.seconds >= *budget.seconds;
        bool out_of_nodes = budget.nodes && total.nodes >= *budget.nodes;
        if (out_of_time || out_of_nodes)
            return outcome;
        limit *= 2;
    }
}

auto lower_bound(const SearchProblem & problem, const SolverOptions & options) -> std::optional<std::uint64_t>
{
    SearchEngine engine(problem, Budget{}, options);
    return engine.root_bound();
}

auto optimize(const SearchProblem & problem, const Budget & budget, const std::optional<PolicyProfile> & initial,
    const ImprovementCallback & on_improve, const SolverOptions & options) -> SolveOutcome
{
    SolveOutcome outcome;
    std::optional<std::uint64_t> incumbent;
    std::vector<std::int8_t> phase;
    if (initial) {
        auto report = verify(*initial);
        if (! report.feasible)
            throw InvalidPolicy("initial policy for optimization is not feasible");
        incumbent = sum_of_makespan(report);
        outcome.policy = *initial;
        outcome.cost = incumbent;
        if (on_improve)
            on_improve(*initial, *incumbent);
        // seed the value order with the incumbent's choices
        phase.assign(problem.variable_count(), -1);
        for (int i = 0; i < problem.space().agents(); ++i)
            for (std::size_t id = 0; id < problem.space().local_count(i); ++id) {
                auto v = problem.variable_of(i, id);
                if (phase[v] < 0)
                    phase[v] = static_cast<std::int8_t>(initial->action(i, id));
            }
    }

    SearchEngine engine(problem, budget, options);
    auto status = engine.run(true, incumbent,
        [&](std::vector<std::vector<Action>> table, std::uint64_t bound) {
            auto [policy, cost] = certified(problem, std::move(table));
            if (cost != bound)
                throw std::logic_error("search cost disagrees with verified sum-of-makespan");
            outcome.policy = policy;
            outcome.cost = cost;
            if (on_improve)
                on_improve(policy, cost);
        },
        phase);
    outcome.stats = engine.stats();
    if (status == SolveStatus::TimedOut)
        outcome.status = SolveStatus::TimedOut;
    else if (outcome.policy) {
        outcome.status = SolveStatus::Feasible;
        outcome.optimal = true;
    }
    else
        outcome.status = SolveStatus::Infeasible;
    return outcome;
}

auto solve_with_restriction_fallback(std::shared_ptr<const StateSpace> space, std::span<const Scenario> chain,
    const Budget & budget, const SolverOptions & options) -> SolveOutcome
{
    if (chain.empty())
        throw InvalidConfiguration("scenario chain must not be empty");
    SolveOutcome last;
    std::vector<std::pair<Scenario, SolveStatus>> attempts;
    bool timed_out = false;
    for (const auto & scenario : chain) {
        SearchProblem problem(build_candidates(space, scenario));
        auto outcome = solve(problem, budget, options);
        attempts.emplace_back(scenario, outcome.status);
        timed_out = timed_out || outcome.status == SolveStatus::TimedOut;
        if (outcome.status == SolveStatus::Feasible) {
            outcome.scenario = scenario;
            outcome.attempts = std::move(attempts);
            return outcome;
        }
        last = std::move(outcome);
    }
    last.status = timed_out ? SolveStatus::TimedOut : SolveStatus::Infeasible;
    last.policy.reset();
    last.cost.reset();
    last.attempts = std::move(attempts);
    return last;
}

} // namespace maupf
