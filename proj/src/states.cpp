#include <maupf/error.hpp>
#include <maupf/states.hpp>

#include <algorithm>
#include <cctype>
#include <limits>

namespace maupf {

namespace {

constexpr std::uint64_t dense_index_limit = std::uint64_t{1} << 24;

auto trim(std::string_view s) -> std::string_view
{
    while (! s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
        s.remove_prefix(1);
    while (! s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
        s.remove_suffix(1);
    return s;
}

auto checked_pow(std::uint64_t base, int exp) -> std::optional<std::uint64_t>
{
    unsigned __int128 result = 1;
    for (int k = 0; k < exp; ++k) {
        result *= base;
        if (result > std::numeric_limits<std::uint64_t>::max())
            return std::nullopt;
    }
    return static_cast<std::uint64_t>(result);
}

} // namespace

auto SensorRange::of(int radius) -> SensorRange
{
    if (radius < 0)
        throw InvalidConfiguration("sensor range must be non-negative");
    SensorRange r;
    r._radius = radius;
    return r;
}

auto to_string(SensorRange r) -> std::string
{
    return r.is_full() ? "full" : std::to_string(*r.radius());
}

auto parse_sensor(std::string_view text) -> SensorRange
{
    auto s = trim(text);
    if (s == "full" || s == "Full" || s == "FULL")
        return SensorRange::full();
    if (s.empty() || ! std::all_of(s.begin(), s.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); }))
        throw InvalidConfiguration("sensor range must be a non-negative integer or 'full'");
    return SensorRange::of(std::stoi(std::string(s)));
}

auto within_fov(SensorRange r, Cell a, Cell b) -> bool
{
    if (a == b)
        return false;
    return r.is_full() || chebyshev(a, b) <= *r.radius();
}

auto Configuration::validate() const -> void
{
    if (agents < 1)
        throw InvalidConfiguration("agent count must be at least 1");
    if (goals.goals.size() != static_cast<std::size_t>(agents))
        throw InvalidConfiguration("goal profile has " + std::to_string(goals.goals.size()) + " goals for "
            + std::to_string(agents) + " agents");
    validate_goals(map, goals);
}

auto to_string(const GlobalState & s) -> std::string
{
    std::string result = "(";
    for (std::size_t i = 0; i < s.positions.size(); ++i) {
        if (i)
            result += ",";
        result += to_string(s.positions[i]);
    }
    return result + ")";
}

auto parse_global_state(std::string_view text) -> GlobalState
{
    return GlobalState{parse_cells(text)};
}

auto serialize(const LocalState & ls) -> std::string
{
    std::string result = "self=" + to_string(ls.self);
    for (std::size_t k = 0; k < ls.others.size(); ++k) {
        result += ";o" + std::to_string(k + 1) + "=";
        result += ls.others[k] ? to_string(*ls.others[k]) : std::string("ABS");
    }
    return result + ";goal=" + to_string(ls.goal);
}

auto parse_local_state(std::string_view text) -> LocalState
{
    LocalState ls;
    bool have_self = false, have_goal = false;
    std::size_t pos = 0;
    auto s = trim(text);
    while (pos <= s.size()) {
        auto semi = s.find(';', pos);
        auto field = s.substr(pos, semi == std::string_view::npos ? std::string_view::npos : semi - pos);
        auto eq = field.find('=');
        if (eq == std::string_view::npos)
            throw InvalidConfiguration("malformed local state field '" + std::string(field) + "'");
        auto key = field.substr(0, eq);
        auto value = field.substr(eq + 1);
        if (key == "self") {
            if (have_self || ! ls.others.empty() || have_goal)
                throw InvalidConfiguration("'self' must come first in a local state");
            ls.self = parse_cell(value);
            have_self = true;
        }
        else if (key == "goal") {
            if (! have_self || have_goal)
                throw InvalidConfiguration("'goal' must come last in a local state");
            ls.goal = parse_cell(value);
            have_goal = true;
        }
        else if (key.size() > 1 && key.front() == 'o') {
            if (! have_self || have_goal || key.substr(1) != std::to_string(ls.others.size() + 1))
                throw InvalidConfiguration("slot '" + std::string(key) + "' out of order");
            if (value == "ABS")
                ls.others.emplace_back(std::nullopt);
            else
                ls.others.emplace_back(parse_cell(value));
        }
        else
            throw InvalidConfiguration("unknown local state field '" + std::string(key) + "'");
        if (semi == std::string_view::npos)
            break;
        pos = semi + 1;
    }
    if (! have_self || ! have_goal)
        throw InvalidConfiguration("local state needs 'self' and 'goal'");
    return ls;
}

auto observe(const Configuration & cfg, const GlobalState & s, int agent) -> LocalState
{
    if (agent < 0 || agent >= cfg.agents || s.positions.size() != static_cast<std::size_t>(cfg.agents))
        throw InvalidConfiguration("agent index " + std::to_string(agent) + " out of range");
    LocalState ls;
    ls.self = s.positions[agent];
    ls.goal = cfg.goals.goals[agent];
    for (int j = 0; j < cfg.agents; ++j) {
        if (j == agent)
            continue;
        if (within_fov(cfg.sensor, ls.self, s.positions[j]))
            ls.others.emplace_back(s.positions[j]);
        else
            ls.others.emplace_back(std::nullopt);
    }
    return ls;
}

auto enumerate_global_states(const Configuration & cfg) -> std::vector<GlobalState>
{
    const auto & free = cfg.map.free_cells();
    auto n = static_cast<std::size_t>(cfg.agents);
    if (n > free.size())
        throw NoStates(std::to_string(n) + " agents do not fit on " + std::to_string(free.size()) + " free cells");

    std::vector<GlobalState> result;
    std::vector<std::size_t> pick(n);
    std::vector<std::uint8_t> used(free.size());
    std::size_t depth = 0;
    pick[0] = 0;
    // iterative n-permutation enumeration in lexicographic order
    while (true) {
        if (pick[depth] >= free.size()) {
            if (depth == 0)
                break;
            --depth;
            used[pick[depth]] = 0;
            ++pick[depth];
            continue;
        }
        if (used[pick[depth]]) {
            ++pick[depth];
            continue;
        }
        if (depth + 1 == n) {
            GlobalState s;
            for (auto p : pick)
                s.positions.push_back(free[p]);
            result.push_back(std::move(s));
            ++pick[depth];
            continue;
        }
        used[pick[depth]] = 1;
        ++depth;
        pick[depth] = 0;
    }
    return result;
}

auto enumerate_local_states(const Configuration & cfg, int agent) -> std::vector<LocalState>
{
    if (agent < 0 || agent >= cfg.agents)
        throw InvalidConfiguration("agent index " + std::to_string(agent) + " out of range");
    const auto & free = cfg.map.free_cells();
    auto slots = static_cast<std::size_t>(cfg.agents - 1);
    if (static_cast<std::size_t>(cfg.agents) > free.size())
        return {};

    std::vector<LocalState> result;
    for (auto self : free) {
        std::vector<Cell> visible;
        for (auto c : free)
            if (within_fov(cfg.sensor, self, c))
                visible.push_back(c);
        // Absent slots must each be backed by a distinct free cell outside the FoV
        auto outside = free.size() - 1 - visible.size();

        LocalState ls{self, std::vector<std::optional<Cell>>(slots), cfg.goals.goals[agent]};
        std::vector<std::uint8_t> used(visible.size());
        auto recurse = [&](auto && self_ref, std::size_t slot, std::size_t absent) -> void {
            if (slot == slots) {
                result.push_back(ls);
                return;
            }
            if (absent < outside) {
                ls.others[slot] = std::nullopt;
                self_ref(self_ref, slot + 1, absent + 1);
            }
            for (std::size_t v = 0; v < visible.size(); ++v) {
                if (used[v])
                    continue;
                used[v] = 1;
                ls.others[slot] = visible[v];
                self_ref(self_ref, slot + 1, absent);
                used[v] = 0;
            }
        };
        recurse(recurse, 0, 0);
    }
    return result;
}

auto estimate_local_state_count(std::uint64_t m, std::uint64_t k, std::uint64_t n) -> std::uint64_t
{
    if (m < 1 || k < 1 || n < 1)
        throw InvalidConfiguration("estimate needs M, K, n >= 1");
    // C(K+j, j) = C(K+j-1, j-1) * (K+j) / j stays integral at every step
    unsigned __int128 binom = 1;
    for (std::uint64_t j = 1; j < n; ++j) {
        binom = binom * (k + j) / j;
        if (binom > std::numeric_limits<std::uint64_t>::max())
            throw Overflow("local state estimate overflows 64 bits");
    }
    unsigned __int128 total = binom * m;
    if (total > std::numeric_limits<std::uint64_t>::max())
        throw Overflow("local state estimate overflows 64 bits");
    return static_cast<std::uint64_t>(total);
}

auto to_string(const Conflict & c) -> std::string
{
    return std::string(c.kind == ConflictKind::Vertex ? "vertex" : "edge") + " conflict between agents "
        + std::to_string(c.first) + " and " + std::to_string(c.second) + " at " + to_string(c.where);
}

auto transition(const Configuration & cfg, const GlobalState & s, std::span<const Action> acts) -> TransitionResult
{
    auto n = s.positions.size();
    if (acts.size() != n)
        throw InvalidAction("expected " + std::to_string(n) + " actions, got " + std::to_string(acts.size()));
    GlobalState next;
    next.positions.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto dest = apply_action(cfg.map, s.positions[i], acts[i]);
        if (! dest)
            throw InvalidAction("action " + std::string(to_string(acts[i])) + " is not available at "
                + to_string(s.positions[i]));
        next.positions.push_back(*dest);
    }
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            if (next.positions[i] == next.positions[j])
                return Conflict{ConflictKind::Vertex, static_cast<int>(i), static_cast<int>(j), next.positions[i]};
            if (next.positions[i] == s.positions[j] && next.positions[j] == s.positions[i]
                && manhattan(s.positions[i], s.positions[j]) == 1)
                return Conflict{ConflictKind::Edge, static_cast<int>(i), static_cast<int>(j), s.positions[i]};
        }
    return next;
}

StateSpace::StateSpace(Configuration cfg) :
    _cfg(std::move(cfg))
{
    _cfg.validate();
    const auto & map = _cfg.map;
    auto m = map.free_count();
    auto n = static_cast<std::size_t>(_cfg.agents);
    if (m > std::numeric_limits<std::uint16_t>::max())
        throw UnsupportedConfiguration("maps with more than 65535 free cells are not supported");

    _moves.assign(m * action_count, -1);
    for (std::size_t c = 0; c < m; ++c)
        for (auto a : all_actions)
            _moves[c * action_count + static_cast<std::size_t>(a)] = map.index_of(displace(map.cell_at(c), a));

    auto states = enumerate_global_states(_cfg);
    _global_count = states.size();
    _positions.reserve(_global_count * n);
    for (const auto & s : states)
        for (auto p : s.positions)
            _positions.push_back(static_cast<std::uint16_t>(map.index_of(p)));

    auto space = checked_pow(m, _cfg.agents);
    if (space && *space <= dense_index_limit) {
        _dense_index.assign(*space, -1);
        for (std::size_t s = 0; s < _global_count; ++s)
            _dense_index[code_of(cells(s))] = static_cast<std::int32_t>(s);
    }
    else {
        if (! checked_pow(m + 1, _cfg.agents + 1))
            throw UnsupportedConfiguration("state space too large to index");
        _sparse_index.reserve(_global_count);
        for (std::size_t s = 0; s < _global_count; ++s)
            _sparse_index.emplace(code_of(cells(s)), static_cast<std::uint32_t>(s));
    }
    _goal = *find_global(GlobalState{_cfg.goals.goals});

    _locals.resize(n);
    _local_index.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        _locals[i] = enumerate_local_states(_cfg, static_cast<int>(i));
        _local_index[i].reserve(_locals[i].size());
        for (std::size_t id = 0; id < _locals[i].size(); ++id)
            _local_index[i].emplace(*local_code(static_cast<int>(i), _locals[i][id]), static_cast<std::uint32_t>(id));
    }

    _obs.resize(_global_count * n);
    for (std::size_t s = 0; s < _global_count; ++s) {
        auto pos = cells(s);
        for (std::size_t i = 0; i < n; ++i) {
            auto self = map.cell_at(pos[i]);
            std::uint64_t code = 0, scale = 1;
            for (std::size_t j = 0; j < n; ++j) {
                if (j == i)
                    continue;
                auto other = map.cell_at(pos[j]);
                code += scale * (within_fov(_cfg.sensor, self, other) ? pos[j] + 1u : 0u);
                scale *= (m + 1);
            }
            _obs[s * n + i] = _local_index[i].at(pos[i] + m * code);
        }
    }
}

auto StateSpace::code_of(std::span<const std::uint16_t> cells) const -> std::uint64_t
{
    std::uint64_t code = 0;
    auto m = _cfg.map.free_count();
    for (auto it = cells.rbegin(); it != cells.rend(); ++it)
        code = code * m + *it;
    return code;
}

auto StateSpace::local_code(int agent, const LocalState & ls) const -> std::optional<std::uint64_t>
{
    const auto & map = _cfg.map;
    auto m = map.free_count();
    if (ls.goal != _cfg.goals.goals[agent] || ls.others.size() + 1 != static_cast<std::size_t>(_cfg.agents))
        return std::nullopt;
    auto self = map.index_of(ls.self);
    if (self < 0)
        return std::nullopt;
    std::uint64_t code = 0, scale = 1;
    for (const auto & o : ls.others) {
        std::uint64_t slot = 0;
        if (o) {
            auto idx = map.index_of(*o);
            if (idx < 0)
                return std::nullopt;
            slot = static_cast<std::uint64_t>(idx) + 1;
        }
        code += scale * slot;
        scale *= (m + 1);
    }
    return static_cast<std::uint64_t>(self) + m * code;
}

auto StateSpace::global(std::size_t s) const -> GlobalState
{
    GlobalState result;
    for (auto p : cells(s))
        result.positions.push_back(_cfg.map.cell_at(p));
    return result;
}

auto StateSpace::find_global(const GlobalState & s) const -> std::optional<std::size_t>
{
    if (s.positions.size() != static_cast<std::size_t>(_cfg.agents))
        return std::nullopt;
    std::vector<std::uint16_t> idx;
    for (auto p : s.positions) {
        auto i = _cfg.map.index_of(p);
        if (i < 0)
            return std::nullopt;
        idx.push_back(static_cast<std::uint16_t>(i));
    }
    auto code = code_of(idx);
    if (! _dense_index.empty()) {
        auto found = _dense_index[code];
        return found < 0 ? std::nullopt : std::optional<std::size_t>(found);
    }
    auto it = _sparse_index.find(code);
    return it == _sparse_index.end() ? std::nullopt : std::optional<std::size_t>(it->second);
}

auto StateSpace::find_local(int agent, const LocalState & ls) const -> std::optional<std::size_t>
{
    if (agent < 0 || agent >= _cfg.agents)
        return std::nullopt;
    auto code = local_code(agent, ls);
    if (! code)
        return std::nullopt;
    auto it = _local_index[agent].find(*code);
    if (it == _local_index[agent].end() || _locals[agent][it->second] != ls)
        return std::nullopt;
    return it->second;
}

auto StateSpace::available(std::uint16_t cell) const -> ActionSet
{
    ActionSet result;
    for (auto a : all_actions)
        if (move(cell, a) >= 0)
            result.insert(a);
    return result;
}

auto StateSpace::successor(std::size_t s, std::span<const Action> acts) const -> std::variant<std::size_t, Conflict>
{
    auto n = static_cast<std::size_t>(_cfg.agents);
    auto pos = cells(s);
    std::uint16_t next[16];
    std::vector<std::uint16_t> spill;
    std::uint16_t * out = next;
    if (n > 16) {
        spill.resize(n);
        out = spill.data();
    }
    for (std::size_t i = 0; i < n; ++i) {
        auto dest = move(pos[i], acts[i]);
        if (dest < 0)
            throw InvalidAction("action " + std::string(to_string(acts[i])) + " is not available at "
                + to_string(_cfg.map.cell_at(pos[i])));
        out[i] = static_cast<std::uint16_t>(dest);
    }
    const auto & map = _cfg.map;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            if (out[i] == out[j])
                return Conflict{ConflictKind::Vertex, static_cast<int>(i), static_cast<int>(j), map.cell_at(out[i])};
            // distinct free cells swapping in one step are necessarily adjacent
            if (out[i] == pos[j] && out[j] == pos[i])
                return Conflict{ConflictKind::Edge, static_cast<int>(i), static_cast<int>(j), map.cell_at(pos[i])};
        }
    auto code = code_of({out, n});
    if (! _dense_index.empty())
        return static_cast<std::size_t>(_dense_index[code]);
    return static_cast<std::size_t>(_sparse_index.at(code));
}

} // namespace maupf
