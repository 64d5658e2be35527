#include <maupf/error.hpp>
#include <maupf/restrict.hpp>

#include <array>
#include <map>

namespace maupf {

auto to_string(const Scenario & s) -> std::string
{
    std::string name;
    switch (s.kind) {
    case ScenarioKind::Unrestricted: name = "none"; break;
    case ScenarioKind::DefaultAction: name = "default"; break;
    case ScenarioKind::LastMinute: name = "lastmin"; break;
    case ScenarioKind::Myopic: name = "myopic"; break;
    case ScenarioKind::TrafficLocationDependent: name = "traffic-loc"; break;
    case ScenarioKind::TrafficLocationFree: name = "traffic-free"; break;
    }
    if (s.is_traffic() && s.with_default)
        name += "+default";
    return name;
}

auto parse_scenario(std::string_view text) -> Scenario
{
    Scenario s;
    constexpr std::string_view suffix = "+default";
    if (text.size() > suffix.size() && text.substr(text.size() - suffix.size()) == suffix) {
        s.with_default = true;
        text.remove_suffix(suffix.size());
    }
    if (text == "none")
        s.kind = ScenarioKind::Unrestricted;
    else if (text == "default")
        s.kind = ScenarioKind::DefaultAction;
    else if (text == "lastmin")
        s.kind = ScenarioKind::LastMinute;
    else if (text == "myopic")
        s.kind = ScenarioKind::Myopic;
    else if (text == "traffic-loc")
        s.kind = ScenarioKind::TrafficLocationDependent;
    else if (text == "traffic-free")
        s.kind = ScenarioKind::TrafficLocationFree;
    else
        throw InvalidConfiguration("unknown scenario '" + std::string(text) + "'");
    if (s.with_default && ! s.is_traffic())
        throw InvalidConfiguration("'+default' only applies to traffic scenarios");
    return s;
}

auto action_cost(const GridMap & map, const LocalState & ls, Action a) -> int
{
    auto dest = apply_action(map, ls.self, a);
    return dest ? manhattan(*dest, ls.goal) : infinite_cost;
}

auto greedy_actions(const GridMap & map, const LocalState & ls) -> ActionSet
{
    if (ls.self == ls.goal)
        return ActionSet{Action::Nil};
    int best = infinite_cost;
    ActionSet result;
    for (auto a : all_actions) {
        auto c = action_cost(map, ls, a);
        if (c == infinite_cost)
            continue;
        if (c < best) {
            best = c;
            result = ActionSet{a};
        }
        else if (c == best)
            result.insert(a);
    }
    return result;
}

auto is_lastmin(Cell a, Cell b) -> bool
{
    return manhattan(a, b) <= 2;
}

CandidateModel::CandidateModel(std::shared_ptr<const StateSpace> space, Scenario scenario,
    std::vector<std::vector<ActionSet>> candidates, std::vector<std::vector<LocalKey>> tie_groups) :
    _space(std::move(space)),
    _scenario(scenario),
    _candidates(std::move(candidates)),
    _tie_groups(std::move(tie_groups))
{
    const auto & map = _space->config().map;
    if (_candidates.size() != static_cast<std::size_t>(_space->agents()))
        throw InvalidConfiguration("candidate model does not cover every agent");
    _group.resize(_candidates.size());
    for (int i = 0; i < _space->agents(); ++i) {
        if (_candidates[i].size() != _space->local_count(i))
            throw InvalidConfiguration("candidate model does not cover every local state");
        _group[i].assign(_candidates[i].size(), -1);
        for (std::size_t id = 0; id < _candidates[i].size(); ++id) {
            const auto & ls = _space->local(i, id);
            auto c = _candidates[i][id];
            if (ls.self == ls.goal && c != ActionSet{Action::Nil})
                throw InvalidConfiguration("at-goal local state must have candidates {NIL}");
            if (c.empty() || (c & available_actions(map, ls.self)) != c)
                throw InvalidConfiguration("candidates must be a non-empty subset of the available actions");
        }
    }
    for (std::size_t g = 0; g < _tie_groups.size(); ++g) {
        const auto & group = _tie_groups[g];
        if (group.empty())
            throw InvalidConfiguration("empty tie group");
        for (const auto & key : group) {
            if (_group[key.agent][key.local] >= 0)
                throw InvalidConfiguration("local state belongs to two tie groups");
            _group[key.agent][key.local] = static_cast<std::int32_t>(g);
            if (_candidates[key.agent][key.local] != _candidates[group.front().agent][group.front().local])
                throw InvalidConfiguration("tie group members must share one candidate set");
        }
    }
}

auto CandidateModel::group_of(int agent, std::size_t local) const -> std::optional<std::size_t>
{
    auto g = _group[agent][local];
    return g < 0 ? std::nullopt : std::optional<std::size_t>(g);
}

auto build_candidates(std::shared_ptr<const StateSpace> space, const Scenario & scenario) -> CandidateModel
{
    const auto & cfg = space->config();
    const auto & map = cfg.map;
    auto n = cfg.agents;
    if (scenario.is_traffic() && n != 2)
        throw UnsupportedConfiguration("traffic rules are defined for exactly two agents, got " + std::to_string(n));

    std::vector<std::vector<ActionSet>> candidates(n);
    std::vector<std::vector<LocalKey>> groups;
    // traffic key: (self row, self col, rel row, rel col); self is pinned to (0,0) for location-free rules
    std::map<std::array<int, 4>, std::size_t> group_index;

    for (int i = 0; i < n; ++i) {
        candidates[i].resize(space->local_count(i));
        for (std::size_t id = 0; id < space->local_count(i); ++id) {
            const auto & ls = space->local(i, id);
            auto & c = candidates[i][id];
            if (ls.self == ls.goal) {
                c = ActionSet{Action::Nil};
                continue;
            }
            auto unrestricted = available_actions(map, ls.self);
            switch (scenario.kind) {
            case ScenarioKind::Unrestricted: c = unrestricted; break;
            case ScenarioKind::DefaultAction: c = ls.sees_anyone() ? unrestricted : greedy_actions(map, ls); break;
            case ScenarioKind::LastMinute: {
                bool close = false;
                for (const auto & o : ls.others)
                    if (o && is_lastmin(ls.self, *o))
                        close = true;
                c = close ? unrestricted : greedy_actions(map, ls);
                break;
            }
            case ScenarioKind::Myopic: c = greedy_actions(map, ls); break;
            case ScenarioKind::TrafficLocationDependent:
            case ScenarioKind::TrafficLocationFree: {
                if (! ls.sees_anyone()) {
                    c = scenario.with_default ? greedy_actions(map, ls) : unrestricted;
                    break;
                }
                c = unrestricted;
                auto other = *ls.others.front();
                std::array<int, 4> key{ls.self.row, ls.self.col, other.row - ls.self.row, other.col - ls.self.col};
                if (scenario.kind == ScenarioKind::TrafficLocationFree)
                    key[0] = key[1] = 0;
                auto [it, inserted] = group_index.emplace(key, groups.size());
                if (inserted)
                    groups.emplace_back();
                groups[it->second].push_back(LocalKey{i, static_cast<std::uint32_t>(id)});
                break;
            }
            }
        }
    }

    // a shared action must be available to every member, so a group's candidates are the intersection
    for (const auto & group : groups) {
        auto shared = ActionSet::all();
        for (const auto & key : group)
            shared = shared & candidates[key.agent][key.local];
        for (const auto & key : group)
            candidates[key.agent][key.local] = shared;
    }
    return CandidateModel(std::move(space), scenario, std::move(candidates), std::move(groups));
}

} // namespace maupf
