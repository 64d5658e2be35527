#include "support.hpp"

#include <maupf/error.hpp>

#include <doctest.h>

using namespace maupf;

namespace {

const std::vector<Scenario> chain{
    Scenario{ScenarioKind::Myopic},
    Scenario{ScenarioKind::LastMinute},
    Scenario{ScenarioKind::DefaultAction},
    Scenario{ScenarioKind::Unrestricted},
};

auto shared(const GridMap & map, GoalProfile goals, SensorRange sensor) -> std::shared_ptr<const StateSpace>
{
    auto n = static_cast<int>(goals.goals.size());
    return std::make_shared<const StateSpace>(Configuration{map, n, sensor, std::move(goals), Scenario{}});
}

} // namespace

TEST_CASE("action cost is the Manhattan distance after the move")
{
    auto m = GridMap::empty(3, 3);
    LocalState ls{Cell{0, 0}, {}, Cell{0, 2}};
    CHECK(action_cost(m, ls, Action::Right) == 1);
    CHECK(action_cost(m, ls, Action::Nil) == 2);
    CHECK(action_cost(m, ls, Action::Down) == 3);
    CHECK(action_cost(m, ls, Action::Up) == infinite_cost);
    CHECK(action_cost(m, LocalState{Cell{1, 1}, {}, Cell{1, 1}}, Action::Nil) == 0);

    // literal distance, no detour around walls
    GridMap walled(3, 3, {Cell{0, 1}});
    CHECK(action_cost(walled, ls, Action::Right) == infinite_cost);
    CHECK(greedy_actions(walled, ls) == ActionSet{Action::Nil});
}

TEST_CASE("greedy actions")
{
    auto m = GridMap::empty(3, 3);
    CHECK(greedy_actions(m, LocalState{Cell{1, 1}, {}, Cell{0, 2}}) == ActionSet{Action::Up, Action::Right});
    CHECK(greedy_actions(m, LocalState{Cell{1, 1}, {}, Cell{1, 2}}) == ActionSet{Action::Right});
    CHECK(greedy_actions(m, LocalState{Cell{2, 2}, {}, Cell{2, 2}}) == ActionSet{Action::Nil});
}

TEST_CASE("last-minute distance")
{
    CHECK(is_lastmin(Cell{0, 0}, Cell{1, 1}));
    CHECK(! is_lastmin(Cell{0, 0}, Cell{0, 3}));
    CHECK(is_lastmin(Cell{0, 0}, Cell{0, 0}));
}

TEST_CASE("scenario names")
{
    for (auto name : {"none", "default", "lastmin", "myopic", "traffic-loc", "traffic-free", "traffic-loc+default",
             "traffic-free+default"})
        CHECK(to_string(parse_scenario(name)) == name);
    CHECK_THROWS_AS(parse_scenario("myopic+default"), InvalidConfiguration);
    CHECK_THROWS_AS(parse_scenario("greedy"), InvalidConfiguration);
}

TEST_CASE("scenario candidate sets")
{
    auto map = GridMap::empty(4, 4);
    auto space = shared(map, GoalProfile{{Cell{0, 0}, Cell{3, 3}}}, SensorRange::of(1));
    auto none = build_candidates(space, Scenario{});
    auto def = build_candidates(space, Scenario{ScenarioKind::DefaultAction});
    auto last = build_candidates(space, Scenario{ScenarioKind::LastMinute});
    auto myopic = build_candidates(space, Scenario{ScenarioKind::Myopic});
    for (int i = 0; i < 2; ++i)
        for (std::size_t id = 0; id < space->local_count(i); ++id) {
            const auto & ls = space->local(i, id);
            if (ls.self == ls.goal) {
                for (const auto * m : {&none, &def, &last, &myopic})
                    CHECK(m->candidates(i, id) == ActionSet{Action::Nil});
                continue;
            }
            auto greedy = greedy_actions(map, ls);
            CHECK(none.candidates(i, id) == available_actions(map, ls.self));
            CHECK(myopic.candidates(i, id) == greedy);
            CHECK(def.candidates(i, id) == (ls.sees_anyone() ? available_actions(map, ls.self) : greedy));
            bool close = ls.others[0] && is_lastmin(ls.self, *ls.others[0]);
            CHECK(last.candidates(i, id) == (close ? available_actions(map, ls.self) : greedy));
        }
    CHECK(none.tie_groups().empty());
}

TEST_CASE("last-minute needs the other agent in sight")
{
    // radius 0 sees nobody, so the last-minute rule never relaxes
    auto map = GridMap::empty(3, 3);
    auto space = shared(map, GoalProfile{{Cell{0, 0}, Cell{2, 2}}}, SensorRange::of(0));
    auto last = build_candidates(space, Scenario{ScenarioKind::LastMinute});
    auto myopic = build_candidates(space, Scenario{ScenarioKind::Myopic});
    for (int i = 0; i < 2; ++i)
        for (std::size_t id = 0; id < space->local_count(i); ++id)
            CHECK(last.candidates(i, id) == myopic.candidates(i, id));
}

TEST_CASE("traffic rules tie keys across both agents")
{
    auto map = GridMap::empty(3, 3);
    auto space = shared(map, GoalProfile{{Cell{0, 0}, Cell{2, 2}}}, SensorRange::of(1));
    auto loc = build_candidates(space, Scenario{ScenarioKind::TrafficLocationDependent});
    auto free = build_candidates(space, Scenario{ScenarioKind::TrafficLocationFree, true});

    auto rel = [](const LocalState & ls) {
        return std::pair{ls.others[0]->row - ls.self.row, ls.others[0]->col - ls.self.col};
    };
    bool crossed = false;
    for (const auto & group : loc.tie_groups()) {
        const auto & first = space->local(group.front().agent, group.front().local);
        for (const auto & key : group) {
            const auto & ls = space->local(key.agent, key.local);
            CHECK(ls.self == first.self);
            CHECK(rel(ls) == rel(first));
            CHECK(ls.self != ls.goal);
            CHECK(loc.candidates(key.agent, key.local) == loc.candidates(group.front().agent, group.front().local));
            crossed = crossed || key.agent != group.front().agent;
        }
    }
    CHECK(crossed);
    for (const auto & group : free.tie_groups()) {
        const auto & first = space->local(group.front().agent, group.front().local);
        auto shared_set = free.candidates(group.front().agent, group.front().local);
        for (const auto & key : group) {
            CHECK(rel(space->local(key.agent, key.local)) == rel(first));
            CHECK(free.candidates(key.agent, key.local) == shared_set);
        }
    }
    // location-free groups span several cells, so fewer of them
    CHECK(free.tie_groups().size() < loc.tie_groups().size());

    // +default makes unseen states greedy
    for (int i = 0; i < 2; ++i)
        for (std::size_t id = 0; id < space->local_count(i); ++id) {
            const auto & ls = space->local(i, id);
            if (! ls.sees_anyone())
                CHECK(free.candidates(i, id) == greedy_actions(map, ls));
            else
                CHECK(free.group_of(i, id).has_value() != (ls.self == ls.goal));
        }
}

TEST_CASE("traffic rules need two agents")
{
    auto space = shared(GridMap::empty(3, 3), GoalProfile{{Cell{0, 0}, Cell{2, 2}, Cell{1, 1}}}, SensorRange::of(1));
    CHECK_THROWS_AS(build_candidates(space, Scenario{ScenarioKind::TrafficLocationFree}), UnsupportedConfiguration);
}

TEST_CASE("candidate model rejects broken invariants")
{
    auto space = shared(GridMap::empty(1, 2), GoalProfile{{Cell{0, 0}}}, SensorRange::full());
    // local states are self = (0,0) (at goal) and self = (0,1)
    std::vector<std::vector<ActionSet>> good{{ActionSet{Action::Nil}, ActionSet{Action::Left}}};
    CHECK_NOTHROW(CandidateModel(space, Scenario{}, good, {}));
    std::vector<std::vector<ActionSet>> moving_goal{{ActionSet{Action::Right}, ActionSet{Action::Left}}};
    CHECK_THROWS_AS(CandidateModel(space, Scenario{}, moving_goal, {}), InvalidConfiguration);
    std::vector<std::vector<ActionSet>> empty{{ActionSet{Action::Nil}, ActionSet{}}};
    CHECK_THROWS_AS(CandidateModel(space, Scenario{}, empty, {}), InvalidConfiguration);
    std::vector<std::vector<ActionSet>> unavailable{{ActionSet{Action::Nil}, ActionSet{Action::Right}}};
    CHECK_THROWS_AS(CandidateModel(space, Scenario{}, unavailable, {}), InvalidConfiguration);
}

TEST_CASE("property: scenarios are nested and greedy never moves away on open maps")
{
    std::mt19937_64 rng(41);
    for (int trial = 0; trial < 30; ++trial) {
        auto map = GridMap::empty(2 + static_cast<int>(rng() % 4), 2 + static_cast<int>(rng() % 4));
        auto n = 1 + static_cast<int>(rng() % 2);
        GoalProfile goals{testing::random_cells(rng, map, n)};
        auto space = shared(map, goals, SensorRange::of(static_cast<int>(rng() % 3)));
        std::vector<CandidateModel> models;
        for (const auto & s : chain)
            models.push_back(build_candidates(space, s));
        for (int i = 0; i < n; ++i)
            for (std::size_t id = 0; id < space->local_count(i); ++id) {
                for (std::size_t k = 0; k + 1 < models.size(); ++k) {
                    auto tight = models[k].candidates(i, id);
                    CHECK((tight & models[k + 1].candidates(i, id)) == tight);
                }
                const auto & ls = space->local(i, id);
                for (auto a : greedy_actions(map, ls).actions())
                    CHECK(manhattan(*apply_action(map, ls.self, a), ls.goal) <= manhattan(ls.self, ls.goal));
            }
    }
}

TEST_CASE("property: restriction never creates feasibility")
{
    std::mt19937_64 rng(43);
    int infeasible_strict = 0;
    for (int trial = 0; trial < 40; ++trial) {
        auto map = testing::random_grid(rng, 3 + static_cast<int>(rng() % 2), 3 + static_cast<int>(rng() % 2), 0.1, 5);
        GoalProfile goals{testing::random_cells(rng, map, 2)};
        auto space = shared(map, goals, SensorRange::of(1 + static_cast<int>(rng() % 2)));
        std::optional<bool> tighter;
        for (const auto & scenario : chain) {
            auto model = build_candidates(space, scenario);
            auto outcome = solve(SearchProblem(model), Budget{10.0, {}});
            REQUIRE(outcome.status != SolveStatus::TimedOut);
            bool ok = outcome.status == SolveStatus::Feasible;
            if (tighter && *tighter)
                CHECK(ok);
            if (tighter && ! *tighter)
                ++infeasible_strict;
            tighter = ok;
            if (ok) {
                // every action the restricted policy takes is allowed by the unrestricted model too
                auto report = verify(*outcome.policy);
                CHECK(report.feasible);
                for (int i = 0; i < 2; ++i)
                    for (std::size_t id = 0; id < space->local_count(i); ++id)
                        CHECK(model.candidates(i, id).contains(outcome.policy->action(i, id)));
            }
        }
    }
    CHECK(infeasible_strict > 0);
}
