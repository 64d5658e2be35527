#pragma once

#include <string>
#include <string_view>

namespace maupf {

enum class ScenarioKind
{
    Unrestricted,
    DefaultAction,
    LastMinute,
    Myopic,
    TrafficLocationDependent,
    TrafficLocationFree
};

/// Which action restriction (if any) is layered over the base policy choice.
struct Scenario
{
    ScenarioKind kind = ScenarioKind::Unrestricted;
    /// For the traffic kinds: local states that see nobody get the default (greedy) actions.
    bool with_default = false;

    auto is_traffic() const -> bool
    {
        return kind == ScenarioKind::TrafficLocationDependent || kind == ScenarioKind::TrafficLocationFree;
    }

    friend auto operator==(const Scenario &, const Scenario &) -> bool = default;
};

/// CLI names: none, default, lastmin, myopic, traffic-loc, traffic-free; a "+default" suffix sets with_default.
auto to_string(const Scenario & s) -> std::string;
auto parse_scenario(std::string_view text) -> Scenario;

} // namespace maupf
