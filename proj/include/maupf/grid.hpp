#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace maupf {

/// (row, col) coordinate; row 0 is the top line of the map.
struct Cell
{
    int row = 0;
    int col = 0;

    friend auto operator<=>(const Cell &, const Cell &) = default;
};

auto to_string(Cell c) -> std::string;
auto parse_cell(std::string_view text) -> Cell;
auto parse_cells(std::string_view text) -> std::vector<Cell>;

inline auto manhattan(Cell a, Cell b) -> int
{
    return (a.row > b.row ? a.row - b.row : b.row - a.row) + (a.col > b.col ? a.col - b.col : b.col - a.col);
}

inline auto chebyshev(Cell a, Cell b) -> int
{
    int dr = a.row > b.row ? a.row - b.row : b.row - a.row;
    int dc = a.col > b.col ? a.col - b.col : b.col - a.col;
    return dr > dc ? dr : dc;
}

enum class Action : std::uint8_t
{
    Up,
    Down,
    Left,
    Right,
    Nil
};

inline constexpr std::size_t action_count = 5;
inline constexpr std::array<Action, action_count> all_actions{Action::Up, Action::Down, Action::Left, Action::Right,
    Action::Nil};

auto to_string(Action a) -> std::string_view;
auto parse_action(std::string_view text) -> Action;
auto displace(Cell c, Action a) -> Cell;

/// Subset of the five actions as a bitmask; iteration follows Up < Down < Left < Right < Nil.
class ActionSet
{
public:
    constexpr ActionSet() = default;
    constexpr explicit ActionSet(std::uint8_t bits) : _bits(bits & 0x1f) {}
    constexpr ActionSet(std::initializer_list<Action> actions)
    {
        for (auto a : actions)
            insert(a);
    }

    static constexpr auto all() -> ActionSet { return ActionSet{std::uint8_t{0x1f}}; }

    constexpr auto contains(Action a) const -> bool { return _bits & bit(a); }
    constexpr auto insert(Action a) -> void { _bits |= bit(a); }
    constexpr auto erase(Action a) -> void { _bits &= static_cast<std::uint8_t>(~bit(a)); }
    constexpr auto empty() const -> bool { return _bits == 0; }
    constexpr auto bits() const -> std::uint8_t { return _bits; }
    auto size() const -> std::size_t { return static_cast<std::size_t>(__builtin_popcount(_bits)); }
    auto actions() const -> std::vector<Action>;

    /// The single member; only meaningful when size() == 1.
    auto only() const -> Action { return static_cast<Action>(__builtin_ctz(_bits)); }

    friend constexpr auto operator&(ActionSet a, ActionSet b) -> ActionSet { return ActionSet{std::uint8_t(a._bits & b._bits)}; }
    friend constexpr auto operator|(ActionSet a, ActionSet b) -> ActionSet { return ActionSet{std::uint8_t(a._bits | b._bits)}; }
    friend constexpr auto operator==(ActionSet, ActionSet) -> bool = default;

    static constexpr auto bit(Action a) -> std::uint8_t { return static_cast<std::uint8_t>(1u << static_cast<unsigned>(a)); }

private:
    std::uint8_t _bits = 0;
};

auto to_string(ActionSet s) -> std::string;

/// Rectangular 4-connected grid with an obstacle mask. Free cells are numbered in row-major order.
class GridMap
{
public:
    GridMap(int rows, int cols, const std::vector<Cell> & blocked = {});

    static auto empty(int rows, int cols) -> GridMap { return GridMap(rows, cols); }

    /// Parses the ASCII map format: '.' free, '#' blocked, one line per row, all rows equal length.
    static auto parse(std::string_view text) -> GridMap;
    static auto load(const std::string & path) -> GridMap;

    auto rows() const -> int { return _rows; }
    auto cols() const -> int { return _cols; }
    auto in_bounds(Cell c) const -> bool { return c.row >= 0 && c.row < _rows && c.col >= 0 && c.col < _cols; }
    auto is_free(Cell c) const -> bool { return in_bounds(c) && ! _blocked[flat(c)]; }
    auto is_blocked(Cell c) const -> bool { return in_bounds(c) && _blocked[flat(c)]; }

    auto free_count() const -> std::size_t { return _free.size(); }
    auto free_cells() const -> const std::vector<Cell> & { return _free; }
    auto blocked_cells() const -> std::vector<Cell>;

    /// Index of a free cell, or -1.
    auto index_of(Cell c) const -> int { return in_bounds(c) ? _index[flat(c)] : -1; }
    auto cell_at(std::size_t index) const -> Cell { return _free[index]; }

    auto to_string() const -> std::string;

    friend auto operator==(const GridMap & a, const GridMap & b) -> bool
    {
        return a._rows == b._rows && a._cols == b._cols && a._blocked == b._blocked;
    }

private:
    auto flat(Cell c) const -> std::size_t { return static_cast<std::size_t>(c.row) * _cols + c.col; }

    int _rows;
    int _cols;
    std::vector<std::uint8_t> _blocked;
    std::vector<Cell> _free;
    std::vector<int> _index;
};

/// Nil plus every cardinal move whose destination is an in-bounds free cell. Throws InvalidCell.
auto available_actions(const GridMap & map, Cell cell) -> ActionSet;

/// Destination of `a` from `cell`, or nullopt when it leaves the map or enters an obstacle.
auto apply_action(const GridMap & map, Cell cell, Action a) -> std::optional<Cell>;

struct GoalProfile
{
    std::vector<Cell> goals;

    friend auto operator<=>(const GoalProfile &, const GoalProfile &) = default;
};

auto to_string(const GoalProfile & g) -> std::string;

/// Throws InvalidConfiguration unless every goal is free and the goals are pairwise distinct.
auto validate_goals(const GridMap & map, const GoalProfile & g) -> void;

/// Every goal reachable from every free cell outside the other agents' goals, without crossing those goals.
auto is_proper(const GridMap & map, const GoalProfile & g) -> bool;

/// Random obstacle layout with round(density * rows * cols) blocked cells, seeded mt19937_64.
auto random_map(int rows, int cols, double density, std::uint64_t seed) -> GridMap;

} // namespace maupf

template <>
struct std::hash<maupf::Cell>
{
    auto operator()(const maupf::Cell & c) const noexcept -> std::size_t
    {
        return std::hash<std::uint64_t>{}((static_cast<std::uint64_t>(static_cast<std::uint32_t>(c.row)) << 32)
            | static_cast<std::uint32_t>(c.col));
    }
};
