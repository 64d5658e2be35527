#include <maupf/error.hpp>
#include <maupf/grid.hpp>

#include <algorithm>
#include <cctype>
#include <deque>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

namespace maupf {

namespace {

auto trim(std::string_view s) -> std::string_view
{
    while (! s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
        s.remove_prefix(1);
    while (! s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
        s.remove_suffix(1);
    return s;
}

auto parse_int(std::string_view s) -> int
{
    s = trim(s);
    if (s.empty())
        throw InvalidConfiguration("expected an integer");
    bool negative = false;
    if (s.front() == '-' || s.front() == '+') {
        negative = s.front() == '-';
        s.remove_prefix(1);
    }
    if (s.empty())
        throw InvalidConfiguration("expected an integer");
    long value = 0;
    for (char ch : s) {
        if (! std::isdigit(static_cast<unsigned char>(ch)))
            throw InvalidConfiguration("expected an integer, got '" + std::string(s) + "'");
        value = value * 10 + (ch - '0');
        if (value > 1'000'000'000)
            throw InvalidConfiguration("integer out of range");
    }
    return static_cast<int>(negative ? -value : value);
}

} // namespace

auto to_string(Cell c) -> std::string
{
    return "(" + std::to_string(c.row) + "," + std::to_string(c.col) + ")";
}

auto parse_cell(std::string_view text) -> Cell
{
    auto s = trim(text);
    if (s.size() < 5 || s.front() != '(' || s.back() != ')')
        throw InvalidConfiguration("malformed cell '" + std::string(text) + "'");
    s = s.substr(1, s.size() - 2);
    auto comma = s.find(',');
    if (comma == std::string_view::npos)
        throw InvalidConfiguration("malformed cell '" + std::string(text) + "'");
    return Cell{parse_int(s.substr(0, comma)), parse_int(s.substr(comma + 1))};
}

auto parse_cells(std::string_view text) -> std::vector<Cell>
{
    std::vector<Cell> result;
    auto s = trim(text);
    // tolerate one enclosing pair of parentheses around the whole list: ((0,0),(1,1))
    if (s.size() >= 2 && s.substr(0, 2) == "((" && s.back() == ')')
        s = s.substr(1, s.size() - 2);
    std::size_t pos = 0;
    while (pos < s.size()) {
        auto open = s.find('(', pos);
        if (open == std::string_view::npos) {
            if (! trim(s.substr(pos)).empty() && trim(s.substr(pos)) != ",")
                throw InvalidConfiguration("malformed cell list '" + std::string(text) + "'");
            break;
        }
        auto close = s.find(')', open);
        if (close == std::string_view::npos)
            throw InvalidConfiguration("unterminated cell in '" + std::string(text) + "'");
        result.push_back(parse_cell(s.substr(open, close - open + 1)));
        pos = close + 1;
    }
    return result;
}

auto to_string(Action a) -> std::string_view
{
    switch (a) {
    case Action::Up: return "UP";
    case Action::Down: return "DOWN";
    case Action::Left: return "LEFT";
    case Action::Right: return "RIGHT";
    case Action::Nil: return "NIL";
    }
    return "?";
}

auto parse_action(std::string_view text) -> Action
{
    for (auto a : all_actions)
        if (to_string(a) == text)
            return a;
    throw InvalidConfiguration("unknown action '" + std::string(text) + "'");
}

auto displace(Cell c, Action a) -> Cell
{
    switch (a) {
    case Action::Up: return {c.row - 1, c.col};
    case Action::Down: return {c.row + 1, c.col};
    case Action::Left: return {c.row, c.col - 1};
    case Action::Right: return {c.row, c.col + 1};
    case Action::Nil: return c;
    }
    return c;
}

auto ActionSet::actions() const -> std::vector<Action>
{
    std::vector<Action> result;
    for (auto a : all_actions)
        if (contains(a))
            result.push_back(a);
    return result;
}

auto to_string(ActionSet s) -> std::string
{
    std::string result = "{";
    for (auto a : s.actions()) {
        if (result.size() > 1)
            result += ",";
        result += to_string(a);
    }
    return result + "}";
}

GridMap::GridMap(int rows, int cols, const std::vector<Cell> & blocked) :
    _rows(rows),
    _cols(cols)
{
    if (rows <= 0 || cols <= 0)
        throw InvalidConfiguration("map dimensions must be positive");
    _blocked.assign(static_cast<std::size_t>(rows) * cols, 0);
    for (auto c : blocked) {
        if (! in_bounds(c))
            throw InvalidConfiguration("blocked cell " + maupf::to_string(c) + " lies outside the map");
        _blocked[flat(c)] = 1;
    }
    _index.assign(_blocked.size(), -1);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c)
            if (! _blocked[flat({r, c})]) {
                _index[flat({r, c})] = static_cast<int>(_free.size());
                _free.push_back({r, c});
            }
    if (_free.empty())
        throw InvalidConfiguration("map has no free cell");
}

auto GridMap::parse(std::string_view text) -> GridMap
{
    std::vector<std::string_view> lines;
    std::size_t pos = 0;
    while (pos < text.size()) {
        auto nl = text.find('\n', pos);
        auto line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        if (! line.empty() && line.back() == '\r')
            line.remove_suffix(1);
        lines.push_back(line);
        if (nl == std::string_view::npos)
            break;
        pos = nl + 1;
    }
    // only the final line terminator is optional; interior blank lines are errors
    if (! lines.empty() && lines.back().empty())
        lines.pop_back();
    if (lines.empty())
        throw FormatError(1, "empty map");

    std::vector<Cell> blocked;
    auto width = lines.front().size();
    for (std::size_t r = 0; r < lines.size(); ++r) {
        if (lines[r].size() != width)
            throw FormatError(r + 1, "row length " + std::to_string(lines[r].size()) + " differs from "
                    + std::to_string(width) + "; maps must be rectangular");
        for (std::size_t c = 0; c < width; ++c) {
            switch (lines[r][c]) {
            case '.': break;
            case '#': blocked.push_back({static_cast<int>(r), static_cast<int>(c)}); break;
            default: throw FormatError(r + 1, std::string("unexpected character '") + lines[r][c] + "'");
            }
        }
    }
    if (width == 0)
        throw FormatError(1, "empty map row");
    return GridMap(static_cast<int>(lines.size()), static_cast<int>(width), blocked);
}

auto GridMap::load(const std::string & path) -> GridMap
{
    std::ifstream in(path);
    if (! in)
        throw Error("cannot open map file '" + path + "'");
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse(buffer.str());
}

auto GridMap::blocked_cells() const -> std::vector<Cell>
{
    std::vector<Cell> result;
    for (int r = 0; r < _rows; ++r)
        for (int c = 0; c < _cols; ++c)
            if (_blocked[flat({r, c})])
                result.push_back({r, c});
    return result;
}

auto GridMap::to_string() const -> std::string
{
    std::string result;
    for (int r = 0; r < _rows; ++r) {
        for (int c = 0; c < _cols; ++c)
            result += _blocked[flat({r, c})] ? '#' : '.';
        result += '\n';
    }
    return result;
}

auto available_actions(const GridMap & map, Cell cell) -> ActionSet
{
    if (! map.is_free(cell))
        throw InvalidCell("cell " + to_string(cell) + " is not a free cell of the map");
    ActionSet result{Action::Nil};
    for (auto a : {Action::Up, Action::Down, Action::Left, Action::Right})
        if (map.is_free(displace(cell, a)))
            result.insert(a);
    return result;
}

auto apply_action(const GridMap & map, Cell cell, Action a) -> std::optional<Cell>
{
    if (! map.is_free(cell))
        throw InvalidCell("cell " + to_string(cell) + " is not a free cell of the map");
    auto target = displace(cell, a);
    if (! map.is_free(target))
        return std::nullopt;
    return target;
}

auto to_string(const GoalProfile & g) -> std::string
{
    std::string result = "(";
    for (std::size_t i = 0; i < g.goals.size(); ++i) {
        if (i)
            result += ",";
        result += to_string(g.goals[i]);
    }
    return result + ")";
}

auto validate_goals(const GridMap & map, const GoalProfile & g) -> void
{
    std::set<Cell> seen;
    for (auto c : g.goals) {
        if (! map.is_free(c))
            throw InvalidConfiguration("goal " + to_string(c) + " is not a free cell");
        if (! seen.insert(c).second)
            throw InvalidConfiguration("goal " + to_string(c) + " is assigned to more than one agent");
    }
}

auto is_proper(const GridMap & map, const GoalProfile & g) -> bool
{
    validate_goals(map, g);
    auto m = map.free_count();
    std::vector<std::uint8_t> removed(m), seen(m);
    for (std::size_t i = 0; i < g.goals.size(); ++i) {
        std::fill(removed.begin(), removed.end(), 0);
        for (std::size_t j = 0; j < g.goals.size(); ++j)
            if (j != i)
                removed[map.index_of(g.goals[j])] = 1;

        std::fill(seen.begin(), seen.end(), 0);
        std::deque<Cell> queue{g.goals[i]};
        seen[map.index_of(g.goals[i])] = 1;
        std::size_t reached = 1;
        while (! queue.empty()) {
            auto c = queue.front();
            queue.pop_front();
            for (auto a : {Action::Up, Action::Down, Action::Left, Action::Right}) {
                auto next = displace(c, a);
                auto idx = map.index_of(next);
                if (idx < 0 || removed[idx] || seen[idx])
                    continue;
                seen[idx] = 1;
                ++reached;
                queue.push_back(next);
            }
        }
        if (reached != m - (g.goals.size() - 1))
            return false;
    }
    return true;
}

auto random_map(int rows, int cols, double density, std::uint64_t seed) -> GridMap
{
    if (rows <= 0 || cols <= 0 || density < 0.0 || density >= 1.0)
        throw InvalidConfiguration("random map needs positive dimensions and density in [0, 1)");
    auto total = static_cast<std::size_t>(rows) * cols;
    auto obstacles = static_cast<std::size_t>(density * static_cast<double>(total) + 0.5);
    if (obstacles >= total)
        obstacles = total - 1;

    // partial Fisher-Yates on raw engine output so layouts do not depend on the standard library's distributions
    std::mt19937_64 rng(seed);
    std::vector<std::size_t> order(total);
    for (std::size_t k = 0; k < total; ++k)
        order[k] = k;
    for (std::size_t k = 0; k < obstacles; ++k) {
        auto pick = k + static_cast<std::size_t>(rng() % (total - k));
        std::swap(order[k], order[pick]);
    }
    std::vector<Cell> blocked;
    for (std::size_t k = 0; k < obstacles; ++k)
        blocked.push_back({static_cast<int>(order[k] / cols), static_cast<int>(order[k] % cols)});
    return GridMap(rows, cols, blocked);
}

} // namespace maupf
