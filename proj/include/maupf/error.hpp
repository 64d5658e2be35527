#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace maupf {

/// Base of every error raised by the library.
class Error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/// A coordinate that is out of bounds or blocked where a free cell was required.
class InvalidCell : public Error
{
public:
    using Error::Error;
};

/// Malformed map, goal profile or configuration.
class InvalidConfiguration : public Error
{
public:
    using Error::Error;
};

/// More agents than free cells: there is no global state at all.
class NoStates : public Error
{
public:
    using Error::Error;
};

class Overflow : public Error
{
public:
    using Error::Error;
};

/// An action that is not available at the agent's cell.
class InvalidAction : public Error
{
public:
    using Error::Error;
};

class InvalidPolicy : public Error
{
public:
    using Error::Error;
};

class InvalidInstantiation : public Error
{
public:
    using Error::Error;
};

/// Metric requested for a policy that is not feasible.
class UndefinedMetric : public Error
{
public:
    using Error::Error;
};

class UnsupportedConfiguration : public Error
{
public:
    using Error::Error;
};

/// Parse failure in a line-oriented file; carries the 1-based line number.
class FormatError : public Error
{
public:
    FormatError(std::size_t line, const std::string & message) :
        Error("line " + std::to_string(line) + ": " + message),
        _line(line)
    {
    }

    auto line() const noexcept -> std::size_t { return _line; }

private:
    std::size_t _line;
};

} // namespace maupf
