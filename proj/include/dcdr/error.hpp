#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dcdr {

// Base of every exception the library throws.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Series lengths or matrix shapes disagree.
class DimensionError : public Error {
public:
    using Error::Error;
};

// A value is outside its documented domain (negative price, empty window, ...).
class InvalidArgument : public Error {
public:
    using Error::Error;
};

// Scheduled requests exceed the fleet capacity N * nu at some slot.
class CapacityError : public Error {
public:
    CapacityError(std::size_t slot, double requests, double capacity);

    std::size_t slot() const noexcept { return slot_; }

private:
    std::size_t slot_;
};

// The planned deferral at a slot exceeds what any reward in [Lb, Ub] can buy.
class InfeasibleRewardError : public Error {
public:
    InfeasibleRewardError(std::size_t slot, double deferred, double deferrable);

    std::size_t slot() const noexcept { return slot_; }

private:
    std::size_t slot_;
};

// The optimization program has no feasible point. `family` names the
// constraint family that could not be satisfied.
class InfeasibleError : public Error {
public:
    InfeasibleError(std::string family, const std::string& what);

    const std::string& family() const noexcept { return family_; }

private:
    std::string family_;
};

// The interior-point iteration ran out of budget before meeting its tolerances.
class ConvergenceError : public Error {
public:
    using Error::Error;
};

// Malformed trace file. `line` is 1-based, 0 when the error is not tied to a line.
class TraceError : public Error {
public:
    TraceError(std::string path, std::size_t line, const std::string& what);

    const std::string& path() const noexcept { return path_; }
    std::size_t line() const noexcept { return line_; }

private:
    std::string path_;
    std::size_t line_;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace dcdr
