#include "dcdr/error.hpp"

#include <sstream>
#include <utility>

namespace dcdr {

namespace {

std::string capacity_message(std::size_t slot, double requests, double capacity) {
    std::ostringstream os;
    os << "slot " << slot + 1 << ": " << requests << " requests exceed fleet capacity " << capacity;
    return os.str();
}

std::string reward_message(std::size_t slot, double deferred, double deferrable) {
    std::ostringstream os;
    os << "slot " << slot + 1 << ": deferral " << deferred << " exceeds deferrable volume "
       << deferrable;
    return os.str();
}

std::string trace_message(const std::string& path, std::size_t line, const std::string& what) {
    std::ostringstream os;
    os << path;
    if (line > 0) os << ":" << line;
    os << ": " << what;
    return os.str();
}

}  // namespace

CapacityError::CapacityError(std::size_t slot, double requests, double capacity)
    : Error(capacity_message(slot, requests, capacity)), slot_(slot) {}

InfeasibleRewardError::InfeasibleRewardError(std::size_t slot, double deferred, double deferrable)
    : Error(reward_message(slot, deferred, deferrable)), slot_(slot) {}

InfeasibleError::InfeasibleError(std::string family, const std::string& what)
    : Error(what), family_(std::move(family)) {}

TraceError::TraceError(std::string path, std::size_t line, const std::string& what)
    : Error(trace_message(path, line, what)), path_(std::move(path)), line_(line) {}

}  // namespace dcdr
