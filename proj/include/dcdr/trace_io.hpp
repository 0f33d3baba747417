#pragma once

// Trace files and synthetic inputs.
//
// Request traces are CSV with header `slot,requests`, wind traces with
// header `slot,wind_mps`. Slots are 1-based and contiguous in the file.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>

#include "dcdr/core_model.hpp"
#include "dcdr/program.hpp"

namespace dcdr {

struct RawTrace {
    std::string column;  // header name of the value column
    Series values;       // values[t] belongs to file slot t + 1
};

// Parses a two-column trace. `source` names the input in error messages.
// Throws TraceError on a wrong header, malformed or non-finite numbers,
// negative values, slot gaps or an empty body.
RawTrace parse_trace(std::istream& in, std::string_view column, const std::string& source);
RawTrace read_trace(const std::string& path, std::string_view column);

// Shortest decimal text that reads back to the same double ("nan", "inf" for
// non-finite values).
std::string format_shortest(double value);

// Writes values with the shortest representation that reads back exactly.
void write_trace(std::ostream& out, const RawTrace& trace);
void write_trace(const std::string& path, const RawTrace& trace);

// lambda[t] = scale * requests in slot t + 1.
Series load_request_trace(const std::string& path, double scale = 1.0);
void write_request_trace(const std::string& path, const Series& requests);

Series load_wind_trace(const std::string& path);

// Throws TraceError unless the trace has exactly `slots` entries.
void require_length(const Series& values, std::size_t slots, const std::string& source);

// base + amplitude sin(2 pi t / period) + noise, clipped at 0. The noise is
// uniform on [-noise, noise] * base, drawn from a 64-bit Mersenne twister
// seeded with `seed`; noise = 0 turns it off.
Series synth_diurnal_trace(std::size_t slots, double base, double amplitude, double period,
                           std::uint64_t seed, double noise = 0.05);

// Turbine power is zero below cut-in and from cut-out up, rated between
// rated speed and cut-out, and follows (v^3 - cut_in^3) / (rated^3 - cut_in^3)
// of rated power in between.
struct TurbineCurve {
    double cut_in = 3.0;        // m/s
    double rated_speed = 12.0;  // m/s
    double cut_out = 25.0;      // m/s
    double rated_kw = 10.0;
    int turbines = 2;

    void validate() const;
    double power_kw(double speed) const;  // one turbine
};

// G[t] = turbines * power(v[t]) * T.
RenewableProfile wind_to_power(const Series& speeds, const TurbineCurve& curve, double slot_hours);

}  // namespace dcdr
