#include "dcdr/trace_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>

#include "dcdr/error.hpp"

namespace dcdr {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

template <typename T>
bool parse_number(std::string_view text, T& out) {
    text = trim(text);
    if (text.empty()) return false;
    if (text.front() == '+') text.remove_prefix(1);
    const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
    return ec == std::errc{} && end == text.data() + text.size();
}

}  // namespace

std::string format_shortest(double value) {
    char buf[32];
    const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, end);
}

RawTrace parse_trace(std::istream& in, std::string_view column, const std::string& source) {
    RawTrace trace{std::string(column), {}};
    std::string line;
    std::size_t lineno = 0;
    bool header = false;
    while (std::getline(in, line)) {
        ++lineno;
        std::string_view row = line;
        if (lineno == 1 && row.substr(0, 3) == "\xEF\xBB\xBF") row.remove_prefix(3);
        row = trim(row);
        if (row.empty()) continue;

        const auto comma = row.find(',');
        if (comma == std::string_view::npos || row.find(',', comma + 1) != std::string_view::npos) {
            throw TraceError(source, lineno, "expected two comma-separated fields");
        }
        const auto first = trim(row.substr(0, comma));
        const auto second = trim(row.substr(comma + 1));

        if (!header) {
            if (first != "slot" || second != column) {
                throw TraceError(source, lineno,
                                 "header must be 'slot," + std::string(column) + "'");
            }
            header = true;
            continue;
        }

        long long slot = 0;
        if (!parse_number(first, slot)) throw TraceError(source, lineno, "slot is not an integer");
        const auto expected = static_cast<long long>(trace.values.size()) + 1;
        if (slot != expected) {
            throw TraceError(source, lineno,
                             "slot " + std::to_string(slot) + " found where " +
                                 std::to_string(expected) + " was expected");
        }
        double value = 0.0;
        if (!parse_number(second, value) || !std::isfinite(value)) {
            throw TraceError(source, lineno, "value '" + std::string(second) + "' is not a finite number");
        }
        if (value < 0.0) throw TraceError(source, lineno, "negative value");
        trace.values.push_back(value);
    }
    if (in.bad()) throw TraceError(source, 0, "read error");
    if (!header) throw TraceError(source, 0, "missing header 'slot," + std::string(column) + "'");
    if (trace.values.empty()) throw TraceError(source, 0, "no data rows");
    return trace;
}

RawTrace read_trace(const std::string& path, std::string_view column) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw TraceError(path, 0, "cannot open file");
    return parse_trace(in, column, path);
}

void write_trace(std::ostream& out, const RawTrace& trace) {
    out << "slot," << trace.column << "\n";
    for (std::size_t t = 0; t < trace.values.size(); ++t) {
        out << t + 1 << "," << format_shortest(trace.values[t]) << "\n";
    }
}

void write_trace(const std::string& path, const RawTrace& trace) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw TraceError(path, 0, "cannot open file for writing");
    write_trace(out, trace);
    out.flush();
    if (!out) throw TraceError(path, 0, "write failed");
}

Series load_request_trace(const std::string& path, double scale) {
    if (!(scale >= 0.0) || !std::isfinite(scale)) throw InvalidArgument("trace scale must be finite and >= 0");
    Series lambda = read_trace(path, "requests").values;
    for (auto& v : lambda) v *= scale;
    return lambda;
}

void write_request_trace(const std::string& path, const Series& requests) {
    write_trace(path, RawTrace{"requests", requests});
}

Series load_wind_trace(const std::string& path) { return read_trace(path, "wind_mps").values; }

void require_length(const Series& values, std::size_t slots, const std::string& source) {
    if (values.size() != slots) {
        throw TraceError(source, 0,
                         std::to_string(values.size()) + " rows, the cycle has " +
                             std::to_string(slots) + " slots");
    }
}

Series synth_diurnal_trace(std::size_t slots, double base, double amplitude, double period,
                           std::uint64_t seed, double noise) {
    if (!(amplitude >= 0.0) || !(base >= amplitude)) {
        throw InvalidArgument("diurnal trace needs base >= amplitude >= 0");
    }
    if (!(period > 0.0)) throw InvalidArgument("diurnal trace period must be positive");
    if (!(noise >= 0.0)) throw InvalidArgument("diurnal trace noise must be >= 0");

    std::mt19937_64 rng(seed);
    Series out(slots);
    for (std::size_t t = 0; t < slots; ++t) {
        double v = base + amplitude * std::sin(2.0 * std::numbers::pi * static_cast<double>(t) / period);
        // Drawn even when noise is 0 so the sequence does not depend on it.
        const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
        v += noise * base * (2.0 * u - 1.0);
        out[t] = std::max(v, 0.0);
    }
    return out;
}

void TurbineCurve::validate() const {
    if (!(cut_in >= 0.0 && cut_in < rated_speed && rated_speed < cut_out)) {
        throw InvalidArgument("turbine curve needs 0 <= cut_in < rated_speed < cut_out");
    }
    if (!(rated_kw > 0.0)) throw InvalidArgument("turbine rated power must be positive");
    if (turbines < 0) throw InvalidArgument("turbine count must be >= 0");
}

double TurbineCurve::power_kw(double v) const {
    if (v < cut_in || v >= cut_out) return 0.0;
    if (v >= rated_speed) return rated_kw;
    const double c3 = cut_in * cut_in * cut_in;
    return rated_kw * (v * v * v - c3) / (rated_speed * rated_speed * rated_speed - c3);
}

RenewableProfile wind_to_power(const Series& speeds, const TurbineCurve& curve, double slot_hours) {
    curve.validate();
    if (!(slot_hours > 0.0)) throw InvalidArgument("slot length must be positive");
    RenewableProfile g;
    g.kwh.reserve(speeds.size());
    for (std::size_t t = 0; t < speeds.size(); ++t) {
        if (!(speeds[t] >= 0.0) || !std::isfinite(speeds[t])) {
            std::ostringstream os;
            os << "slot " << t + 1 << ": wind speed " << speeds[t] << " is not a finite value >= 0";
            throw InvalidArgument(os.str());
        }
        g.kwh.push_back(curve.turbines * curve.power_kw(speeds[t]) * slot_hours);
    }
    return g;
}

}  // namespace dcdr
