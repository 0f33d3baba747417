#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "dcdr/error.hpp"
#include "dcdr/trace_io.hpp"

using namespace dcdr;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / "dcdr_tests";
    fs::create_directories(dir);
    return dir / name;
}

void put(const fs::path& p, const std::string& text) {
    std::ofstream(p, std::ios::binary) << text;
}

std::size_t error_line(const std::string& text) {
    std::istringstream in(text);
    try {
        parse_trace(in, "requests", "mem");
    } catch (const TraceError& e) {
        return e.line();
    }
    return static_cast<std::size_t>(-1);
}

}  // namespace

TEST_CASE("two-row request trace") {
    const auto p = scratch("two.csv");
    put(p, "slot,requests\n1,10\n2,20\n");
    CHECK(load_request_trace(p.string()) == Series{10, 20});
    CHECK(load_request_trace(p.string(), 0.5) == Series{5, 10});
}

TEST_CASE("CRLF, BOM, blank lines and padding are accepted") {
    std::istringstream in("\xEF\xBB\xBFslot,requests\r\n1, 10\r\n\r\n2 ,2.5e1\r\n");
    CHECK(parse_trace(in, "requests", "mem").values == Series{10, 25});
}

TEST_CASE("malformed traces name the offending line") {
    CHECK(error_line("slot,wrong\n1,2\n") == 1);
    CHECK(error_line("slot,requests\n1,2\n3,4\n") == 3);
    CHECK(error_line("slot,requests\n1,2\n2,-1\n") == 3);
    CHECK(error_line("slot,requests\n1,abc\n") == 2);
    CHECK(error_line("slot,requests\n1,nan\n") == 2);
    CHECK(error_line("slot,requests\n1,2,3\n") == 2);
    CHECK(error_line("slot,requests\nx,2\n") == 2);
    CHECK(error_line("slot,requests\n") == 0);
    CHECK(error_line("") == 0);
    CHECK_THROWS_AS(load_request_trace(scratch("missing.csv").string() + ".nope"), TraceError);
}

TEST_CASE("written traces read back bit for bit") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(0.0, 1e4);
    Series v(200);
    for (auto& x : v) x = u(rng);
    v[0] = 0.0;
    v[1] = 1e-300;
    v[2] = 0.1;
    const auto p = scratch("round.csv");
    write_request_trace(p.string(), v);
    CHECK(load_request_trace(p.string()) == v);
}

TEST_CASE("format_shortest") {
    CHECK(format_shortest(0.1) == "0.1");
    CHECK(format_shortest(20.0) == "20");
    CHECK(std::stod(format_shortest(1.0 / 3.0)) == 1.0 / 3.0);
}

TEST_CASE("require_length") {
    CHECK_NOTHROW(require_length(Series(3), 3, "x"));
    CHECK_THROWS_AS(require_length(Series(2), 3, "x"), TraceError);
}

TEST_CASE("synthetic diurnal trace") {
    const auto flat = synth_diurnal_trace(48, 100, 0, 24, 1, 0.0);
    CHECK(std::all_of(flat.begin(), flat.end(), [](double x) { return x == 100.0; }));

    const auto full = synth_diurnal_trace(24, 100, 100, 24, 1, 0.0);
    CHECK(*std::min_element(full.begin(), full.end()) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(*std::max_element(full.begin(), full.end()) == doctest::Approx(200.0));
    CHECK(full[6] == doctest::Approx(200.0));
    CHECK(full[18] == doctest::Approx(0.0).scale(100));

    CHECK(synth_diurnal_trace(100, 50, 20, 24, 7) == synth_diurnal_trace(100, 50, 20, 24, 7));
    CHECK(synth_diurnal_trace(100, 50, 20, 24, 7) != synth_diurnal_trace(100, 50, 20, 24, 8));

    const auto noisy = synth_diurnal_trace(500, 50, 20, 24, 3, 0.1);
    const auto clean = synth_diurnal_trace(500, 50, 20, 24, 3, 0.0);
    for (std::size_t t = 0; t < noisy.size(); ++t) CHECK(std::abs(noisy[t] - clean[t]) <= 5.0 + 1e-12);

    CHECK_THROWS_AS(synth_diurnal_trace(10, 10, 20, 24, 1), InvalidArgument);
    CHECK_THROWS_AS(synth_diurnal_trace(10, 10, 5, 0, 1), InvalidArgument);
}

TEST_CASE("turbine curve") {
    const TurbineCurve c;
    const auto g = wind_to_power({0.0, 2.9, 12.0, 20.0, 25.0, 30.0}, c, 1.0).kwh;
    CHECK(g == Series{0, 0, 20, 20, 0, 0});
    CHECK(wind_to_power({12.0}, c, 0.5).kwh[0] == doctest::Approx(10.0));

    const double v = 7.5;
    const double want = 2 * 10.0 * (v * v * v - 27.0) / (1728.0 - 27.0);
    CHECK(wind_to_power({v}, c, 1.0).kwh[0] == doctest::Approx(want).epsilon(1e-14));

    double previous = 0;
    for (double s = 0; s < 25; s += 0.25) {
        const double p = c.power_kw(s);
        CHECK(p >= previous);
        CHECK(p <= c.rated_kw);
        previous = p;
    }
    CHECK_THROWS_AS(wind_to_power({-1.0}, c, 1.0), InvalidArgument);
    CHECK_THROWS_AS(wind_to_power({1.0}, TurbineCurve{5, 4, 25, 10, 2}, 1.0), InvalidArgument);
}

TEST_CASE("wind trace") {
    const auto p = scratch("wind.csv");
    put(p, "slot,wind_mps\n1,3.5\n2,14\n");
    CHECK(load_wind_trace(p.string()) == Series{3.5, 14});
    put(p, "slot,requests\n1,3.5\n");
    CHECK_THROWS_AS(load_wind_trace(p.string()), TraceError);
}
