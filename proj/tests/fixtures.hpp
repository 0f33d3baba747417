#pragma once

// Random instances shared by the optimizer tests and the acceptance run.

#include <cmath>
#include <random>

#include "dcdr/optimizer.hpp"
#include "dcdr/program.hpp"

namespace fixtures {

using namespace dcdr;

struct Instance {
    DemandInput demand;
    FleetModel fleet;
    BillingModel billing;
    ShutdownParams shutdown;
    RenewableProfile green;
};

// Small random instance with case-study style prices. Load stays within
// capacity; everything else is drawn around the default parameters.
inline Instance random_instance(std::mt19937_64& rng, std::size_t tau, int servers = 4,
                                double nu = 20.0) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Series lambda(tau);
    for (auto& l : lambda) l = u(rng) * servers * nu;
    Series pue(tau);
    for (auto& p : pue) p = 1.1 + 0.3 * u(rng);
    Series alpha(tau);
    for (auto& a : alpha) a = 0.03 + 0.05 * u(rng);
    std::vector<std::size_t> all(tau);
    for (std::size_t t = 0; t < tau; ++t) all[t] = t;
    std::vector<DemandWindow> windows{{all, 15.59 * (0.5 + u(rng))}};
    if (tau >= 4 && u(rng) < 0.5) windows.push_back({{tau / 2, tau / 2 + 1}, 5.0 * u(rng)});
    Series green(tau);
    for (auto& g : green) g = 0.5 * u(rng);
    const double lb = 1e-3 * (0.5 + u(rng));
    return Instance{DemandInput(lambda, 0.2 + 0.6 * u(rng), lb, lb + 1e-2 * (0.5 + u(rng))),
                    FleetModel(servers, 0.1, 0.05 + 0.1 * u(rng), nu, pue),
                    BillingModel(tau, 1.0, alpha, windows),
                    ShutdownParams{static_cast<double>(servers), 0.01, 0.01, false},
                    RenewableProfile{green}};
}

inline ProgramSpec build(Mode mode, const Instance& in, int max_deferral) {
    switch (mode) {
        case Mode::shutdown:
            return build_shutdown_program(in.demand, in.fleet, in.billing, max_deferral, in.shutdown);
        case Mode::renewable:
            return build_renewable_program(in.demand, in.fleet, in.billing, max_deferral, in.green);
        case Mode::base:
            break;
    }
    return build_base_program(in.demand, in.fleet, in.billing, max_deferral);
}

// Smooth daily curve on hourly slots, peak at mid afternoon.
inline Series diurnal(std::size_t tau, double base, double amplitude) {
    Series l(tau);
    for (std::size_t t = 0; t < tau; ++t) {
        l[t] = base + amplitude * std::sin(2.0 * 3.14159265358979323846 * static_cast<double>(t) / 24.0);
    }
    return l;
}

}  // namespace fixtures
