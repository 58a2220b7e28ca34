// Teleportation fidelity against distance, idle and congested, with the
// idle-decoherence law evaluated at the measured waiting time.
#include <cstdio>

#include "q2sim/protocols/teleport.hpp"

using namespace q2sim;

int main() {
    std::printf("%8s %10s %12s %12s %12s\n", "km", "link", "wait_us", "fidelity", "law");
    for (bool congested : {false, true}) {
        for (double km : {10.0, 100.0, 200.0, 300.0}) {
            TeleportConfig cfg;
            cfg.distance_km = km;
            cfg.t_dep_ms = 5.0;
            cfg.congested = congested;
            double f = 0, law = 0, wait = 0;
            const int trials = 200;
            for (int s = 1; s <= trials; ++s) {
                Engine e(static_cast<std::uint64_t>(s));
                const auto r = run_teleport(cfg, e);
                f += r.final_fidelity;
                wait += static_cast<double>(r.wait_time_ns);
                law += teleport_fidelity_law(r.wait_time_ns, cfg.t_dep_ms);
            }
            std::printf("%8.0f %10s %12.1f %12.6f %12.6f\n", km, congested ? "congested" : "idle",
                        wait / trials / 1e3, f / trials, law / trials);
        }
    }
}
