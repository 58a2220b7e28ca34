#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>

#include "q2sim/protocols/cluster.hpp"
#include "q2sim/protocols/qlan.hpp"
#include "q2sim/protocols/swap_chain.hpp"
#include "q2sim/protocols/teleport.hpp"

namespace q2sim::bench {

/// Benchmarkable workloads; n is the problem size for each.
enum class Workload {
    Cluster1D,  // n-qubit line
    Cluster2D,  // r x (n / r) grid, r the largest divisor of n not above sqrt(n)
    Swap,       // n-node chain
    Qlan,       // n clients
};

inline constexpr std::string_view workload_name(Workload w) {
    switch (w) {
        case Workload::Cluster1D: return "cluster1d";
        case Workload::Cluster2D: return "cluster2d";
        case Workload::Swap: return "swap";
        case Workload::Qlan: return "qlan";
    }
    return "?";
}

inline Workload parse_workload(std::string_view s) {
    for (Workload w : {Workload::Cluster1D, Workload::Cluster2D, Workload::Swap, Workload::Qlan}) {
        if (workload_name(w) == s) return w;
    }
    throw std::invalid_argument("unknown workload '" + std::string(s) + "' (cluster1d, cluster2d, swap, qlan)");
}

inline ClusterSpec cluster_shape(Workload w, std::size_t n) {
    if (n == 0) throw std::invalid_argument("cluster size must be >= 1");
    if (w == Workload::Cluster1D) return ClusterSpec{1, n};
    std::size_t r = static_cast<std::size_t>(std::sqrt(static_cast<double>(n)));
    while (r > 1 && n % r != 0) --r;
    return ClusterSpec{r, n / r};
}

using SeededScenario = std::function<ProtocolReport(std::uint64_t seed)>;

/// Validates the parameters up front and returns a runner that builds a
/// fresh engine per seed.
inline SeededScenario make_scenario(Workload w, Backend backend, std::size_t n) {
    switch (w) {
        case Workload::Cluster1D:
        case Workload::Cluster2D: {
            const ClusterSpec spec = cluster_shape(w, n);
            spec.validate();
            default_limits().check(backend, spec.size());
            return [spec, backend](std::uint64_t seed) {
                Engine e(seed);
                return run_cluster(spec, backend, e);
            };
        }
        case Workload::Swap: {
            SwapConfig cfg;
            cfg.nodes = n;
            cfg.backend = backend;
            cfg.validate();
            return [cfg](std::uint64_t seed) {
                Engine e(seed);
                return run_swap_chain(cfg, e);
            };
        }
        case Workload::Qlan: {
            QlanConfig cfg;
            cfg.clients = n;
            cfg.backend = backend;
            cfg.validate();
            // Resource cluster plus one Bell pair mid-BSM.
            default_limits().check(backend, 2 * n + 1);
            return [cfg](std::uint64_t seed) {
                Engine e(seed);
                return run_qlan(cfg, e);
            };
        }
    }
    throw std::invalid_argument("unknown workload");
}

}  // namespace q2sim::bench
