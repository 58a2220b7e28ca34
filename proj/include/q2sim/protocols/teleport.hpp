#pragma once

#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "q2sim/protocols/bsm.hpp"
#include "q2sim/protocols/report.hpp"

namespace q2sim {

struct TeleportConfig {
    double distance_km = 100.0;
    /// Depolarizing time constant of Bob's idle qubit; infinity disables noise.
    double t_dep_ms = std::numeric_limits<double>::infinity();
    Transport transport = Transport::Reliable;
    bool congested = false;
    Backend backend = Backend::DensityMatrix;
    std::uint64_t link_rate_bps = 50'000'000;
    std::uint64_t cross_rate_bps = 100'000'000;
    std::uint64_t message_bytes = 1024;
    GateTimings timings;

    void validate() const {
        if (!(distance_km > 0.0) || !std::isfinite(distance_km)) throw std::invalid_argument("distance_km must be > 0");
        if (!(t_dep_ms > 0.0)) throw std::invalid_argument("t_dep_ms must be > 0 or infinite");
        if (link_rate_bps == 0) throw std::invalid_argument("link rate must be positive");
        timings.validate();
    }
};

/// p = 1 - exp(-t / T_dep) for a wait of t ns.
inline double idle_depolarizing_p(SimTime wait_ns, double t_dep_ms) {
    if (std::isinf(t_dep_ms) || wait_ns <= 0) return 0.0;
    return 1.0 - std::exp(-static_cast<double>(wait_ns) / (t_dep_ms * 1e6));
}

/// Fidelity of |+> after depolarizing with p = 1 - exp(-t/T): (1 + e^{-t/T}) / 2.
inline double teleport_fidelity_law(SimTime wait_ns, double t_dep_ms) {
    return 1.0 - 0.5 * idle_depolarizing_p(wait_ns, t_dep_ms);
}

/// Teleports |+> from alice to bob. Bob's qubit idles (and depolarizes)
/// from its arrival until the correction bits arrive.
inline ProtocolReport run_teleport(const TeleportConfig& cfg, Engine& engine, TraceWriter* trace = nullptr,
                                   const RunHooks& hooks = {}) {
    cfg.validate();
    WallTimer wall;
    ProtocolReport rep;
    rep.protocol = "teleport";
    StateRegistry reg(engine, cfg.backend, default_limits(), trace);
    const ObserverScope observe(engine, reg, hooks);
    Network net(engine, reg);
    const std::string alice = "alice", bob = "bob";
    net.add_node(alice, cfg.timings);
    net.add_node(bob, cfg.timings);
    QuantumChannelConfig qc;
    qc.a = alice;
    qc.b = bob;
    qc.length_km = cfg.distance_km;
    net.add_quantum_channel(qc);
    ClassicalLinkConfig lc;
    lc.kind = LinkKind::P2P;
    lc.nodes = {alice, bob};
    lc.length_km = cfg.distance_km;
    lc.rate_bps = cfg.link_rate_bps;
    net.add_classical_link(lc);
    net.write_topology();
    PhaseClock clock(engine, rep, trace);
    rep.config_ms = wall.elapsed_ms();

    WallTimer sim_wall;
    if (cfg.congested) {
        // A window-limited sender for the TCP case, a constant-rate one for UDP.
        net.start_cross_traffic(alice, bob, cfg.cross_rate_bps,
                                cfg.transport == Transport::Reliable ? CrossTrafficPattern::Bulk
                                                                     : CrossTrafficPattern::ConstantOnOff);
    }

    clock.begin("entangle");
    const QubitId psi = reg.create_qubit(alice, "psi");
    const QubitId a = reg.create_qubit(alice, "a");
    const QubitId b = reg.create_qubit(alice, "b");
    std::optional<SimTime> qubit_at, bits_at;
    int bits[2] = {0, 0};
    bool done = false;

    auto finish = [&] {
        done = true;
        net.stop_all_cross_traffic();
    };

    auto try_correct = [&] {
        if (!qubit_at || !bits_at || done) return;
        rep.wait_time_ns = std::max<SimTime>(0, *bits_at - *qubit_at);
        rep.depolarizing_p = idle_depolarizing_p(rep.wait_time_ns, cfg.t_dep_ms);
        if (rep.depolarizing_p > 0.0) {
            reg.apply_noise(b, NoiseMap{NoiseMap::Kind::Depolarizing, rep.depolarizing_p}, engine.rng("noise"));
        }
        clock.begin("correct");
        net.local_ops(bob, correction_ops(b, bits[0], bits[1]), [&](const std::vector<int>&) {
            const std::vector<Complex> plus{Complex(1.0 / std::numbers::sqrt2, 0.0), Complex(1.0 / std::numbers::sqrt2, 0.0)};
            rep.final_fidelity = reg.fidelity({b}, plus);
            rep.success = true;
            clock.finish();
            finish();
        });
    };

    net.local_ops(alice,
                  {LocalOp::apply(GateKind::H, {psi}), LocalOp::apply(GateKind::H, {a}),
                   LocalOp::apply(GateKind::CNOT, {a, b})},
                  [&](const std::vector<int>&) {
                      net.transmit_qubit(alice, bob, b, [&](bool) {
                          qubit_at = engine.now();
                          try_correct();
                      });
                      bsm(net, alice, psi, a, [&](int b1, int b2) {
                          rep.outcomes = {b1, b2};
                          bits[0] = b1;
                          bits[1] = b2;
                          clock.begin("classical");
                          ClassicalMessage m;
                          m.from = alice;
                          m.to = bob;
                          m.size_bytes = cfg.message_bytes;
                          m.payload = {static_cast<std::uint8_t>(b1), static_cast<std::uint8_t>(b2)};
                          m.transport = cfg.transport;
                          m.kind = "bsm_bits";
                          net.send_classical(
                              m,
                              [&](const ClassicalMessage&) {
                                  bits_at = engine.now();
                                  try_correct();
                              },
                              [&](const ClassicalMessage&) {
                                  clock.fail("correction bits lost");
                                  finish();
                              });
                      });
                  });

    const RunStats stats = engine.run();
    if (!done) clock.fail("protocol did not complete");
    rep.events = stats.events_processed;
    rep.gates = reg.gates_applied();
    rep.measurements = reg.measurements();
    rep.retransmissions = net.transport_stats().retransmissions;
    rep.handshakes = net.transport_stats().handshakes;
    rep.sim_ms = sim_wall.elapsed_ms();
    return rep;
}

}  // namespace q2sim
