#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "q2sim/protocols/bsm.hpp"
#include "q2sim/protocols/report.hpp"

namespace q2sim {

struct SwapConfig {
    /// Chain length including alice and bob.
    std::size_t nodes = 3;
    std::uint64_t bus_rate_bps = 10'000'000'000ULL;
    double link_km = 1.0;
    double bus_km = 1.0;
    std::size_t queue_capacity = 100;
    std::uint64_t message_bytes = 1024;
    Transport transport = Transport::Unreliable;
    Backend backend = Backend::Ket;
    GateTimings timings;
    /// Off only for the soundness check: bob keeps the raw Pauli frame.
    bool apply_corrections = true;

    void validate() const {
        if (nodes < 3) throw std::invalid_argument("swap chain needs N >= 3 nodes");
        if (bus_rate_bps == 0) throw std::invalid_argument("bus rate must be positive");
        if (!(link_km >= 0.0) || !(bus_km >= 0.0)) throw std::invalid_argument("lengths must be >= 0");
        timings.validate();
    }
};

inline std::string chain_node(std::size_t i) { return "n" + std::to_string(i); }

/// Every node i < N-1 makes a Bell pair (a_i, b_i) and sends b_i to node
/// i+1. Each repeater Bell-measures (b_{i-1}, a_i) and sends the two bits
/// to bob over the shared bus; bob applies the XOR of all frames to b_{N-2}.
inline ProtocolReport run_swap_chain(const SwapConfig& cfg, Engine& engine, TraceWriter* trace = nullptr,
                                     const RunHooks& hooks = {}) {
    cfg.validate();
    WallTimer wall;
    ProtocolReport rep;
    rep.protocol = "swap";
    const std::size_t n = cfg.nodes;
    StateRegistry reg(engine, cfg.backend, default_limits(), trace);
    const ObserverScope observe(engine, reg, hooks);
    Network net(engine, reg);
    for (std::size_t i = 0; i < n; ++i) net.add_node(chain_node(i), cfg.timings);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        QuantumChannelConfig qc;
        qc.a = chain_node(i);
        qc.b = chain_node(i + 1);
        qc.length_km = cfg.link_km;
        net.add_quantum_channel(qc);
    }
    ClassicalLinkConfig bus;
    bus.kind = LinkKind::SharedBus;
    for (std::size_t i = 0; i < n; ++i) bus.nodes.push_back(chain_node(i));
    bus.length_km = cfg.bus_km;
    bus.rate_bps = cfg.bus_rate_bps;
    bus.queue_capacity = cfg.queue_capacity;
    net.add_classical_link(bus);
    net.write_topology();
    PhaseClock clock(engine, rep, trace);
    rep.config_ms = wall.elapsed_ms();

    WallTimer sim_wall;
    const std::string bob = chain_node(n - 1);
    const std::size_t repeaters = n - 2;
    std::vector<QubitId> a(n - 1), b(n - 1);
    rep.outcomes.assign(2 * repeaters, -1);
    std::size_t delivered = 0, measured = 0, received = 0;
    int frame_z = 0, frame_x = 0;
    bool bob_has_qubit = false, done = false;

    auto try_correct = [&] {
        if (done || !bob_has_qubit || received < repeaters) return;
        clock.begin("correct");
        const QubitId target = b[n - 2];
        std::vector<LocalOp> ops;
        if (cfg.apply_corrections) ops = correction_ops(target, frame_z, frame_x);
        net.local_ops(bob, std::move(ops), [&, target](const std::vector<int>&) {
            rep.final_fidelity = reg.fidelity({a[0], target}, bell_amplitudes());
            rep.success = true;
            clock.finish();
        });
        done = true;
    };

    auto on_delivery = [&] {
        if (++delivered == n - 1) clock.begin("swap");
    };
    auto on_bits = [&] {
        ++received;
        try_correct();
    };

    clock.begin("distribute");
    for (std::size_t i = 0; i + 1 < n; ++i) {
        a[i] = reg.create_qubit(chain_node(i), "a" + std::to_string(i));
        b[i] = reg.create_qubit(chain_node(i), "b" + std::to_string(i));
    }
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const std::string here = chain_node(i), next = chain_node(i + 1);
        net.local_ops(here, {LocalOp::apply(GateKind::H, {a[i]}), LocalOp::apply(GateKind::CNOT, {a[i], b[i]})},
                      [&, i, here, next](const std::vector<int>&) {
                          net.transmit_qubit(here, next, b[i], [&, i, next](bool) {
                              on_delivery();
                              if (i + 1 == n - 1) {
                                  bob_has_qubit = true;
                                  try_correct();
                                  return;
                              }
                              bsm(net, next, b[i], a[i + 1], [&, i, next](int b1, int b2) {
                                  rep.outcomes[2 * i] = b1;
                                  rep.outcomes[2 * i + 1] = b2;
                                  if (++measured == repeaters && clock.open()) clock.begin("classical");
                                  ClassicalMessage m;
                                  m.from = next;
                                  m.to = bob;
                                  m.size_bytes = cfg.message_bytes;
                                  m.payload = {static_cast<std::uint8_t>(b1), static_cast<std::uint8_t>(b2)};
                                  m.transport = cfg.transport;
                                  m.kind = "bsm_bits";
                                  net.send_classical(
                                      m,
                                      [&](const ClassicalMessage& got) {
                                          frame_z ^= got.payload[0];
                                          frame_x ^= got.payload[1];
                                          on_bits();
                                      },
                                      [&](const ClassicalMessage&) {
                                          clock.fail("BSM bits from a repeater were not delivered");
                                          done = true;
                                      });
                              });
                          });
                      });
    }

    const RunStats stats = engine.run();
    if (!rep.success && rep.failure.empty()) clock.fail("protocol did not complete");
    rep.events = stats.events_processed;
    rep.gates = reg.gates_applied();
    rep.measurements = reg.measurements();
    rep.retransmissions = net.transport_stats().retransmissions;
    rep.handshakes = net.transport_stats().handshakes;
    rep.sim_ms = sim_wall.elapsed_ms();
    return rep;
}

}  // namespace q2sim
