#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "q2sim/graph/ent_graph.hpp"
#include "q2sim/protocols/bsm.hpp"
#include "q2sim/protocols/report.hpp"

namespace q2sim {

struct QlanConfig {
    std::size_t clients = 3;
    double star_length_km = 1.0;
    /// Optional per-client lengths; overrides star_length_km when non-empty.
    std::vector<double> client_lengths_km;
    double loss_p = 0.0;
    Backend backend = Backend::Ket;
    GateTimings timings;
    std::uint64_t link_rate_bps = 50'000'000;
    std::uint64_t message_bytes = 1024;
    /// Bell-pair attempts per client before the run fails.
    int max_attempts = 64;

    double length_km(std::size_t client) const {
        return client_lengths_km.empty() ? star_length_km : client_lengths_km.at(client);
    }

    void validate() const {
        if (clients < 2) throw std::invalid_argument("QLAN needs M >= 2 clients");
        if (!client_lengths_km.empty() && client_lengths_km.size() != clients) {
            throw std::invalid_argument("need one length per client");
        }
        for (std::size_t k = 0; k < clients; ++k) {
            if (!(length_km(k) >= 0.0)) throw std::invalid_argument("client distance must be >= 0");
        }
        if (!(loss_p >= 0.0 && loss_p < 1.0)) throw std::invalid_argument("loss_p must be in [0,1)");
        if (max_attempts < 1) throw std::invalid_argument("max_attempts must be >= 1");
        timings.validate();
    }
};

struct QlanResult {
    ProtocolReport report;
    /// Symbolic graph after the orchestrator's Y measurements; vertices are
    /// path positions of the (2M-1)-qubit resource.
    EntGraph final_graph;
};

inline std::string qlan_client(std::size_t k) { return "c" + std::to_string(k + 1); }

inline std::uint8_t gate_code(GateKind g) { return static_cast<std::uint8_t>(g); }

/// Star network: the orchestrator shares a Bell pair with each client, builds
/// a (2M-1)-qubit path cluster, teleports the even positions to the clients
/// and Y-measures the M-1 odd positions it keeps. Clients end up holding an
/// M-qubit path cluster.
inline QlanResult run_qlan_detailed(const QlanConfig& cfg, Engine& engine, TraceWriter* trace = nullptr,
                                    const RunHooks& hooks = {}) {
    cfg.validate();
    WallTimer wall;
    QlanResult out;
    ProtocolReport& rep = out.report;
    rep.protocol = "qlan";
    const std::size_t m = cfg.clients;
    StateRegistry reg(engine, cfg.backend, default_limits(), trace);
    const ObserverScope observe(engine, reg, hooks);
    Network net(engine, reg);
    const std::string orch = "orch";
    net.add_node(orch, cfg.timings);
    std::vector<std::size_t> qchan(m);
    for (std::size_t k = 0; k < m; ++k) net.add_node(qlan_client(k), cfg.timings);
    for (std::size_t k = 0; k < m; ++k) {
        QuantumChannelConfig qc;
        qc.a = orch;
        qc.b = qlan_client(k);
        qc.length_km = cfg.length_km(k);
        qc.loss_p = cfg.loss_p;
        qchan[k] = net.add_quantum_channel(qc);
    }
    for (std::size_t k = 0; k < m; ++k) {
        ClassicalLinkConfig lc;
        lc.kind = LinkKind::P2P;
        lc.nodes = {orch, qlan_client(k)};
        lc.length_km = cfg.length_km(k);
        lc.rate_bps = cfg.link_rate_bps;
        net.add_classical_link(lc);
    }
    net.write_topology();
    PhaseClock clock(engine, rep, trace);
    rep.config_ms = wall.elapsed_ms();

    WallTimer sim_wall;
    const std::size_t resource = 2 * m - 1;
    std::vector<QubitId> e(m), f(m), r(resource);
    std::vector<int> attempts(m, 0);
    std::vector<int> client_pending(m, 2);  // teleport frame + graph corrections
    std::size_t sessions = 0, ready = 0, finished_clients = 0;
    bool failed = false;

    auto message = [&](const std::string& from, const std::string& to, const std::string& kind,
                       std::vector<std::uint8_t> payload) {
        ClassicalMessage msg;
        msg.from = from;
        msg.to = to;
        msg.size_bytes = std::max<std::uint64_t>(cfg.message_bytes, payload.size());
        msg.payload = std::move(payload);
        msg.transport = Transport::Reliable;
        msg.kind = kind;
        return msg;
    };
    auto fail = [&](const std::string& why) {
        if (failed) return;
        failed = true;
        clock.fail(why);
    };
    auto on_fail = [&](const ClassicalMessage& msg) { fail("reliable transport gave up on '" + msg.kind + "'"); };

    auto client_step_done = [&](std::size_t k) {
        if (--client_pending[k] > 0) return;
        if (++finished_clients < m) return;
        const auto edges = out.final_graph.index_edges();
        rep.final_fidelity = reg.graph_state_fidelity(f, edges);
        rep.success = true;
        clock.finish();
    };

    // Client side: apply a received list of single-qubit gates to f_k.
    auto apply_gates = [&](std::size_t k, const std::vector<std::uint8_t>& codes) {
        std::vector<LocalOp> ops;
        for (auto c : codes) ops.push_back(LocalOp::apply(static_cast<GateKind>(c), {f[k]}));
        net.local_ops(qlan_client(k), std::move(ops), [&, k](const std::vector<int>&) { client_step_done(k); });
    };

    auto measure_retained = [&] {
        std::vector<LocalOp> ops;
        for (std::size_t j = 1; j < resource; j += 2) ops.push_back(LocalOp::measure(r[j], Basis::Y));
        net.local_ops(orch, std::move(ops), [&](const std::vector<int>& outcomes) {
            clock.begin("correct");
            EntGraph g = EntGraph::path(resource);
            std::map<std::string, std::vector<std::uint8_t>> per_vertex;
            for (std::size_t j = 0; j < outcomes.size(); ++j) {
                rep.outcomes.push_back(outcomes[j]);
                auto rule = measure_pauli_rule(g, std::to_string(2 * j + 1), Basis::Y, outcomes[j]);
                for (const auto& c : rule.corrections) per_vertex[c.vertex].push_back(gate_code(c.gate));
                g = rule.graph;
            }
            out.final_graph = g;
            for (std::size_t k = 0; k < m; ++k) {
                net.send_classical(
                    message(orch, qlan_client(k), "graph_corrections", per_vertex[std::to_string(2 * k)]),
                    [&, k](const ClassicalMessage& msg) { apply_gates(k, msg.payload); }, on_fail);
            }
        });
    };

    auto build_and_teleport = [&] {
        clock.begin("cluster");
        std::vector<LocalOp> prep;
        for (std::size_t i = 0; i < resource; ++i) {
            r[i] = reg.create_qubit(orch, "r" + std::to_string(i));
            prep.push_back(LocalOp::apply(GateKind::H, {r[i]}));
        }
        for (std::size_t i = 0; i + 1 < resource; ++i) prep.push_back(LocalOp::apply(GateKind::CZ, {r[i], r[i + 1]}));
        net.local_ops(orch, std::move(prep));
        for (std::size_t k = 0; k < m; ++k) {
            bsm(net, orch, r[2 * k], e[k], [&, k](int b1, int b2) {
                std::vector<std::uint8_t> codes;
                for (GateKind g : pauli_correction(b1, b2)) codes.push_back(gate_code(g));
                net.send_classical(message(orch, qlan_client(k), "teleport_frame", codes),
                                   [&, k](const ClassicalMessage& msg) { apply_gates(k, msg.payload); }, on_fail);
                if (k + 1 == m) {
                    clock.begin("measure");
                    measure_retained();
                }
            });
        }
    };

    std::function<void(std::size_t)> distribute = [&](std::size_t k) {
        if (failed) return;
        ++attempts[k];
        ++rep.distribution_attempts;
        const std::string client = qlan_client(k);
        e[k] = reg.create_qubit(orch, "e" + std::to_string(k + 1));
        f[k] = reg.create_qubit(orch, "f" + std::to_string(k + 1));
        net.local_ops(orch, {LocalOp::apply(GateKind::H, {e[k]}), LocalOp::apply(GateKind::CNOT, {e[k], f[k]})},
                      [&, k, client](const std::vector<int>&) {
                          net.transmit_qubit(orch, client, f[k], [&, k, client](bool arrived) {
                              // Arrival or a heralded loss; the client reports either way.
                              const std::string kind = arrived ? "pair_ack" : "pair_nack";
                              net.send_classical(
                                  message(client, orch, kind, {}),
                                  [&, k, arrived](const ClassicalMessage&) {
                                      if (arrived) {
                                          if (++ready == m) build_and_teleport();
                                          return;
                                      }
                                      if (attempts[k] >= cfg.max_attempts) {
                                          fail("Bell-pair distribution retries exhausted for " + qlan_client(k));
                                          return;
                                      }
                                      // Reset the stranded half, then try again.
                                      net.local_ops(orch, {LocalOp::measure(e[k])},
                                                    [&, k](const std::vector<int>&) { distribute(k); });
                                  },
                                  on_fail);
                          });
                      });
    };

    clock.begin("session");
    for (std::size_t k = 0; k < m; ++k) {
        net.connect(
            orch, qlan_client(k),
            [&] {
                if (++sessions < m) return;
                clock.begin("distribution");
                for (std::size_t j = 0; j < m; ++j) distribute(j);
            },
            [&] { fail("session setup failed"); });
    }

    const RunStats stats = engine.run();
    if (!rep.success && rep.failure.empty()) clock.fail("protocol did not complete");
    rep.events = stats.events_processed;
    rep.gates = reg.gates_applied();
    rep.measurements = reg.measurements();
    rep.retransmissions = net.transport_stats().retransmissions;
    rep.handshakes = net.transport_stats().handshakes;
    for (std::size_t k = 0; k < m; ++k) rep.qubits_lost += net.quantum_channel_stats(qchan[k]).lost;
    rep.sim_ms = sim_wall.elapsed_ms();
    return out;
}

inline ProtocolReport run_qlan(const QlanConfig& cfg, Engine& engine, TraceWriter* trace = nullptr) {
    return run_qlan_detailed(cfg, engine, trace).report;
}

}  // namespace q2sim
