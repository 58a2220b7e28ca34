#pragma once

#include <stdexcept>
#include <string>

#include "q2sim/trace/trace_writer.hpp"

namespace q2sim {

/// Artificial at-the-source distribution trace for exercising a viewer:
/// alice prepares two qubits, entangles them and sends one to bob.
struct SynthOptions {
    std::string alice = "alice";
    std::string bob = "bob";
    std::string kept = "q0";
    std::string sent = "q1";
    SimTime t_init = 0;
    SimTime t_entangle = 100;
    SimTime t_send = 200;
    SimTime link_delay_ns = 5000;

    void validate() const {
        if (alice.empty() || bob.empty() || alice == bob) throw std::invalid_argument("synth: need two distinct node names");
        if (kept.empty() || sent.empty() || kept == sent) throw std::invalid_argument("synth: need two distinct qubit labels");
        if (t_init < 0 || t_entangle < t_init || t_send < t_entangle) {
            throw std::invalid_argument("synth: times must satisfy 0 <= init <= entangle <= send");
        }
        if (link_delay_ns < 0) throw std::invalid_argument("synth: link delay must be >= 0");
    }
};

inline void write_synth_trace(TraceWriter& w, const SynthOptions& o) {
    o.validate();
    Topology topo;
    topo.nodes = {{o.alice}, {o.bob}};
    topo.quantum_links.push_back({o.alice, o.bob, o.link_delay_ns});
    w.write_topology(topo);
    w.init_qubit(o.t_init, o.alice, o.kept);
    w.init_qubit(o.t_init, o.alice, o.sent);
    w.apply_gate(o.t_entangle, o.alice, "H", {o.kept});
    w.apply_gate(o.t_entangle, o.alice, "CNOT", {o.kept, o.sent});
    w.entangle(o.t_entangle, {o.kept, o.sent});
    w.send_qubit(o.t_send, o.sent, o.alice, o.bob);
    w.deliver_qubit(o.t_send + o.link_delay_ns, o.sent, o.alice, o.bob);
}

}  // namespace q2sim
