#pragma once

#include <cstdint>
#include <fstream>
#include <memory>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "q2sim/sim/engine.hpp"

namespace q2sim {

struct TopologyNode {
    std::string name;
};

struct TopologyQuantumLink {
    std::string a;
    std::string b;
    SimTime delay_ns = 0;
};

struct TopologyClassicalLink {
    std::string kind;  // "p2p" or "shared_bus"
    std::vector<std::string> nodes;
    SimTime delay_ns = 0;
    std::uint64_t rate_bps = 0;
};

struct Topology {
    std::vector<TopologyNode> nodes;
    std::vector<TopologyQuantumLink> quantum_links;
    std::vector<TopologyClassicalLink> classical_links;
};

/// NDJSON trace sink (.q2trace). One compact JSON object per line with a
/// fixed key order per event kind, so identical runs give identical bytes.
class TraceWriter {
  public:
    using Json = nlohmann::ordered_json;

    explicit TraceWriter(std::ostream& out) : out_(&out) {}

    static std::unique_ptr<TraceWriter> open_file(const std::string& path) {
        auto file = std::make_unique<std::ofstream>(path, std::ios::binary | std::ios::trunc);
        if (!*file) throw std::runtime_error("cannot open trace file '" + path + "'");
        auto w = std::make_unique<TraceWriter>(*file);
        w->owned_ = std::move(file);
        return w;
    }

    std::uint64_t lines() const { return lines_; }

    void write_topology(const Topology& topo) {
        if (topology_written_) throw std::logic_error("trace: topology already written");
        if (lines_ > 0) throw std::logic_error("trace: topology must be the first event");
        Json nodes = Json::array();
        for (const auto& n : topo.nodes) nodes.push_back(n.name);
        Json qlinks = Json::array();
        for (const auto& l : topo.quantum_links) {
            Json j;
            j["a"] = l.a;
            j["b"] = l.b;
            j["delay_ns"] = l.delay_ns;
            qlinks.push_back(std::move(j));
        }
        Json clinks = Json::array();
        for (const auto& l : topo.classical_links) {
            Json j;
            j["kind"] = l.kind;
            j["nodes"] = l.nodes;
            j["delay_ns"] = l.delay_ns;
            j["rate_bps"] = l.rate_bps;
            clinks.push_back(std::move(j));
        }
        Json e = head(0, "topology");
        e["nodes"] = std::move(nodes);
        e["quantum_links"] = std::move(qlinks);
        e["classical_links"] = std::move(clinks);
        topology_written_ = true;
        emit(e);
    }

    void init_qubit(SimTime t, std::string_view node, std::string_view qubit) {
        Json e = head(t, "init_qubit");
        e["node"] = node;
        e["qubit"] = qubit;
        emit(e);
    }

    void entangle(SimTime t, const std::vector<std::string>& qubits) {
        Json e = head(t, "entangle");
        e["qubits"] = qubits;
        emit(e);
    }

    void apply_gate(SimTime t, std::string_view node, std::string_view gate, const std::vector<std::string>& qubits) {
        Json e = head(t, "apply_gate");
        e["node"] = node;
        e["gate"] = gate;
        e["qubits"] = qubits;
        emit(e);
    }

    void send_qubit(SimTime t, std::string_view qubit, std::string_view from, std::string_view to) {
        emit(transfer(t, "send_qubit", qubit, from, to));
    }

    void deliver_qubit(SimTime t, std::string_view qubit, std::string_view from, std::string_view to) {
        emit(transfer(t, "deliver_qubit", qubit, from, to));
    }

    void lose_qubit(SimTime t, std::string_view qubit, std::string_view from, std::string_view to) {
        emit(transfer(t, "lose_qubit", qubit, from, to));
    }

    void measure(SimTime t, std::string_view node, std::string_view qubit, std::string_view basis, int outcome) {
        Json e = head(t, "measure");
        e["node"] = node;
        e["qubit"] = qubit;
        e["basis"] = basis;
        e["outcome"] = outcome;
        emit(e);
    }

    void classical_send(SimTime t, std::uint64_t id, std::string_view from, std::string_view to, std::uint64_t bytes,
                        std::string_view kind) {
        Json e = head(t, "classical_send");
        e["id"] = id;
        e["from"] = from;
        e["to"] = to;
        e["bytes"] = bytes;
        e["kind"] = kind;
        emit(e);
    }

    void classical_deliver(SimTime t, std::uint64_t id, std::string_view from, std::string_view to) {
        Json e = head(t, "classical_deliver");
        e["id"] = id;
        e["from"] = from;
        e["to"] = to;
        emit(e);
    }

    void classical_drop(SimTime t, std::uint64_t id, std::string_view from, std::string_view to,
                        std::string_view reason) {
        Json e = head(t, "classical_drop");
        e["id"] = id;
        e["from"] = from;
        e["to"] = to;
        e["reason"] = reason;
        emit(e);
    }

    void protocol_phase(SimTime t, std::string_view protocol, std::string_view phase) {
        Json e = head(t, "protocol_phase");
        e["protocol"] = protocol;
        e["phase"] = phase;
        emit(e);
    }

  private:
    Json head(SimTime t, std::string_view ev) {
        if (t < last_t_) {
            throw std::logic_error("trace: timestamp " + std::to_string(t) + " precedes " + std::to_string(last_t_));
        }
        last_t_ = t;
        Json e;
        e["t"] = t;
        e["ev"] = ev;
        return e;
    }

    Json transfer(SimTime t, std::string_view ev, std::string_view qubit, std::string_view from,
                  std::string_view to) {
        Json e = head(t, ev);
        e["qubit"] = qubit;
        e["from"] = from;
        e["to"] = to;
        return e;
    }

    void emit(const Json& e) {
        *out_ << e.dump() << '\n';
        if (!*out_) throw std::runtime_error("trace: write failed");
        ++lines_;
    }

    std::ostream* out_;
    std::unique_ptr<std::ofstream> owned_;
    std::uint64_t lines_ = 0;
    SimTime last_t_ = 0;
    bool topology_written_ = false;
};

}  // namespace q2sim
