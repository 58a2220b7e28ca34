#pragma once

#include <algorithm>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "q2sim/sim/engine.hpp"

namespace q2sim {

/// Folds a trace into its entanglement structure: init creates a singleton
/// partition, entangle merges the partitions of its qubits, measure and
/// lose_qubit remove a qubit. Qubit ownership follows init, send_qubit and
/// deliver_qubit.
class TraceReplay {
  public:
    using Json = nlohmann::ordered_json;

    static TraceReplay from_stream(std::istream& in, std::optional<SimTime> until = std::nullopt) {
        TraceReplay r;
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (line.empty()) continue;
            Json e;
            try {
                e = Json::parse(line);
            } catch (const nlohmann::json::exception& ex) {
                throw std::runtime_error("trace line " + std::to_string(lineno) + ": " + ex.what());
            }
            if (until && e.value("t", SimTime{0}) > *until) break;
            try {
                r.apply(e);
            } catch (const std::exception& ex) {
                throw std::runtime_error("trace line " + std::to_string(lineno) + ": " + ex.what());
            }
        }
        return r;
    }

    void apply(const Json& e) {
        const std::string ev = e.at("ev").get<std::string>();
        const SimTime t = e.at("t").get<SimTime>();
        if (t < last_t_) throw std::runtime_error("timestamps go backwards");
        last_t_ = t;
        ++events_;
        if (ev == "topology") {
            for (const auto& n : e.at("nodes")) add_node(n.get<std::string>());
        } else if (ev == "init_qubit") {
            const std::string q = e.at("qubit").get<std::string>();
            if (qubits_.count(q)) throw std::runtime_error("qubit '" + q + "' initialised twice");
            const std::string node = e.at("node").get<std::string>();
            add_node(node);
            const std::uint64_t pid = next_partition_++;
            qubits_[q] = Qubit{node, false, pid};
            partitions_[pid] = {q};
        } else if (ev == "entangle") {
            const auto labels = e.at("qubits").get<std::vector<std::string>>();
            if (labels.empty()) return;
            const std::uint64_t target = qubit(labels.front()).partition;
            for (const auto& l : labels) merge(target, qubit(l).partition);
        } else if (ev == "send_qubit") {
            Qubit& q = qubit(e.at("qubit").get<std::string>());
            add_node(e.at("to").get<std::string>());
            q.in_flight = true;
        } else if (ev == "deliver_qubit") {
            Qubit& q = qubit(e.at("qubit").get<std::string>());
            q.owner = e.at("to").get<std::string>();
            add_node(q.owner);
            q.in_flight = false;
        } else if (ev == "measure" || ev == "lose_qubit") {
            remove(e.at("qubit").get<std::string>());
        } else if (ev == "apply_gate") {
            for (const auto& l : e.at("qubits")) qubit(l.get<std::string>());
        }
        // classical_* and protocol_phase do not change the entanglement structure.
    }

    std::uint64_t events() const { return events_; }
    const std::vector<std::string>& nodes() const { return nodes_; }
    std::size_t live_qubits() const { return qubits_.size(); }

    std::optional<std::string> owner(const std::string& label) const {
        auto it = qubits_.find(label);
        if (it == qubits_.end() || it->second.in_flight) return std::nullopt;
        return it->second.owner;
    }

    /// Partitions as sorted label lists, ordered by their first label.
    std::vector<std::vector<std::string>> partitions() const {
        std::vector<std::vector<std::string>> out;
        for (const auto& [pid, members] : partitions_) out.emplace_back(members.begin(), members.end());
        std::sort(out.begin(), out.end());
        return out;
    }

    /// Node-level entanglement graph: nodes u, v are adjacent when they hold
    /// (not in flight) live qubits of a common partition. Vertices are listed
    /// in first-appearance order, edges by vertex index.
    Json entanglement_graph() const {
        std::map<std::string, std::size_t> index;
        for (std::size_t i = 0; i < nodes_.size(); ++i) index[nodes_[i]] = i;
        std::set<std::pair<std::size_t, std::size_t>> edges;
        for (const auto& [pid, members] : partitions_) {
            std::set<std::size_t> holders;
            for (const auto& l : members) {
                const Qubit& q = qubits_.at(l);
                if (!q.in_flight) holders.insert(index.at(q.owner));
            }
            for (auto a = holders.begin(); a != holders.end(); ++a) {
                for (auto b = std::next(a); b != holders.end(); ++b) edges.emplace(*a, *b);
            }
        }
        Json j;
        j["vertices"] = nodes_;
        Json e = Json::array();
        for (const auto& [a, b] : edges) e.push_back(Json::array({nodes_[a], nodes_[b]}));
        j["edges"] = std::move(e);
        return j;
    }

  private:
    struct Qubit {
        std::string owner;
        bool in_flight = false;
        std::uint64_t partition = 0;
    };

    void add_node(const std::string& n) {
        if (std::find(nodes_.begin(), nodes_.end(), n) == nodes_.end()) nodes_.push_back(n);
    }

    Qubit& qubit(const std::string& label) {
        auto it = qubits_.find(label);
        if (it == qubits_.end()) throw std::runtime_error("unknown qubit '" + label + "'");
        return it->second;
    }

    void merge(std::uint64_t into, std::uint64_t from) {
        if (into == from) return;
        auto& dst = partitions_.at(into);
        for (const auto& l : partitions_.at(from)) {
            qubits_.at(l).partition = into;
            dst.insert(l);
        }
        partitions_.erase(from);
    }

    void remove(const std::string& label) {
        const Qubit q = qubit(label);
        auto& members = partitions_.at(q.partition);
        members.erase(label);
        if (members.empty()) partitions_.erase(q.partition);
        qubits_.erase(label);
    }

    std::vector<std::string> nodes_;
    std::map<std::string, Qubit> qubits_;
    std::map<std::uint64_t, std::set<std::string>> partitions_;
    std::uint64_t next_partition_ = 0;
    std::uint64_t events_ = 0;
    SimTime last_t_ = 0;
};

}  // namespace q2sim
