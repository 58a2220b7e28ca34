#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "q2sim/quantum/ops.hpp"
#include "q2sim/sim/engine.hpp"
#include "q2sim/trace/trace_writer.hpp"

namespace q2sim {

using QubitId = std::uint64_t;
using PartitionId = std::uint64_t;

/// Thrown when a measured, lost or unknown qubit is used.
class DeadQubitError : public std::logic_error {
  public:
    using std::logic_error::logic_error;
};

struct QubitInfo {
    QubitId id = 0;
    std::string label;
    std::string owner;  // last holder; meaningful only when !in_flight
    bool in_flight = false;
    bool alive = true;
    PartitionId partition = 0;
};

struct PartitionSnapshot {
    PartitionId id = 0;
    std::size_t size = 0;
    std::vector<std::string> member_labels;
};

/// Global qubit identity and the joint states they live in.
///
/// Every live qubit belongs to exactly one partition; the partition's
/// member order is the qubit order of its QuantumState. Two-qubit gates
/// across partitions merge them (lower partition id first), measurements
/// factor the measured qubit out immediately.
class StateRegistry {
  public:
    StateRegistry(Engine& engine, Backend backend, BackendLimits limits = default_limits(),
                  TraceWriter* trace = nullptr)
        : engine_(&engine), backend_(backend), limits_(limits), trace_(trace) {}

    StateRegistry(const StateRegistry&) = delete;
    StateRegistry& operator=(const StateRegistry&) = delete;

    Backend backend() const { return backend_; }
    const BackendLimits& limits() const { return limits_; }
    TraceWriter* trace() const { return trace_; }
    void set_trace(TraceWriter* trace) { trace_ = trace; }

    void register_node(const std::string& node) {
        if (std::find(nodes_.begin(), nodes_.end(), node) == nodes_.end()) nodes_.push_back(node);
    }
    bool has_node(const std::string& node) const {
        return std::find(nodes_.begin(), nodes_.end(), node) != nodes_.end();
    }

    /// New single-qubit partition. Labels must be unique among live qubits;
    /// an empty label becomes "q<id>".
    QubitId create_qubit(const std::string& node, const std::string& label, InitialState init = InitialState::Zero) {
        return create_register(node, {label}, init).front();
    }

    /// n qubits in one fresh partition, without merges.
    std::vector<QubitId> create_register(const std::string& node, const std::vector<std::string>& labels,
                                         InitialState init = InitialState::Zero) {
        if (!has_node(node)) throw std::invalid_argument("unknown node '" + node + "'");
        if (labels.empty()) throw std::invalid_argument("create_register: no qubits requested");
        std::vector<std::string> resolved;
        resolved.reserve(labels.size());
        for (std::size_t k = 0; k < labels.size(); ++k) {
            std::string l = labels[k].empty() ? "q" + std::to_string(qubits_.size() + k) : labels[k];
            if (live_labels_.count(l) || std::find(resolved.begin(), resolved.end(), l) != resolved.end()) {
                throw std::invalid_argument("duplicate qubit label '" + l + "' on node '" + node + "'");
            }
            resolved.push_back(std::move(l));
        }
        Partition part;
        part.state = make_state(labels.size(), backend_, init, limits_);
        const PartitionId pid = next_partition_++;
        std::vector<QubitId> ids;
        for (auto& l : resolved) {
            const QubitId id = qubits_.size();
            qubits_.push_back(QubitInfo{id, l, node, false, true, pid});
            live_labels_.emplace(l, id);
            part.members.push_back(id);
            ids.push_back(id);
            if (trace_) trace_->init_qubit(engine_->now(), node, l);
        }
        partitions_.emplace(pid, std::move(part));
        live_ += labels.size();
        debug_check();
        return ids;
    }

    /// Applies a gate to the given qubits, merging their partitions first.
    void apply_gate(GateKind kind, const std::vector<QubitId>& ids) {
        if (ids.size() != gate_arity(kind)) {
            throw std::invalid_argument("gate " + std::string(gate_name(kind)) + " expects " +
                                        std::to_string(gate_arity(kind)) + " qubits");
        }
        for (QubitId id : ids) require_live(id);
        const PartitionId pid = merge_all(ids);
        Partition& part = partitions_.at(pid);
        std::vector<std::size_t> idx;
        for (QubitId id : ids) idx.push_back(index_in(part, id));
        part.state->apply_gate(Gate{kind, std::move(idx)});
        ++gates_applied_;
        if (trace_) {
            std::vector<std::string> labels;
            for (QubitId id : ids) labels.push_back(qubits_[id].label);
            trace_->apply_gate(engine_->now(), qubits_[ids.front()].owner, gate_name(kind), labels);
            if (ids.size() == 2) trace_->entangle(engine_->now(), labels);
        }
        debug_check();
    }

    /// CZ on each edge (indices into `ids`); one merged partition, one fused pass.
    void apply_cz_layer(const std::vector<QubitId>& ids, const std::vector<Edge>& edges) {
        for (QubitId id : ids) require_live(id);
        if (ids.empty()) return;
        const PartitionId pid = merge_all(ids);
        Partition& part = partitions_.at(pid);
        std::vector<std::size_t> pos(ids.size());
        for (std::size_t k = 0; k < ids.size(); ++k) pos[k] = index_in(part, ids[k]);
        std::vector<Edge> mapped;
        mapped.reserve(edges.size());
        for (const auto& [u, v] : edges) {
            if (u >= ids.size() || v >= ids.size()) throw std::out_of_range("apply_cz_layer: edge index");
            mapped.emplace_back(pos[u], pos[v]);
        }
        part.state->apply_cz_layer(mapped);
        gates_applied_ += edges.size();
        if (trace_) {
            for (const auto& [u, v] : edges) {
                std::vector<std::string> labels{qubits_[ids[u]].label, qubits_[ids[v]].label};
                trace_->apply_gate(engine_->now(), qubits_[ids[u]].owner, "CZ", labels);
                trace_->entangle(engine_->now(), labels);
            }
        }
        debug_check();
    }

    /// Measures, removes the qubit from its joint state and kills the handle.
    int measure_and_release(QubitId id, Basis basis, RngStream& rng) {
        require_live(id);
        const int outcome = measure_and_remove(id, basis, rng);
        ++measurements_;
        if (trace_) trace_->measure(engine_->now(), qubits_[id].owner, qubits_[id].label, basis_name(basis), outcome);
        debug_check();
        return outcome;
    }

    /// Erasure: the qubit is traced out (Z measurement with the outcome discarded).
    void lose(QubitId id, RngStream& rng) {
        require_live(id);
        measure_and_remove(id, Basis::Z, rng);
        ++losses_;
        debug_check();
    }

    void apply_noise(QubitId id, const NoiseMap& map, RngStream& rng) {
        require_live(id);
        Partition& part = partitions_.at(qubits_[id].partition);
        q2sim::apply_noise(*part.state, map, index_in(part, id), rng);
    }

    void set_in_flight(QubitId id) {
        require_live(id);
        qubits_[id].in_flight = true;
    }

    void set_owner(QubitId id, const std::string& node) {
        require_live(id);
        if (!has_node(node)) throw std::invalid_argument("unknown node '" + node + "'");
        qubits_[id].owner = node;
        qubits_[id].in_flight = false;
    }

    const QubitInfo& info(QubitId id) const {
        if (id >= qubits_.size()) throw DeadQubitError("unknown qubit id " + std::to_string(id));
        return qubits_[id];
    }
    bool is_live(QubitId id) const { return id < qubits_.size() && qubits_[id].alive; }
    const std::string& label(QubitId id) const { return info(id).label; }

    /// True when the node holds the qubit (delivered and alive).
    bool owned_by(QubitId id, const std::string& node) const {
        return is_live(id) && !qubits_[id].in_flight && qubits_[id].owner == node;
    }

    PartitionSnapshot partition_of(QubitId id) const {
        require_live(id);
        const PartitionId pid = qubits_[id].partition;
        const Partition& part = partitions_.at(pid);
        PartitionSnapshot snap{pid, part.members.size(), {}};
        for (QubitId m : part.members) snap.member_labels.push_back(qubits_[m].label);
        return snap;
    }

    /// Fidelity of the joint state of exactly the given qubits (which must
    /// form one whole partition) with `reference`, qubit k of the reference
    /// being ids[k].
    double fidelity(const std::vector<QubitId>& ids, std::span<const Complex> reference) const {
        return ordered_state(ids)->fidelity(reference);
    }

    /// Fidelity with the graph state on `edges` (indices into ids). The
    /// stabilizer backend projects onto the graph's generators, so any size
    /// works; other backends compare amplitudes.
    double graph_state_fidelity(const std::vector<QubitId>& ids, const std::vector<Edge>& edges) const {
        auto state = ordered_state(ids);
        if (auto* stab = dynamic_cast<StabilizerState*>(state.get())) {
            return stab->fidelity_with_stabilizer_group(graph_state_generators(ids.size(), edges));
        }
        return state->fidelity(graph_state_amplitudes(ids.size(), edges));
    }

    /// Copy of the joint state of exactly `ids`, reordered so qubit k is ids[k].
    std::unique_ptr<QuantumState> ordered_state(const std::vector<QubitId>& ids) const {
        for (QubitId id : ids) require_live(id);
        if (ids.empty()) throw std::invalid_argument("ordered_state: no qubits");
        const Partition& part = partitions_.at(qubits_[ids.front()].partition);
        if (part.members.size() != ids.size()) {
            throw std::invalid_argument("ordered_state: qubits do not form a whole partition (partition has " +
                                        std::to_string(part.members.size()) + " qubits)");
        }
        auto state = part.state->clone();
        std::vector<QubitId> cur = part.members;
        for (std::size_t k = 0; k < ids.size(); ++k) {
            auto it = std::find(cur.begin(), cur.end(), ids[k]);
            if (it == cur.end()) throw std::invalid_argument("ordered_state: qubit outside the partition");
            const auto j = static_cast<std::size_t>(it - cur.begin());
            if (j != k) {
                state->apply_gate(Gate{GateKind::SWAP, {k, j}});
                std::swap(cur[k], cur[j]);
            }
        }
        return state;
    }

    /// Member labels of every partition, each list and the outer list sorted.
    std::vector<std::vector<std::string>> partition_labels() const {
        std::vector<std::vector<std::string>> out;
        for (const auto& [pid, part] : partitions_) {
            std::vector<std::string> l;
            for (QubitId m : part.members) l.push_back(qubits_[m].label);
            std::sort(l.begin(), l.end());
            out.push_back(std::move(l));
        }
        std::sort(out.begin(), out.end());
        return out;
    }

    std::size_t live_qubits() const { return live_; }
    std::size_t partition_count() const { return partitions_.size(); }
    std::size_t largest_partition() const {
        std::size_t m = 0;
        for (const auto& [pid, part] : partitions_) m = std::max(m, part.members.size());
        return m;
    }
    std::uint64_t gates_applied() const { return gates_applied_; }
    std::uint64_t measurements() const { return measurements_; }
    std::uint64_t losses() const { return losses_; }

    /// Throws std::logic_error if the bookkeeping is inconsistent.
    void check_invariants() const {
        std::size_t total = 0;
        for (const auto& [pid, part] : partitions_) {
            if (part.members.empty()) throw std::logic_error("registry: empty partition");
            if (part.state->num_qubits() != part.members.size()) {
                throw std::logic_error("registry: partition size does not match its state");
            }
            for (QubitId m : part.members) {
                if (!qubits_[m].alive || qubits_[m].partition != pid) {
                    throw std::logic_error("registry: member bookkeeping mismatch");
                }
            }
            total += part.members.size();
        }
        std::size_t alive = 0;
        for (const auto& q : qubits_) alive += q.alive;
        if (total != live_ || alive != live_) throw std::logic_error("registry: live qubit count mismatch");
    }

  private:
    struct Partition {
        std::vector<QubitId> members;
        std::unique_ptr<QuantumState> state;
    };

    void require_live(QubitId id) const {
        if (id >= qubits_.size()) throw DeadQubitError("unknown qubit id " + std::to_string(id));
        if (!qubits_[id].alive) {
            throw DeadQubitError("qubit '" + qubits_[id].label + "' was already measured or lost");
        }
    }

    static std::size_t index_in(const Partition& part, QubitId id) {
        auto it = std::find(part.members.begin(), part.members.end(), id);
        return static_cast<std::size_t>(it - part.members.begin());
    }

    PartitionId merge_all(const std::vector<QubitId>& ids) {
        std::vector<PartitionId> pids;
        for (QubitId id : ids) pids.push_back(qubits_[id].partition);
        std::sort(pids.begin(), pids.end());
        pids.erase(std::unique(pids.begin(), pids.end()), pids.end());
        if (pids.size() > 1) {
            std::size_t total = 0;
            for (PartitionId p : pids) total += partitions_.at(p).members.size();
            limits_.check(backend_, total);
        }
        const PartitionId target = pids.front();
        for (std::size_t k = 1; k < pids.size(); ++k) {
            Partition& dst = partitions_.at(target);
            Partition& src = partitions_.at(pids[k]);
            dst.state = dst.state->tensor(*src.state);
            for (QubitId m : src.members) {
                qubits_[m].partition = target;
                dst.members.push_back(m);
            }
            partitions_.erase(pids[k]);
        }
        return target;
    }

    int measure_and_remove(QubitId id, Basis basis, RngStream& rng) {
        const PartitionId pid = qubits_[id].partition;
        Partition& part = partitions_.at(pid);
        const std::size_t idx = index_in(part, id);
        const int outcome = part.state->measure_and_discard(idx, basis, rng.uniform());
        part.members.erase(part.members.begin() + static_cast<std::ptrdiff_t>(idx));
        if (part.members.empty()) partitions_.erase(pid);
        qubits_[id].alive = false;
        live_labels_.erase(qubits_[id].label);
        --live_;
        return outcome;
    }

    void debug_check() const {
#ifndef NDEBUG
        check_invariants();
#endif
    }

    Engine* engine_;
    Backend backend_;
    BackendLimits limits_;
    TraceWriter* trace_;
    std::vector<std::string> nodes_;
    std::vector<QubitInfo> qubits_;
    std::map<std::string, QubitId> live_labels_;
    std::map<PartitionId, Partition> partitions_;
    PartitionId next_partition_ = 0;
    std::size_t live_ = 0;
    std::uint64_t gates_applied_ = 0;
    std::uint64_t measurements_ = 0;
    std::uint64_t losses_ = 0;
};

}  // namespace q2sim
