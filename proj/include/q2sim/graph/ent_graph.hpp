#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <memory>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "q2sim/quantum/ops.hpp"

namespace q2sim {

/// Simple undirected graph on string-labelled vertices. Vertex order is
/// insertion order and fixes the qubit order of graph_to_state.
class EntGraph {
  public:
    using Json = nlohmann::ordered_json;

    EntGraph() = default;

    /// Vertices "0".."n-1" with edges given by index.
    static EntGraph from_edges(std::size_t n, const std::vector<Edge>& edges) {
        EntGraph g;
        for (std::size_t v = 0; v < n; ++v) g.add_vertex(std::to_string(v));
        for (const auto& [u, v] : edges) {
            if (u >= n || v >= n) throw std::out_of_range("edge endpoint outside graph");
            g.add_edge(std::to_string(u), std::to_string(v));
        }
        return g;
    }

    static EntGraph path(std::size_t n) { return from_edges(n, ClusterSpec{1, n}.edges()); }
    static EntGraph cluster(const ClusterSpec& spec) { return from_edges(spec.size(), spec.edges()); }
    static EntGraph star(std::size_t leaves) {
        std::vector<Edge> e;
        for (std::size_t k = 1; k <= leaves; ++k) e.emplace_back(0, k);
        return from_edges(leaves + 1, e);
    }
    static EntGraph complete(std::size_t n) {
        std::vector<Edge> e;
        for (std::size_t u = 0; u < n; ++u) {
            for (std::size_t v = u + 1; v < n; ++v) e.emplace_back(u, v);
        }
        return from_edges(n, e);
    }

    void add_vertex(const std::string& v) {
        if (v.empty()) throw std::invalid_argument("empty vertex label");
        if (adj_.count(v)) throw std::invalid_argument("duplicate vertex '" + v + "'");
        order_.push_back(v);
        adj_[v];
    }

    void add_edge(const std::string& u, const std::string& v) {
        require(u);
        require(v);
        if (u == v) throw std::invalid_argument("self-loop on '" + u + "'");
        adj_[u].insert(v);
        adj_[v].insert(u);
    }

    void remove_edge(const std::string& u, const std::string& v) {
        require(u);
        require(v);
        adj_[u].erase(v);
        adj_[v].erase(u);
    }

    void toggle_edge(const std::string& u, const std::string& v) {
        if (has_edge(u, v)) {
            remove_edge(u, v);
        } else {
            add_edge(u, v);
        }
    }

    bool has_vertex(const std::string& v) const { return adj_.count(v) > 0; }
    bool has_edge(const std::string& u, const std::string& v) const {
        auto it = adj_.find(u);
        return it != adj_.end() && it->second.count(v) > 0;
    }

    const std::set<std::string>& neighbors(const std::string& v) const {
        require(v);
        return adj_.at(v);
    }

    /// Neighbours of v in vertex order.
    std::vector<std::string> ordered_neighbors(const std::string& v) const {
        const auto& n = neighbors(v);
        std::vector<std::string> out;
        for (const auto& u : order_) {
            if (n.count(u)) out.push_back(u);
        }
        return out;
    }

    const std::vector<std::string>& vertices() const { return order_; }
    std::size_t size() const { return order_.size(); }

    std::size_t index_of(const std::string& v) const {
        auto it = std::find(order_.begin(), order_.end(), v);
        if (it == order_.end()) throw std::invalid_argument("unknown vertex '" + v + "'");
        return static_cast<std::size_t>(it - order_.begin());
    }

    std::size_t edge_count() const {
        std::size_t d = 0;
        for (const auto& [v, n] : adj_) d += n.size();
        return d / 2;
    }

    /// Edges as (i, j) vertex indices with i < j, sorted.
    std::vector<Edge> index_edges() const {
        std::vector<Edge> out;
        for (std::size_t i = 0; i < order_.size(); ++i) {
            for (const auto& u : adj_.at(order_[i])) {
                const std::size_t j = index_of(u);
                if (i < j) out.emplace_back(i, j);
            }
        }
        std::sort(out.begin(), out.end());
        return out;
    }

    std::vector<std::pair<std::string, std::string>> edges() const {
        std::vector<std::pair<std::string, std::string>> out;
        for (const auto& [i, j] : index_edges()) out.emplace_back(order_[i], order_[j]);
        return out;
    }

    /// Same vertex set and edge set; vertex order is ignored.
    friend bool operator==(const EntGraph& a, const EntGraph& b) { return a.adj_ == b.adj_; }

    /// {"vertices":[...],"edges":[[u,v],...]}
    Json to_json() const {
        Json j;
        j["vertices"] = order_;
        Json e = Json::array();
        for (const auto& [u, v] : edges()) e.push_back(Json::array({u, v}));
        j["edges"] = std::move(e);
        return j;
    }

    /// Accepts string or integer vertex labels.
    static EntGraph from_json(const nlohmann::json& j) {
        auto label = [](const nlohmann::json& v) {
            if (v.is_string()) return v.get<std::string>();
            if (v.is_number_integer()) return std::to_string(v.get<long long>());
            throw std::invalid_argument("graph vertex must be a string or integer");
        };
        EntGraph g;
        for (const auto& v : j.at("vertices")) g.add_vertex(label(v));
        for (const auto& e : j.at("edges")) {
            if (!e.is_array() || e.size() != 2) throw std::invalid_argument("graph edge must be a pair");
            g.add_edge(label(e[0]), label(e[1]));
        }
        return g;
    }

  private:
    void require(const std::string& v) const {
        if (!adj_.count(v)) throw std::invalid_argument("unknown vertex '" + v + "'");
    }

    std::vector<std::string> order_;
    std::map<std::string, std::set<std::string>> adj_;

    friend EntGraph delete_vertex(const EntGraph& g, const std::string& a);
};

/// tau_a: complements the subgraph induced on N(a).
inline EntGraph local_complement(const EntGraph& g, const std::string& a) {
    const auto n = g.ordered_neighbors(a);
    EntGraph out = g;
    for (std::size_t i = 0; i < n.size(); ++i) {
        for (std::size_t j = i + 1; j < n.size(); ++j) out.toggle_edge(n[i], n[j]);
    }
    return out;
}

inline EntGraph delete_vertex(const EntGraph& g, const std::string& a) {
    g.require(a);
    EntGraph out = g;
    for (const auto& u : g.adj_.at(a)) out.adj_[u].erase(a);
    out.adj_.erase(a);
    out.order_.erase(std::find(out.order_.begin(), out.order_.end(), a));
    return out;
}

struct Correction {
    std::string vertex;
    GateKind gate = GateKind::I;
    friend bool operator==(const Correction&, const Correction&) = default;
};

/// Single-qubit Clifford corrections for each outcome of one measurement.
struct CorrectionPlan {
    std::vector<Correction> if_zero;
    std::vector<Correction> if_one;

    const std::vector<Correction>& for_outcome(int outcome) const { return outcome == 0 ? if_zero : if_one; }
};

struct PauliRuleResult {
    EntGraph graph;
    CorrectionPlan plan;
    /// The plan entry for the outcome that was passed in.
    std::vector<Correction> corrections;
};

/// Graph-level effect of measuring vertex `a` in Y or Z. Applying
/// `corrections` to the post-measurement state of the remaining qubits gives
/// exactly |graph>. For Y the neighbours pick up S^(-+1): Sdg after outcome 0,
/// S after outcome 1. For Z outcome 1 leaves a Z on every neighbour.
inline PauliRuleResult measure_pauli_rule(const EntGraph& g, const std::string& a, Basis basis, int outcome) {
    if (outcome != 0 && outcome != 1) throw std::invalid_argument("outcome must be 0 or 1");
    if (basis == Basis::X) throw std::invalid_argument("X-basis graph rule is not supported");
    const auto n = g.ordered_neighbors(a);
    PauliRuleResult r;
    if (basis == Basis::Y) {
        r.graph = delete_vertex(local_complement(g, a), a);
        for (const auto& b : n) {
            r.plan.if_zero.push_back({b, GateKind::Sdg});
            r.plan.if_one.push_back({b, GateKind::S});
        }
    } else {
        r.graph = delete_vertex(g, a);
        for (const auto& b : n) r.plan.if_one.push_back({b, GateKind::Z});
    }
    r.corrections = r.plan.for_outcome(outcome);
    return r;
}

/// |+>^|G| followed by CZ on every edge, qubit k being vertices()[k].
inline std::unique_ptr<QuantumState> graph_to_state(const EntGraph& g, Backend backend,
                                                    const BackendLimits& limits = default_limits()) {
    if (g.size() == 0) throw std::invalid_argument("graph_to_state: empty graph");
    auto s = init_plus(g.size(), backend, limits);
    s->apply_cz_layer(g.index_edges());
    return s;
}

}  // namespace q2sim
