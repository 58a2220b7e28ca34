#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "q2sim/quantum/density_matrix.hpp"
#include "q2sim/quantum/ket_state.hpp"
#include "q2sim/quantum/stabilizer_state.hpp"
#include "q2sim/quantum/state.hpp"
#include "q2sim/sim/rng.hpp"

namespace q2sim {

enum class InitialState { Zero, Plus };

inline std::unique_ptr<QuantumState> make_state(std::size_t n, Backend backend, InitialState init = InitialState::Zero,
                                                const BackendLimits& limits = default_limits()) {
    limits.check(backend, n);
    const bool plus = init == InitialState::Plus;
    switch (backend) {
        case Backend::Ket:
            return std::make_unique<KetState>(plus ? KetState::plus(n) : KetState(n));
        case Backend::DensityMatrix:
            return std::make_unique<DensityMatrixState>(plus ? DensityMatrixState::plus(n) : DensityMatrixState(n));
        case Backend::Stabilizer:
            return std::make_unique<StabilizerState>(plus ? StabilizerState::plus(n) : StabilizerState(n));
    }
    throw std::invalid_argument("make_state: unknown backend");
}

/// |+>^n.
inline std::unique_ptr<QuantumState> init_plus(std::size_t n, Backend backend,
                                               const BackendLimits& limits = default_limits()) {
    if (n == 0) throw std::invalid_argument("init_plus: n must be >= 1");
    return make_state(n, backend, InitialState::Plus, limits);
}

/// (|00> + |11>) / sqrt(2).
inline std::unique_ptr<QuantumState> bell_pair(Backend backend) {
    auto s = make_state(2, backend);
    s->apply_gate({GateKind::H, {0}});
    s->apply_gate({GateKind::CNOT, {0, 1}});
    return s;
}

/// Amplitudes of |Phi+>, used as a fidelity reference.
inline std::vector<Complex> bell_amplitudes() {
    const double r = 1.0 / std::sqrt(2.0);
    return {r, 0.0, 0.0, r};
}

struct NoiseMap {
    enum class Kind { Depolarizing };
    Kind kind = Kind::Depolarizing;
    double p = 0.0;
};

inline void apply_noise(QuantumState& s, const NoiseMap& map, std::size_t qubit, RngStream& rng) {
    switch (map.kind) {
        case NoiseMap::Kind::Depolarizing:
            s.apply_depolarizing(qubit, map.p, rng);
            return;
    }
}

/// Bernoulli(p) loss decision for one qubit crossing an erasure channel.
inline bool erase_qubit_event(RngStream& rng, double p) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("erasure probability outside [0,1]");
    return rng.bernoulli(p);
}

inline std::unique_ptr<QuantumState> tensor(const QuantumState& a, const QuantumState& b) { return a.tensor(b); }

/// R x C lattice; qubit index = row * C + col.
struct ClusterSpec {
    std::size_t rows = 1;
    std::size_t cols = 1;

    std::size_t size() const { return rows * cols; }

    void validate() const {
        if (rows < 1 || cols < 1) throw std::invalid_argument("cluster needs rows >= 1 and cols >= 1");
    }

    /// Horizontal edges first, then vertical.
    std::vector<Edge> edges() const {
        validate();
        std::vector<Edge> out;
        out.reserve(rows * (cols - 1) + cols * (rows - 1));
        for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t c = 0; c + 1 < cols; ++c) out.emplace_back(r * cols + c, r * cols + c + 1);
        }
        for (std::size_t r = 0; r + 1 < rows; ++r) {
            for (std::size_t c = 0; c < cols; ++c) out.emplace_back(r * cols + c, (r + 1) * cols + c);
        }
        return out;
    }
};

/// CZ on every lattice edge applied to |+>^(R*C).
inline std::unique_ptr<QuantumState> prepare_cluster(const ClusterSpec& spec, Backend backend,
                                                     const BackendLimits& limits = default_limits()) {
    spec.validate();
    auto s = init_plus(spec.size(), backend, limits);
    s->apply_cz_layer(spec.edges());
    return s;
}

/// Z-measures qubit 0 and removes it, n times. Returns the outcomes in original index order.
inline std::vector<std::uint8_t> evaluate_all(QuantumState& s, RngStream& rng) {
    const std::size_t n = s.num_qubits();
    std::vector<std::uint8_t> out;
    out.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        out.push_back(static_cast<std::uint8_t>(s.measure(0, Basis::Z, rng)));
        s.discard(0);
    }
    return out;
}

/// Stabilizer generators K_v = X_v prod_{u in N(v)} Z_u of the graph state on `edges`.
inline std::vector<PauliString> graph_state_generators(std::size_t n, const std::vector<Edge>& edges) {
    std::vector<PauliString> gens(n, PauliString::identity(n));
    for (std::size_t v = 0; v < n; ++v) gens[v].ops[v] = 'X';
    for (const auto& [u, v] : edges) {
        gens[u].ops[v] = 'Z';
        gens[v].ops[u] = 'Z';
    }
    return gens;
}

/// Amplitudes of the graph state on `edges`: 2^{-n/2} (-1)^{#edges inside i}.
inline std::vector<Complex> graph_state_amplitudes(std::size_t n, const std::vector<Edge>& edges) {
    CzLayerParity parity(n, edges);
    const std::size_t dim = std::size_t{1} << n;
    const double a = std::pow(2.0, -0.5 * static_cast<double>(n));
    std::vector<Complex> out(dim);
    for (std::size_t i = 0; i < dim; ++i) out[i] = parity.parity_slow(i) ? -a : a;
    return out;
}

}  // namespace q2sim
