#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "q2sim/quantum/cz_layer.hpp"
#include "q2sim/quantum/gate.hpp"
#include "q2sim/sim/rng.hpp"

namespace q2sim {

enum class Backend { Ket, DensityMatrix, Stabilizer };

inline constexpr std::string_view backend_name(Backend b) {
    switch (b) {
        case Backend::Ket: return "ket";
        case Backend::DensityMatrix: return "dm";
        case Backend::Stabilizer: return "stab";
    }
    return "?";
}

inline Backend parse_backend(std::string_view name) {
    if (name == "ket") return Backend::Ket;
    if (name == "dm") return Backend::DensityMatrix;
    if (name == "stab") return Backend::Stabilizer;
    throw std::invalid_argument("unknown backend '" + std::string(name) + "' (expected ket, dm or stab)");
}

/// Thrown when a state would exceed the qubit limit configured for its backend.
class CapacityError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Qubit limits per backend. Defaults fail fast well before a 16 GB host thrashes.
struct BackendLimits {
    std::size_t ket_max_qubits = 30;
    std::size_t dm_max_qubits = 15;
    std::size_t stab_max_qubits = 1u << 20;
    /// Largest stabilizer state converted to amplitudes for fidelity.
    std::size_t stab_ket_conversion_max = 20;

    std::size_t max_for(Backend b) const {
        switch (b) {
            case Backend::Ket: return ket_max_qubits;
            case Backend::DensityMatrix: return dm_max_qubits;
            case Backend::Stabilizer: return stab_max_qubits;
        }
        return 0;
    }

    void check(Backend b, std::size_t n) const {
        if (n > max_for(b)) {
            throw CapacityError("backend '" + std::string(backend_name(b)) + "' is limited to " +
                                std::to_string(max_for(b)) + " qubits (requested " + std::to_string(n) + ")");
        }
    }
};

inline BackendLimits& default_limits() {
    static BackendLimits limits;
    return limits;
}

/// Pauli operator with a sign: ops[k] in {'I','X','Y','Z'} acts on qubit k.
struct PauliString {
    bool negative = false;
    std::string ops;

    static PauliString identity(std::size_t n) { return {false, std::string(n, 'I')}; }
};

/// Unified plug-in interface over quantum-state representations.
///
/// Qubit ordering is little-endian: qubit 0 is the least significant bit
/// of a computational-basis index. Measurement outcome 0 is the +1
/// eigenvalue of the measured Pauli.
class QuantumState {
  public:
    virtual ~QuantumState() = default;

    virtual Backend backend() const = 0;
    virtual std::size_t num_qubits() const = 0;
    virtual std::unique_ptr<QuantumState> clone() const = 0;

    virtual void apply_gate(const Gate& gate) = 0;

    /// Applies CZ on every edge. Backends may fuse the whole layer into one pass.
    virtual void apply_cz_layer(const std::vector<Edge>& edges) {
        for (const auto& [u, v] : edges) apply_gate(Gate{GateKind::CZ, {u, v}});
    }

    /// Born probability of outcome 0 without disturbing the state.
    virtual double probability_zero(std::size_t qubit, Basis basis) const = 0;

    /// Measures and collapses using a single uniform draw u in [0,1):
    /// outcome = (u < p0) ? 0 : 1. Every backend consumes exactly one draw
    /// per measurement so outcome streams line up across backends.
    virtual int collapse(std::size_t qubit, Basis basis, double u) = 0;

    int measure(std::size_t qubit, Basis basis, RngStream& rng) { return collapse(qubit, basis, rng.uniform()); }

    /// Removes a qubit that is in a product state with the rest (e.g. just
    /// measured). The density-matrix backend takes the partial trace instead.
    virtual void discard(std::size_t qubit) = 0;

    /// collapse() followed by discard(); backends may fuse the two.
    virtual int measure_and_discard(std::size_t qubit, Basis basis, double u) {
        const int outcome = collapse(qubit, basis, u);
        discard(qubit);
        return outcome;
    }

    /// Joint state with this state's qubits at the lower indices.
    virtual std::unique_ptr<QuantumState> tensor(const QuantumState& other) const = 0;

    /// |<ref|psi>|^2 or <ref|rho|ref> against a pure reference of equal size.
    virtual double fidelity(std::span<const Complex> reference) const = 0;

    /// <P> for a Pauli string of length num_qubits().
    virtual double pauli_expectation(const PauliString& pauli) const = 0;

    /// Depolarizing channel (1-p) rho + p I/2 on one qubit. Pure-state
    /// backends sample a trajectory: with probability 3p/4 a uniformly
    /// chosen X, Y or Z is applied. Exactly one draw is consumed.
    virtual void apply_depolarizing(std::size_t qubit, double p, RngStream& rng) {
        check_probability(p);
        check_qubit(qubit);
        const double u = rng.uniform();
        if (u < 0.75 * p) {
            const auto which = static_cast<int>(u / (0.25 * p));
            static constexpr GateKind kPaulis[] = {GateKind::X, GateKind::Y, GateKind::Z};
            apply_gate(Gate{kPaulis[which < 3 ? which : 2], {qubit}});
        }
    }

  protected:
    void check_qubit(std::size_t qubit) const {
        if (qubit >= num_qubits()) {
            throw std::out_of_range("qubit " + std::to_string(qubit) + " out of range for " +
                                    std::to_string(num_qubits()) + "-qubit state");
        }
    }

    static void check_probability(double p) {
        if (!(p >= 0.0 && p <= 1.0)) {
            throw std::invalid_argument("probability " + std::to_string(p) + " outside [0,1]");
        }
    }

    void check_reference(std::span<const Complex> reference) const {
        if (reference.size() != (std::size_t{1} << num_qubits())) {
            throw std::invalid_argument("fidelity: reference has " + std::to_string(reference.size()) +
                                        " amplitudes, state has " + std::to_string(num_qubits()) + " qubits");
        }
    }

    void check_same_backend(const QuantumState& other) const {
        if (other.backend() != backend()) {
            throw std::invalid_argument("tensor: backend mismatch (" + std::string(backend_name(backend())) +
                                        " vs " + std::string(backend_name(other.backend())) + ")");
        }
    }
};

/// Inserts a zero bit at position `bit` of `value`.
inline constexpr std::size_t insert_zero_bit(std::size_t value, std::size_t bit) {
    const std::size_t low = value & ((std::size_t{1} << bit) - 1);
    return low | ((value >> bit) << (bit + 1));
}

/// Inserts zero bits at positions lo < hi.
inline constexpr std::size_t insert_two_zero_bits(std::size_t value, std::size_t lo, std::size_t hi) {
    return insert_zero_bit(insert_zero_bit(value, lo), hi);
}

}  // namespace q2sim
