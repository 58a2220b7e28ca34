#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace q2sim {

using Complex = std::complex<double>;

enum class GateKind { I, X, Y, Z, H, S, Sdg, CZ, CNOT, SWAP };

enum class Basis { X, Y, Z };

inline constexpr std::size_t gate_arity(GateKind k) {
    switch (k) {
        case GateKind::CZ:
        case GateKind::CNOT:
        case GateKind::SWAP:
            return 2;
        default:
            return 1;
    }
}

inline constexpr std::string_view gate_name(GateKind k) {
    switch (k) {
        case GateKind::I: return "I";
        case GateKind::X: return "X";
        case GateKind::Y: return "Y";
        case GateKind::Z: return "Z";
        case GateKind::H: return "H";
        case GateKind::S: return "S";
        case GateKind::Sdg: return "Sdg";
        case GateKind::CZ: return "CZ";
        case GateKind::CNOT: return "CNOT";
        case GateKind::SWAP: return "SWAP";
    }
    return "?";
}

inline GateKind parse_gate(std::string_view name) {
    for (GateKind k : {GateKind::I, GateKind::X, GateKind::Y, GateKind::Z, GateKind::H, GateKind::S, GateKind::Sdg,
                       GateKind::CZ, GateKind::CNOT, GateKind::SWAP}) {
        if (gate_name(k) == name) {
            return k;
        }
    }
    throw std::invalid_argument("unknown gate '" + std::string(name) + "'");
}

inline constexpr std::string_view basis_name(Basis b) {
    switch (b) {
        case Basis::X: return "X";
        case Basis::Y: return "Y";
        case Basis::Z: return "Z";
    }
    return "?";
}

inline Basis parse_basis(std::string_view name) {
    if (name == "X" || name == "x") return Basis::X;
    if (name == "Y" || name == "y") return Basis::Y;
    if (name == "Z" || name == "z") return Basis::Z;
    throw std::invalid_argument("invalid measurement basis '" + std::string(name) + "'");
}

/// A Clifford gate on explicit qubit indices. For CNOT, targets[0] is the control.
struct Gate {
    GateKind kind = GateKind::I;
    std::vector<std::size_t> targets;

    Gate() = default;
    Gate(GateKind k, std::initializer_list<std::size_t> t) : kind(k), targets(t) {}
    Gate(GateKind k, std::vector<std::size_t> t) : kind(k), targets(std::move(t)) {}

    friend bool operator==(const Gate&, const Gate&) = default;
};

/// 2x2 unitary for a single-qubit gate, row-major.
using Mat2 = std::array<Complex, 4>;

inline Mat2 single_qubit_matrix(GateKind k) {
    constexpr double r = 0.70710678118654752440;
    const Complex i{0.0, 1.0};
    switch (k) {
        case GateKind::I: return {1, 0, 0, 1};
        case GateKind::X: return {0, 1, 1, 0};
        case GateKind::Y: return {0, -i, i, 0};
        case GateKind::Z: return {1, 0, 0, -1};
        case GateKind::H: return {r, r, r, -r};
        case GateKind::S: return {1, 0, 0, i};
        case GateKind::Sdg: return {1, 0, 0, -i};
        default:
            throw std::invalid_argument("single_qubit_matrix: not a single-qubit gate");
    }
}

inline void check_gate(const Gate& g, std::size_t n) {
    if (g.targets.size() != gate_arity(g.kind)) {
        throw std::invalid_argument("gate " + std::string(gate_name(g.kind)) + " expects " +
                                    std::to_string(gate_arity(g.kind)) + " targets, got " +
                                    std::to_string(g.targets.size()));
    }
    for (std::size_t t : g.targets) {
        if (t >= n) {
            throw std::out_of_range("gate target " + std::to_string(t) + " out of range for " + std::to_string(n) +
                                    " qubits");
        }
    }
    if (g.targets.size() == 2 && g.targets[0] == g.targets[1]) {
        throw std::invalid_argument("two-qubit gate with repeated target");
    }
}

}  // namespace q2sim
