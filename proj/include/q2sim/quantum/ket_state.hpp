#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <cstddef>
#include <memory>
#include <numbers>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "q2sim/quantum/state.hpp"

namespace q2sim {

/// State-vector backend: 2^n complex amplitudes.
class KetState final : public QuantumState {
  public:
    /// |0...0> on n qubits.
    explicit KetState(std::size_t n) : n_(n), amps_(std::size_t{1} << n) { amps_[0] = 1.0; }

    explicit KetState(std::vector<Complex> amplitudes) : amps_(std::move(amplitudes)) {
        const std::size_t dim = amps_.size();
        if (dim == 0 || (dim & (dim - 1)) != 0) {
            throw std::invalid_argument("KetState: amplitude count must be a power of two");
        }
        n_ = static_cast<std::size_t>(std::countr_zero(dim));
    }

    static KetState plus(std::size_t n) {
        KetState s(n);
        const double a = std::pow(2.0, -0.5 * static_cast<double>(n));
        std::fill(s.amps_.begin(), s.amps_.end(), Complex{a, 0.0});
        return s;
    }

    Backend backend() const override { return Backend::Ket; }
    std::size_t num_qubits() const override { return n_; }
    std::unique_ptr<QuantumState> clone() const override { return std::make_unique<KetState>(*this); }

    std::span<const Complex> amplitudes() const { return amps_; }

    double norm_squared() const {
        double s = 0.0;
        for (const Complex& a : amps_) {
            s += std::norm(a);
        }
        return s;
    }

    void apply_gate(const Gate& g) override {
        check_gate(g, n_);
        switch (g.kind) {
            case GateKind::I:
                return;
            case GateKind::X:
                for_pairs(g.targets[0], [](Complex& a0, Complex& a1) { std::swap(a0, a1); });
                return;
            case GateKind::Z:
                for_pairs(g.targets[0], [](Complex&, Complex& a1) { a1 = -a1; });
                return;
            case GateKind::S:
                for_pairs(g.targets[0], [](Complex&, Complex& a1) { a1 = Complex{-a1.imag(), a1.real()}; });
                return;
            case GateKind::Sdg:
                for_pairs(g.targets[0], [](Complex&, Complex& a1) { a1 = Complex{a1.imag(), -a1.real()}; });
                return;
            case GateKind::Y:
                for_pairs(g.targets[0], [](Complex& a0, Complex& a1) {
                    const Complex t = a0;
                    a0 = Complex{a1.imag(), -a1.real()};  // -i * a1
                    a1 = Complex{-t.imag(), t.real()};    //  i * a0
                });
                return;
            case GateKind::H:
                for_pairs(g.targets[0], [](Complex& a0, Complex& a1) {
                    constexpr double r = 0.70710678118654752440;
                    const Complex t = a0;
                    a0 = r * (t + a1);
                    a1 = r * (t - a1);
                });
                return;
            case GateKind::CZ:
                for_quads(g.targets[0], g.targets[1], [](std::size_t base, std::size_t ma, std::size_t mb, auto& v) {
                    v[base | ma | mb] = -v[base | ma | mb];
                });
                return;
            case GateKind::CNOT:
                for_quads(g.targets[0], g.targets[1], [](std::size_t base, std::size_t mc, std::size_t mt, auto& v) {
                    std::swap(v[base | mc], v[base | mc | mt]);
                });
                return;
            case GateKind::SWAP:
                for_quads(g.targets[0], g.targets[1], [](std::size_t base, std::size_t ma, std::size_t mb, auto& v) {
                    std::swap(v[base | ma], v[base | mb]);
                });
                return;
        }
    }

    void apply_cz_layer(const std::vector<Edge>& edges) override {
        for (const auto& [u, v] : edges) check_gate(Gate{GateKind::CZ, {u, v}}, n_);
        if (edges.empty()) return;
        CzLayerParity parity(n_, edges);
        const std::size_t block = std::size_t{1} << parity.low_bits();
        for (std::size_t base = 0, hi = 0; base < amps_.size(); base += block, ++hi) {
            parity.begin_block(hi);
            for (std::size_t lo = 0; lo < block; ++lo) {
                if (parity.parity_in_block(lo)) amps_[base | lo] = -amps_[base | lo];
            }
        }
    }

    double probability_zero(std::size_t q, Basis basis) const override {
        check_qubit(q);
        const std::size_t m = std::size_t{1} << q;
        const std::size_t half = amps_.size() >> 1;
        double p0 = 0.0;
        for (std::size_t k = 0; k < half; ++k) {
            const std::size_t i0 = insert_zero_bit(k, q);
            const Complex a0 = amps_[i0];
            const Complex a1 = amps_[i0 | m];
            switch (basis) {
                case Basis::Z: p0 += std::norm(a0); break;
                case Basis::X: p0 += 0.5 * std::norm(a0 + a1); break;
                case Basis::Y: p0 += 0.5 * std::norm(a0 - Complex{0, 1} * a1); break;
            }
        }
        return p0;
    }

    int collapse(std::size_t q, Basis basis, double u) override {
        check_qubit(q);
        to_z_basis(q, basis);
        const double p0 = probability_zero(q, Basis::Z);
        const int outcome = (u < p0) ? 0 : 1;
        const double keep = outcome == 0 ? p0 : 1.0 - p0;
        const double scale = 1.0 / std::sqrt(keep);
        for_pairs(q, [&](Complex& a0, Complex& a1) {
            if (outcome == 0) {
                a0 *= scale;
                a1 = 0.0;
            } else {
                a0 = 0.0;
                a1 *= scale;
            }
        });
        from_z_basis(q, basis);
        return outcome;
    }

    void discard(std::size_t q) override {
        check_qubit(q);
        // Reduced state of q; a pure reduced state means q factors out.
        const std::size_t m = std::size_t{1} << q;
        const std::size_t half = amps_.size() >> 1;
        double r00 = 0.0, r11 = 0.0;
        Complex r01 = 0.0;
        for (std::size_t k = 0; k < half; ++k) {
            const std::size_t i0 = insert_zero_bit(k, q);
            const Complex a0 = amps_[i0], a1 = amps_[i0 | m];
            r00 += std::norm(a0);
            r11 += std::norm(a1);
            r01 += a0 * std::conj(a1);
        }
        const double purity = r00 * r00 + r11 * r11 + 2.0 * std::norm(r01);
        if (purity < 1.0 - 1e-9) {
            throw std::logic_error("discard: qubit " + std::to_string(q) +
                                   " is entangled with the rest of the state (ket backend)");
        }
        // Dominant eigenvector phi of the reduced state; rest_k = sum_b conj(phi_b) psi_{b,k}.
        Complex phi0, phi1;
        if (r00 >= r11) {
            phi0 = std::sqrt(r00);
            phi1 = std::conj(r01) / phi0;
        } else {
            phi1 = std::sqrt(r11);
            phi0 = r01 / phi1;
        }
        std::vector<Complex> rest(half);
        double norm = 0.0;
        for (std::size_t k = 0; k < half; ++k) {
            const std::size_t i0 = insert_zero_bit(k, q);
            rest[k] = std::conj(phi0) * amps_[i0] + std::conj(phi1) * amps_[i0 | m];
            norm += std::norm(rest[k]);
        }
        const double scale = 1.0 / std::sqrt(norm);
        for (Complex& a : rest) {
            a *= scale;
        }
        amps_ = std::move(rest);
        --n_;
    }

    /// Two passes: the Born probability, then the projection of q onto the
    /// outcome eigenvector (real first component, as discard() picks it).
    int measure_and_discard(std::size_t q, Basis basis, double u) override {
        const double p0 = probability_zero(q, basis);
        const int outcome = u < p0 ? 0 : 1;
        const double scale = 1.0 / std::sqrt(outcome == 0 ? p0 : 1.0 - p0);
        const double r = scale / std::numbers::sqrt2;
        Complex c0, c1;
        switch (basis) {
            case Basis::Z:
                c0 = outcome == 0 ? scale : 0.0;
                c1 = outcome == 0 ? 0.0 : scale;
                break;
            case Basis::X:
                c0 = r;
                c1 = outcome == 0 ? r : -r;
                break;
            case Basis::Y:
                c0 = r;
                c1 = outcome == 0 ? Complex{0, -r} : Complex{0, r};
                break;
        }
        // In place: slot k is written only after every read at index >= k.
        const std::size_t m = std::size_t{1} << q;
        const std::size_t half = amps_.size() >> 1;
        for (std::size_t k = 0; k < half; ++k) {
            const std::size_t i0 = insert_zero_bit(k, q);
            amps_[k] = c0 * amps_[i0] + c1 * amps_[i0 | m];
        }
        amps_.resize(half);
        --n_;
        return outcome;
    }

    std::unique_ptr<QuantumState> tensor(const QuantumState& other) const override {
        check_same_backend(other);
        const auto& b = static_cast<const KetState&>(other);
        std::vector<Complex> out(amps_.size() * b.amps_.size());
        for (std::size_t ib = 0; ib < b.amps_.size(); ++ib) {
            for (std::size_t ia = 0; ia < amps_.size(); ++ia) {
                out[ia | (ib << n_)] = amps_[ia] * b.amps_[ib];
            }
        }
        return std::make_unique<KetState>(std::move(out));
    }

    double fidelity(std::span<const Complex> reference) const override {
        check_reference(reference);
        Complex overlap = 0.0;
        for (std::size_t i = 0; i < amps_.size(); ++i) {
            overlap += std::conj(reference[i]) * amps_[i];
        }
        return std::clamp(std::norm(overlap), 0.0, 1.0);
    }

    double pauli_expectation(const PauliString& p) const override {
        if (p.ops.size() != n_) {
            throw std::invalid_argument("pauli_expectation: length mismatch");
        }
        KetState applied(*this);
        for (std::size_t q = 0; q < n_; ++q) {
            switch (p.ops[q]) {
                case 'I': break;
                case 'X': applied.apply_gate({GateKind::X, {q}}); break;
                case 'Y': applied.apply_gate({GateKind::Y, {q}}); break;
                case 'Z': applied.apply_gate({GateKind::Z, {q}}); break;
                default: throw std::invalid_argument("pauli_expectation: bad Pauli letter");
            }
        }
        Complex e = 0.0;
        for (std::size_t i = 0; i < amps_.size(); ++i) {
            e += std::conj(amps_[i]) * applied.amps_[i];
        }
        return p.negative ? -e.real() : e.real();
    }

  private:
    template <class F>
    void for_pairs(std::size_t q, F&& f) {
        const std::size_t m = std::size_t{1} << q;
        const std::size_t dim = amps_.size();
        for (std::size_t hi = 0; hi < dim; hi += 2 * m) {
            for (std::size_t lo = 0; lo < m; ++lo) {
                f(amps_[hi | lo], amps_[hi | lo | m]);
            }
        }
    }

    template <class F>
    void for_quads(std::size_t a, std::size_t b, F&& f) {
        const std::size_t ma = std::size_t{1} << a, mb = std::size_t{1} << b;
        const std::size_t lo = std::min(a, b), hi = std::max(a, b);
        const std::size_t quarter = amps_.size() >> 2;
        for (std::size_t k = 0; k < quarter; ++k) {
            f(insert_two_zero_bits(k, lo, hi), ma, mb, amps_);
        }
    }

    void to_z_basis(std::size_t q, Basis basis) {
        if (basis == Basis::X) {
            apply_gate({GateKind::H, {q}});
        } else if (basis == Basis::Y) {
            apply_gate({GateKind::Sdg, {q}});
            apply_gate({GateKind::H, {q}});
        }
    }

    void from_z_basis(std::size_t q, Basis basis) {
        if (basis == Basis::X) {
            apply_gate({GateKind::H, {q}});
        } else if (basis == Basis::Y) {
            apply_gate({GateKind::H, {q}});
            apply_gate({GateKind::S, {q}});
        }
    }

    std::size_t n_;
    std::vector<Complex> amps_;
};

}  // namespace q2sim
