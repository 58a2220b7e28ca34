#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "q2sim/quantum/state.hpp"

namespace q2sim {

/// Density-matrix backend: a 2^n x 2^n row-major complex matrix.
class DensityMatrixState final : public QuantumState {
  public:
    /// |0...0><0...0| on n qubits.
    explicit DensityMatrixState(std::size_t n) : n_(n), dim_(std::size_t{1} << n), rho_(dim_ * dim_) { rho_[0] = 1.0; }

    static DensityMatrixState from_ket(std::span<const Complex> psi) {
        const std::size_t dim = psi.size();
        if (dim == 0 || (dim & (dim - 1)) != 0) {
            throw std::invalid_argument("DensityMatrixState: amplitude count must be a power of two");
        }
        DensityMatrixState s(static_cast<std::size_t>(std::countr_zero(dim)));
        for (std::size_t r = 0; r < dim; ++r) {
            for (std::size_t c = 0; c < dim; ++c) {
                s.rho_[r * dim + c] = psi[r] * std::conj(psi[c]);
            }
        }
        return s;
    }

    static DensityMatrixState plus(std::size_t n) {
        DensityMatrixState s(n);
        const double v = 1.0 / static_cast<double>(s.dim_);
        std::fill(s.rho_.begin(), s.rho_.end(), Complex{v, 0.0});
        return s;
    }

    Backend backend() const override { return Backend::DensityMatrix; }
    std::size_t num_qubits() const override { return n_; }
    std::unique_ptr<QuantumState> clone() const override { return std::make_unique<DensityMatrixState>(*this); }

    std::size_t dimension() const { return dim_; }
    Complex element(std::size_t row, std::size_t col) const { return rho_[row * dim_ + col]; }

    double trace() const {
        double t = 0.0;
        for (std::size_t i = 0; i < dim_; ++i) {
            t += rho_[i * dim_ + i].real();
        }
        return t;
    }

    /// Largest |rho - rho^dagger| entry.
    double hermiticity_error() const {
        double worst = 0.0;
        for (std::size_t r = 0; r < dim_; ++r) {
            for (std::size_t c = r; c < dim_; ++c) {
                worst = std::max(worst, std::abs(rho_[r * dim_ + c] - std::conj(rho_[c * dim_ + r])));
            }
        }
        return worst;
    }

    void apply_gate(const Gate& g) override {
        check_gate(g, n_);
        switch (g.kind) {
            case GateKind::I:
                return;
            case GateKind::CZ: {
                const std::size_t mask = (std::size_t{1} << g.targets[0]) | (std::size_t{1} << g.targets[1]);
                for (std::size_t r = 0; r < dim_; ++r) {
                    const bool sr = (r & mask) == mask;
                    Complex* row = &rho_[r * dim_];
                    for (std::size_t c = 0; c < dim_; ++c) {
                        if (sr != ((c & mask) == mask)) {
                            row[c] = -row[c];
                        }
                    }
                }
                return;
            }
            case GateKind::CNOT: {
                const std::size_t mc = std::size_t{1} << g.targets[0];
                const std::size_t mt = std::size_t{1} << g.targets[1];
                permute([=](std::size_t i) { return (i & mc) ? (i ^ mt) : i; });
                return;
            }
            case GateKind::SWAP: {
                const std::size_t a = g.targets[0], b = g.targets[1];
                permute([=](std::size_t i) {
                    const std::size_t ba = (i >> a) & 1, bb = (i >> b) & 1;
                    return ba == bb ? i : (i ^ (std::size_t{1} << a) ^ (std::size_t{1} << b));
                });
                return;
            }
            default:
                apply_single(g.targets[0], single_qubit_matrix(g.kind));
                return;
        }
    }

    /// rho[r][c] picks up sign(r) * sign(c).
    void apply_cz_layer(const std::vector<Edge>& edges) override {
        for (const auto& [u, v] : edges) check_gate(Gate{GateKind::CZ, {u, v}}, n_);
        if (edges.empty()) return;
        CzLayerParity parity(n_, edges);
        std::vector<std::uint8_t> sign(dim_);
        const std::size_t block = std::size_t{1} << parity.low_bits();
        for (std::size_t base = 0, hi = 0; base < dim_; base += block, ++hi) {
            parity.begin_block(hi);
            for (std::size_t lo = 0; lo < block; ++lo) sign[base | lo] = parity.parity_in_block(lo);
        }
        for (std::size_t r = 0; r < dim_; ++r) {
            Complex* row = &rho_[r * dim_];
            const std::uint8_t sr = sign[r];
            for (std::size_t c = 0; c < dim_; ++c) {
                if (sr != sign[c]) row[c] = -row[c];
            }
        }
    }

    double probability_zero(std::size_t q, Basis basis) const override {
        check_qubit(q);
        const std::size_t m = std::size_t{1} << q;
        double p0 = 0.0;
        for (std::size_t k = 0; k < dim_ / 2; ++k) {
            const std::size_t r0 = insert_zero_bit(k, q), r1 = r0 | m;
            const Complex d0 = rho_[r0 * dim_ + r0], d1 = rho_[r1 * dim_ + r1];
            const Complex o01 = rho_[r0 * dim_ + r1], o10 = rho_[r1 * dim_ + r0];
            switch (basis) {
                case Basis::Z: p0 += d0.real(); break;
                case Basis::X: p0 += 0.5 * (d0 + d1 + o01 + o10).real(); break;
                case Basis::Y: p0 += 0.5 * (d0 + d1 + Complex{0, 1} * o01 - Complex{0, 1} * o10).real(); break;
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
        const double scale = 1.0 / keep;
        const std::size_t m = std::size_t{1} << q;
        const std::size_t want = outcome ? m : 0;
        for (std::size_t r = 0; r < dim_; ++r) {
            Complex* row = &rho_[r * dim_];
            const bool row_ok = (r & m) == want;
            for (std::size_t c = 0; c < dim_; ++c) {
                row[c] = (row_ok && (c & m) == want) ? row[c] * scale : Complex{};
            }
        }
        from_z_basis(q, basis);
        return outcome;
    }

    /// Partial trace over the qubit; always allowed for mixed states.
    void discard(std::size_t q) override {
        check_qubit(q);
        const std::size_t m = std::size_t{1} << q;
        const std::size_t nd = dim_ / 2;
        std::vector<Complex> out(nd * nd);
        for (std::size_t r = 0; r < nd; ++r) {
            const std::size_t r0 = insert_zero_bit(r, q);
            for (std::size_t c = 0; c < nd; ++c) {
                const std::size_t c0 = insert_zero_bit(c, q);
                out[r * nd + c] = rho_[r0 * dim_ + c0] + rho_[(r0 | m) * dim_ + (c0 | m)];
            }
        }
        rho_ = std::move(out);
        dim_ = nd;
        --n_;
    }

    /// One pass: rho' = <e|rho|e> / p for the outcome eigenvector e of q.
    int measure_and_discard(std::size_t q, Basis basis, double u) override {
        const double p0 = probability_zero(q, basis);
        const int outcome = u < p0 ? 0 : 1;
        const double inv = 1.0 / (outcome == 0 ? p0 : 1.0 - p0);
        // w[a][b] = conj(e_a) e_b / p
        Complex w[2][2] = {};
        if (basis == Basis::Z) {
            w[outcome][outcome] = inv;
        } else {
            const Complex e1 = basis == Basis::X ? Complex{outcome == 0 ? 1.0 : -1.0, 0.0}
                                                 : Complex{0.0, outcome == 0 ? 1.0 : -1.0};
            w[0][0] = w[1][1] = 0.5 * inv;
            w[0][1] = 0.5 * inv * e1;
            w[1][0] = 0.5 * inv * std::conj(e1);
        }
        const std::size_t m = std::size_t{1} << q;
        const std::size_t nd = dim_ / 2;
        // In place: every read of output slot k sits at an index >= k.
        for (std::size_t r = 0; r < nd; ++r) {
            const std::size_t r0 = insert_zero_bit(r, q);
            const Complex* row0 = &rho_[r0 * dim_];
            const Complex* row1 = &rho_[(r0 | m) * dim_];
            Complex* out = &rho_[r * nd];
            if (basis == Basis::Z) {
                const Complex* row = outcome ? row1 : row0;
                const std::size_t bit = outcome ? m : 0;
                for (std::size_t c = 0; c < nd; ++c) out[c] = inv * row[insert_zero_bit(c, q) | bit];
            } else {
                for (std::size_t c = 0; c < nd; ++c) {
                    const std::size_t c0 = insert_zero_bit(c, q);
                    out[c] = w[0][0] * row0[c0] + w[0][1] * row0[c0 | m] + w[1][0] * row1[c0] + w[1][1] * row1[c0 | m];
                }
            }
        }
        rho_.resize(nd * nd);
        dim_ = nd;
        --n_;
        return outcome;
    }

    std::unique_ptr<QuantumState> tensor(const QuantumState& other) const override {
        check_same_backend(other);
        const auto& b = static_cast<const DensityMatrixState&>(other);
        auto out = std::make_unique<DensityMatrixState>(n_ + b.n_);
        const std::size_t d = out->dim_;
        for (std::size_t rb = 0; rb < b.dim_; ++rb) {
            for (std::size_t cb = 0; cb < b.dim_; ++cb) {
                const Complex vb = b.rho_[rb * b.dim_ + cb];
                for (std::size_t ra = 0; ra < dim_; ++ra) {
                    for (std::size_t ca = 0; ca < dim_; ++ca) {
                        out->rho_[(ra | (rb << n_)) * d + (ca | (cb << n_))] = rho_[ra * dim_ + ca] * vb;
                    }
                }
            }
        }
        return out;
    }

    double fidelity(std::span<const Complex> reference) const override {
        check_reference(reference);
        Complex f = 0.0;
        for (std::size_t r = 0; r < dim_; ++r) {
            Complex row_sum = 0.0;
            for (std::size_t c = 0; c < dim_; ++c) {
                row_sum += rho_[r * dim_ + c] * reference[c];
            }
            f += std::conj(reference[r]) * row_sum;
        }
        return std::clamp(f.real(), 0.0, 1.0);
    }

    double pauli_expectation(const PauliString& p) const override {
        if (p.ops.size() != n_) {
            throw std::invalid_argument("pauli_expectation: length mismatch");
        }
        // Tr(P rho) = sum_c <c|P rho|c>; P|r> = phase(r) |r ^ xmask>, so
        // Tr(P rho) = sum_r phase(r) rho[r][r ^ xmask].
        std::size_t xmask = 0, zmask = 0;
        int ys = 0;
        for (std::size_t q = 0; q < n_; ++q) {
            const char o = p.ops[q];
            if (o == 'X' || o == 'Y') xmask |= std::size_t{1} << q;
            if (o == 'Z' || o == 'Y') zmask |= std::size_t{1} << q;
            if (o == 'Y') ++ys;
        }
        static const Complex kIPow[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
        Complex total = 0.0;
        for (std::size_t r = 0; r < dim_; ++r) {
            const double sign = (std::popcount(r & zmask) & 1) ? -1.0 : 1.0;
            // <c|P|r> nonzero only for c = r ^ xmask; Tr(P rho) = sum_r <r|P rho|r> = sum_{r} sum_k P[r][k] rho[k][r].
            const std::size_t c = r ^ xmask;
            total += sign * rho_[r * dim_ + c];
        }
        total *= kIPow[ys & 3];
        return p.negative ? -total.real() : total.real();
    }

    void apply_depolarizing(std::size_t q, double p, RngStream&) override {
        check_probability(p);
        check_qubit(q);
        const std::size_t m = std::size_t{1} << q;
        const double keep = 1.0 - p;
        for (std::size_t r = 0; r < dim_; ++r) {
            if (r & m) continue;
            const std::size_t r1 = r | m;
            for (std::size_t c = 0; c < dim_; ++c) {
                if (c & m) continue;
                const std::size_t c1 = c | m;
                Complex& a = rho_[r * dim_ + c];
                Complex& d = rho_[r1 * dim_ + c1];
                const Complex avg = 0.5 * (a + d);
                a = keep * a + p * avg;
                d = keep * d + p * avg;
                rho_[r * dim_ + c1] *= keep;
                rho_[r1 * dim_ + c] *= keep;
            }
        }
    }

  private:
    void apply_single(std::size_t q, const Mat2& u) {
        const std::size_t m = std::size_t{1} << q;
        // rho <- U rho
        for (std::size_t r = 0; r < dim_; ++r) {
            if (r & m) continue;
            Complex* row0 = &rho_[r * dim_];
            Complex* row1 = &rho_[(r | m) * dim_];
            for (std::size_t c = 0; c < dim_; ++c) {
                const Complex a = row0[c], b = row1[c];
                row0[c] = u[0] * a + u[1] * b;
                row1[c] = u[2] * a + u[3] * b;
            }
        }
        // rho <- rho U^dagger
        const Complex c00 = std::conj(u[0]), c01 = std::conj(u[1]), c10 = std::conj(u[2]), c11 = std::conj(u[3]);
        for (std::size_t r = 0; r < dim_; ++r) {
            Complex* row = &rho_[r * dim_];
            for (std::size_t c = 0; c < dim_; ++c) {
                if (c & m) continue;
                const Complex a = row[c], b = row[c | m];
                row[c] = a * c00 + b * c01;
                row[c | m] = a * c10 + b * c11;
            }
        }
    }

    /// rho'[r][c] = rho[perm(r)][perm(c)] for an involutive permutation.
    template <class Perm>
    void permute(Perm perm) {
        for (std::size_t r = 0; r < dim_; ++r) {
            const std::size_t pr = perm(r);
            for (std::size_t c = 0; c < dim_; ++c) {
                const std::size_t pc = perm(c);
                const std::size_t from = pr * dim_ + pc, to = r * dim_ + c;
                if (from > to) {
                    std::swap(rho_[from], rho_[to]);
                }
            }
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
    std::size_t dim_;
    std::vector<Complex> rho_;
};

}  // namespace q2sim
