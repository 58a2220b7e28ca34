#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "q2sim/quantum/state.hpp"

namespace q2sim {

/// Stabilizer backend: destabilizer/stabilizer generator tableau.
///
/// Rows 0..n-1 hold destabilizers and rows n..2n-1 stabilizers; each row is
/// a bit-packed Pauli (x, z) plus a sign bit, where (1,1) denotes Y.
/// Gates conjugate every row in O(n). A single-qubit measurement costs
/// O(n^2 / 64) word operations and removing a qubit compacts the tableau,
/// also O(n^2 / 64).
class StabilizerState final : public QuantumState {
  public:
    /// |0...0>: destabilizers X_i, stabilizers Z_i.
    explicit StabilizerState(std::size_t n) { reset(n, false); }

    static StabilizerState plus(std::size_t n) {
        StabilizerState s(0);
        s.reset(n, true);
        return s;
    }

    Backend backend() const override { return Backend::Stabilizer; }
    std::size_t num_qubits() const override { return n_; }
    std::unique_ptr<QuantumState> clone() const override { return std::make_unique<StabilizerState>(*this); }

    /// Approximate heap footprint of the tableau.
    std::size_t tableau_bytes() const { return (xs_.size() + zs_.size()) * sizeof(Word) + signs_.size(); }

    /// Stabilizer generator k as a signed Pauli string.
    PauliString stabilizer(std::size_t k) const { return row_to_pauli(n_ + k); }
    PauliString destabilizer(std::size_t k) const { return row_to_pauli(k); }

    void apply_gate(const Gate& g) override {
        check_gate(g, n_);
        const std::size_t rows = 2 * n_;
        switch (g.kind) {
            case GateKind::I:
                return;
            case GateKind::X: {
                const std::size_t q = g.targets[0];
                for (std::size_t r = 0; r < rows; ++r) signs_[r] ^= zbit(r, q);
                return;
            }
            case GateKind::Z: {
                const std::size_t q = g.targets[0];
                for (std::size_t r = 0; r < rows; ++r) signs_[r] ^= xbit(r, q);
                return;
            }
            case GateKind::Y: {
                const std::size_t q = g.targets[0];
                for (std::size_t r = 0; r < rows; ++r) signs_[r] ^= xbit(r, q) ^ zbit(r, q);
                return;
            }
            case GateKind::H: {
                const std::size_t q = g.targets[0];
                for (std::size_t r = 0; r < rows; ++r) {
                    const bool x = xbit(r, q), z = zbit(r, q);
                    signs_[r] ^= x & z;
                    set_x(r, q, z);
                    set_z(r, q, x);
                }
                return;
            }
            case GateKind::S: {
                const std::size_t q = g.targets[0];
                for (std::size_t r = 0; r < rows; ++r) {
                    const bool x = xbit(r, q), z = zbit(r, q);
                    signs_[r] ^= x & z;
                    set_z(r, q, z ^ x);
                }
                return;
            }
            case GateKind::Sdg: {
                const std::size_t q = g.targets[0];
                for (std::size_t r = 0; r < rows; ++r) {
                    const bool x = xbit(r, q), z = zbit(r, q);
                    signs_[r] ^= x & !z;
                    set_z(r, q, z ^ x);
                }
                return;
            }
            case GateKind::CNOT: {
                const std::size_t a = g.targets[0], b = g.targets[1];
                for (std::size_t r = 0; r < rows; ++r) {
                    const bool xa = xbit(r, a), za = zbit(r, a), xb = xbit(r, b), zb = zbit(r, b);
                    signs_[r] ^= xa & zb & (xb ^ za ^ true);
                    set_x(r, b, xb ^ xa);
                    set_z(r, a, za ^ zb);
                }
                return;
            }
            case GateKind::CZ: {
                const std::size_t a = g.targets[0], b = g.targets[1];
                for (std::size_t r = 0; r < rows; ++r) {
                    const bool xa = xbit(r, a), za = zbit(r, a), xb = xbit(r, b), zb = zbit(r, b);
                    signs_[r] ^= xa & xb & (za ^ zb);
                    set_z(r, a, za ^ xb);
                    set_z(r, b, zb ^ xa);
                }
                return;
            }
            case GateKind::SWAP: {
                const std::size_t a = g.targets[0], b = g.targets[1];
                for (std::size_t r = 0; r < rows; ++r) {
                    const bool xa = xbit(r, a), za = zbit(r, a), xb = xbit(r, b), zb = zbit(r, b);
                    set_x(r, a, xb);
                    set_z(r, a, zb);
                    set_x(r, b, xa);
                    set_z(r, b, za);
                }
                return;
            }
        }
    }

    /// Same updates as gate-by-gate CZ, with the loops interchanged so each
    /// row stays in cache while every edge is applied to it.
    void apply_cz_layer(const std::vector<Edge>& edges) override {
        for (const auto& [u, v] : edges) check_gate(Gate{GateKind::CZ, {u, v}}, n_);
        // CZs commute, so each row only needs the edges touching its X support.
        std::vector<std::vector<std::size_t>> adj(n_);
        for (const auto& [u, v] : edges) {
            adj[u].push_back(v);
            adj[v].push_back(u);
        }
        for (std::size_t r = 0; r < 2 * n_; ++r) {
            const Word* x = &xs_[r * words_];
            Word* z = &zs_[r * words_];
            std::uint8_t sign = signs_[r];
            for (std::size_t w = 0; w < words_; ++w) {
                for (Word bits = x[w]; bits != 0; bits &= bits - 1) {
                    const std::size_t a = w * 64 + static_cast<std::size_t>(std::countr_zero(bits));
                    for (const std::size_t b : adj[a]) {
                        const bool xb = (x[b / 64] >> (b % 64)) & 1;
                        if (xb && b < a) continue;  // already handled from b
                        const bool za = (z[a / 64] >> (a % 64)) & 1, zb = (z[b / 64] >> (b % 64)) & 1;
                        sign ^= xb & (za ^ zb);
                        z[a / 64] ^= static_cast<Word>(xb) << (a % 64);
                        z[b / 64] ^= Word{1} << (b % 64);
                    }
                }
            }
            signs_[r] = sign;
        }
    }

    double probability_zero(std::size_t q, Basis basis) const override {
        check_qubit(q);
        const auto det = deterministic_outcome(single_qubit_row(q, basis));
        if (!det) return 0.5;
        return *det == 0 ? 1.0 : 0.0;
    }

    int collapse(std::size_t q, Basis basis, double u) override {
        check_qubit(q);
        to_z_basis(q, basis);
        const int outcome = collapse_z(q, u);
        from_z_basis(q, basis);
        return outcome;
    }

    /// Removes a qubit that is an eigenstate of X, Y or Z; otherwise throws.
    void discard(std::size_t q) override {
        check_qubit(q);
        if (has_stab_with(q, true, false)) {
            if (!has_stab_with(q, false, true)) {
                apply_gate({GateKind::H, {q}});
            } else if (!has_stab_with_y_anticommuting(q)) {
                apply_gate({GateKind::Sdg, {q}});
                apply_gate({GateKind::H, {q}});
            } else {
                throw std::logic_error("discard: qubit " + std::to_string(q) +
                                       " is entangled with the rest of the state (stab backend)");
            }
        }
        // Now +-Z_q is in the stabilizer group and no stabilizer has X on q.
        std::vector<std::size_t> support;
        for (std::size_t i = 0; i < n_; ++i) {
            if (xbit(i, q)) support.push_back(i);
        }
        const std::size_t p = support.front();
        for (std::size_t k = 1; k < support.size(); ++k) {
            const std::size_t j = support[k];
            mul_into(n_ + p, n_ + j);
            mul_into(j, p);
        }
        // Row n+p is now exactly +-Z_q; strip Z_q from the other stabilizers.
        for (std::size_t k = 0; k < n_; ++k) {
            if (k != p && zbit(n_ + k, q)) {
                mul_into(n_ + k, n_ + p);
            }
        }
        remove_row_pair_and_column(p, q);
    }

    std::unique_ptr<QuantumState> tensor(const QuantumState& other) const override {
        check_same_backend(other);
        const auto& b = static_cast<const StabilizerState&>(other);
        auto out = std::make_unique<StabilizerState>(0);
        const std::size_t n = n_ + b.n_;
        out->allocate(n);
        for (std::size_t k = 0; k < n_; ++k) {
            out->copy_row_from(k, *this, k, 0);
            out->copy_row_from(n + k, *this, n_ + k, 0);
        }
        for (std::size_t k = 0; k < b.n_; ++k) {
            out->copy_row_from(n_ + k, b, k, n_);
            out->copy_row_from(n + n_ + k, b, b.n_ + k, n_);
        }
        return out;
    }

    /// Amplitudes of the state (up to global phase); limited to small n.
    std::vector<Complex> to_amplitudes(std::size_t max_qubits = default_limits().stab_ket_conversion_max) const {
        if (n_ > max_qubits || n_ >= 64) {
            throw CapacityError("stab to ket conversion is limited to " + std::to_string(max_qubits) +
                                " qubits (state has " + std::to_string(n_) + ")");
        }
        // A basis state in the support: force outcome 0 whenever a Z measurement is random.
        StabilizerState probe(*this);
        std::uint64_t support = 0;
        for (std::size_t q = 0; q < n_; ++q) {
            if (probe.collapse_z(q, 0.0)) support |= std::uint64_t{1} << q;
        }
        const std::size_t dim = std::size_t{1} << n_;
        std::vector<Complex> psi(dim), next(dim);
        psi[support] = 1.0;
        static const Complex kIPow[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
        for (std::size_t k = 0; k < n_; ++k) {
            const std::size_t r = n_ + k;
            std::uint64_t xm = 0, zm = 0;
            int ys = 0;
            for (std::size_t q = 0; q < n_; ++q) {
                if (xbit(r, q)) xm |= std::uint64_t{1} << q;
                if (zbit(r, q)) zm |= std::uint64_t{1} << q;
                if (xbit(r, q) && zbit(r, q)) ++ys;
            }
            const Complex base = kIPow[ys & 3] * (signs_[r] ? -1.0 : 1.0);
            // next = (psi + P psi) / 2 with P|i> = base (-1)^{|i & z|} |i ^ x>.
            for (std::size_t i = 0; i < dim; ++i) next[i] = 0.5 * psi[i];
            for (std::size_t i = 0; i < dim; ++i) {
                if (psi[i] == Complex{}) continue;
                const double s = (std::popcount(i & zm) & 1) ? -1.0 : 1.0;
                next[i ^ xm] += 0.5 * s * base * psi[i];
            }
            psi.swap(next);
        }
        double norm = 0.0;
        for (const Complex& a : psi) norm += std::norm(a);
        const double scale = 1.0 / std::sqrt(norm);
        for (Complex& a : psi) a *= scale;
        return psi;
    }

    double fidelity(std::span<const Complex> reference) const override {
        check_reference(reference);
        const auto psi = to_amplitudes();
        Complex overlap = 0.0;
        for (std::size_t i = 0; i < psi.size(); ++i) overlap += std::conj(reference[i]) * psi[i];
        return std::clamp(std::norm(overlap), 0.0, 1.0);
    }

    double pauli_expectation(const PauliString& p) const override {
        const auto det = deterministic_outcome(pauli_to_row(p));
        if (!det) return 0.0;
        return *det == 0 ? 1.0 : -1.0;
    }

    /// Measures a multi-qubit Pauli observable; outcome 0 means eigenvalue +1.
    int measure_pauli(const PauliString& p, double u) {
        const Row obs = pauli_to_row(p);
        std::optional<std::size_t> pivot;
        for (std::size_t k = 0; k < n_; ++k) {
            if (anticommutes(n_ + k, obs)) {
                pivot = n_ + k;
                break;
            }
        }
        if (!pivot) {
            return *deterministic_outcome(obs);
        }
        const std::size_t pr = *pivot;
        for (std::size_t r = 0; r < 2 * n_; ++r) {
            if (r != pr && anticommutes(r, obs)) mul_into(r, pr);
        }
        copy_row(pr - n_, pr);
        const int outcome = u < 0.5 ? 0 : 1;
        for (std::size_t w = 0; w < words_; ++w) {
            xs_[pr * words_ + w] = obs.x[w];
            zs_[pr * words_ + w] = obs.z[w];
        }
        signs_[pr] = static_cast<std::uint8_t>(obs.sign ^ outcome);
        return outcome;
    }

    /// Fidelity with the stabilizer state whose generators are `group`:
    /// the probability that measuring every generator returns +1.
    double fidelity_with_stabilizer_group(std::span<const PauliString> group) const {
        StabilizerState probe(*this);
        double f = 1.0;
        for (const PauliString& g : group) {
            const Row obs = probe.pauli_to_row(g);
            const auto det = probe.deterministic_outcome(obs);
            if (det) {
                if (*det != 0) return 0.0;
                continue;
            }
            probe.measure_pauli(g, 0.0);
            f *= 0.5;
        }
        return f;
    }

  private:
    using Word = std::uint64_t;

    struct Row {
        std::vector<Word> x, z;
        std::uint8_t sign = 0;
    };

    void allocate(std::size_t n) {
        n_ = n;
        words_ = (n + 63) / 64;
        xs_.assign(2 * n * words_, 0);
        zs_.assign(2 * n * words_, 0);
        signs_.assign(2 * n, 0);
    }

    void reset(std::size_t n, bool plus) {
        allocate(n);
        for (std::size_t q = 0; q < n; ++q) {
            // |0>: destab X, stab Z. |+>: destab Z, stab X.
            set_x(plus ? n + q : q, q, true);
            set_z(plus ? q : n + q, q, true);
        }
    }

    bool xbit(std::size_t r, std::size_t q) const { return (xs_[r * words_ + q / 64] >> (q % 64)) & 1; }
    bool zbit(std::size_t r, std::size_t q) const { return (zs_[r * words_ + q / 64] >> (q % 64)) & 1; }

    void set_x(std::size_t r, std::size_t q, bool v) { set_bit(xs_[r * words_ + q / 64], q % 64, v); }
    void set_z(std::size_t r, std::size_t q, bool v) { set_bit(zs_[r * words_ + q / 64], q % 64, v); }

    static void set_bit(Word& w, std::size_t b, bool v) {
        const Word m = Word{1} << b;
        w = v ? (w | m) : (w & ~m);
    }

    bool has_stab_with(std::size_t q, bool want_x, bool want_z) const {
        for (std::size_t k = 0; k < n_; ++k) {
            if ((want_x && xbit(n_ + k, q)) || (want_z && zbit(n_ + k, q))) return true;
        }
        return false;
    }

    bool has_stab_with_y_anticommuting(std::size_t q) const {
        for (std::size_t k = 0; k < n_; ++k) {
            if (xbit(n_ + k, q) != zbit(n_ + k, q)) return true;
        }
        return false;
    }

    /// Phase exponent (mod 4, in units of i) picked up by multiplying Paulis a * b.
    static int product_phase(const Word* ax, const Word* az, const Word* bx, const Word* bz, std::size_t words) {
        int count = 0;
        for (std::size_t w = 0; w < words; ++w) {
            const Word x1 = ax[w], z1 = az[w], x2 = bx[w], z2 = bz[w];
            if ((x1 | z1) == 0 || (x2 | z2) == 0) continue;
            const Word X1 = x1 & ~z1, Y1 = x1 & z1, Z1 = ~x1 & z1;
            const Word X2 = x2 & ~z2, Y2 = x2 & z2, Z2 = ~x2 & z2;
            const Word plus = (Y1 & Z2) | (X1 & Y2) | (Z1 & X2);
            const Word minus = (Y1 & X2) | (X1 & Z2) | (Z1 & Y2);
            count += std::popcount(plus) - std::popcount(minus);
        }
        return ((count % 4) + 4) % 4;
    }

    /// row h <- row i * row h.
    void mul_into(std::size_t h, std::size_t i) {
        Word* hx = &xs_[h * words_];
        Word* hz = &zs_[h * words_];
        const Word* ix = &xs_[i * words_];
        const Word* iz = &zs_[i * words_];
        const int phase = product_phase(ix, iz, hx, hz, words_) + 2 * signs_[h] + 2 * signs_[i];
        signs_[h] = static_cast<std::uint8_t>((phase % 4) == 2);
        for (std::size_t w = 0; w < words_; ++w) {
            hx[w] ^= ix[w];
            hz[w] ^= iz[w];
        }
    }

    /// scratch <- row i * scratch.
    void mul_into_scratch(Row& s, std::size_t i) const {
        const Word* ix = &xs_[i * words_];
        const Word* iz = &zs_[i * words_];
        const int phase = product_phase(ix, iz, s.x.data(), s.z.data(), words_) + 2 * s.sign + 2 * signs_[i];
        s.sign = static_cast<std::uint8_t>((phase % 4) == 2);
        for (std::size_t w = 0; w < words_; ++w) {
            s.x[w] ^= ix[w];
            s.z[w] ^= iz[w];
        }
    }

    void copy_row(std::size_t dst, std::size_t src) {
        for (std::size_t w = 0; w < words_; ++w) {
            xs_[dst * words_ + w] = xs_[src * words_ + w];
            zs_[dst * words_ + w] = zs_[src * words_ + w];
        }
        signs_[dst] = signs_[src];
    }

    bool anticommutes(std::size_t r, const Row& p) const {
        int parity = 0;
        for (std::size_t w = 0; w < words_; ++w) {
            parity ^= std::popcount((xs_[r * words_ + w] & p.z[w]) ^ (zs_[r * words_ + w] & p.x[w])) & 1;
        }
        return parity != 0;
    }

    Row single_qubit_row(std::size_t q, Basis basis) const {
        Row r{std::vector<Word>(words_, 0), std::vector<Word>(words_, 0), 0};
        const Word m = Word{1} << (q % 64);
        if (basis != Basis::Z) r.x[q / 64] |= m;
        if (basis != Basis::X) r.z[q / 64] |= m;
        return r;
    }

    Row pauli_to_row(const PauliString& p) const {
        if (p.ops.size() != n_) {
            throw std::invalid_argument("pauli string length " + std::to_string(p.ops.size()) + " != " +
                                        std::to_string(n_));
        }
        Row r{std::vector<Word>(words_, 0), std::vector<Word>(words_, 0), static_cast<std::uint8_t>(p.negative)};
        for (std::size_t q = 0; q < n_; ++q) {
            const char o = p.ops[q];
            const Word m = Word{1} << (q % 64);
            if (o == 'X' || o == 'Y') r.x[q / 64] |= m;
            if (o == 'Z' || o == 'Y') r.z[q / 64] |= m;
            if (o != 'I' && o != 'X' && o != 'Y' && o != 'Z') {
                throw std::invalid_argument("bad Pauli letter in '" + p.ops + "'");
            }
        }
        return r;
    }

    PauliString row_to_pauli(std::size_t r) const {
        PauliString p{signs_[r] != 0, std::string(n_, 'I')};
        for (std::size_t q = 0; q < n_; ++q) {
            const bool x = xbit(r, q), z = zbit(r, q);
            p.ops[q] = x ? (z ? 'Y' : 'X') : (z ? 'Z' : 'I');
        }
        return p;
    }

    /// 0/1 if the observable has a definite value, nullopt if the outcome is random.
    std::optional<int> deterministic_outcome(const Row& obs) const {
        for (std::size_t k = 0; k < n_; ++k) {
            if (anticommutes(n_ + k, obs)) return std::nullopt;
        }
        Row scratch{std::vector<Word>(words_, 0), std::vector<Word>(words_, 0), 0};
        for (std::size_t k = 0; k < n_; ++k) {
            if (anticommutes(k, obs)) mul_into_scratch(scratch, n_ + k);
        }
        return static_cast<int>(scratch.sign ^ obs.sign);
    }

    int collapse_z(std::size_t q, double u) {
        std::optional<std::size_t> pivot;
        for (std::size_t k = 0; k < n_; ++k) {
            if (xbit(n_ + k, q)) {
                pivot = n_ + k;
                break;
            }
        }
        if (!pivot) {
            Row scratch{std::vector<Word>(words_, 0), std::vector<Word>(words_, 0), 0};
            for (std::size_t k = 0; k < n_; ++k) {
                if (xbit(k, q)) mul_into_scratch(scratch, n_ + k);
            }
            return scratch.sign;
        }
        const std::size_t pr = *pivot;
        for (std::size_t r = 0; r < 2 * n_; ++r) {
            if (r != pr && xbit(r, q)) mul_into(r, pr);
        }
        copy_row(pr - n_, pr);
        const int outcome = u < 0.5 ? 0 : 1;
        for (std::size_t w = 0; w < words_; ++w) {
            xs_[pr * words_ + w] = 0;
            zs_[pr * words_ + w] = 0;
        }
        set_z(pr, q, true);
        signs_[pr] = static_cast<std::uint8_t>(outcome);
        return outcome;
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

    /// Copies `src` row into row `dst`, shifting qubit indices up by `offset`.
    void copy_row_from(std::size_t dst, const StabilizerState& src, std::size_t src_row, std::size_t offset) {
        for (std::size_t q = 0; q < src.n_; ++q) {
            if (src.xbit(src_row, q)) set_x(dst, q + offset, true);
            if (src.zbit(src_row, q)) set_z(dst, q + offset, true);
        }
        signs_[dst] = src.signs_[src_row];
    }

    /// Drops destabilizer p, stabilizer p and qubit column q; later indices
    /// shift down. Compacts in place: every write lands at or before the
    /// words it was computed from.
    void remove_row_pair_and_column(std::size_t p, std::size_t q) {
        const std::size_t n = n_ - 1;
        const std::size_t words = (n + 63) / 64;
        std::size_t out = 0;
        for (std::size_t r = 0; r < 2 * n_; ++r) {
            if (r == p || r == n_ + p) continue;
            drop_bit(&xs_[r * words_], &xs_[out * words], q, words);
            drop_bit(&zs_[r * words_], &zs_[out * words], q, words);
            signs_[out] = signs_[r];
            ++out;
        }
        n_ = n;
        words_ = words;
        xs_.resize(2 * n * words);
        zs_.resize(2 * n * words);
        signs_.resize(2 * n);
    }

    /// dst = src with bit q removed (higher bits shift down by one). dst may
    /// alias src as long as dst <= src.
    void drop_bit(const Word* src, Word* dst, std::size_t q, std::size_t dst_words) const {
        const std::size_t wq = q / 64, b = q % 64;
        for (std::size_t w = 0; w < dst_words; ++w) {
            const Word cur = src[w];
            const Word next = w + 1 < words_ ? src[w + 1] : 0;
            Word v;
            if (w < wq) {
                v = cur;
            } else if (w == wq) {
                const Word low = b == 0 ? 0 : (cur & ((Word{1} << b) - 1));
                const Word high = b == 63 ? 0 : ((cur >> (b + 1)) << b);
                v = low | high | ((next & 1) << 63);
            } else {
                v = (cur >> 1) | ((next & 1) << 63);
            }
            dst[w] = v;
        }
    }

    std::size_t n_ = 0;
    std::size_t words_ = 0;
    std::vector<Word> xs_, zs_;
    std::vector<std::uint8_t> signs_;
};

}  // namespace q2sim
