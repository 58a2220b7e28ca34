#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

namespace q2sim {

using Edge = std::pair<std::size_t, std::size_t>;

/// Parity of the number of edges with both endpoints set in a basis index,
/// i.e. the sign a product of CZ gates puts on |i>. Evaluated in O(1) per
/// index by splitting i into a low and a high part:
///   parity(i) = low(lo) ^ high(hi) ^ popcount(lo & cross(hi)) mod 2.
/// Intended for a linear sweep over indices: call begin_block(hi) once per
/// high part, then parity_in_block(lo) for each low part.
class CzLayerParity {
  public:
    CzLayerParity(std::size_t n, const std::vector<Edge>& edges) : n_(n), low_bits_(n < 12 ? n : 12) {
        if (n > 62) throw std::invalid_argument("CzLayerParity: at most 62 qubits");
        nbr_.assign(n, 0);
        for (const auto& [u, v] : edges) {
            if (u >= n || v >= n || u == v) throw std::invalid_argument("CzLayerParity: bad edge");
            // CZ twice is identity, so a repeated edge toggles.
            nbr_[u] ^= std::uint64_t{1} << v;
            nbr_[v] ^= std::uint64_t{1} << u;
        }
        const std::size_t low_dim = std::size_t{1} << low_bits_;
        low_parity_.resize(low_dim);
        for (std::size_t lo = 0; lo < low_dim; ++lo) low_parity_[lo] = parity_slow(lo);
    }

    std::size_t low_bits() const { return low_bits_; }
    std::size_t low_mask() const { return (std::size_t{1} << low_bits_) - 1; }

    void begin_block(std::size_t hi) {
        const std::uint64_t full = static_cast<std::uint64_t>(hi) << low_bits_;
        high_parity_ = parity_slow(full);
        cross_ = 0;
        for (std::size_t q = low_bits_; q < n_; ++q) {
            if ((full >> q) & 1) cross_ ^= nbr_[q];
        }
        cross_ &= low_mask();
    }

    bool parity_in_block(std::size_t lo) const {
        return (low_parity_[lo] ^ high_parity_ ^ (std::popcount(lo & cross_) & 1)) != 0;
    }

    /// Direct evaluation; O(n).
    bool parity_slow(std::uint64_t i) const {
        int count = 0;
        for (std::size_t q = 0; q < n_; ++q) {
            if ((i >> q) & 1) count += std::popcount(i & nbr_[q] & ~((std::uint64_t{2} << q) - 1));
        }
        return (count & 1) != 0;
    }

  private:
    std::size_t n_;
    std::size_t low_bits_;
    std::vector<std::uint64_t> nbr_;
    std::vector<std::uint8_t> low_parity_;
    bool high_parity_ = false;
    std::uint64_t cross_ = 0;
};

}  // namespace q2sim
