#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string_view>

namespace q2sim {

inline constexpr std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// FNV-1a, used to turn a component label into a stream id.
inline constexpr std::uint64_t hash_label(std::string_view label) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (char c : label) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001B3ULL;
    }
    return h;
}

/// Per-component random stream (xoshiro256** seeded through splitmix64).
///
/// Each simulator component draws from its own stream derived from
/// (seed, label), so adding draws in one component never shifts the
/// sequence observed by another. Only integer arithmetic is used, so a
/// given (seed, label) yields the same values on every platform.
class RngStream {
  public:
    RngStream() : RngStream(0, "default") {}

    RngStream(std::uint64_t seed, std::string_view label) : seed_(seed), stream_id_(hash_label(label)) {
        std::uint64_t s = seed ^ (stream_id_ * 0xD1342543DE82EF95ULL);
        for (auto& w : state_) {
            w = splitmix64(s);
        }
    }

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream_id() const { return stream_id_; }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    bool bernoulli(double p) { return uniform() < p; }

    /// Uniform integer in [0, bound). Bound must be positive.
    std::uint64_t below(std::uint64_t bound) {
        // Lemire's nearly-divisionless method with rejection.
        __extension__ using U128 = unsigned __int128;
        U128 m = static_cast<U128>(next_u64()) * bound;
        auto low = static_cast<std::uint64_t>(m);
        if (low < bound) {
            const std::uint64_t threshold = (0 - bound) % bound;
            while (low < threshold) {
                m = static_cast<U128>(next_u64()) * bound;
                low = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }

    /// Exponentially distributed value with the given mean.
    double exponential(double mean) {
        // 1 - u lies in (0, 1], so the log is finite.
        return -mean * std::log(1.0 - uniform());
    }

  private:
    static constexpr std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    std::uint64_t seed_;
    std::uint64_t stream_id_;
    std::array<std::uint64_t, 4> state_{};
};

}  // namespace q2sim

