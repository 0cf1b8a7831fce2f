#pragma once

#include <cstdint>
#include <limits>

namespace pacr {

/// SplitMix64 finalizer; used to derive independent stream seeds.
constexpr std::uint64_t mix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

/// Seed for stream `index` under `master`: a pure function of both, so
/// trial i draws the same numbers no matter which worker runs it.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
    return mix64(mix64(master) ^ mix64(index + 0x632BE59BD9B4E019ull));
}

/// xoshiro256** seeded through SplitMix64. Integer and real draws are
/// implemented here (not via <random> distributions) so streams are
/// identical across standard libraries.
class Rng {
public:
    using result_type = std::uint64_t;

    explicit Rng(std::uint64_t seed) {
        std::uint64_t z = seed;
        for (auto& s : s_) {
            z += 0x9E3779B97F4A7C15ull;
            s = mix64(z);
        }
    }

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()() {
        const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    /// Uniform integer in [0, bound), rejection-sampled (no modulo bias).
    std::uint64_t below(std::uint64_t bound) {
        if (bound <= 1) return 0;
        // 2^64 mod bound: draws below it would over-represent small residues.
        const std::uint64_t threshold = (0 - bound) % bound;
        std::uint64_t x;
        do {
            x = (*this)();
        } while (x < threshold);
        return x % bound;
    }

    /// Uniform integer in [lo, hi].
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
        const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
        return lo + static_cast<std::int64_t>(span == 0 ? (*this)() : below(span));
    }

    /// Uniform real in [0, 1) with 53 bits of precision.
    double uniform01() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

    bool bernoulli(double p) { return uniform01() < p; }

private:
    static constexpr std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    std::uint64_t s_[4]{};
};

}  // namespace pacr
