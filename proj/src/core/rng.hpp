#ifndef REPLAB_CORE_RNG_HPP
#define REPLAB_CORE_RNG_HPP

#include <cmath>
#include <cstdint>
#include <numbers>

namespace replab {

// splitmix64 (Steele, Lea & Flood / Vigna). One 64-bit word of state, passes
// BigCrush, and gives bit-identical streams from an integer seed on every
// platform, which is all the reproducibility contract needs.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    // Independent substream for a (seed, tag) pair. Scrambles the tag through
    // one splitmix step so adjacent tags do not produce overlapping streams.
    static Rng derive(std::uint64_t seed, std::uint64_t stream_tag) {
        Rng t(stream_tag);
        return Rng(seed ^ t.next_u64());
    }

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1), 53-bit resolution.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Standard normal via Box-Muller. No spare caching: each draw consumes two
    // uniforms, so a stream's n-th normal never depends on call grouping.
    double next_normal() {
        // u1 in (0, 1] keeps the log finite.
        double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
        double u2 = next_double();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    // Uniform integer in [0, bound) by rejection; unbiased.
    std::uint64_t next_below(std::uint64_t bound) {
        std::uint64_t threshold = (0ULL - bound) % bound;
        for (;;) {
            std::uint64_t r = next_u64();
            if (r >= threshold) return r % bound;
        }
    }

private:
    std::uint64_t state_;
};

}  // namespace replab

#endif
