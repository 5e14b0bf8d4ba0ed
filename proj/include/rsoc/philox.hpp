#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace rsoc {

// Philox4x32-10 counter-based generator (Salmon, Moraes, Dror, Shaw 2011).
// Stateless: each 128-bit counter + 64-bit key pair maps to four independent
// 32-bit words, so draws are addressable by (seed; block, path, step,
// component) and reproducible from anywhere in a parallel run.
struct Philox4x32 {
    using Counter = std::array<std::uint32_t, 4>;

    static constexpr std::uint32_t kMul0 = 0xD2511F53u;
    static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
    static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
    static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

    static Counter generate(Counter ctr, std::uint32_t k0, std::uint32_t k1) {
        for (int round = 0; round < 10; ++round) {
            const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * ctr[0];
            const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * ctr[2];
            const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
            const auto lo0 = static_cast<std::uint32_t>(p0);
            const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
            const auto lo1 = static_cast<std::uint32_t>(p1);
            ctr = Counter{hi1 ^ ctr[1] ^ k0, lo1, hi0 ^ ctr[3] ^ k1, lo0};
            k0 += kWeyl0;
            k1 += kWeyl1;
        }
        return ctr;
    }

    static Counter generate(Counter ctr, std::uint64_t seed) {
        return generate(ctr, static_cast<std::uint32_t>(seed),
                        static_cast<std::uint32_t>(seed >> 32));
    }
};

// Uniform in the open interval (0, 1) from 64 random bits.
inline double uniform_open01(std::uint32_t lo, std::uint32_t hi) {
    const std::uint64_t bits = (static_cast<std::uint64_t>(hi) << 32) | lo;
    return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

// One standard normal per counter via Box-Muller (cosine branch); the four
// words of a single Philox block supply both uniforms.
inline double counter_normal(std::uint64_t seed, std::uint32_t block, std::uint32_t path,
                             std::uint32_t step, std::uint32_t component) {
    const auto w = Philox4x32::generate({path, step, component, block}, seed);
    const double u1 = uniform_open01(w[0], w[1]);
    const double u2 = uniform_open01(w[2], w[3]);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

inline double counter_uniform(std::uint64_t seed, std::uint32_t block, std::uint32_t path,
                              std::uint32_t step, std::uint32_t component) {
    const auto w = Philox4x32::generate({path, step, component, block}, seed);
    return uniform_open01(w[0], w[1]);
}

} // namespace rsoc
