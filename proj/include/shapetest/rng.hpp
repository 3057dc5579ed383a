#pragma once

// Counter-based random number generation (Philox 4x32-10).
//
// Every Monte-Carlo row/replicate in this project draws from its own
// stream, keyed by (key, stream).  The value sequence of a stream depends
// only on those two integers, never on scheduling, so parallel runs are
// bitwise identical to serial ones.
//
// Salmon et al., "Parallel random numbers: as easy as 1, 2, 3", SC 2011.

#include <cmath>
#include <cstdint>

namespace shapetest::rng {

// splitmix64 finalizer; used to spread user seeds over the key space.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// Derives the Philox key for a (user seed, purpose) pair.  Distinct
// purposes give disjoint streams for the same user-facing seed.
inline std::uint64_t derive_key(std::uint64_t seed, std::uint64_t purpose) {
    return mix64(mix64(seed) ^ (0xA0761D6478BD642FULL * (purpose + 1)));
}

// Purpose tags for all stochastic stages.
namespace purpose {
inline constexpr std::uint64_t kTableBatch  = 1;
inline constexpr std::uint64_t kSearchBatch = 2;
inline constexpr std::uint64_t kCheckBatch  = 3;
inline constexpr std::uint64_t kSimulation  = 4;
inline constexpr std::uint64_t kChi2        = 5;
}  // namespace purpose

class Philox4x32 {
public:
    Philox4x32(std::uint64_t key, std::uint64_t stream) {
        key_[0] = static_cast<std::uint32_t>(key);
        key_[1] = static_cast<std::uint32_t>(key >> 32);
        ctr_[0] = 0;
        ctr_[1] = 0;
        ctr_[2] = static_cast<std::uint32_t>(stream);
        ctr_[3] = static_cast<std::uint32_t>(stream >> 32);
        fill_block();
        bump_counter();
        pos_ = 0;
    }

    std::uint32_t next_u32() {
        if (pos_ == 4) {
            fill_block();
            bump_counter();
            pos_ = 0;
        }
        return out_[pos_++];
    }

    std::uint64_t next_u64() {
        const std::uint64_t lo = next_u32();
        const std::uint64_t hi = next_u32();
        return (hi << 32) | lo;
    }

    // Uniform in the open interval (0,1); 53-bit resolution, never 0 or 1.
    double next_unit() {
        const std::uint64_t bits = next_u64() >> 11;
        return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
    }

private:
    static constexpr std::uint32_t kM0 = 0xD2511F53u;
    static constexpr std::uint32_t kM1 = 0xCD9E8D57u;
    static constexpr std::uint32_t kW0 = 0x9E3779B9u;
    static constexpr std::uint32_t kW1 = 0xBB67AE85u;

    static void mulhilo(std::uint32_t a, std::uint32_t b,
                        std::uint32_t& lo, std::uint32_t& hi) {
        const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
        lo = static_cast<std::uint32_t>(p);
        hi = static_cast<std::uint32_t>(p >> 32);
    }

    void fill_block() {
        std::uint32_t c0 = ctr_[0], c1 = ctr_[1], c2 = ctr_[2], c3 = ctr_[3];
        std::uint32_t k0 = key_[0], k1 = key_[1];
        for (int round = 0; round < 10; ++round) {
            std::uint32_t lo0, hi0, lo1, hi1;
            mulhilo(kM0, c0, lo0, hi0);
            mulhilo(kM1, c2, lo1, hi1);
            const std::uint32_t n0 = hi1 ^ c1 ^ k0;
            const std::uint32_t n1 = lo1;
            const std::uint32_t n2 = hi0 ^ c3 ^ k1;
            const std::uint32_t n3 = lo0;
            c0 = n0; c1 = n1; c2 = n2; c3 = n3;
            k0 += kW0; k1 += kW1;
        }
        out_[0] = c0; out_[1] = c1; out_[2] = c2; out_[3] = c3;
    }

    void bump_counter() {
        if (++ctr_[0] == 0) ++ctr_[1];
    }

    std::uint32_t key_[2];
    std::uint32_t ctr_[4];
    std::uint32_t out_[4] = {0, 0, 0, 0};
    int pos_;
};

// Standard normal deviates via Box-Muller on Philox uniforms.
class GaussianStream {
public:
    GaussianStream(std::uint64_t key, std::uint64_t stream)
        : rng_(key, stream) {}

    double next() {
        if (have_cached_) {
            have_cached_ = false;
            return cached_;
        }
        const double u1 = rng_.next_unit();
        const double u2 = rng_.next_unit();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 6.283185307179586476925286766559 * u2;
        cached_ = radius * std::sin(angle);
        have_cached_ = true;
        return radius * std::cos(angle);
    }

    void fill(double* dst, int count) {
        for (int i = 0; i < count; ++i) dst[i] = next();
    }

    Philox4x32& raw() { return rng_; }

private:
    Philox4x32 rng_;
    bool have_cached_ = false;
    double cached_ = 0.0;
};

}  // namespace shapetest::rng
