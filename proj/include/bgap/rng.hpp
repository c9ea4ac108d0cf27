#pragma once

#include <cmath>
#include <cstdint>

namespace bgap {

// Seeded splitmix64 generator. Small, fast, and platform-independent, so
// seeded runs reproduce bit-for-bit everywhere (std::normal_distribution is
// not pinned by the standard).
class Rng {
public:
    explicit Rng(uint64_t seed) : state_(seed) {}

    uint64_t next_u64() {
        uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1).
    double next01() { return double(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform integer in [0, n).
    uint64_t below(uint64_t n) {
        // Lemire's multiply-shift; bias is negligible for n << 2^64.
        return uint64_t((__uint128_t(next_u64()) * n) >> 64);
    }

    // Standard normal via Box-Muller.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = next01();
        while (u1 <= 1e-300) u1 = next01();
        double u2 = next01();
        double r = std::sqrt(-2.0 * std::log(u1));
        spare_ = r * std::sin(2.0 * M_PI * u2);
        has_spare_ = true;
        return r * std::cos(2.0 * M_PI * u2);
    }

    // Derives an independent stream, e.g. one per restart or per split.
    static uint64_t derive(uint64_t seed, uint64_t stream) {
        Rng r(seed ^ (0x632be59bd9b4e019ull * (stream + 1)));
        return r.next_u64();
    }

private:
    uint64_t state_;
    double spare_ = 0;
    bool has_spare_ = false;
};

}  // namespace bgap
