#pragma once

#include <cstdint>
#include <cmath>
#include <vector>

namespace furst {

// Deterministic, platform-independent generator (xoshiro256++ seeded via
// splitmix64). std::mt19937 + std:: distributions are not bit-stable across
// standard libraries, and reproducibility is part of the output contract.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) {
        std::uint64_t sm = seed;
        for (auto& w : s_) w = splitmix64(sm);
    }

    // Stream for worker/sample `index` of a run with master seed `seed`.
    static Rng stream(std::uint64_t seed, std::uint64_t index) {
        std::uint64_t sm = seed ^ (0x9e3779b97f4a7c15ULL * (index + 1));
        return Rng(splitmix64(sm));
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Standard normal via Box-Muller (deterministic pair caching).
    double normal() {
        if (have_cached_) {
            have_cached_ = false;
            return cached_;
        }
        double u1 = uniform();
        double u2 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.283185307179586476925286766559 * u2;
        cached_ = r * std::sin(a);
        have_cached_ = true;
        return r * std::cos(a);
    }

    // Index into a cumulative weight table (values in (0,1], last entry 1).
    std::size_t pick(const std::vector<double>& cumulative) {
        double u = uniform();
        std::size_t lo = 0, hi = cumulative.size() - 1;
        while (lo < hi) {
            std::size_t mid = (lo + hi) / 2;
            if (u < cumulative[mid]) hi = mid; else lo = mid + 1;
        }
        return lo;
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }
    std::uint64_t s_[4]{};
    double cached_ = 0.0;
    bool have_cached_ = false;
};

} // namespace furst
