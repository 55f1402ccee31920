#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace skewres {

/// xoshiro256** seeded through splitmix64.
///
/// Every transformation from raw bits to variates in this library is written
/// out explicitly (no std:: distributions), so a seed yields the same stream on
/// any IEEE-754 platform. Independent streams for parallel chains come from
/// jump(), which advances the state by 2^128 steps.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0x5eed) : seed_(seed) {
        std::uint64_t x = seed;
        for (auto& w : s_) w = splitmix64(x);
    }

    [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }

    std::uint64_t next() noexcept {
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

    /// Uniform on the open interval (0, 1); never returns 0 or 1.
    double uniform() noexcept {
        return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Standard normal via the Marsaglia polar method (spare value cached).
    double normal() noexcept {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform() - 1.0;
            v = 2.0 * uniform() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double f = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * f;
        has_spare_ = true;
        return u * f;
    }

    /// Standard exponential.
    double exponential() noexcept { return -std::log(uniform()); }

    /// Advance 2^128 draws; non-overlapping subsequences for parallel work.
    void jump() noexcept {
        static constexpr std::array<std::uint64_t, 4> kJump = {
            0x180ec6d33cfd0abaULL, 0xd5a61266f0c9392cULL, 0xa9582618e03fc9aaULL,
            0x39abdc4529b1661cULL};
        std::array<std::uint64_t, 4> acc{};
        for (std::uint64_t word : kJump) {
            for (int b = 0; b < 64; ++b) {
                if (word & (std::uint64_t{1} << b)) {
                    for (int k = 0; k < 4; ++k) acc[k] ^= s_[k];
                }
                next();
            }
        }
        s_ = acc;
        has_spare_ = false;
    }

    /// Copy of this generator advanced by `k` jumps.
    [[nodiscard]] Rng stream(unsigned k) const noexcept {
        Rng r = *this;
        for (unsigned i = 0; i < k; ++i) r.jump();
        return r;
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) noexcept { return (x << k) | (x >> (64 - k)); }
    static std::uint64_t splitmix64(std::uint64_t& x) noexcept {
        std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::uint64_t seed_;
    std::array<std::uint64_t, 4> s_{};
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace skewres
