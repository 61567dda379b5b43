#pragma once

// Deterministic RNG used everywhere randomness is needed. std:: distributions
// are implementation-defined, so draws are produced with explicit algorithms
// to keep seeded runs reproducible across compilers.

#include <cmath>
#include <cstdint>
#include <string_view>
#include <utility>
#include <vector>

namespace panelkit {

inline uint64_t splitmix64(uint64_t& state) {
    state += 0x9e3779b97f4a7c15ULL;
    uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// FNV-1a over a canonical byte encoding; used to derive independent
// substreams from (seed, title, page index, ordinal)-style keys.
class SeedDeriver {
public:
    explicit SeedDeriver(uint64_t seed) { mix_u64(seed); }

    SeedDeriver& mix_u64(uint64_t v) {
        for (int i = 0; i < 8; ++i) mix_byte(static_cast<uint8_t>(v >> (8 * i)));
        return *this;
    }
    SeedDeriver& mix_i64(int64_t v) { return mix_u64(static_cast<uint64_t>(v)); }
    SeedDeriver& mix_str(std::string_view s) {
        mix_u64(s.size());
        for (char c : s) mix_byte(static_cast<uint8_t>(c));
        return *this;
    }

    uint64_t finish() const {
        uint64_t s = h_;
        return splitmix64(s);
    }

private:
    void mix_byte(uint8_t b) {
        h_ ^= b;
        h_ *= 0x100000001b3ULL;
    }
    uint64_t h_ = 0xcbf29ce484222325ULL;
};

template <typename... Parts>
uint64_t derive_seed(uint64_t seed, const Parts&... parts) {
    SeedDeriver d(seed);
    auto mix = [&d](const auto& p) {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_integral_v<P>) {
            d.mix_i64(static_cast<int64_t>(p));
        } else {
            d.mix_str(p);
        }
    };
    (mix(parts), ...);
    return d.finish();
}

// xoshiro256** with splitmix-expanded seeding.
class Rng {
public:
    explicit Rng(uint64_t seed = 0) {
        uint64_t sm = seed;
        for (auto& w : s_) w = splitmix64(sm);
    }

    uint64_t next_u64() {
        const uint64_t result = rotl(s_[1] * 5, 7) * 9;
        const uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // Unbiased integer in [lo, hi], both bounds inclusive.
    int64_t uniform_int(int64_t lo, int64_t hi) {
        const uint64_t span = static_cast<uint64_t>(hi - lo) + 1;
        if (span == 0) return static_cast<int64_t>(next_u64()); // full 64-bit range
        const uint64_t limit = UINT64_MAX - UINT64_MAX % span;
        uint64_t r;
        do {
            r = next_u64();
        } while (r >= limit);
        return lo + static_cast<int64_t>(r % span);
    }

    // Uniform in [0, 1).
    double uniform_real() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    float uniform_float() { return static_cast<float>(next_u64() >> 40) * 0x1.0p-24f; }

    // Box-Muller; one value per call, the pair partner is cached.
    double normal() {
        if (has_cached_) {
            has_cached_ = false;
            return cached_;
        }
        double u1, u2;
        do {
            u1 = uniform_real();
        } while (u1 <= 0.0);
        u2 = uniform_real();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 6.283185307179586476925287 * u2;
        cached_ = r * std::sin(theta);
        has_cached_ = true;
        return r * std::cos(theta);
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            const size_t j = static_cast<size_t>(uniform_int(0, static_cast<int64_t>(i) - 1));
            using std::swap;
            swap(v[i - 1], v[j]);
        }
    }

private:
    static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    uint64_t s_[4];
    double cached_ = 0.0;
    bool has_cached_ = false;
};

} // namespace panelkit
