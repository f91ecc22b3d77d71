#pragma once

// Deterministic randomness helpers. All stochastic behavior in the library
// flows through these so that a (seed, key...) pair maps to the same stream
// on every platform and in any evaluation order. std::mt19937_64 is fully
// specified by the standard; the distributions are hand-rolled because the
// standard ones are implementation-defined.

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace rankconsol {

// FNV-1a over bytes, then a splitmix64 finalizer to spread low-entropy keys.
class SeedHasher {
public:
    explicit SeedHasher(std::uint64_t seed) : state_(0xcbf29ce484222325ULL) {
        mix(seed);
    }

    SeedHasher& mix(std::uint64_t v) {
        for (int b = 0; b < 8; ++b) {
            state_ ^= (v >> (8 * b)) & 0xffULL;
            state_ *= 0x100000001b3ULL;
        }
        return *this;
    }

    SeedHasher& mix(std::string_view s) {
        for (unsigned char c : s) {
            state_ ^= c;
            state_ *= 0x100000001b3ULL;
        }
        state_ ^= 0xffULL;  // terminator so "ab","c" != "a","bc"
        state_ *= 0x100000001b3ULL;
        return *this;
    }

    std::uint64_t value() const {
        std::uint64_t z = state_ + 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

private:
    std::uint64_t state_;
};

template <typename... Parts>
std::uint64_t hash_seed(std::uint64_t seed, const Parts&... parts) {
    SeedHasher h(seed);
    (h.mix(parts), ...);
    return h.value();
}

// Deterministic generator: uniform doubles in [0,1) from the top 53 bits,
// gaussians via Box-Muller.
class DetRng {
public:
    explicit DetRng(std::uint64_t seed) : engine_(seed) {}

    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    // uniform integer in [0, n)
    std::uint64_t uniform_int(std::uint64_t n) {
        // rejection sampling keeps the distribution exact
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t v;
        do {
            v = engine_();
        } while (v >= limit);
        return v % n;
    }

    double gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1, u2;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * M_PI * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace rankconsol
