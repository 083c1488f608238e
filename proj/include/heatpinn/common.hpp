#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace heatpinn {

/// Error type thrown by all validation and numerical failure paths.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}
} // namespace detail

/// Derives an independent stream seed from a base seed and up to three tags.
/// Pure bit mixing, stable across platforms.
inline std::uint64_t seed_stream(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0,
                                 std::uint64_t c = 0) {
    std::uint64_t s = detail::splitmix64(base ^ 0x8f1bbcdc4589a3b7ULL);
    s = detail::splitmix64(s ^ a);
    s = detail::splitmix64(s ^ b);
    return detail::splitmix64(s ^ c);
}

/// Deterministic RNG. Uniform doubles are built from raw mt19937_64 bits so
/// the sequence is bit-identical on every standard library.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    /// Uniform in the open interval (0, 1).
    double uniform01() { return (static_cast<double>(gen_() >> 11) + 0.5) * 0x1.0p-53; }

    /// Uniform in (lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    /// Uniform over the closed interval [lo, hi] (endpoints reachable up to rounding).
    double uniform_closed(double lo, double hi) {
        const double u = static_cast<double>(gen_() >> 11) * 0x1.0p-53; // [0, 1)
        return lo + (hi - lo) * u;
    }

    std::uint64_t bits() { return gen_(); }

private:
    std::mt19937_64 gen_;
};

/// FNV-1a over a byte string; used for config hashes embedded in outputs.
inline std::uint64_t fnv1a(const std::string& data) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : data) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

} // namespace heatpinn
