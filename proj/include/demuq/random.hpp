#pragma once

#include <cstdint>
#include <string_view>

// Deterministic, platform-independent randomness.  The standard <random>
// distributions are implementation-defined, so every stream that must be
// reproducible byte-for-byte is derived from these fixed-point mixers.

namespace demuq {

/// splitmix64 finalizer.
constexpr std::uint64_t mix_bits(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Stateless combination of two keys into one well-mixed 64-bit word.
constexpr std::uint64_t mix64(std::uint64_t a, std::uint64_t b) {
    return mix_bits(mix_bits(a + 0x9e3779b97f4a7c15ULL) ^ (b + 0x632be59bd9b4e019ULL));
}

/// Uniform double in [0, 1) from the high 53 bits.
constexpr double unit_double(std::uint64_t bits) {
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

/// FNV-1a for hashing string cell identifiers into stream keys.
constexpr std::uint64_t fnv1a64(std::string_view text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : text) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// Sequential splitmix64 generator for Monte-Carlo style sampling.
class SplitMix {
  public:
    explicit SplitMix(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        state_ += 0x9e3779b97f4a7c15ULL;
        return mix_bits(state_);
    }

    double uniform() { return unit_double(next()); }

  private:
    std::uint64_t state_;
};

} // namespace demuq
