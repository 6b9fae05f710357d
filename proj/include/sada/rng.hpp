#pragma once

#include <cstdint>
#include <string_view>

namespace sada {

// splitmix64 finalizer. All deterministic randomness in this project is
// built from this one mixer so results are reproducible across platforms.
constexpr std::uint64_t mix64(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ULL;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBULL;
    z ^= z >> 31;
    return z;
}

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

constexpr std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001B3ULL;
    }
    return h;
}

// Seed-splitting rule: every component draws its randomness from a named
// substream derived from one master seed. Two runs that share a master seed
// and a tag see identical bits, which is what the replay and
// world-equivalence tests rely on.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::string_view tag) {
    return mix64(master ^ (fnv1a64(tag) + kGolden));
}
constexpr std::uint64_t derive_seed(std::uint64_t master, std::string_view tag,
                                    std::uint64_t i) {
    return mix64(derive_seed(master, tag) ^ (i + kGolden));
}
constexpr std::uint64_t derive_seed(std::uint64_t master, std::string_view tag,
                                    std::uint64_t i, std::uint64_t j) {
    return mix64(derive_seed(master, tag, i) ^ mix64(j + 2 * kGolden));
}

// splitmix64 sequence generator.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : state_(seed) {}

    std::uint64_t next() {
        state_ += kGolden;
        return mix64(state_);
    }

    int bit() { return static_cast<int>(next() & 1u); }

    // n low-order random bits packed in a u64 (n in [0,64]).
    std::uint64_t bits(unsigned n) {
        if (n == 0) return 0;
        std::uint64_t v = next();
        return n >= 64 ? v : (v & ((std::uint64_t{1} << n) - 1));
    }

    // Uniform value in [0, n). Plain modular reduction; the bias is
    // negligible for the domain sizes used here (n far below 2^64).
    std::uint64_t below(std::uint64_t n) { return next() % n; }

    double real01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

private:
    std::uint64_t state_;
};

}  // namespace sada
