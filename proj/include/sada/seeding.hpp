#pragma once

#include <cstdint>
#include <vector>

#include "sada/rng.hpp"
#include "sada/stat_query.hpp"

namespace sada {

// Named substreams of one master seed. Mechanism runs, their replays, and
// the oracle-game simulations all draw the same quantity from the same
// substream, which is what makes coupled runs bit-identical.

inline std::uint64_t backend_seed(std::uint64_t master) {
    return derive_seed(master, "backend");
}
inline std::uint64_t analyst_seed(std::uint64_t master) {
    return derive_seed(master, "analyst");
}

inline std::vector<Point> draw_database(std::uint64_t master, std::size_t n, unsigned d) {
    Rng rng(derive_seed(master, "db"));
    std::vector<Point> db(n);
    for (auto& p : db) p = static_cast<Point>(rng.bits(d));
    return db;
}

/// Key material for domain point p (b uniform bits).
inline std::uint64_t point_key_bits(std::uint64_t master, Point p, unsigned b) {
    return Rng(derive_seed(master, "pointkey", p)).bits(b);
}

/// Fresh nonce for the encryption issued at (round j, point p).
inline std::uint64_t enc_nonce(std::uint64_t master, std::uint32_t j, Point p,
                               unsigned nonce_bits) {
    return Rng(derive_seed(master, "nonce", j, p)).bits(nonce_bits);
}

/// The a-bit public block fed for (round j, point p).
inline std::vector<std::uint8_t> gamma_block(std::uint64_t master, std::uint32_t j,
                                             Point p, unsigned a) {
    Rng rng(derive_seed(master, "gamma", j, p));
    std::vector<std::uint8_t> bits(a);
    for (auto& b : bits) b = static_cast<std::uint8_t>(rng.bit());
    return bits;
}

/// One-time pad bit for (round j, point p) outside the input sample.
inline int pad_bit(std::uint64_t master, std::uint32_t j, Point p) {
    return Rng(derive_seed(master, "padbit", j, p)).bit();
}

}  // namespace sada
