#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "sada/errors.hpp"

namespace sada {

// Bit-granular serialization. Bit j of byte k holds stream bit 8k+j
// (little-endian within bytes), matching the on-disk stream formats.
class BitWriter {
public:
    // Append the n low-order bits of v, least-significant first.
    void write(std::uint64_t v, unsigned n) {
        for (unsigned i = 0; i < n; ++i) push_bit((v >> i) & 1u);
    }

    void push_bit(unsigned b) {
        const std::size_t byte = total_ / 8, off = total_ % 8;
        if (off == 0) bytes_.push_back(0);
        if (b) bytes_[byte] |= static_cast<std::uint8_t>(1u << off);
        ++total_;
    }

    std::uint64_t bit_size() const { return total_; }
    const std::vector<std::uint8_t>& bytes() const { return bytes_; }
    std::vector<std::uint8_t> take() { total_ = 0; return std::move(bytes_); }

private:
    std::vector<std::uint8_t> bytes_;
    std::uint64_t total_ = 0;
};

class BitReader {
public:
    explicit BitReader(const std::vector<std::uint8_t>& bytes, std::uint64_t bit_count = ~0ull)
        : bytes_(bytes),
          limit_(bit_count == ~0ull ? 8 * bytes.size() : bit_count) {}

    std::uint64_t read(unsigned n) {
        std::uint64_t v = 0;
        for (unsigned i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(next_bit()) << i;
        return v;
    }

    unsigned next_bit() {
        if (pos_ >= limit_) throw SourceUnderflowError("bit stream exhausted");
        const unsigned b = (bytes_[pos_ / 8] >> (pos_ % 8)) & 1u;
        ++pos_;
        return b;
    }

    std::uint64_t remaining() const { return limit_ - pos_; }

private:
    const std::vector<std::uint8_t>& bytes_;
    std::uint64_t limit_;
    std::uint64_t pos_ = 0;
};

inline unsigned ceil_log2(std::uint64_t n) {
    unsigned b = 0;
    while ((std::uint64_t{1} << b) < n) ++b;
    return b;
}

inline bool is_power_of_two(std::uint64_t n) { return n != 0 && (n & (n - 1)) == 0; }

}  // namespace sada
