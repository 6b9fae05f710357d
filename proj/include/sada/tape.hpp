#pragma once

#include <cstdint>
#include <memory>

#include "sada/errors.hpp"
#include "sada/rng.hpp"

namespace sada {

// Coin supply for streaming algorithms. Implementations are read-once:
// every draw advances a cursor that never moves back.
class CoinSource {
public:
    virtual ~CoinSource() = default;
    virtual std::uint64_t draw_bits(unsigned n) = 0;
    int bit() { return static_cast<int>(draw_bits(1)); }
    double real01() { return static_cast<double>(draw_bits(53)) * 0x1.0p-53; }
    std::uint64_t below(std::uint64_t n) { return draw_bits(64) % n; }
};

// One read-once random tape backed by a seeded generator. The tape is
// conceptually unbounded; `cursor` counts bits consumed so far.
class RandomTape : public CoinSource {
public:
    RandomTape(int tape_id, std::uint64_t seed) : id_(tape_id), rng_(seed) {}

    std::uint64_t draw_bits(unsigned n) override {
        cursor_ += n;
        return rng_.bits(n);
    }

    int id() const { return id_; }
    std::uint64_t cursor() const { return cursor_; }

private:
    int id_;
    Rng rng_;
    std::uint64_t cursor_ = 0;
};

// Two-tape coin supply with a one-shot switch: reads come from tape 1 until
// switch_to_second(), after which every read comes from tape 2. Switching
// twice is a usage error.
class TapePair : public CoinSource {
public:
    explicit TapePair(std::uint64_t master_seed)
        : tape1_(1, derive_seed(master_seed, "tape1")),
          tape2_(2, derive_seed(master_seed, "tape2")) {}

    std::uint64_t draw_bits(unsigned n) override { return active().draw_bits(n); }

    void switch_to_second() {
        if (switched_) throw Error("tape switch may happen only once");
        switched_ = true;
    }

    bool switched() const { return switched_; }
    RandomTape& active() { return switched_ ? tape2_ : tape1_; }
    const RandomTape& tape1() const { return tape1_; }
    const RandomTape& tape2() const { return tape2_; }

private:
    RandomTape tape1_, tape2_;
    bool switched_ = false;
};

}  // namespace sada
