#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "sada/bits.hpp"
#include "sada/errors.hpp"
#include "sada/rng.hpp"

namespace sada {

/// Bounded-storage-model PRG shape: a public-block bits, b key bits,
/// c output bits (fixed to 1 here), t block positions read per output.
struct PrgParams {
    unsigned a = 256;
    unsigned b = 16;
    unsigned c = 1;
    unsigned t = 32;

    std::vector<std::string> validate() const;
    void check() const;
};

struct PrgKey {
    std::uint64_t bits = 0;
    unsigned width = 0;
};

PrgKey uniform_key(Rng& rng, unsigned b);

/// Read-once, in-order access to the a bits of one public block. Positions
/// passed to read_bit must be strictly increasing.
class BlockSource {
public:
    virtual ~BlockSource() = default;
    virtual int read_bit(unsigned pos) = 0;
    virtual unsigned size() const = 0;
};

class VectorBlockSource : public BlockSource {
public:
    explicit VectorBlockSource(const std::vector<std::uint8_t>& bits) : bits_(bits) {}
    int read_bit(unsigned pos) override {
        if (pos >= bits_.size()) throw SourceUnderflowError("block exhausted");
        if (read_ && pos <= last_) throw Error("block positions must increase");
        last_ = pos;
        read_ = true;
        return bits_[pos];
    }
    unsigned size() const override { return static_cast<unsigned>(bits_.size()); }

private:
    const std::vector<std::uint8_t>& bits_;
    unsigned last_ = 0;
    bool read_ = false;
};

/// The t distinct block positions (sorted) and the mask bit that a key
/// selects. Sample-then-XOR construction: positions come from splitmix
/// mixing of key||counter with modular reduction, duplicates re-drawn; the
/// output is the parity of the selected block bits XORed with the mask.
struct PrgSelector {
    std::vector<std::uint32_t> positions;  // sorted, size t
    int mask = 0;
};

PrgSelector derive_selector(const PrgKey& key, const PrgParams& params);

/// Evaluate the PRG on a read-once block. Reads exactly the t selected
/// positions, in order.
int prg_eval(BlockSource& block, const PrgKey& key, const PrgParams& params);

/// Incremental evaluation for streaming use: feed the block one bit at a
/// time; unselected bits are discarded on arrival. Between updates the
/// cursor state is (key, position, selection index, parity).
class PrgCursor {
public:
    PrgCursor(const PrgKey& key, const PrgParams& params);

    void feed(int bit);
    bool done() const { return pos_ == params_.a; }
    int output() const;

    /// Serialized size between updates; the sorted positions are a pure
    /// function of the key and are re-derived on restore.
    std::uint64_t state_bits() const;
    void serialize_state(BitWriter& w) const;
    void deserialize_state(BitReader& r);

    const PrgKey& key() const { return key_; }

private:
    PrgKey key_;
    PrgParams params_;
    PrgSelector sel_;
    std::uint32_t pos_ = 0;
    std::uint32_t next_idx_ = 0;
    int parity_ = 0;
};

// ---------------------------------------------------------------------------
// Real / ideal distinguishing experiments.

struct BsmExperimentConfig {
    std::size_t T = 4;             // rounds
    std::uint64_t storage_bits = 0;  // adversary bound
    std::size_t trials = 1000;
    std::uint64_t seed = 1;

    std::vector<std::string> validate(const PrgParams& params,
                                      bool bounded_profile) const;
};

/// Storage-bounded distinguisher. Past outputs Y are provided for free each
/// round and again at the end, together with the key.
class BsmAdversary {
public:
    virtual ~BsmAdversary() = default;
    virtual void absorb(std::size_t t, const std::vector<std::uint8_t>& past_y,
                        const std::vector<std::uint8_t>& block) = 0;
    virtual std::uint64_t state_bits() const = 0;
    virtual int decide(const std::vector<std::uint8_t>& all_y, const PrgKey& key) = 0;
};

using BsmAdversaryFactory = std::function<std::unique_ptr<BsmAdversary>()>;

int run_real_experiment(BsmAdversary& adv, const BsmExperimentConfig& cfg,
                        const PrgParams& params, std::uint64_t seed);
int run_ideal_experiment(BsmAdversary& adv, const BsmExperimentConfig& cfg,
                         const PrgParams& params, std::uint64_t seed);

struct AdvantageEstimate {
    double advantage = 0.0;
    double ci_halfwidth = 0.0;  // 95% binomial
    double p_real = 0.0;
    double p_ideal = 0.0;
};

AdvantageEstimate estimate_advantage(const BsmAdversaryFactory& make_adv,
                                     const BsmExperimentConfig& cfg,
                                     const PrgParams& params);

// Stock adversary profiles.

/// Ignores everything and outputs a constant.
class ConstantBsmAdversary : public BsmAdversary {
public:
    explicit ConstantBsmAdversary(int out) : out_(out) {}
    void absorb(std::size_t, const std::vector<std::uint8_t>&,
                const std::vector<std::uint8_t>&) override {}
    std::uint64_t state_bits() const override { return 0; }
    int decide(const std::vector<std::uint8_t>& all_y, const PrgKey&) override {
        (void)all_y;
        return out_;
    }

private:
    int out_;
};

/// Outputs Y_1 (stores nothing; Y's are free).
class FirstOutputAdversary : public BsmAdversary {
public:
    void absorb(std::size_t, const std::vector<std::uint8_t>&,
                const std::vector<std::uint8_t>&) override {}
    std::uint64_t state_bits() const override { return 0; }
    int decide(const std::vector<std::uint8_t>& all_y, const PrgKey&) override {
        return all_y.empty() ? 0 : all_y[0];
    }
};

/// Keeps copies of the free past outputs, nothing else, and answers with
/// their parity. The bounded profile.
class ForwardingAdversary : public BsmAdversary {
public:
    void absorb(std::size_t, const std::vector<std::uint8_t>& past_y,
                const std::vector<std::uint8_t>&) override {
        stored_y_ = past_y;
    }
    std::uint64_t state_bits() const override { return stored_y_.size(); }
    int decide(const std::vector<std::uint8_t>& all_y, const PrgKey&) override {
        int p = 0;
        for (int y : all_y) p ^= y;
        return p;
    }

private:
    std::vector<std::uint8_t> stored_y_;
};

/// Stores every public block verbatim (needs storage T*a) and, once the key
/// arrives, recomputes each Y and outputs 1 iff all of them match. The
/// unbounded profile.
class BlockHoardingAdversary : public BsmAdversary {
public:
    explicit BlockHoardingAdversary(const PrgParams& params) : params_(params) {}
    void absorb(std::size_t, const std::vector<std::uint8_t>&,
                const std::vector<std::uint8_t>& block) override {
        blocks_.push_back(block);
    }
    std::uint64_t state_bits() const override {
        return static_cast<std::uint64_t>(blocks_.size()) * params_.a;
    }
    int decide(const std::vector<std::uint8_t>& all_y, const PrgKey& key) override;

private:
    PrgParams params_;
    std::vector<std::vector<std::uint8_t>> blocks_;
};

/// Claims an oversized state; used to exercise storage enforcement.
class OversizeStateAdversary : public BsmAdversary {
public:
    explicit OversizeStateAdversary(std::uint64_t bits) : bits_(bits) {}
    void absorb(std::size_t, const std::vector<std::uint8_t>&,
                const std::vector<std::uint8_t>&) override {}
    std::uint64_t state_bits() const override { return bits_; }
    int decide(const std::vector<std::uint8_t>&, const PrgKey&) override { return 0; }

private:
    std::uint64_t bits_;
};

}  // namespace sada
