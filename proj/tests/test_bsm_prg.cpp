#include <doctest.h>

#include <cmath>
#include <memory>
#include <set>

#include "sada/bsm_prg.hpp"
#include "support/oracles.hpp"

using namespace sada;

namespace {

std::vector<std::uint8_t> random_block(Rng& rng, unsigned a) {
    std::vector<std::uint8_t> b(a);
    for (auto& x : b) x = static_cast<std::uint8_t>(rng.bit());
    return b;
}

// Counts reads and enforces the read-once, in-order discipline.
class InstrumentedSource : public BlockSource {
public:
    explicit InstrumentedSource(const std::vector<std::uint8_t>& bits) : bits_(bits) {}
    int read_bit(unsigned pos) override {
        REQUIRE(pos < bits_.size());
        REQUIRE((!any_ || pos > last_));
        last_ = pos;
        any_ = true;
        ++reads;
        return bits_[pos];
    }
    unsigned size() const override { return static_cast<unsigned>(bits_.size()); }
    unsigned reads = 0;

private:
    const std::vector<std::uint8_t>& bits_;
    unsigned last_ = 0;
    bool any_ = false;
};

// Spy that records everything it is shown.
class RecordingAdversary : public BsmAdversary {
public:
    void absorb(std::size_t, const std::vector<std::uint8_t>&,
                const std::vector<std::uint8_t>& block) override {
        blocks.push_back(block);
    }
    std::uint64_t state_bits() const override { return 0; }
    int decide(const std::vector<std::uint8_t>& all_y, const PrgKey& key) override {
        ys = all_y;
        key_bits = key.bits;
        return 0;
    }
    std::vector<std::vector<std::uint8_t>> blocks;
    std::vector<std::uint8_t> ys;
    std::uint64_t key_bits = 0;
};

}  // namespace

TEST_SUITE_BEGIN("bsm_prg");

TEST_CASE("params validation") {
    PrgParams p;
    p.a = 16;
    p.b = 8;
    p.t = 17;
    CHECK_FALSE(p.validate().empty());
    p.t = 16;
    CHECK(p.validate().empty());
    p.c = 2;
    CHECK_FALSE(p.validate().empty());
}

TEST_CASE("prg eval basics") {
    PrgParams p;
    p.a = 16;
    p.b = 8;
    p.t = 4;
    Rng krng(7);
    const PrgKey key = uniform_key(krng, p.b);

    SUBCASE("all-zero block returns the key mask") {
        std::vector<std::uint8_t> zeros(p.a, 0);
        VectorBlockSource src(zeros);
        CHECK(prg_eval(src, key, p) == derive_selector(key, p).mask);
    }
    SUBCASE("deterministic on fixed inputs") {
        std::vector<std::uint8_t> block(p.a);
        for (unsigned i = 0; i < p.a; ++i) block[i] = (0xBEEF >> i) & 1u;
        VectorBlockSource s1(block), s2(block);
        const int y1 = prg_eval(s1, key, p);
        const int y2 = prg_eval(s2, key, p);
        CHECK(y1 == y2);
        CHECK(y1 == oracles::prg_reference(block, key.bits, p));
    }
    SUBCASE("matches the straight-line reference on random inputs") {
        Rng rng(42);
        for (int rep = 0; rep < 500; ++rep) {
            const auto block = random_block(rng, p.a);
            const PrgKey k = uniform_key(rng, p.b);
            VectorBlockSource src(block);
            CHECK(prg_eval(src, k, p) == oracles::prg_reference(block, k.bits, p));
        }
    }
    SUBCASE("reads at most t positions, each once, in order") {
        Rng rng(9);
        const auto block = random_block(rng, p.a);
        InstrumentedSource src(block);
        prg_eval(src, key, p);
        CHECK(src.reads == p.t);
    }
    SUBCASE("short block underflows") {
        std::vector<std::uint8_t> shorty(p.a - 1, 0);
        VectorBlockSource src(shorty);
        CHECK_THROWS_AS(prg_eval(src, key, p), SourceUnderflowError);
    }
}

TEST_CASE("selector consumes the whole key and nothing else") {
    PrgParams p;
    p.a = 64;
    p.b = 12;
    p.t = 8;
    Rng rng(5);
    const PrgKey key = uniform_key(rng, p.b);
    const PrgSelector base = derive_selector(key, p);
    CHECK(base.positions.size() == p.t);
    CHECK(std::set<std::uint32_t>(base.positions.begin(), base.positions.end()).size() ==
          p.t);
    int changed = 0;
    for (unsigned bit = 0; bit < p.b; ++bit) {
        const PrgKey flipped{key.bits ^ (std::uint64_t{1} << bit), p.b};
        const PrgSelector s = derive_selector(flipped, p);
        if (s.positions != base.positions || s.mask != base.mask) ++changed;
    }
    CHECK(changed >= static_cast<int>(p.b) - 1);  // key bits matter
    CHECK_THROWS_AS(derive_selector(PrgKey{0, p.b + 1}, p), Error);
}

TEST_CASE("incremental cursor equals one-shot evaluation") {
    PrgParams p;
    p.a = 32;
    p.b = 10;
    p.t = 6;
    Rng rng(77);
    for (int rep = 0; rep < 200; ++rep) {
        const PrgKey key = uniform_key(rng, p.b);
        const auto block = random_block(rng, p.a);
        PrgCursor cur(key, p);
        CHECK_THROWS_AS(cur.output(), Error);  // premature
        for (unsigned i = 0; i < p.a; ++i) cur.feed(block[i]);
        VectorBlockSource src(block);
        CHECK(cur.output() == prg_eval(src, key, p));
    }
    SUBCASE("cursor state round-trips mid-block") {
        const PrgKey key = uniform_key(rng, p.b);
        const auto block = random_block(rng, p.a);
        PrgCursor cur(key, p);
        for (unsigned i = 0; i < p.a / 2; ++i) cur.feed(block[i]);
        BitWriter w;
        cur.serialize_state(w);
        CHECK(w.bit_size() == cur.state_bits());
        PrgCursor restored(PrgKey{0, p.b}, p);
        BitReader r(w.bytes(), w.bit_size());
        restored.deserialize_state(r);
        for (unsigned i = p.a / 2; i < p.a; ++i) {
            cur.feed(block[i]);
            restored.feed(block[i]);
        }
        CHECK(cur.output() == restored.output());
    }
}

TEST_CASE("output bias stays near a half") {
    PrgParams p;
    p.a = 64;
    p.b = 12;
    p.t = 8;
    Rng rng(123);
    std::uint64_t ones = 0;
    const int trials = 100000;
    for (int i = 0; i < trials; ++i) {
        const auto block = random_block(rng, p.a);
        const PrgKey key = uniform_key(rng, p.b);
        VectorBlockSource src(block);
        ones += prg_eval(src, key, p);
    }
    CHECK(std::abs(static_cast<double>(ones) / trials - 0.5) <= 0.01);
}

TEST_CASE("real and ideal experiments share everything but the outputs") {
    PrgParams p;
    p.a = 32;
    p.b = 8;
    p.t = 4;
    BsmExperimentConfig cfg;
    cfg.T = 3;
    cfg.storage_bits = 0;

    RecordingAdversary real_spy, ideal_spy;
    run_real_experiment(real_spy, cfg, p, 555);
    run_ideal_experiment(ideal_spy, cfg, p, 555);
    CHECK(real_spy.blocks == ideal_spy.blocks);
    CHECK(real_spy.key_bits == ideal_spy.key_bits);
    // The real outputs must be the PRG of the shared blocks under the key.
    for (std::size_t t = 0; t < cfg.T; ++t)
        CHECK(real_spy.ys[t] == oracles::prg_reference(real_spy.blocks[t],
                                                       real_spy.key_bits, p));
}

TEST_CASE("experiment outputs and enforcement") {
    PrgParams p;
    p.a = 32;
    p.b = 8;
    p.t = 4;
    BsmExperimentConfig cfg;
    cfg.T = 1;
    cfg.storage_bits = 16;

    SUBCASE("constant adversary outputs its constant") {
        ConstantBsmAdversary adv(0);
        CHECK(run_real_experiment(adv, cfg, p, 1) == 0);
        CHECK(run_ideal_experiment(adv, cfg, p, 1) == 0);
    }
    SUBCASE("forwarding the first output matches the prg distribution") {
        std::size_t real_ones = 0, direct_ones = 0;
        Rng rng(31);
        const int trials = 10000;
        for (int i = 0; i < trials; ++i) {
            FirstOutputAdversary adv;
            real_ones += run_real_experiment(adv, cfg, p, derive_seed(31, "r", i));
            const auto block = random_block(rng, p.a);
            const PrgKey key = uniform_key(rng, p.b);
            VectorBlockSource src(block);
            direct_ones += prg_eval(src, key, p);
        }
        CHECK(std::abs(static_cast<double>(real_ones) / trials -
                       static_cast<double>(direct_ones) / trials) <= 0.05);
    }
    SUBCASE("ideal outputs are unbiased") {
        std::size_t ones = 0;
        const int trials = 10000;
        for (int i = 0; i < trials; ++i) {
            FirstOutputAdversary adv;
            ones += run_ideal_experiment(adv, cfg, p, derive_seed(32, "i", i));
        }
        CHECK(std::abs(static_cast<double>(ones) / trials - 0.5) <= 0.02);
    }
    SUBCASE("oversized state is a storage violation") {
        OversizeStateAdversary adv(cfg.storage_bits + 1);
        CHECK_THROWS_AS(run_real_experiment(adv, cfg, p, 2), StorageViolationError);
    }
    SUBCASE("bounded-profile config rejects storage above a/2") {
        BsmExperimentConfig bad = cfg;
        bad.storage_bits = p.a;  // > a/2
        CHECK_FALSE(bad.validate(p, true).empty());
        CHECK(bad.validate(p, false).empty());
    }
}

TEST_CASE("advantage estimation separates the two stock profiles") {
    PrgParams p;
    p.a = 256;
    p.b = 16;
    p.t = 32;
    BsmExperimentConfig cfg;
    cfg.T = 4;
    cfg.trials = 400;
    cfg.seed = 2024;

    SUBCASE("constant adversary has no advantage") {
        cfg.storage_bits = 0;
        const auto est = estimate_advantage(
            [] { return std::make_unique<ConstantBsmAdversary>(1); }, cfg, p);
        CHECK(est.advantage == doctest::Approx(0.0));
    }
    SUBCASE("block hoarding wins, forwarding does not") {
        cfg.storage_bits = static_cast<std::uint64_t>(cfg.T) * p.a;
        const auto unbounded = estimate_advantage(
            [&p] { return std::make_unique<BlockHoardingAdversary>(p); }, cfg, p);
        CHECK(unbounded.advantage >= 0.4);
        cfg.storage_bits = 128;
        const auto bounded = estimate_advantage(
            [] { return std::make_unique<ForwardingAdversary>(); }, cfg, p);
        CHECK(bounded.advantage <= 0.05);
    }
}

TEST_SUITE_END();
