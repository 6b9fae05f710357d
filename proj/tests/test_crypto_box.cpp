#include <doctest.h>

#include <cmath>
#include <memory>
#include <set>

#include "sada/attacks.hpp"
#include "sada/crypto_box.hpp"
#include "sada/reductions.hpp"

using namespace sada;

TEST_SUITE_BEGIN("crypto_box");

TEST_CASE("key generation") {
    EncScheme scheme(16);
    CHECK(scheme.psi() == 17);
    SUBCASE("deterministic under a shared seed") {
        Rng r1(9), r2(9);
        CHECK(scheme.gen(r1).bits == scheme.gen(r2).bits);
    }
    SUBCASE("keys have the right width and unbiased bits") {
        Rng rng(10);
        std::array<int, 16> ones{};
        const int trials = 10000;
        for (int i = 0; i < trials; ++i) {
            const EncKey k = scheme.gen(rng);
            CHECK(k.width == 16);
            CHECK((k.bits >> 16) == 0);
            for (int b = 0; b < 16; ++b) ones[b] += (k.bits >> b) & 1;
        }
        for (int b = 0; b < 16; ++b)
            CHECK(std::abs(ones[b] / double(trials) - 0.5) <= 0.02);
    }
}

TEST_CASE("encryption round-trips and ciphertexts look fresh") {
    EncScheme scheme(16);
    Rng rng(21);
    SUBCASE("round trip") {
        for (int i = 0; i < 1000; ++i) {
            const EncKey k = scheme.gen(rng);
            const Ciphertext c0 = scheme.enc(0, k, rng);
            const Ciphertext c1 = scheme.enc(1, k, rng);
            CHECK(scheme.dec(c0, k) == 0);
            CHECK(scheme.dec(c1, k) == 1);
            CHECK(c0.width == 17);
            CHECK((c0.bits >> 17) == 0);
        }
    }
    SUBCASE("same-message ciphertexts collide only at the nonce rate") {
        const EncKey k = scheme.gen(rng);
        int collisions = 0;
        for (int i = 0; i < 10000; ++i) {
            const Ciphertext a = scheme.enc(1, k, rng);
            const Ciphertext b = scheme.enc(1, k, rng);
            if (a.bits == b.bits) ++collisions;
        }
        // Nonce space 2^16; ~0.15 expected collisions over 1e4 pairs.
        CHECK(collisions <= 5);
    }
}

TEST_CASE("decryption is total") {
    EncScheme scheme(16);
    Rng rng(33);
    const EncKey k = scheme.gen(rng);
    const std::uint64_t all_ones = (std::uint64_t{1} << 17) - 1;
    const int first = scheme.dec(all_ones, k);
    for (int i = 0; i < 10; ++i) CHECK(scheme.dec(all_ones, k) == first);

    // ANDed independent ciphertexts decrypt without bias worth exploiting.
    std::int64_t ones = 0;
    const int trials = 10000;
    for (int i = 0; i < trials; ++i) {
        const EncKey kk = scheme.gen(rng);
        const Ciphertext c1 = scheme.enc(rng.bit(), kk, rng);
        const Ciphertext c2 = scheme.enc(rng.bit(), kk, rng);
        ones += scheme.dec(c1.bits & c2.bits, kk);
    }
    CHECK(std::abs(ones / double(trials) - 0.5) <= 0.1);
}

namespace {

class NoCallAdversary : public OracleAdversary {
public:
    int run(EncOracle&) override { return 42 & 1; }
};

// Encrypts 0 through the oracle and folds the ciphertext bits into its output.
class ZeroMessageAdversary : public OracleAdversary {
public:
    int run(EncOracle& oracle) override {
        std::uint64_t acc = 0;
        for (std::size_t i = 0; i < 8; ++i) acc ^= oracle.query(i, 0).bits;
        return static_cast<int>(acc & 1u);
    }
};

}  // namespace

TEST_CASE("semantic game worlds") {
    EncScheme scheme(12, 13);
    SUBCASE("no oracle calls: worlds identical") {
        NoCallAdversary a1, a2;
        const auto r1 = run_semantic_game(a1, 8, 1, scheme, 77);
        const auto r0 = run_semantic_game(a2, 8, 0, scheme, 77);
        CHECK(r1.output == r0.output);
        CHECK(r1.oracle_calls == 0);
    }
    SUBCASE("zero-message adversary sees identical oracles") {
        ZeroMessageAdversary a1, a2;
        const auto r1 = run_semantic_game(a1, 8, 1, scheme, 78);
        const auto r0 = run_semantic_game(a2, 8, 0, scheme, 78);
        CHECK(r1.output == r0.output);
        CHECK(r1.oracle_calls == 8);
    }
    SUBCASE("out-of-range key index is oracle abuse") {
        class Abuser : public OracleAdversary {
        public:
            int run(EncOracle& oracle) override {
                oracle.query(8, 1);
                return 0;
            }
        } adv;
        CHECK_THROWS_AS(run_semantic_game(adv, 8, 1, scheme, 79), OracleAbuseError);
    }
}

TEST_CASE("reduction adversary bridges the oracle game and the mechanisms") {
    Sada2Params p;
    p.d = 6;
    p.gamma = 1.0 / 64.0;  // one padding symbol
    p.kappa = 12;
    p.psi = 13;
    p.m = 2048;
    EncScheme scheme(p.kappa, p.psi);
    const std::size_t n = 32, ell = 6;
    Sada2BackendFactory bf = [&p, &scheme](std::uint64_t) {
        return std::make_unique<Sada2Evaluator>(p, scheme.dec_fn());
    };
    AnalystFactory af = [&p, ell](std::uint64_t seed) -> std::unique_ptr<Analyst> {
        return std::make_unique<RandomQueryAnalyst>(p.d, ell, seed);
    };

    SUBCASE("exact backend with a generous alpha never flags a failure") {
        for (int i = 0; i < 10; ++i) {
            const std::uint64_t master = derive_seed(606, "t", i);
            for (int world = 0; world <= 1; ++world) {
                AdversaryB b(bf, af, p, n, ell, 0.45, master);
                const auto r =
                    run_semantic_game(b, std::uint64_t{1} << p.d, world, scheme, master);
                CHECK(r.output == 0);
            }
        }
    }
    SUBCASE("world 1 reproduces the plain mechanism transcript bit for bit") {
        for (int i = 0; i < 10; ++i) {
            const std::uint64_t master = derive_seed(607, "t", i);
            const auto db = draw_database(master, n, p.d);
            RandomQueryAnalyst direct(p.d, ell, analyst_seed(master));
            const auto res =
                run_answer_queries2(db, direct, bf, scheme, p, ell, master, false);
            AdversaryB b(bf, af, p, n, ell, 0.45, master);
            run_semantic_game(b, std::uint64_t{1} << p.d, 1, scheme, master);
            CHECK(b.transcript().identical(res.transcript));
        }
    }
    SUBCASE("world 0 reproduces the natural mechanism transcript bit for bit") {
        for (int i = 0; i < 10; ++i) {
            const std::uint64_t master = derive_seed(608, "t", i);
            const auto db = draw_database(master, n, p.d);
            RandomQueryAnalyst direct(p.d, ell, analyst_seed(master));
            const auto res =
                run_answer_queries2(db, direct, bf, scheme, p, ell, master, true);
            AdversaryB b(bf, af, p, n, ell, 0.45, master);
            run_semantic_game(b, std::uint64_t{1} << p.d, 0, scheme, master);
            CHECK(b.transcript().identical(res.transcript));
        }
    }
    SUBCASE("oracle call accounting") {
        const std::uint64_t master = derive_seed(609, "t");
        const auto db = draw_database(master, n, p.d);
        std::set<Point> support(db.begin(), db.end());
        AdversaryB b(bf, af, p, n, ell, 0.45, master);
        const auto r = run_semantic_game(b, std::uint64_t{1} << p.d, 1, scheme, master);
        CHECK(r.oracle_calls == ell * ((std::uint64_t{1} << p.d) - support.size()));
    }
}

TEST_SUITE_END();
