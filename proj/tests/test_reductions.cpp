#include <doctest.h>

#include <cmath>
#include <map>
#include <memory>
#include <set>

#include "sada/attacks.hpp"
#include "sada/reductions.hpp"

using namespace sada;

namespace {

SadaParams bulk_params(std::uint64_t n, std::uint64_t ell, double gamma = 0.2) {
    SadaParams p;
    p.a = 8;
    p.b = 6;
    p.d = 3;
    p.n = n;
    p.gamma = gamma;
    p.m = n + ell * p.bulk_len();
    return p;
}

PrgParams bulk_prg() {
    PrgParams p;
    p.a = 8;
    p.b = 6;
    p.t = 3;
    return p;
}

Sada2Params sym_params(unsigned d = 4, double gamma = 0.25) {
    Sada2Params p;
    p.d = d;
    p.gamma = gamma;
    p.kappa = 10;
    p.psi = 11;
    p.m = 1024;
    return p;
}

class ScriptedAnalyst : public Analyst {
public:
    explicit ScriptedAnalyst(std::vector<StatQuery> qs) : qs_(std::move(qs)) {}
    StatQuery next_query(std::size_t round) override { return qs_.at(round); }
    void observe_answer(std::size_t, double) override {}

private:
    std::vector<StatQuery> qs_;
};

// Backend spy without snapshot support; also records fed updates.
class RecordingSadaBackend : public StreamingAlgorithm<SadaUpdate> {
public:
    double process(const SadaUpdate& u) override {
        fed.push_back(u.bits);
        return 0.0;
    }
    std::uint64_t state_bits() const override { return 0; }
    bool snapshot_supported() const override { return false; }
    void serialize_state(BitWriter&) const override {
        throw CapabilityError("no snapshots");
    }
    void deserialize_state(BitReader&) override { throw CapabilityError("no snapshots"); }
    std::vector<std::uint64_t> fed;
};

}  // namespace

TEST_SUITE_BEGIN("reductions");

TEST_CASE("tape discipline") {
    TapePair pair(77);
    CHECK(pair.active().id() == 1);
    const std::uint64_t before = pair.draw_bits(16);
    (void)before;
    CHECK(pair.tape1().cursor() == 16);
    pair.switch_to_second();
    CHECK(pair.active().id() == 2);
    pair.draw_bits(8);
    CHECK(pair.tape1().cursor() == 16);  // frozen after the switch
    CHECK(pair.tape2().cursor() == 8);
    CHECK_THROWS_AS(pair.switch_to_second(), Error);

    // Same master seed, fresh pair: tape2 bits do not depend on how much of
    // tape1 was consumed.
    TapePair other(77);
    other.switch_to_second();
    TapePair third(77);
    third.draw_bits(64);
    third.draw_bits(64);
    third.switch_to_second();
    CHECK(other.draw_bits(32) == third.draw_bits(32));
}

TEST_CASE("mechanism config validation") {
    SUBCASE("bulk variant pins the round count") {
        MechanismConfig cfg;
        cfg.variant = MechanismVariant::aq;
        cfg.sada = bulk_params(4, 3);
        cfg.n = 4;
        cfg.ell = 2;
        CHECK_FALSE(cfg.validate().empty());
        cfg.ell = 3;
        CHECK(cfg.validate().empty());
    }
    SUBCASE("symmetric variant requires the budget to fit") {
        MechanismConfig cfg;
        cfg.variant = MechanismVariant::aq2;
        cfg.sada2 = sym_params();
        cfg.n = 16;
        cfg.ell = 100;  // 16 + 100*16 > 1024
        CHECK_FALSE(cfg.validate().empty());
        cfg.ell = 10;
        CHECK(cfg.validate().empty());
    }
}

TEST_CASE("bulk reduction over the exact evaluator realizes the padded average") {
    const PrgParams prg = bulk_prg();
    SadaBackendFactory bf;

    SUBCASE("constant queries") {
        const SadaParams p = bulk_params(4, 2);
        bf = [&p, &prg](std::uint64_t) { return std::make_unique<SadaEvaluator>(p, prg); };
        const std::uint64_t master = 31;
        const auto db = draw_database(master, p.n, p.d);
        ScriptedAnalyst ones({StatQuery::constant(p.d, 1), StatQuery::constant(p.d, 0)});
        const auto res = run_answer_queries(db, ones, bf, prg, p, 2, master, false);
        CHECK(res.transcript[0].answer == doctest::Approx(1.0).epsilon(1e-12));
        const double bot = static_cast<double>(p.bot_count());
        CHECK(res.transcript[1].answer ==
              doctest::Approx(bot / (p.n + bot)).epsilon(1e-12));
    }
    SUBCASE("random cases stay within 1e-12 of the multiset average") {
        for (int rep = 0; rep < 50; ++rep) {
            const std::uint64_t master = derive_seed(404, "case", rep);
            Rng rng(master);
            const std::uint64_t n = 2 + 2 * rng.below(4);  // even n in [2,8]
            const SadaParams p = bulk_params(n, 1, 1.0 / 3.0);
            REQUIRE(p.validate().empty());
            SadaBackendFactory f = [&p, &prg](std::uint64_t) {
                return std::make_unique<SadaEvaluator>(p, prg);
            };
            const auto db = draw_database(master, p.n, p.d);
            ScriptedAnalyst analyst({StatQuery::random(p.d, rng.next())});
            const auto res = run_answer_queries(db, analyst, f, prg, p, 1, master, false);
            double sum = 0.0;
            for (Point q : db) sum += (*res.transcript[0].query)(q);
            const double bot = static_cast<double>(p.bot_count());
            const double expect = (bot + sum) / (static_cast<double>(n) + bot);
            CHECK(std::abs(res.transcript[0].answer - expect) <= 1e-12);
        }
    }
    SUBCASE("pad variant gives identical answers run by run on the exact backend") {
        const SadaParams p = bulk_params(4, 3);
        SadaBackendFactory f = [&p, &prg](std::uint64_t) {
            return std::make_unique<SadaEvaluator>(p, prg);
        };
        for (int rep = 0; rep < 10; ++rep) {
            const std::uint64_t master = derive_seed(505, "case", rep);
            const auto db = draw_database(master, p.n, p.d);
            Rng rng(analyst_seed(master));
            std::vector<StatQuery> qs;
            for (int i = 0; i < 3; ++i) qs.push_back(StatQuery::random(p.d, rng.next()));
            ScriptedAnalyst a1(qs), a2(qs);
            const auto plain = run_answer_queries(db, a1, f, prg, p, 3, master, false);
            const auto otp = run_answer_queries(db, a2, f, prg, p, 3, master, true);
            CHECK(otp.transcript.identical(plain.transcript));
        }
    }
}

TEST_CASE("one-time-pad variant hides query values outside the database") {
    // Two queries agreeing on the database must induce the same distribution
    // of fed pad bits; with the pads XORed in, each outside bit is uniform.
    const SadaParams p = bulk_params(2, 1, 0.5);  // db covers points {they vary}
    const PrgParams prg = bulk_prg();
    std::vector<Point> db = {1, 2};
    StatQuery q1(p.d, [](Point pt) { return pt == 1 ? 1 : 0; });
    StatQuery q2(p.d, [&](Point pt) { return (pt == 1 || pt == 5) ? 1 : 0; });  // differs off-db

    std::map<std::uint64_t, int> hist1, hist2;
    const int trials = 10000;
    for (int rep = 0; rep < trials; ++rep) {
        const std::uint64_t master = derive_seed(707, "w", rep);
        for (int which = 0; which < 2; ++which) {
            auto backend = std::make_shared<RecordingSadaBackend>();
            SadaBackendFactory f = [backend](std::uint64_t) {
                struct Fwd : StreamingAlgorithm<SadaUpdate> {
                    std::shared_ptr<RecordingSadaBackend> inner;
                    explicit Fwd(std::shared_ptr<RecordingSadaBackend> b) : inner(std::move(b)) {}
                    double process(const SadaUpdate& u) override { return inner->process(u); }
                    std::uint64_t state_bits() const override { return 0; }
                    void serialize_state(BitWriter&) const override {}
                    void deserialize_state(BitReader&) override {}
                };
                return std::make_unique<Fwd>(backend);
            };
            ScriptedAnalyst analyst({which == 0 ? q1 : q2});
            run_answer_queries(db, analyst, f, prg, p, 1, master, true);
            // Pad-masked bits sit at the final update of each point segment;
            // collect the ones for the two off-database points 5 and 6.
            std::uint64_t bits = 0;
            int got = 0;
            for (Point pt : {Point{5}, Point{6}}) {
                const std::size_t idx =
                    p.n + static_cast<std::size_t>(pt) * (p.a + 1) + p.a;
                bits = (bits << 1) | (backend->fed.at(idx) & 1u);
                ++got;
            }
            REQUIRE(got == 2);
            (which == 0 ? hist1 : hist2)[bits]++;
        }
    }
    double tv = 0.0;
    for (std::uint64_t key = 0; key < 4; ++key)
        tv += std::abs(hist1[key] - hist2[key]) / double(trials);
    CHECK(tv / 2.0 <= 0.05);
}

TEST_CASE("symmetric reduction over the exact evaluator") {
    const Sada2Params p = sym_params(2, 0.25);  // one padding symbol
    EncScheme scheme(p.kappa, p.psi);
    Sada2BackendFactory bf = [&p, &scheme](std::uint64_t) {
        return std::make_unique<Sada2Evaluator>(p, scheme.dec_fn());
    };

    SUBCASE("two points, half query") {
        std::vector<Point> db = {1, 2};
        StatQuery q(p.d, [](Point pt) { return pt == 1 ? 1 : 0; });
        ScriptedAnalyst analyst({q});
        const auto res = run_answer_queries2(db, analyst, bf, scheme, p, 1, 51, false);
        CHECK(res.transcript[0].answer == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    }
    SUBCASE("duplicate database points collapse") {
        std::vector<Point> dup = {1, 1};
        std::vector<Point> single = {1};
        ScriptedAnalyst a1({StatQuery::singleton(p.d, 1)});
        ScriptedAnalyst a2({StatQuery::singleton(p.d, 1)});
        const auto r1 = run_answer_queries2(dup, a1, bf, scheme, p, 1, 52, false);
        const auto r2 = run_answer_queries2(single, a2, bf, scheme, p, 1, 52, false);
        CHECK(r1.transcript[0].answer == r2.transcript[0].answer);
    }
    SUBCASE("all-ones query answers one") {
        std::vector<Point> db = {0, 3};
        ScriptedAnalyst analyst({StatQuery::constant(p.d, 1)});
        const auto res = run_answer_queries2(db, analyst, bf, scheme, p, 1, 53, false);
        CHECK(res.transcript[0].answer == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("all-zero query leaves only the padding mass") {
        std::vector<Point> db = {0, 3};
        ScriptedAnalyst analyst({StatQuery::constant(p.d, 0)});
        const auto res = run_answer_queries2(db, analyst, bf, scheme, p, 1, 54, false);
        const double bot = static_cast<double>(p.bot_symbols());
        CHECK(res.transcript[0].answer ==
              doctest::Approx(bot / (bot + 2.0)).epsilon(1e-12));
        // The padded answer sits within bot/n of the plain support average.
        CHECK(std::abs(res.transcript[0].answer - 0.0) <= bot / 2.0);
    }
    SUBCASE("natural variant: identical answers on the exact backend") {
        const Sada2Params p4 = sym_params(4, 0.25);
        Sada2BackendFactory f4 = [&p4, &scheme](std::uint64_t) {
            return std::make_unique<Sada2Evaluator>(p4, scheme.dec_fn());
        };
        for (int rep = 0; rep < 10; ++rep) {
            const std::uint64_t master = derive_seed(808, "case", rep);
            const auto db = draw_database(master, 6, p4.d);
            RandomQueryAnalyst a1(p4.d, 4, analyst_seed(master));
            RandomQueryAnalyst a2(p4.d, 4, analyst_seed(master));
            const auto plain = run_answer_queries2(db, a1, f4, scheme, p4, 4, master, false);
            const auto natural = run_answer_queries2(db, a2, f4, scheme, p4, 4, master, true);
            CHECK(natural.transcript.identical(plain.transcript));
        }
    }
    SUBCASE("natural variant feeds identical streams for queries agreeing on P") {
        // Off-database values are replaced by encryptions of zero, so two
        // such queries produce byte-identical ciphertext streams.
        const auto db = draw_database(99, 4, p.d);
        std::set<Point> support(db.begin(), db.end());
        StatQuery base = StatQuery::random(p.d, 1);
        StatQuery twisted(p.d, [&](Point pt) {
            return support.count(pt) ? base(pt) : 1 - base(pt);
        });
        auto run_collect = [&](const StatQuery& q) {
            auto backend = std::make_shared<std::vector<std::uint64_t>>();
            Sada2BackendFactory f = [backend, &p, &scheme](std::uint64_t) {
                struct Rec : StreamingAlgorithm<Sada2Update> {
                    std::shared_ptr<std::vector<std::uint64_t>> out;
                    explicit Rec(std::shared_ptr<std::vector<std::uint64_t>> o)
                        : out(std::move(o)) {}
                    double process(const Sada2Update& u) override {
                        if (u.kind == Sada2Update::Kind::query) out->push_back(u.c);
                        return 0.0;
                    }
                    std::uint64_t state_bits() const override { return 0; }
                    void serialize_state(BitWriter&) const override {}
                    void deserialize_state(BitReader&) override {}
                };
                return std::make_unique<Rec>(backend);
            };
            ScriptedAnalyst analyst({q});
            run_answer_queries2(db, analyst, f, scheme, p, 1, 99, true);
            return *backend;
        };
        CHECK(run_collect(base) == run_collect(twisted));
    }
}

TEST_CASE("compression measurement and replay") {
    const Sada2Params p = sym_params(3, 0.25);  // d=3: 2 padding symbols
    EncScheme scheme(p.kappa, p.psi);
    Sada2BackendFactory bf = [&p, &scheme](std::uint64_t) {
        return std::make_unique<Sada2Evaluator>(p, scheme.dec_fn());
    };

    SUBCASE("snapshot equals the serialized state and is deterministic") {
        const std::uint64_t master = 4040;
        const auto db = draw_database(master, 4, p.d);
        RandomQueryAnalyst a1(p.d, 3, analyst_seed(master));
        const auto r1 = run_answer_queries2(db, a1, bf, scheme, p, 3, master, false);
        RandomQueryAnalyst a2(p.d, 3, analyst_seed(master));
        const auto r2 = run_answer_queries2(db, a2, bf, scheme, p, 3, master, false);
        CHECK(measure_compression(r1) == r1.snapshot_bits);
        CHECK(r1.snapshot == r2.snapshot);
        // The snapshot at the switch point is the evaluator's stored set.
        Sada2Evaluator probe(p, scheme.dec_fn());
        for (Point q : db) probe.process(Sada2Update::data_update(q, 0));
        CHECK(r1.snapshot_bits == probe.state_bits());
    }
    SUBCASE("replay from the snapshot reproduces the transcript") {
        for (int rep = 0; rep < 10; ++rep) {
            const std::uint64_t master = derive_seed(4141, "case", rep);
            const auto db = draw_database(master, 5, p.d);
            RandomQueryAnalyst a1(p.d, 4, analyst_seed(master));
            const auto res = run_answer_queries2(db, a1, bf, scheme, p, 4, master, false);
            RandomQueryAnalyst a2(p.d, 4, analyst_seed(master));
            const auto replay = replay_answer_queries2(res.snapshot, db, a2, bf, scheme,
                                                       p, 4, master, false);
            CHECK(replay.identical(res.transcript));
        }
    }
    SUBCASE("backends without snapshots raise a capability error") {
        ReductionResult r;
        r.snapshot_ok = false;
        CHECK_THROWS_AS(measure_compression(r), CapabilityError);
    }
}

TEST_CASE("generalization holds for the exact backend at modest scale") {
    Sada2Params p;
    p.d = 8;
    p.gamma = 1.0 / 32.0;  // 8 padding symbols
    p.kappa = 12;
    p.psi = 13;
    p.m = 16384;
    EncScheme scheme(p.kappa, p.psi);
    Sada2BackendFactory bf = [&p, &scheme](std::uint64_t) {
        return std::make_unique<Sada2Evaluator>(p, scheme.dec_fn());
    };
    int ok = 0;
    for (int rep = 0; rep < 20; ++rep) {
        const std::uint64_t master = derive_seed(606060, "run", rep);
        Sada2ReductionMechanism mech(bf, scheme, p, false, master);
        AttackConfig acfg;
        acfg.probe_set_size = 49;
        acfg.seed = analyst_seed(master);
        acfg.decision_threshold = 0.5 / (p.bot_symbols() + 200.0);
        MembershipProbeAnalyst analyst(p.d, acfg, 1);
        const auto db = draw_database(master, 200, p.d);
        const auto t = run_accuracy_game(mech, analyst, db, 50);
        if (statistical_error(t, UniformDistribution(p.d)) <= 0.25) ++ok;
    }
    CHECK(ok >= 18);
}

TEST_SUITE_END();
