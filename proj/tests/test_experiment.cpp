#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "sada/experiment.hpp"

using namespace sada;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    REQUIRE(f.good());
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

std::size_t line_count(const std::string& text) {
    std::size_t n = 0;
    for (char c : text)
        if (c == '\n') ++n;
    return n;
}

}  // namespace

TEST_SUITE_BEGIN("experiment");

TEST_CASE("spec parsing") {
    const auto spec = ExperimentSpec::parse_text(
        "# comment\n"
        "kind = flip-number-audit\n"
        "trials = 4   # inline comment\n"
        "seed=9\n"
        "\n"
        "alpha = 0.5\n");
    CHECK(spec.kind() == "flip-number-audit");
    CHECK(spec.trials() == 4);
    CHECK(spec.seed() == 9);
    CHECK(spec.get_real("alpha", 0.0) == doctest::Approx(0.5));
    CHECK_THROWS_AS(ExperimentSpec::parse_text("not a key value line\n"), DecodeError);
}

TEST_CASE("spec validation surfaces every violated constraint") {
    SUBCASE("bulk divisibility is named") {
        auto spec = ExperimentSpec::parse_text(
            "kind = oblivious-accuracy\nproblem = sada\nn = 8\nbulks = 2\n");
        spec.kv["sada_m"] = "100";  // not n + whole bulks
        const auto v = spec.validate();
        REQUIRE_FALSE(v.empty());
        bool found = false;
        for (const auto& s : v)
            if (s.find("multiple") != std::string::npos) found = true;
        CHECK(found);
    }
    SUBCASE("padding integrality is named") {
        const auto spec = ExperimentSpec::parse_text(
            "kind = oblivious-accuracy\nproblem = sada2\nd = 4\ngamma = 0.3\n");
        const auto v = spec.validate();
        REQUIRE_FALSE(v.empty());
        CHECK(v[0].find("2^d") != std::string::npos);
    }
    SUBCASE("unknown kinds are rejected") {
        const auto spec = ExperimentSpec::parse_text("kind = mystery\n");
        CHECK_FALSE(spec.validate().empty());
        CHECK_THROWS_AS(run_experiment(spec), ValidationError);
    }
    SUBCASE("the large parameter family validates without running") {
        // a = 256, b = d = 8, n = 64, m = n + n^2 whole bulks.
        auto spec = ExperimentSpec::parse_text(
            "kind = oblivious-accuracy\nproblem = sada\na = 256\nb = 8\nsada_d = 8\n"
            "n = 64\ngamma = 0.2\nbulks = 4096\nt = 16\ntrials = 0\n");
        CHECK(spec.validate().empty());
    }
}

TEST_CASE("experiment runs are reproducible files") {
    auto spec = ExperimentSpec::parse_text(
        "kind = flip-number-audit\n"
        "sequences = 50\n"
        "length = 24\n"
        "streams = 2\n"
        "rounds = 3\n"
        "n = 8\n"
        "d = 4\n"
        "gamma = 0.25\n"
        "m = 256\n"
        "trials = 2\n"
        "seed = 5\n");
    spec.kv["out"] = "exp_test_a.jsonl";
    const auto first = run_experiment(spec, 1);
    const std::string a = slurp(first.result_path);
    spec.kv["out"] = "exp_test_b.jsonl";
    const auto second = run_experiment(spec, 4);  // jobs must not matter
    const std::string b = slurp(second.result_path);
    CHECK(line_count(a) == 2 + 2);  // spec + 2 stream records + summary
    CHECK(a == b);  // the output path is not echoed into the records

    // Re-running the same spec byte-identically reproduces the file.
    const auto again = run_experiment(spec, 2);
    CHECK(slurp(again.result_path) == b);

    std::remove("exp_test_a.jsonl");
    std::remove("exp_test_b.jsonl");
    std::remove("exp_test_a.jsonl.csv");
    std::remove("exp_test_b.jsonl.csv");
}

TEST_CASE("zero trials yield a summary-only file") {
    auto spec = ExperimentSpec::parse_text(
        "kind = reduction-equivalence\nmode = claim-identity\nproblem = sada2\n"
        "d = 3\ngamma = 0.25\nkappa = 8\npsi = 9\nm = 256\nn = 4\nrounds = 1\n"
        "trials = 0\nseed = 3\nout = exp_test_empty.jsonl\n");
    const auto outcome = run_experiment(spec, 1);
    const std::string text = slurp(outcome.result_path);
    CHECK(line_count(text) == 2);  // spec + summary, no trial records
    std::remove("exp_test_empty.jsonl");
    std::remove("exp_test_empty.jsonl.csv");
}

TEST_CASE("flip audit agrees with its independent recount") {
    auto spec = ExperimentSpec::parse_text(
        "kind = flip-number-audit\nsequences = 300\nlength = 32\nstreams = 2\n"
        "rounds = 3\nn = 8\nd = 4\ngamma = 0.25\nm = 256\ntrials = 1\nseed = 7\n"
        "out = exp_test_flip.jsonl\n");
    run_experiment(spec, 1);
    const std::string text = slurp("exp_test_flip.jsonl");
    CHECK(text.find("\"oracle_matches\":300") != std::string::npos);
    std::remove("exp_test_flip.jsonl");
    std::remove("exp_test_flip.jsonl.csv");
}

TEST_CASE("memory scaling harnesses track the record sizes") {
    Sada2Params p;
    p.d = 8;
    p.gamma = 0.25;
    p.kappa = 16;
    p.psi = 17;
    p.m = 8192;
    const auto alg = sada2_oblivious_memory_scaling(p, {32, 64, 128, 256}, 64, 8, 3);
    CHECK(alg.rel_err <= 0.2);
    const auto ev = sada2_evaluator_memory_scaling(p, {32, 64, 128, 256}, 8, 3);
    CHECK(ev.rel_err <= 0.2);

    SadaParams sp;
    sp.a = 16;
    sp.b = 8;
    sp.d = 6;
    sp.n = 256;
    sp.gamma = 0.2;
    sp.m = sp.n + 2 * sp.bulk_len();
    PrgParams prg;
    prg.a = 16;
    prg.b = 8;
    prg.t = 4;
    const auto salg = sada_oblivious_memory_scaling(sp, prg, {32, 64, 128, 256}, 3);
    CHECK(salg.rel_err <= 0.2);
    const auto sev = sada_evaluator_memory_scaling(prg, {32, 64, 128, 256}, 3);
    CHECK(sev.rel_err <= 0.2);
}

TEST_SUITE_END();
