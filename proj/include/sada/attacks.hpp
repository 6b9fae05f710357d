#pragma once

#include <cstdint>
#include <deque>
#include <set>
#include <vector>

#include "sada/crypto_box.hpp"
#include "sada/game.hpp"
#include "sada/sada2_problem.hpp"

namespace sada {

/// Oblivious baseline: ell i.i.d. uniform-table queries, answers ignored.
class RandomQueryAnalyst : public Analyst {
public:
    RandomQueryAnalyst(unsigned domain_bits, std::size_t ell, std::uint64_t seed)
        : d_(domain_bits), ell_(ell), seed_(seed) {}

    StatQuery next_query(std::size_t round) override {
        return StatQuery::random(d_, derive_seed(seed_, "query", round));
    }
    void observe_answer(std::size_t, double) override {}
    std::size_t rounds_needed() const { return ell_; }

private:
    unsigned d_;
    std::size_t ell_;
    std::uint64_t seed_;
};

struct AttackConfig {
    /// Rounds spent probing: one all-zero baseline query plus
    /// probe_set_size - 1 singleton probes. One evasion round follows, so
    /// the whole attack takes probe_set_size + 1 rounds.
    std::size_t probe_set_size = 16;
    double decision_threshold = 0.0;  // <=0: half the minimal answer jump 1/(2|D|)
    enum class Target { streaming_sada2, mechanism_ada } target = Target::streaming_sada2;
    std::uint64_t seed = 1;
    std::vector<Point> probe_points;  // explicit probe set; else uniform distinct
};

/// Reconstructs which probed points the mechanism's hidden sample tracks
/// (singleton answers jump by a multiple of 1/v for tracked present points)
/// and then issues one query on which the sample misrepresents the data:
/// 1 everywhere except the recovered points.
class MembershipProbeAnalyst : public Analyst {
public:
    MembershipProbeAnalyst(unsigned domain_bits, const AttackConfig& cfg,
                           std::size_t sample_size_hint);

    StatQuery next_query(std::size_t round) override;
    void observe_answer(std::size_t round, double z) override;

    std::size_t rounds_needed() const { return cfg_.probe_set_size + 1; }
    const std::set<Point>& recovered() const { return recovered_; }
    double baseline_answer() const { return baseline_; }

private:
    void classify();

    unsigned d_;
    AttackConfig cfg_;
    double threshold_;
    std::vector<Point> probes_;
    std::vector<double> answers_;
    std::set<Point> recovered_;
    double baseline_ = 0.0;
    bool classified_ = false;
};

struct AttackReport {
    std::uint64_t run_id = 0;
    std::size_t recovered_size = 0;
    double true_positive_rate = 0.0;
    double phase2_error = 0.0;
    bool violated = false;
};

// ---------------------------------------------------------------------------
// Streaming-game harness: an adaptive stream adversary that feeds a database
// and then honestly encodes the analyst's query rounds.

class Sada2StreamAdversary : public StreamAdversary<Sada2Update> {
public:
    Sada2StreamAdversary(std::vector<Point> db, Analyst& analyst,
                         const EncScheme& scheme, const Sada2Params& params,
                         std::uint64_t master_seed);

    Sada2Update next_update(std::size_t round) override;
    void observe_output(std::size_t round, double z) override;

    const std::vector<double>& round_answers() const { return round_answers_; }

private:
    std::vector<Point> db_;
    Analyst& analyst_;
    EncScheme scheme_;
    Sada2Params params_;
    std::uint64_t master_;
    std::vector<EncKey> keys_;
    QueryRoundEncoder encoder_;
    std::deque<Sada2Update> pending_;
    std::size_t query_round_ = 0;
    std::vector<double> round_answers_;
};

struct Sada2TrialConfig {
    Sada2Params params;
    std::size_t n = 64;
    std::size_t rounds = 20;
    std::size_t sample_size = 0;  // 0: run the exact evaluator as the algorithm
    double alpha_rel = 0.2;       // multiplicative accuracy for violation flags
    enum class AnalystKind { random, probe } analyst = AnalystKind::random;
    AttackConfig attack;
    bool probe_database_support = true;
    std::uint64_t seed = 1;
};

struct Sada2TrialResult {
    GameReport report;
    bool violated = false;
    double max_rel_deviation = 0.0;
    AttackReport attack;
    bool has_attack = false;
};

/// One seeded run of the adversarial streaming game for the symmetric
/// problem: data phase from a seeded database, then analyst-driven query
/// rounds, with the exact evaluator tracking ground truth per step.
Sada2TrialResult run_sada2_game_trial(const Sada2TrialConfig& cfg);

}  // namespace sada
