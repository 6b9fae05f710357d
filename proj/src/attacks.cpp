#include "sada/attacks.hpp"

#include <algorithm>
#include <cmath>

#include "sada/seeding.hpp"

namespace sada {

MembershipProbeAnalyst::MembershipProbeAnalyst(unsigned domain_bits,
                                               const AttackConfig& cfg,
                                               std::size_t sample_size_hint)
    : d_(domain_bits), cfg_(cfg) {
    // The all-zero baseline occupies the first probe-phase slot, so at most
    // 2^d points plus the baseline fit.
    const std::uint64_t domain = std::uint64_t{1} << d_;
    if (cfg_.probe_set_size == 0 || cfg_.probe_set_size > domain + 1)
        throw ValidationError({"attack: probe_set_size must be in [1, 2^d + 1]"});
    threshold_ = cfg_.decision_threshold > 0.0
                     ? cfg_.decision_threshold
                     : 1.0 / (2.0 * static_cast<double>(std::max<std::size_t>(
                                       sample_size_hint, 1)));
    const std::size_t n_probes = cfg_.probe_set_size - 1;
    if (!cfg_.probe_points.empty()) {
        probes_ = cfg_.probe_points;
        if (probes_.size() > n_probes) probes_.resize(n_probes);
    } else {
        // Uniform distinct probe points.
        Rng rng(derive_seed(cfg_.seed, "probe-set"));
        std::set<Point> chosen;
        while (chosen.size() < std::min<std::uint64_t>(n_probes, domain))
            chosen.insert(static_cast<Point>(rng.bits(d_)));
        probes_.assign(chosen.begin(), chosen.end());
    }
}

StatQuery MembershipProbeAnalyst::next_query(std::size_t round) {
    if (round == 0) return StatQuery::constant(d_, 0);  // baseline
    if (round <= probes_.size()) return StatQuery::singleton(d_, probes_[round - 1]);
    if (!classified_) classify();
    // Evasion: hit everything the mechanism's sample does not see.
    return StatQuery(d_, [this](Point p) { return recovered_.count(p) ? 0 : 1; });
}

void MembershipProbeAnalyst::observe_answer(std::size_t round, double z) {
    if (answers_.size() <= round) answers_.resize(round + 1, 0.0);
    answers_[round] = z;
}

void MembershipProbeAnalyst::classify() {
    classified_ = true;
    recovered_.clear();
    if (answers_.empty()) return;
    baseline_ = answers_[0];
    for (std::size_t i = 0; i < probes_.size() && i + 1 < answers_.size(); ++i)
        if (answers_[i + 1] > baseline_ + threshold_) recovered_.insert(probes_[i]);
}

// --------------------------------------------------------------------------

Sada2StreamAdversary::Sada2StreamAdversary(std::vector<Point> db, Analyst& analyst,
                                           const EncScheme& scheme,
                                           const Sada2Params& params,
                                           std::uint64_t master_seed)
    : db_(std::move(db)),
      analyst_(analyst),
      scheme_(scheme),
      params_(params),
      master_(master_seed),
      encoder_(params) {
    keys_.resize(std::uint64_t{1} << params_.d);
    for (std::uint64_t p = 0; p < keys_.size(); ++p) {
        Rng krng(derive_seed(master_, "pointkey", p));
        keys_[p] = scheme_.gen(krng);
    }
}

Sada2Update Sada2StreamAdversary::next_update(std::size_t round) {
    if (round < db_.size())
        return Sada2Update::data_update(db_[round], keys_[db_[round]].bits);
    if (pending_.empty()) {
        const auto j = static_cast<std::uint32_t>(++query_round_);
        StatQuery q = analyst_.next_query(query_round_ - 1);
        auto updates = encoder_.encode(q, j, [&](int msg, Point p, std::uint32_t jj) {
            return scheme_
                .enc_with_nonce(msg, keys_[p], enc_nonce(master_, jj, p, params_.psi - 1))
                .bits;
        });
        pending_.assign(updates.begin(), updates.end());
    }
    const Sada2Update u = pending_.front();
    pending_.pop_front();
    return u;
}

void Sada2StreamAdversary::observe_output(std::size_t round, double z) {
    if (round < db_.size()) return;
    const std::uint64_t qpos = round - db_.size() + 1;
    if (qpos % (std::uint64_t{1} << params_.d) == 0) {
        round_answers_.push_back(z);
        analyst_.observe_answer(round_answers_.size() - 1, z);
    }
}

// --------------------------------------------------------------------------

Sada2TrialResult run_sada2_game_trial(const Sada2TrialConfig& cfg) {
    cfg.params.check();
    const std::uint64_t points = std::uint64_t{1} << cfg.params.d;
    const std::uint64_t m_steps = cfg.n + cfg.rounds * points;
    if (m_steps > cfg.params.m)
        throw ValidationError({"trial: n + rounds*2^d exceeds the stream budget m"});

    EncScheme scheme(cfg.params.kappa, cfg.params.psi);
    const std::vector<Point> db = draw_database(cfg.seed, cfg.n, cfg.params.d);
    std::set<Point> support(db.begin(), db.end());

    std::unique_ptr<Analyst> analyst;
    MembershipProbeAnalyst* probe = nullptr;
    if (cfg.analyst == Sada2TrialConfig::AnalystKind::probe) {
        AttackConfig acfg = cfg.attack;
        acfg.seed = derive_seed(cfg.seed, "attack");
        if (cfg.probe_database_support && acfg.probe_points.empty())
            acfg.probe_points.assign(support.begin(), support.end());
        auto owned = std::make_unique<MembershipProbeAnalyst>(
            cfg.params.d, acfg, std::max<std::size_t>(cfg.sample_size, 1));
        probe = owned.get();
        analyst = std::move(owned);
    } else {
        analyst = std::make_unique<RandomQueryAnalyst>(cfg.params.d, cfg.rounds,
                                                       analyst_seed(cfg.seed));
    }

    std::unique_ptr<StreamingAlgorithm<Sada2Update>> algorithm;
    ObliviousSada2* oblivious = nullptr;
    if (cfg.sample_size > 0) {
        auto owned = std::make_unique<ObliviousSada2>(cfg.params, scheme.dec_fn(),
                                                      cfg.sample_size,
                                                      backend_seed(cfg.seed));
        oblivious = owned.get();
        algorithm = std::move(owned);
    } else {
        algorithm = std::make_unique<Sada2Evaluator>(cfg.params, scheme.dec_fn());
    }
    Sada2Evaluator oracle(cfg.params, scheme.dec_fn());
    Sada2StreamAdversary adversary(db, *analyst, scheme, cfg.params, cfg.seed);

    GameOptions<Sada2Update> opts;
    opts.alpha = cfg.alpha_rel;
    opts.validate_update = [&](const Sada2Update& u) {
        validate_sada2_update(u, cfg.params);
    };
    Sada2TrialResult result;
    result.report = run_streaming_game(*algorithm, adversary, m_steps, oracle, opts);
    result.violated = result.report.any_violation();
    for (std::size_t i = 0; i < result.report.per_step_truth.size(); ++i) {
        const double g = result.report.per_step_truth[i];
        if (g > 0.0)
            result.max_rel_deviation =
                std::max(result.max_rel_deviation,
                         std::abs(result.report.per_step_output[i] - g) / g);
    }

    if (probe != nullptr) {
        result.has_attack = true;
        AttackReport& ar = result.attack;
        ar.run_id = cfg.seed;
        ar.recovered_size = probe->recovered().size();
        std::size_t tp = 0;
        for (Point p : probe->recovered())
            if (support.count(p) && (oblivious == nullptr || oblivious->is_sampled(p)))
                ++tp;
        ar.true_positive_rate =
            ar.recovered_size == 0
                ? 0.0
                : static_cast<double>(tp) / static_cast<double>(ar.recovered_size);
        // Error achieved at the evasion step (the last update of the final
        // attack round), if the budget reached it.
        const std::size_t evasion_round = probe->rounds_needed();
        if (cfg.rounds >= evasion_round) {
            const std::size_t step = cfg.n + evasion_round * points - 1;
            ar.phase2_error = std::abs(result.report.per_step_output[step] -
                                       result.report.per_step_truth[step]);
        }
        ar.violated = result.violated;
    }
    return result;
}

}  // namespace sada
