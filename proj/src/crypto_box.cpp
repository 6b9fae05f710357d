#include "sada/crypto_box.hpp"

#include <bit>
#include <cmath>
#include <set>

#include "sada/errors.hpp"
#include "sada/seeding.hpp"

namespace sada {

EncScheme::EncScheme(unsigned kappa, unsigned psi)
    : kappa_(kappa), psi_(psi == 0 ? kappa + 1 : psi) {
    if (kappa_ == 0 || kappa_ > 63) throw ValidationError({"enc: kappa must be in [1,63]"});
    if (psi_ < 2 || psi_ > 64) throw ValidationError({"enc: psi must be in [2,64]"});
}

int EncScheme::prf_bit(std::uint64_t key, std::uint64_t nonce) {
    std::uint64_t h = mix64(key ^ 0xD6E8FEB86659FD93ULL);
    h = mix64(h ^ nonce ^ 0xC2B2AE3D27D4EB4FULL);
    h = mix64(h + (key << 1 | 1));
    return static_cast<int>(std::popcount(h) & 1u);
}

EncKey EncScheme::gen(Rng& rng) const { return EncKey{rng.bits(kappa_), kappa_}; }

Ciphertext EncScheme::enc_with_nonce(int msg, const EncKey& key, std::uint64_t nonce) const {
    if (key.width != kappa_) throw Error("enc: key length mismatch");
    const unsigned nbits = psi_ - 1;
    nonce &= (std::uint64_t{1} << nbits) - 1;
    const std::uint64_t masked =
        static_cast<std::uint64_t>((msg ^ prf_bit(key.bits, nonce)) & 1);
    return Ciphertext{nonce | (masked << nbits), psi_};
}

Ciphertext EncScheme::enc(int msg, const EncKey& key, Rng& rng) const {
    return enc_with_nonce(msg, key, rng.bits(psi_ - 1));
}

int EncScheme::dec(std::uint64_t ciphertext, const EncKey& key) const {
    if (key.width != kappa_) throw Error("dec: key length mismatch");
    const unsigned nbits = psi_ - 1;
    const std::uint64_t nonce = ciphertext & ((std::uint64_t{1} << nbits) - 1);
    const int masked = static_cast<int>((ciphertext >> nbits) & 1u);
    return masked ^ prf_bit(key.bits, nonce);
}

DecFn EncScheme::dec_fn() const {
    const unsigned kappa = kappa_;
    const EncScheme copy = *this;
    return [copy, kappa](std::uint64_t c, std::uint64_t k) {
        return copy.dec(c, EncKey{k, kappa});
    };
}

// --------------------------------------------------------------------------

EncOracle::EncOracle(const EncScheme& scheme, std::vector<EncKey> keys, int world,
                     std::uint64_t master_seed)
    : scheme_(scheme),
      keys_(std::move(keys)),
      world_(world),
      master_(master_seed),
      per_index_calls_(keys_.size(), 0) {
    if (world_ != 0 && world_ != 1) throw Error("oracle world must be 0 or 1");
}

Ciphertext EncOracle::query(std::size_t index, int msg) {
    if (index >= keys_.size())
        throw OracleAbuseError("oracle key index " + std::to_string(index) +
                               " out of range");
    ++calls_;
    const std::uint32_t call_no = ++per_index_calls_[index];
    const std::uint64_t nonce = enc_nonce(master_, call_no, static_cast<Point>(index),
                                          scheme_.psi() - 1);
    return scheme_.enc_with_nonce(world_ == 1 ? msg : 0, keys_[index], nonce);
}

SemanticGameResult run_semantic_game(OracleAdversary& adv, std::size_t N, int world,
                                     const EncScheme& scheme, std::uint64_t master_seed) {
    if (N == 0) throw Error("semantic game needs at least one key");
    std::vector<EncKey> keys(N);
    for (std::size_t i = 0; i < N; ++i) {
        Rng krng(derive_seed(master_seed, "pointkey", i));
        keys[i] = scheme.gen(krng);
    }
    EncOracle oracle(scheme, std::move(keys), world, master_seed);
    SemanticGameResult result;
    result.output = adv.run(oracle);
    result.oracle_calls = oracle.calls();
    return result;
}

// --------------------------------------------------------------------------

AdversaryB::AdversaryB(Sada2BackendFactory backend, AnalystFactory analyst,
                       const Sada2Params& params, std::size_t n, std::size_t ell,
                       double alpha, std::uint64_t master_seed)
    : backend_factory_(std::move(backend)),
      analyst_factory_(std::move(analyst)),
      params_(params),
      n_(n),
      ell_(ell),
      alpha_(alpha),
      master_(master_seed) {
    params_.check();
}

int AdversaryB::run(EncOracle& oracle) {
    transcript_ = Transcript();
    failure_ = false;

    const std::vector<Point> db = draw_database(master_, n_, params_.d);
    std::set<Point> support(db.begin(), db.end());

    EncScheme scheme(params_.kappa, params_.psi);
    std::map<Point, EncKey> local_keys;
    for (Point p : support) {
        Rng krng(derive_seed(master_, "pointkey", p));
        local_keys.emplace(p, scheme.gen(krng));
    }

    auto backend = backend_factory_(backend_seed(master_));
    for (Point p : db)
        backend->process(Sada2Update::data_update(p, local_keys.at(p).bits));
    backend->switch_tape();

    auto analyst = analyst_factory_(analyst_seed(master_));
    const std::uint64_t points = std::uint64_t{1} << params_.d;
    const UniformDistribution uniform(params_.d);

    for (std::size_t round = 0; round < ell_; ++round) {
        const auto j = static_cast<std::uint32_t>(round + 1);
        StatQuery q = analyst->next_query(round);
        if (q.domain_bits() != params_.d)
            throw ProtocolViolationError(round, "query not total on the problem domain");
        double z = 0.0;
        for (std::uint64_t pv = 0; pv < points; ++pv) {
            const auto p = static_cast<Point>(pv);
            Ciphertext c;
            if (support.count(p)) {
                c = scheme.enc_with_nonce(q(p), local_keys.at(p),
                                          enc_nonce(master_, j, p, params_.psi - 1));
            } else {
                c = oracle.query(p, q(p));
            }
            z = backend->process(Sada2Update::query_update(p, j, c.bits));
        }
        analyst->observe_answer(round, z);
        auto stored = std::make_shared<const StatQuery>(std::move(q));
        transcript_.push(static_cast<std::uint32_t>(round), z, stored);
        if (std::abs(z - uniform.query_mean(*stored)) > alpha_) failure_ = true;
    }
    return failure_ ? 1 : 0;
}

AdvantageEstimateB estimate_semantic_advantage(
    const std::function<std::unique_ptr<OracleAdversary>(std::uint64_t master)>& make_adv,
    std::size_t N, const EncScheme& scheme, std::size_t trials, std::uint64_t seed) {
    if (trials == 0) throw Error("semantic advantage needs at least one trial");
    std::size_t ones1 = 0, ones0 = 0;
    for (std::size_t i = 0; i < trials; ++i) {
        const std::uint64_t master1 = derive_seed(seed, "world1-trial", i);
        auto adv1 = make_adv(master1);
        ones1 += static_cast<std::size_t>(
            run_semantic_game(*adv1, N, 1, scheme, master1).output);
        const std::uint64_t master0 = derive_seed(seed, "world0-trial", i);
        auto adv0 = make_adv(master0);
        ones0 += static_cast<std::size_t>(
            run_semantic_game(*adv0, N, 0, scheme, master0).output);
    }
    AdvantageEstimateB est;
    const double n = static_cast<double>(trials);
    est.p_world1 = ones1 / n;
    est.p_world0 = ones0 / n;
    est.advantage = std::abs(est.p_world1 - est.p_world0);
    est.ci_halfwidth = 1.96 * std::sqrt(est.p_world1 * (1 - est.p_world1) / n +
                                        est.p_world0 * (1 - est.p_world0) / n);
    return est;
}

}  // namespace sada
