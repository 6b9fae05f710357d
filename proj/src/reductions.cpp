#include "sada/reductions.hpp"

#include <memory>

namespace sada {

std::vector<std::string> MechanismConfig::validate() const {
    std::vector<std::string> v;
    const bool bulk = variant == MechanismVariant::aq || variant == MechanismVariant::aq_otp;
    if (bulk) {
        if (!sada) {
            v.push_back("mechanism: bulk-query variant needs sada params");
            return v;
        }
        auto pv = sada->validate();
        v.insert(v.end(), pv.begin(), pv.end());
        if (v.empty()) {
            if (n != sada->n) v.push_back("mechanism: database size must equal params n");
            if (ell != sada->query_bulks())
                v.push_back("mechanism: ell must equal (m-n)/((a+1)*2^d)");
        }
    } else {
        if (!sada2) {
            v.push_back("mechanism: symmetric variant needs sada2 params");
            return v;
        }
        auto pv = sada2->validate();
        v.insert(v.end(), pv.begin(), pv.end());
        if (v.empty()) {
            if (n >= sada2->m) v.push_back("mechanism: database larger than the stream");
            const std::uint64_t budget =
                n + static_cast<std::uint64_t>(ell) * (std::uint64_t{1} << sada2->d);
            if (budget > sada2->m)
                v.push_back("mechanism: n + ell*2^d must fit the stream budget m");
        }
    }
    return v;
}

void MechanismConfig::check() const {
    auto v = validate();
    if (!v.empty()) throw ValidationError(std::move(v));
}

std::uint64_t measure_compression(const ReductionResult& r) {
    if (!r.snapshot_ok)
        throw CapabilityError("backend does not support state snapshots");
    return r.snapshot_bits;
}

namespace {

std::set<Point> support_of(const std::vector<Point>& db) {
    return std::set<Point>(db.begin(), db.end());
}

void check_db(const std::vector<Point>& db, unsigned d) {
    for (Point p : db)
        if (p >> d) throw ValidationError({"reduction: database point exceeds d bits"});
}

// Query phase of the bulk-query reduction, shared by run and replay.
Transcript sada_query_phase(StreamingAlgorithm<SadaUpdate>& backend, Analyst& analyst,
                            const std::set<Point>& support,
                            const std::vector<std::uint64_t>& keys, const PrgParams& prg,
                            const SadaParams& params, std::size_t ell,
                            std::uint64_t master, bool otp) {
    Transcript transcript;
    const std::uint64_t points = std::uint64_t{1} << params.d;
    for (std::size_t round = 0; round < ell; ++round) {
        const auto j = static_cast<std::uint32_t>(round + 1);
        StatQuery q = analyst.next_query(round);
        if (q.domain_bits() != params.d)
            throw ProtocolViolationError(round, "query not total on the problem domain");
        double z = 0.0;
        for (std::uint64_t pv = 0; pv < points; ++pv) {
            const auto p = static_cast<Point>(pv);
            const std::vector<std::uint8_t> block = gamma_block(master, j, p, params.a);
            for (unsigned i = 0; i < params.a; ++i)
                z = backend.process(SadaUpdate{block[i]});
            int pad;
            if (otp && !support.count(p)) {
                pad = pad_bit(master, j, p);
            } else {
                VectorBlockSource src(block);
                pad = prg_eval(src, PrgKey{keys[pv], params.b}, prg);
            }
            z = backend.process(SadaUpdate{static_cast<std::uint64_t>((pad ^ q(p)) & 1)});
        }
        analyst.observe_answer(round, z);
        transcript.push(static_cast<std::uint32_t>(round), z,
                        std::make_shared<const StatQuery>(std::move(q)));
    }
    return transcript;
}

std::vector<std::uint64_t> sada_point_keys(std::uint64_t master, const SadaParams& params) {
    std::vector<std::uint64_t> keys(std::uint64_t{1} << params.d);
    for (std::uint64_t p = 0; p < keys.size(); ++p)
        keys[p] = point_key_bits(master, static_cast<Point>(p), params.b);
    return keys;
}

// Query phase of the symmetric-problem reduction.
Transcript sada2_query_phase(StreamingAlgorithm<Sada2Update>& backend, Analyst& analyst,
                             const std::set<Point>& support,
                             const std::vector<EncKey>& keys, const EncScheme& scheme,
                             const Sada2Params& params, std::size_t ell,
                             std::uint64_t master, bool natural) {
    Transcript transcript;
    QueryRoundEncoder encoder(params);
    for (std::size_t round = 0; round < ell; ++round) {
        const auto j = static_cast<std::uint32_t>(round + 1);
        StatQuery q = analyst.next_query(round);
        if (q.domain_bits() != params.d)
            throw ProtocolViolationError(round, "query not total on the problem domain");
        // The natural variant feeds the query masked to the database support;
        // everything else is the honest encoding.
        StatQuery fed = natural
                            ? StatQuery(params.d,
                                        [&](Point p) {
                                            return support.count(p) ? q(p) : 0;
                                        })
                            : q;
        const auto updates = encoder.encode(fed, j, [&](int msg, Point p, std::uint32_t jj) {
            return scheme
                .enc_with_nonce(msg, keys[p], enc_nonce(master, jj, p, params.psi - 1))
                .bits;
        });
        double z = 0.0;
        for (const auto& u : updates) z = backend.process(u);
        analyst.observe_answer(round, z);
        transcript.push(static_cast<std::uint32_t>(round), z,
                        std::make_shared<const StatQuery>(std::move(q)));
    }
    return transcript;
}

std::vector<EncKey> sada2_point_keys(std::uint64_t master, const EncScheme& scheme,
                                     const Sada2Params& params) {
    std::vector<EncKey> keys(std::uint64_t{1} << params.d);
    for (std::uint64_t p = 0; p < keys.size(); ++p) {
        Rng krng(derive_seed(master, "pointkey", p));
        keys[p] = scheme.gen(krng);
    }
    return keys;
}

void take_snapshot(ReductionResult& result, const auto& backend) {
    if (backend.snapshot_supported()) {
        BitWriter w;
        backend.serialize_state(w);
        result.snapshot_bits = w.bit_size();
        result.snapshot = w.take();
        result.snapshot_ok = true;
    }
}

}  // namespace

ReductionResult run_answer_queries(const std::vector<Point>& db, Analyst& analyst,
                                   const SadaBackendFactory& make_backend,
                                   const PrgParams& prg, const SadaParams& params,
                                   std::size_t ell, std::uint64_t master_seed, bool otp) {
    MechanismConfig cfg;
    cfg.variant = otp ? MechanismVariant::aq_otp : MechanismVariant::aq;
    cfg.sada = params;
    cfg.n = db.size();
    cfg.ell = ell;
    cfg.check();
    check_db(db, params.d);

    const auto keys = sada_point_keys(master_seed, params);
    auto backend = make_backend(backend_seed(master_seed));
    for (Point p : db) backend->process(make_sada_update(p, keys[p], params));
    backend->switch_tape();

    ReductionResult result;
    take_snapshot(result, *backend);
    result.transcript = sada_query_phase(*backend, analyst, support_of(db), keys, prg,
                                         params, ell, master_seed, otp);
    return result;
}

Transcript replay_answer_queries(const std::vector<std::uint8_t>& snapshot,
                                 const std::vector<Point>& db, Analyst& analyst,
                                 const SadaBackendFactory& make_backend,
                                 const PrgParams& prg, const SadaParams& params,
                                 std::size_t ell, std::uint64_t master_seed, bool otp) {
    const auto keys = sada_point_keys(master_seed, params);
    auto backend = make_backend(backend_seed(master_seed));
    BitReader r(snapshot);
    backend->deserialize_state(r);
    backend->switch_tape();
    return sada_query_phase(*backend, analyst, support_of(db), keys, prg, params, ell,
                            master_seed, otp);
}

ReductionResult run_answer_queries2(const std::vector<Point>& db, Analyst& analyst,
                                    const Sada2BackendFactory& make_backend,
                                    const EncScheme& scheme, const Sada2Params& params,
                                    std::size_t ell, std::uint64_t master_seed,
                                    bool natural) {
    MechanismConfig cfg;
    cfg.variant = natural ? MechanismVariant::aq2_natural : MechanismVariant::aq2;
    cfg.sada2 = params;
    cfg.n = db.size();
    cfg.ell = ell;
    cfg.check();
    check_db(db, params.d);
    if (scheme.kappa() != params.kappa || scheme.psi() != params.psi)
        throw ValidationError({"reduction: scheme (kappa,psi) must match the problem"});

    const auto keys = sada2_point_keys(master_seed, scheme, params);
    auto backend = make_backend(backend_seed(master_seed));
    for (Point p : db) backend->process(Sada2Update::data_update(p, keys[p].bits));
    backend->switch_tape();

    ReductionResult result;
    take_snapshot(result, *backend);
    result.transcript = sada2_query_phase(*backend, analyst, support_of(db), keys,
                                          scheme, params, ell, master_seed, natural);
    return result;
}

Transcript replay_answer_queries2(const std::vector<std::uint8_t>& snapshot,
                                  const std::vector<Point>& db, Analyst& analyst,
                                  const Sada2BackendFactory& make_backend,
                                  const EncScheme& scheme, const Sada2Params& params,
                                  std::size_t ell, std::uint64_t master_seed,
                                  bool natural) {
    const auto keys = sada2_point_keys(master_seed, scheme, params);
    auto backend = make_backend(backend_seed(master_seed));
    BitReader r(snapshot);
    backend->deserialize_state(r);
    backend->switch_tape();
    return sada2_query_phase(*backend, analyst, support_of(db), keys, scheme, params,
                             ell, master_seed, natural);
}

// --------------------------------------------------------------------------

Sada2ReductionMechanism::Sada2ReductionMechanism(Sada2BackendFactory make_backend,
                                                 const EncScheme& scheme,
                                                 const Sada2Params& params, bool natural,
                                                 std::uint64_t master_seed)
    : make_backend_(std::move(make_backend)),
      scheme_(scheme),
      params_(params),
      natural_(natural),
      master_(master_seed) {
    params_.check();
}

void Sada2ReductionMechanism::init(std::span<const Point> database) {
    check_db(std::vector<Point>(database.begin(), database.end()), params_.d);
    support_ = std::set<Point>(database.begin(), database.end());
    backend_ = make_backend_(backend_seed(master_));
    for (Point p : database) {
        Rng krng(derive_seed(master_, "pointkey", p));
        backend_->process(Sada2Update::data_update(p, scheme_.gen(krng).bits));
    }
    backend_->switch_tape();
    round_ = 0;
}

double Sada2ReductionMechanism::answer(const StatQuery& q) {
    if (!backend_) throw Error("mechanism not initialized");
    const auto j = ++round_;
    const std::uint64_t points = std::uint64_t{1} << params_.d;
    double z = 0.0;
    for (std::uint64_t pv = 0; pv < points; ++pv) {
        const auto p = static_cast<Point>(pv);
        const int msg = (natural_ && !support_.count(p)) ? 0 : q(p);
        Rng krng(derive_seed(master_, "pointkey", p));
        const EncKey key = scheme_.gen(krng);
        const Ciphertext c =
            scheme_.enc_with_nonce(msg, key, enc_nonce(master_, j, p, params_.psi - 1));
        z = backend_->process(Sada2Update::query_update(p, j, c.bits));
    }
    return z;
}

SadaReductionMechanism::SadaReductionMechanism(SadaBackendFactory make_backend,
                                               const PrgParams& prg,
                                               const SadaParams& params, bool otp,
                                               std::uint64_t master_seed)
    : make_backend_(std::move(make_backend)),
      prg_(prg),
      params_(params),
      otp_(otp),
      master_(master_seed) {
    params_.check();
}

void SadaReductionMechanism::init(std::span<const Point> database) {
    if (database.size() != params_.n)
        throw ValidationError({"mechanism: database size must equal params n"});
    check_db(std::vector<Point>(database.begin(), database.end()), params_.d);
    support_ = std::set<Point>(database.begin(), database.end());
    backend_ = make_backend_(backend_seed(master_));
    for (Point p : database)
        backend_->process(
            make_sada_update(p, point_key_bits(master_, p, params_.b), params_));
    backend_->switch_tape();
    round_ = 0;
}

double SadaReductionMechanism::answer(const StatQuery& q) {
    if (!backend_) throw Error("mechanism not initialized");
    const auto j = ++round_;
    const std::uint64_t points = std::uint64_t{1} << params_.d;
    double z = 0.0;
    for (std::uint64_t pv = 0; pv < points; ++pv) {
        const auto p = static_cast<Point>(pv);
        const std::vector<std::uint8_t> block = gamma_block(master_, j, p, params_.a);
        for (unsigned i = 0; i < params_.a; ++i) z = backend_->process(SadaUpdate{block[i]});
        int pad;
        if (otp_ && !support_.count(p)) {
            pad = pad_bit(master_, j, p);
        } else {
            VectorBlockSource src(block);
            pad = prg_eval(src, PrgKey{point_key_bits(master_, p, params_.b), params_.b},
                           prg_);
        }
        z = backend_->process(SadaUpdate{static_cast<std::uint64_t>((pad ^ q(p)) & 1)});
    }
    return z;
}

}  // namespace sada
