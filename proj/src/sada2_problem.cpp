#include "sada/sada2_problem.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

namespace sada {

std::uint64_t Sada2Params::bot_symbols() const {
    return static_cast<std::uint64_t>(
        std::llround(gamma * static_cast<double>(std::uint64_t{1} << d)));
}

std::vector<std::string> Sada2Params::validate() const {
    std::vector<std::string> v;
    if (d == 0 || d > 16) v.push_back("sada2: d must be in [1,16]");
    if (!is_power_of_two(m)) v.push_back("sada2: m must be a power of two");
    if (kappa == 0 || kappa > 64) v.push_back("sada2: kappa must be in [1,64]");
    if (psi < 2 || psi > 64) v.push_back("sada2: psi must be in [2,64]");
    if (!(gamma > 0.0 && gamma < 1.0)) v.push_back("sada2: gamma must lie in (0,1)");
    if (gamma > 0.0 && gamma < 1.0 && d > 0 && d <= 16) {
        const double bot = gamma * static_cast<double>(std::uint64_t{1} << d);
        if (std::abs(bot - std::llround(bot)) > 1e-9 || std::llround(bot) < 1)
            v.push_back("sada2: gamma*2^d must be a positive integer");
    }
    if (is_power_of_two(m) && kappa > index_bits() + psi)
        v.push_back("sada2: kappa must fit the padded data field (kappa <= log2(m)+psi)");
    return v;
}

void Sada2Params::check() const {
    auto v = validate();
    if (!v.empty()) throw ValidationError(std::move(v));
}

void validate_sada2_update(const Sada2Update& u, const Sada2Params& pr) {
    if (u.p >> pr.d) throw DecodeError("sada2 update point exceeds d bits");
    if (u.kind == Sada2Update::Kind::data) {
        if (pr.kappa < 64 && (u.key >> pr.kappa))
            throw DecodeError("sada2 data key exceeds kappa bits");
    } else {
        if (u.j >> pr.index_bits()) throw DecodeError("sada2 round index exceeds log2(m) bits");
        if (pr.psi < 64 && (u.c >> pr.psi))
            throw DecodeError("sada2 ciphertext exceeds psi bits");
    }
}

void Sada2Update::pack(BitWriter& w, const Sada2Params& pr) const {
    validate_sada2_update(*this, pr);
    w.write(kind == Kind::query ? 1 : 0, 1);
    w.write(p, pr.d);
    if (kind == Kind::data) {
        w.write(key, pr.kappa);
        w.write(0, pr.index_bits() + pr.psi - pr.kappa);  // zero padding
    } else {
        w.write(j, pr.index_bits());
        w.write(c, pr.psi);
    }
}

Sada2Update Sada2Update::unpack(BitReader& r, const Sada2Params& pr) {
    Sada2Update u;
    u.kind = r.read(1) ? Kind::query : Kind::data;
    u.p = static_cast<Point>(r.read(pr.d));
    if (u.kind == Kind::data) {
        u.key = r.read(pr.kappa);
        if (r.read(pr.index_bits() + pr.psi - pr.kappa) != 0)
            throw DecodeError("sada2 data update has nonzero padding");
    } else {
        u.j = static_cast<std::uint32_t>(r.read(pr.index_bits()));
        u.c = r.read(pr.psi);
    }
    return u;
}

std::size_t sada2_sample_size(double alpha, double beta, double gamma, std::uint64_t m) {
    const double s = 8.0 / (alpha * alpha * gamma * gamma) *
                     std::log(3.0 * static_cast<double>(m) / beta);
    return static_cast<std::size_t>(std::ceil(s));
}

// --------------------------------------------------------------------------
// Sada2Evaluator

Sada2Evaluator::Sada2Evaluator(const Sada2Params& params, DecFn dec)
    : params_(params), dec_(std::move(dec)) {
    params_.check();
    if (!dec_) throw Error("sada2 evaluator needs a decryption function");
}

int Sada2Evaluator::contribution(const PointState& ps) const {
    return ps.present ? dec_(ps.c, ps.key) : 0;
}

void Sada2Evaluator::fold(PointState& ps, const Sada2Update& u) {
    if (u.kind == Sada2Update::Kind::data) {
        if (!ps.present) {
            ps.present = true;
            ++present_count_;
        }
        ps.key &= u.key;
    } else {
        if (u.j > ps.j) {
            ps.j = u.j;
            ps.c = u.c;
        } else if (u.j == ps.j) {
            ps.c &= u.c;
        }
    }
}

double Sada2Evaluator::process(const Sada2Update& u) {
    validate_sada2_update(u, params_);
    auto [it, fresh] = points_.try_emplace(
        u.p, PointState{false, params_.all_ones_key(), 0, params_.all_ones_cipher()});
    dec_sum_ -= contribution(it->second);
    fold(it->second, u);
    dec_sum_ += contribution(it->second);
    return current();
}

double Sada2Evaluator::current() const {
    const auto bot = static_cast<double>(params_.bot_symbols());
    return (bot + static_cast<double>(dec_sum_)) /
           (bot + static_cast<double>(present_count_));
}

std::uint64_t Sada2Evaluator::state_bits() const {
    return 32 + points_.size() *
                    (params_.d + 1 + params_.kappa + params_.index_bits() + params_.psi);
}

void Sada2Evaluator::serialize_state(BitWriter& w) const {
    w.write(static_cast<std::uint32_t>(points_.size()), 32);
    for (const auto& [p, ps] : points_) {
        w.write(p, params_.d);
        w.write(ps.present ? 1 : 0, 1);
        w.write(ps.key, params_.kappa);
        w.write(ps.j, params_.index_bits());
        w.write(ps.c, params_.psi);
    }
}

void Sada2Evaluator::deserialize_state(BitReader& r) {
    points_.clear();
    present_count_ = 0;
    dec_sum_ = 0;
    const auto n = static_cast<std::size_t>(r.read(32));
    for (std::size_t i = 0; i < n; ++i) {
        const Point p = static_cast<Point>(r.read(params_.d));
        PointState ps;
        ps.present = r.read(1) != 0;
        ps.key = r.read(params_.kappa);
        ps.j = static_cast<std::uint32_t>(r.read(params_.index_bits()));
        ps.c = r.read(params_.psi);
        if (ps.present) ++present_count_;
        dec_sum_ += contribution(ps);
        points_.emplace(p, ps);
    }
}

// --------------------------------------------------------------------------
// ObliviousSada2

ObliviousSada2::ObliviousSada2(const Sada2Params& params, DecFn dec,
                               std::size_t sample_size, std::uint64_t seed)
    : params_(params), dec_(std::move(dec)), tape_(seed) {
    params_.check();
    if (!dec_) throw Error("sada2 algorithm needs a decryption function");
    if (sample_size == 0) throw ValidationError({"sada2: sample size must be positive"});
    const std::uint64_t domain = (std::uint64_t{1} << params_.d) + params_.bot_symbols();
    elements_.resize(sample_size);
    for (auto& e : elements_) e = static_cast<std::uint32_t>(tape_.below(domain));
    index_sample();
}

ObliviousSada2::ObliviousSada2(const Sada2Params& params, DecFn dec,
                               std::vector<std::uint32_t> elements, std::uint64_t seed)
    : params_(params), dec_(std::move(dec)), tape_(seed), elements_(std::move(elements)) {
    params_.check();
    if (!dec_) throw Error("sada2 algorithm needs a decryption function");
    if (elements_.empty()) throw ValidationError({"sada2: sample size must be positive"});
    const std::uint64_t domain = (std::uint64_t{1} << params_.d) + params_.bot_symbols();
    for (auto e : elements_)
        if (e >= domain) throw ValidationError({"sada2: injected sample element out of range"});
    index_sample();
}

void ObliviousSada2::index_sample() {
    bot_mult_ = 0;
    tracked_.clear();
    present_weight_ = dec_weight_ = 0;
    const std::uint64_t points = std::uint64_t{1} << params_.d;
    for (auto e : elements_) {
        if (e < points) {
            auto [it, fresh] = tracked_.try_emplace(
                static_cast<Point>(e),
                PointState{0, false, params_.all_ones_key(), 0, params_.all_ones_cipher()});
            ++it->second.mult;
        } else {
            ++bot_mult_;
        }
    }
}

std::vector<Point> ObliviousSada2::sampled_points() const {
    std::vector<Point> out;
    out.reserve(tracked_.size());
    for (const auto& [p, ps] : tracked_) {
        (void)ps;
        out.push_back(p);
    }
    return out;
}

int ObliviousSada2::contribution(const PointState& ps) const {
    return ps.in_s ? dec_(ps.c, ps.key) : 0;
}

double ObliviousSada2::process(const Sada2Update& u) {
    validate_sada2_update(u, params_);
    auto it = tracked_.find(u.p);
    if (it != tracked_.end()) {
        PointState& ps = it->second;
        const std::int64_t w = ps.mult;
        dec_weight_ -= w * contribution(ps);
        if (u.kind == Sada2Update::Kind::data) {
            if (!ps.in_s) {
                ps.in_s = true;
                present_weight_ += w;
            }
            ps.key &= u.key;
        } else {
            if (u.j > ps.j) {
                ps.j = u.j;
                ps.c = u.c;
            } else if (u.j == ps.j) {
                ps.c &= u.c;
            }
        }
        dec_weight_ += w * contribution(ps);
    }
    return current();
}

double ObliviousSada2::current() const {
    const std::int64_t v = static_cast<std::int64_t>(bot_mult_) + present_weight_;
    if (v == 0) return 1.0;  // empty sample multiset: padding-only semantics
    return (static_cast<double>(bot_mult_) + static_cast<double>(dec_weight_)) /
           static_cast<double>(v);
}

std::uint64_t ObliviousSada2::state_bits() const {
    // Per-element accounting in draw order: a padding element stores its tag
    // and symbol id; a point element additionally carries the tracked
    // (in-S flag, key, index, ciphertext) record.
    const std::uint64_t point_elems = elements_.size() - bot_mult_;
    const std::uint64_t per_point =
        1 + params_.d + 1 + params_.kappa + params_.index_bits() + params_.psi;
    return 64 + bot_mult_ * (1 + params_.d) + point_elems * per_point;
}

void ObliviousSada2::serialize_state(BitWriter& w) const {
    w.write(elements_.size(), 64);
    const std::uint64_t points = std::uint64_t{1} << params_.d;
    for (auto e : elements_) {
        const bool bot = e >= points;
        w.write(bot ? 1 : 0, 1);
        if (bot) {
            w.write(e - points, params_.d);
        } else {
            const PointState& ps = tracked_.at(static_cast<Point>(e));
            w.write(e, params_.d);
            w.write(ps.in_s ? 1 : 0, 1);
            w.write(ps.key, params_.kappa);
            w.write(ps.j, params_.index_bits());
            w.write(ps.c, params_.psi);
        }
    }
}

void ObliviousSada2::deserialize_state(BitReader& r) {
    const auto n = static_cast<std::size_t>(r.read(64));
    const std::uint64_t points = std::uint64_t{1} << params_.d;
    elements_.assign(n, 0);
    tracked_.clear();
    bot_mult_ = 0;
    present_weight_ = dec_weight_ = 0;
    std::map<Point, PointState> state;
    for (auto& e : elements_) {
        const bool bot = r.read(1) != 0;
        if (bot) {
            e = static_cast<std::uint32_t>(points + r.read(params_.d));
            ++bot_mult_;
        } else {
            e = static_cast<std::uint32_t>(r.read(params_.d));
            PointState ps;
            ps.in_s = r.read(1) != 0;
            ps.key = r.read(params_.kappa);
            ps.j = static_cast<std::uint32_t>(r.read(params_.index_bits()));
            ps.c = r.read(params_.psi);
            auto [it, fresh] = state.try_emplace(static_cast<Point>(e), ps);
            ++it->second.mult;
        }
    }
    tracked_ = std::move(state);
    for (const auto& [p, ps] : tracked_) {
        (void)p;
        if (ps.in_s) {
            present_weight_ += ps.mult;
            dec_weight_ += static_cast<std::int64_t>(ps.mult) * dec_(ps.c, ps.key);
        }
    }
}

// --------------------------------------------------------------------------
// QueryRoundEncoder

std::vector<Sada2Update> QueryRoundEncoder::encode(const StatQuery& q, std::uint32_t j,
                                                   const EncFn& enc) {
    if (q.domain_bits() != params_.d)
        throw ProtocolViolationError(j, "query domain does not match the problem");
    if (any_ && j <= last_j_)
        throw ProtocolViolationError(j, "round index must strictly increase");
    last_j_ = j;
    any_ = true;
    const std::uint64_t points = std::uint64_t{1} << params_.d;
    std::vector<Sada2Update> out;
    out.reserve(points);
    for (std::uint64_t p = 0; p < points; ++p) {
        const auto point = static_cast<Point>(p);
        out.push_back(Sada2Update::query_update(point, j, enc(q(point), point, j)));
    }
    return out;
}

// --------------------------------------------------------------------------
// Stream files

namespace {
void put_bytes(std::ofstream& f, const void* p, std::size_t n) {
    f.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}
void get_bytes(std::ifstream& f, void* p, std::size_t n) {
    if (!f.read(static_cast<char*>(p), static_cast<std::streamsize>(n)))
        throw DecodeError("stream file truncated");
}
template <class T>
void put_le(std::ofstream& f, T v) {
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        const auto byte = static_cast<unsigned char>((v >> (8 * i)) & 0xFF);
        put_bytes(f, &byte, 1);
    }
}
template <class T>
T get_le(std::ifstream& f) {
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        unsigned char byte;
        get_bytes(f, &byte, 1);
        v |= static_cast<T>(byte) << (8 * i);
    }
    return v;
}
}  // namespace

void write_sada2_stream(const std::string& path, const Sada2Params& params,
                        const std::vector<Sada2Update>& updates) {
    params.check();
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("cannot open " + path + " for writing");
    put_bytes(f, "SAD2", 4);
    put_le<std::uint32_t>(f, params.d);
    put_le<std::uint32_t>(f, params.kappa);
    put_le<std::uint32_t>(f, params.psi);
    put_le<std::uint64_t>(f, params.m);
    std::uint64_t gbits;
    std::memcpy(&gbits, &params.gamma, 8);
    put_le<std::uint64_t>(f, gbits);
    put_le<std::uint64_t>(f, updates.size());
    BitWriter w;
    for (const auto& u : updates) u.pack(w, params);
    const auto& bytes = w.bytes();
    if (!bytes.empty()) put_bytes(f, bytes.data(), bytes.size());
}

std::pair<Sada2Params, std::vector<Sada2Update>> read_sada2_stream(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error("cannot open " + path);
    char magic[4];
    get_bytes(f, magic, 4);
    if (std::string(magic, 4) != "SAD2") throw DecodeError("bad magic for sada2 stream");
    Sada2Params p;
    p.d = get_le<std::uint32_t>(f);
    p.kappa = get_le<std::uint32_t>(f);
    p.psi = get_le<std::uint32_t>(f);
    p.m = get_le<std::uint64_t>(f);
    const std::uint64_t gbits = get_le<std::uint64_t>(f);
    std::memcpy(&p.gamma, &gbits, 8);
    p.check();
    const std::uint64_t count = get_le<std::uint64_t>(f);
    const std::uint64_t total_bits = count * p.update_width();
    std::vector<std::uint8_t> payload((total_bits + 7) / 8);
    if (!payload.empty()) get_bytes(f, payload.data(), payload.size());
    BitReader r(payload, total_bits);
    std::vector<Sada2Update> updates;
    updates.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) updates.push_back(Sada2Update::unpack(r, p));
    return {p, std::move(updates)};
}

}  // namespace sada
