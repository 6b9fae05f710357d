#include "sada/sada_problem.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

namespace sada {

std::uint64_t SadaParams::bot_count() const {
    return static_cast<std::uint64_t>(std::llround(gamma * static_cast<double>(n) / (1.0 - gamma)));
}

std::vector<std::string> SadaParams::validate() const {
    std::vector<std::string> v;
    if (a == 0) v.push_back("sada: a must be positive");
    if (b == 0 || b > 32) v.push_back("sada: b must be in [1,32]");
    if (d == 0 || d > 16) v.push_back("sada: d must be in [1,16]");
    if (d + b > 63) v.push_back("sada: update width d+b must fit in 63 bits");
    if (n == 0) v.push_back("sada: n must be positive");
    if (m <= n) v.push_back("sada: m must exceed n");
    if (!(gamma > 0.0 && gamma < 1.0)) v.push_back("sada: gamma must lie in (0,1)");
    if (gamma > 0.0 && gamma < 1.0 && n > 0) {
        const double bot = gamma * static_cast<double>(n) / (1.0 - gamma);
        if (std::abs(bot - std::llround(bot)) > 1e-9 || std::llround(bot) < 1)
            v.push_back("sada: gamma*n/(1-gamma) must be a positive integer");
    }
    if (m > n && ((m - n) % bulk_len()) != 0)
        v.push_back("sada: m-n must be a positive multiple of (a+1)*2^d");
    return v;
}

void SadaParams::check() const {
    auto v = validate();
    if (!v.empty()) throw ValidationError(std::move(v));
}

void validate_sada_update(const SadaUpdate& u, const SadaParams& pr) {
    if (u.bits >> pr.update_width())
        throw DecodeError("sada update exceeds its d+b bit width");
}

std::size_t sada_sample_size(double alpha, double beta, double gamma, std::uint64_t m) {
    const double s = 8.0 / (alpha * alpha * gamma) *
                     std::log(3.0 * static_cast<double>(m) / beta);
    return static_cast<std::size_t>(std::ceil(s));
}

// --------------------------------------------------------------------------
// SadaEvaluator

SadaEvaluator::SadaEvaluator(const SadaParams& params, const PrgParams& prg)
    : params_(params), prg_(prg), present_(std::size_t{1} << params.d, false) {
    params_.check();
    prg_.check();
    if (prg_.a != params_.a || prg_.b != params_.b)
        throw ValidationError({"sada: PRG (a,b) must match problem (a,b)"});
}

bool SadaEvaluator::present(Point p) const { return present_[p]; }

double SadaEvaluator::process(const SadaUpdate& u) {
    validate_sada_update(u, params_);
    double out = 0.0;
    if (!in_query_phase()) {
        ++counts_[u.bits];
        ++data_count_;
        present_[sada_point(u, params_)] = true;
    } else {
        const std::uint64_t qpos = step_ - params_.n;
        const std::uint64_t bulk_pos = qpos % params_.bulk_len();
        const Point p = static_cast<Point>(bulk_pos / (params_.a + 1));
        const std::uint64_t off = bulk_pos % (params_.a + 1);
        if (present(p)) {
            if (off < params_.a)
                gamma_[p].push_back(static_cast<std::uint8_t>(sada_first_bit(u)));
            else
                sigma_[p] = sada_first_bit(u);
        }
        if (bulk_pos == params_.bulk_len() - 1) out = eval_bulk();
    }
    ++step_;
    return out;
}

double SadaEvaluator::eval_bulk() {
    std::uint64_t hits = 0;
    for (const auto& [pk, count] : counts_) {
        const SadaUpdate u{pk};
        const Point p = sada_point(u, params_);
        const std::uint64_t k = sada_key(u, params_);
        VectorBlockSource src(gamma_.at(p));
        const int y = prg_eval(src, PrgKey{k, params_.b}, prg_);
        const int f = sigma_.at(p) ^ y;
        if (f) hits += count;
    }
    gamma_.clear();
    sigma_.clear();
    const std::uint64_t total = data_count_ + params_.bot_count();
    return static_cast<double>(params_.bot_count() + hits) / static_cast<double>(total);
}

bool SadaEvaluator::mid_bulk() const {
    return in_query_phase() && ((step_ - params_.n) % params_.bulk_len()) != 0;
}

std::uint64_t SadaEvaluator::state_bits() const {
    std::uint64_t bits = 64 + 1 + 32 +
                         counts_.size() * (params_.update_width() + 32);
    if (in_query_phase()) {
        std::uint64_t present_points = 0;
        for (bool x : present_)
            if (x) ++present_points;
        // A present point costs its full a-bit block accumulator plus the
        // sigma bit for the rest of the bulk.
        bits += 64 + present_points * (params_.a + 1);
    }
    return bits;
}

void SadaEvaluator::serialize_state(BitWriter& w) const {
    w.write(step_, 64);
    w.write(in_query_phase() ? 1 : 0, 1);
    w.write(static_cast<std::uint32_t>(counts_.size()), 32);
    for (const auto& [pk, count] : counts_) {
        w.write(pk, params_.update_width());
        w.write(count, 32);
    }
    if (in_query_phase()) {
        w.write(step_ - params_.n, 64);
        for (Point p = 0; p < present_.size(); ++p) {
            if (!present_[p]) continue;
            auto it = gamma_.find(p);
            for (unsigned i = 0; i < params_.a; ++i) {
                const int bit = (it != gamma_.end() && i < it->second.size())
                                    ? it->second[i]
                                    : 0;
                w.write(static_cast<std::uint64_t>(bit), 1);
            }
            auto is = sigma_.find(p);
            w.write(is == sigma_.end() ? 0 : static_cast<std::uint64_t>(is->second), 1);
        }
    }
}

void SadaEvaluator::deserialize_state(BitReader& r) {
    counts_.clear();
    gamma_.clear();
    sigma_.clear();
    present_.assign(std::size_t{1} << params_.d, false);
    step_ = r.read(64);
    const bool query_phase = r.read(1) != 0;
    const auto n_entries = static_cast<std::size_t>(r.read(32));
    data_count_ = 0;
    for (std::size_t i = 0; i < n_entries; ++i) {
        const std::uint64_t pk = r.read(params_.update_width());
        const auto count = static_cast<std::uint32_t>(r.read(32));
        counts_[pk] = count;
        data_count_ += count;
        present_[sada_point(SadaUpdate{pk}, params_)] = true;
    }
    if (query_phase) {
        const std::uint64_t qpos = r.read(64);
        const std::uint64_t bulk_pos = qpos % params_.bulk_len();
        for (Point p = 0; p < present_.size(); ++p) {
            if (!present_[p]) continue;
            std::vector<std::uint8_t> g(params_.a);
            for (unsigned i = 0; i < params_.a; ++i)
                g[i] = static_cast<std::uint8_t>(r.read(1));
            const int sig = static_cast<int>(r.read(1));
            // Reconstruct how much of this point's segment has actually
            // been consumed in the current bulk.
            const std::uint64_t seg_start = static_cast<std::uint64_t>(p) * (params_.a + 1);
            if (bulk_pos > seg_start) {
                const std::uint64_t consumed = std::min<std::uint64_t>(
                    bulk_pos - seg_start, params_.a + 1);
                g.resize(std::min<std::uint64_t>(consumed, params_.a));
                gamma_[p] = std::move(g);
                if (consumed > params_.a) sigma_[p] = sig;
            }
        }
    }
}

// --------------------------------------------------------------------------
// ObliviousSada

ObliviousSada::ObliviousSada(const SadaParams& params, const PrgParams& prg,
                             std::size_t sample_size, std::uint64_t seed)
    : params_(params),
      prg_(prg),
      sample_size_(sample_size),
      keep_all_(sample_size >= params.n + params.bot_count()),
      tape_(seed) {
    params_.check();
    prg_.check();
    if (sample_size == 0) throw ValidationError({"sada: sample size must be positive"});
    if (prg_.a != params_.a || prg_.b != params_.b)
        throw ValidationError({"sada: PRG (a,b) must match problem (a,b)"});
    if (!keep_all_) slots_.resize(sample_size_);
}

void ObliviousSada::feed_sample(const SampleItem& item) {
    ++items_seen_;
    if (keep_all_) {
        slots_.push_back(item);
        if (item.bot) ++bot_slots_;
        return;
    }
    for (auto& s : slots_) {
        if (tape_.below(items_seen_) == 0) {
            if (s.bot) --bot_slots_;
            s = item;
            if (s.bot) ++bot_slots_;
        }
    }
}

void ObliviousSada::finalize_sample() {
    bot_mult_ = 0;
    keyed_.clear();
    for (const auto& s : slots_) {
        if (s.bot) {
            ++bot_mult_;
        } else {
            const SadaUpdate u{s.pk};
            ++keyed_[sada_point(u, params_)][sada_key(u, params_)];
        }
    }
    sample_final_ = true;
}

double ObliviousSada::process(const SadaUpdate& u) {
    validate_sada_update(u, params_);
    double out = 0.0;
    if (step_ < params_.n) {
        feed_sample(SampleItem{false, u.bits});
        if (step_ + 1 == params_.n) {
            for (std::uint64_t i = 0; i < params_.bot_count(); ++i)
                feed_sample(SampleItem{true, 0});
            finalize_sample();
        }
    } else {
        const std::uint64_t qpos = step_ - params_.n;
        const std::uint64_t bulk_pos = qpos % params_.bulk_len();
        const Point p = static_cast<Point>(bulk_pos / (params_.a + 1));
        const std::uint64_t off = bulk_pos % (params_.a + 1);
        if (p == 0 && off == 0) hits_ = 0;
        if (off == 0) {
            cursors_.clear();
            if (auto it = keyed_.find(p); it != keyed_.end())
                for (const auto& [k, mult] : it->second) {
                    (void)mult;
                    cursors_.emplace(k, PrgCursor(PrgKey{k, params_.b}, prg_));
                }
        }
        if (off < params_.a) {
            const int bit = sada_first_bit(u);
            for (auto& [k, cur] : cursors_) {
                (void)k;
                cur.feed(bit);
            }
        } else {
            const int sigma = sada_first_bit(u);
            if (auto it = keyed_.find(p); it != keyed_.end())
                for (const auto& [k, mult] : it->second)
                    if ((sigma ^ cursors_.at(k).output()) & 1) hits_ += mult;
            cursors_.clear();
        }
        if (bulk_pos == params_.bulk_len() - 1)
            out = static_cast<double>(bot_mult_ + hits_) /
                  static_cast<double>(slots_.size());
    }
    ++step_;
    return out;
}

bool ObliviousSada::mid_bulk() const {
    return step_ > params_.n && ((step_ - params_.n) % params_.bulk_len()) != 0;
}

std::uint64_t ObliviousSada::state_bits() const {
    std::uint64_t bits = 64 + 1 + 64 + 64;  // items seen, phase, position, slot count
    bits += slots_.size() * 1 + (slots_.size() - bot_slots_) * params_.update_width();
    bits += 32;  // live cursor count
    if (!cursors_.empty())
        bits += cursors_.size() * cursors_.begin()->second.state_bits();
    bits += 64;  // bulk hit accumulator
    return bits;
}

void ObliviousSada::serialize_state(BitWriter& w) const {
    w.write(items_seen_, 64);
    w.write(step_ >= params_.n ? 1 : 0, 1);
    w.write(step_ >= params_.n ? step_ - params_.n : 0, 64);
    w.write(slots_.size(), 64);
    for (const auto& s : slots_) {
        w.write(s.bot ? 1 : 0, 1);
        if (!s.bot) w.write(s.pk, params_.update_width());
    }
    w.write(static_cast<std::uint32_t>(cursors_.size()), 32);
    for (const auto& [k, cur] : cursors_) {
        (void)k;
        cur.serialize_state(w);
    }
    w.write(hits_, 64);
}

void ObliviousSada::deserialize_state(BitReader& r) {
    items_seen_ = r.read(64);
    const bool query_phase = r.read(1) != 0;
    const std::uint64_t qpos = r.read(64);
    step_ = query_phase ? params_.n + qpos : items_seen_;
    const auto n_slots = static_cast<std::size_t>(r.read(64));
    slots_.assign(n_slots, SampleItem{});
    bot_slots_ = 0;
    for (auto& s : slots_) {
        s.bot = r.read(1) != 0;
        s.pk = s.bot ? 0 : r.read(params_.update_width());
        if (s.bot) ++bot_slots_;
    }
    if (query_phase || items_seen_ >= params_.n + params_.bot_count())
        finalize_sample();
    cursors_.clear();
    const auto n_cursors = static_cast<std::size_t>(r.read(32));
    for (std::size_t i = 0; i < n_cursors; ++i) {
        PrgCursor cur(PrgKey{0, params_.b}, prg_);
        cur.deserialize_state(r);
        cursors_.emplace(cur.key().bits, std::move(cur));
    }
    hits_ = r.read(64);
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

void write_sada_stream(const std::string& path, const SadaParams& params,
                       const std::vector<SadaUpdate>& updates) {
    params.check();
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("cannot open " + path + " for writing");
    put_bytes(f, "SADA", 4);
    put_le<std::uint32_t>(f, params.a);
    put_le<std::uint32_t>(f, params.b);
    put_le<std::uint32_t>(f, params.d);
    put_le<std::uint64_t>(f, params.m);
    put_le<std::uint64_t>(f, params.n);
    std::uint64_t gbits;
    static_assert(sizeof(double) == 8);
    std::memcpy(&gbits, &params.gamma, 8);
    put_le<std::uint64_t>(f, gbits);
    put_le<std::uint64_t>(f, updates.size());
    BitWriter w;
    for (const auto& u : updates) {
        validate_sada_update(u, params);
        w.write(u.bits, params.update_width());
    }
    const auto& bytes = w.bytes();
    if (!bytes.empty()) put_bytes(f, bytes.data(), bytes.size());
}

std::pair<SadaParams, std::vector<SadaUpdate>> read_sada_stream(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error("cannot open " + path);
    char magic[4];
    get_bytes(f, magic, 4);
    if (std::string(magic, 4) != "SADA") throw DecodeError("bad magic for sada stream");
    SadaParams p;
    p.a = get_le<std::uint32_t>(f);
    p.b = get_le<std::uint32_t>(f);
    p.d = get_le<std::uint32_t>(f);
    p.m = get_le<std::uint64_t>(f);
    p.n = get_le<std::uint64_t>(f);
    const std::uint64_t gbits = get_le<std::uint64_t>(f);
    std::memcpy(&p.gamma, &gbits, 8);
    p.check();
    const std::uint64_t count = get_le<std::uint64_t>(f);
    const std::uint64_t total_bits = count * p.update_width();
    std::vector<std::uint8_t> payload((total_bits + 7) / 8);
    if (!payload.empty())
        get_bytes(f, payload.data(), payload.size());
    BitReader r(payload, total_bits);
    std::vector<SadaUpdate> updates(count);
    for (auto& u : updates) u.bits = r.read(p.update_width());
    return {p, std::move(updates)};
}

}  // namespace sada
