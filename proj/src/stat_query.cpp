#include "sada/stat_query.hpp"

#include <cmath>
#include <cstring>

#include "sada/rng.hpp"

namespace sada {

namespace {
constexpr unsigned kMaxDomainBits = 20;

void check_domain_bits(unsigned d) {
    if (d == 0 || d > kMaxDomainBits)
        throw Error("query domain bits must be in [1, " + std::to_string(kMaxDomainBits) + "]");
}
}  // namespace

StatQuery::StatQuery(unsigned domain_bits, std::vector<std::uint8_t> table)
    : d_(domain_bits), table_(std::move(table)) {
    check_domain_bits(d_);
    if (table_.size() != (std::size_t{1} << d_))
        throw Error("query table does not cover the domain");
    for (auto& v : table_)
        if (v > 1) throw Error("query values must be bits");
}

StatQuery::StatQuery(unsigned domain_bits, const std::function<int(Point)>& pred)
    : d_(domain_bits) {
    check_domain_bits(d_);
    table_.resize(std::size_t{1} << d_);
    for (std::size_t p = 0; p < table_.size(); ++p) {
        const int v = pred(static_cast<Point>(p));
        if (v != 0 && v != 1) throw Error("predicate must be {0,1}-valued");
        table_[p] = static_cast<std::uint8_t>(v);
    }
}

StatQuery StatQuery::constant(unsigned domain_bits, int value) {
    return StatQuery(domain_bits,
                     std::vector<std::uint8_t>(std::size_t{1} << domain_bits,
                                               static_cast<std::uint8_t>(value)));
}

StatQuery StatQuery::singleton(unsigned domain_bits, Point p) {
    std::vector<std::uint8_t> t(std::size_t{1} << domain_bits, 0);
    t.at(p) = 1;
    return StatQuery(domain_bits, std::move(t));
}

StatQuery StatQuery::random(unsigned domain_bits, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<std::uint8_t> t(std::size_t{1} << domain_bits);
    for (auto& v : t) v = static_cast<std::uint8_t>(rng.bit());
    return StatQuery(domain_bits, std::move(t));
}

double StatQuery::mean() const {
    std::uint64_t s = 0;
    for (auto v : table_) s += v;
    return static_cast<double>(s) / static_cast<double>(table_.size());
}

double StatQuery::average(std::span<const Point> db) const {
    if (db.empty()) throw Error("empirical average over an empty database");
    std::uint64_t s = 0;
    for (Point p : db) s += table_.at(p);
    return static_cast<double>(s) / static_cast<double>(db.size());
}

std::uint16_t quantize_answer(double z) {
    if (!(z > 0.0)) z = 0.0;
    if (z > 1.0) z = 1.0;
    return static_cast<std::uint16_t>(std::lround(z * 65535.0));
}

double dequantize_answer(std::uint16_t q) { return static_cast<double>(q) / 65535.0; }

std::vector<std::uint8_t> Transcript::serialize() const {
    std::vector<std::uint8_t> out;
    out.reserve(4 + 6 * entries_.size());
    auto put_u32 = [&](std::uint32_t v) {
        for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    };
    put_u32(static_cast<std::uint32_t>(entries_.size()));
    for (const auto& e : entries_) {
        put_u32(e.query_id);
        const std::uint16_t q = quantize_answer(e.answer);
        out.push_back(static_cast<std::uint8_t>(q & 0xFF));
        out.push_back(static_cast<std::uint8_t>(q >> 8));
    }
    return out;
}

Transcript Transcript::deserialize(const std::vector<std::uint8_t>& bytes) {
    std::size_t pos = 0;
    auto get_u8 = [&]() -> std::uint8_t {
        if (pos >= bytes.size()) throw DecodeError("truncated transcript");
        return bytes[pos++];
    };
    auto get_u32 = [&]() {
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(get_u8()) << (8 * i);
        return v;
    };
    const std::uint32_t n = get_u32();
    Transcript t;
    for (std::uint32_t i = 0; i < n; ++i) {
        const std::uint32_t id = get_u32();
        std::uint16_t q = get_u8();
        q |= static_cast<std::uint16_t>(get_u8()) << 8;
        t.push(id, dequantize_answer(q));
    }
    if (pos != bytes.size()) throw DecodeError("trailing bytes after transcript");
    return t;
}

bool Transcript::operator==(const Transcript& o) const {
    if (entries_.size() != o.entries_.size()) return false;
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        if (entries_[i].query_id != o.entries_[i].query_id) return false;
        if (quantize_answer(entries_[i].answer) != quantize_answer(o.entries_[i].answer))
            return false;
    }
    return true;
}

bool Transcript::identical(const Transcript& o) const {
    if (entries_.size() != o.entries_.size()) return false;
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        if (entries_[i].query_id != o.entries_[i].query_id) return false;
        if (std::memcmp(&entries_[i].answer, &o.entries_[i].answer, sizeof(double)) != 0)
            return false;
    }
    return true;
}

double UniformDistribution::query_mean(const StatQuery& q) const {
    if (q.domain_bits() != d_) throw Error("query domain does not match distribution");
    return q.mean();
}

Point UniformDistribution::sample(std::uint64_t seed, std::uint64_t index) const {
    return static_cast<Point>(Rng(derive_seed(seed, "uniform-dist", index)).bits(d_));
}

double empirical_error(const Transcript& t, std::span<const Point> db) {
    double worst = 0.0;
    for (const auto& e : t.entries()) {
        if (!e.query) throw CapabilityError("transcript entry lacks its query");
        worst = std::max(worst, std::abs(e.query->average(db) - e.answer));
    }
    return worst;
}

double statistical_error(const Transcript& t, const Distribution& dist) {
    double worst = 0.0;
    for (const auto& e : t.entries()) {
        if (!e.query) throw CapabilityError("transcript entry lacks its query");
        worst = std::max(worst, std::abs(dist.query_mean(*e.query) - e.answer));
    }
    return worst;
}

std::uint64_t flip_number(std::span<const double> values, double alpha) {
    if (!(alpha > 0.0)) throw Error("flip_number requires alpha > 0");
    if (values.empty()) return 0;
    std::uint64_t flips = 0;
    double anchor = values[0];
    for (std::size_t i = 1; i < values.size(); ++i) {
        const double v = values[i];
        bool flip;
        if (anchor == 0.0) {
            flip = (v != 0.0);
        } else {
            flip = (v < anchor / (1.0 + alpha)) || (v > anchor * (1.0 + alpha));
        }
        if (flip) {
            ++flips;
            anchor = v;
        }
    }
    return flips;
}

std::uint64_t transcript_bits(const Transcript& t, unsigned answer_bits) {
    return static_cast<std::uint64_t>(t.size()) * answer_bits;
}

}  // namespace sada
