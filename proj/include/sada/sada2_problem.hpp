#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "sada/bits.hpp"
#include "sada/game.hpp"
#include "sada/stat_query.hpp"
#include "sada/tape.hpp"

namespace sada {

/// Decryption callback: total on every psi-bit string.
using DecFn = std::function<int(std::uint64_t ciphertext, std::uint64_t key)>;

/// Symmetric streaming problem over tagged updates of width
/// 1 + d + log2(m) + psi. Keys aggregate by bitwise AND per point;
/// queries are decoded from the highest-indexed query updates.
struct Sada2Params {
    unsigned d = 8;
    std::uint64_t m = 8192;  // power of two so the round-index field is exact
    unsigned kappa = 16;
    unsigned psi = 17;
    double gamma = 0.25;

    std::uint64_t bot_symbols() const;
    unsigned index_bits() const { return ceil_log2(m); }
    unsigned update_width() const { return 1 + d + index_bits() + psi; }
    std::uint64_t all_ones_cipher() const {
        return psi == 64 ? ~0ull : ((std::uint64_t{1} << psi) - 1);
    }
    std::uint64_t all_ones_key() const {
        return kappa == 64 ? ~0ull : ((std::uint64_t{1} << kappa) - 1);
    }

    std::vector<std::string> validate() const;
    void check() const;
};

struct Sada2Update {
    enum class Kind : std::uint8_t { data = 0, query = 1 };
    Kind kind = Kind::data;
    Point p = 0;
    std::uint64_t key = 0;  // data updates
    std::uint32_t j = 0;    // query updates
    std::uint64_t c = 0;    // query updates

    static Sada2Update data_update(Point p, std::uint64_t key) {
        Sada2Update u;
        u.kind = Kind::data;
        u.p = p;
        u.key = key;
        return u;
    }
    static Sada2Update query_update(Point p, std::uint32_t j, std::uint64_t c) {
        Sada2Update u;
        u.kind = Kind::query;
        u.p = p;
        u.j = j;
        u.c = c;
        return u;
    }

    /// Wire form: tag bit, point, then either the key zero-padded to
    /// index_bits+psi (data) or the index and ciphertext fields (query).
    void pack(BitWriter& w, const Sada2Params& pr) const;
    static Sada2Update unpack(BitReader& r, const Sada2Params& pr);
};

void validate_sada2_update(const Sada2Update& u, const Sada2Params& pr);

/// ceil(8/(alpha^2*gamma^2) * ln(3m/beta)).
std::size_t sada2_sample_size(double alpha, double beta, double gamma, std::uint64_t m);

/// Exact evaluator. Tracks per-point key/ciphertext aggregates for every
/// point mentioned in the stream and reports the true value after every
/// update (1 on the empty stream: only padding symbols, which decode to 1).
class Sada2Evaluator : public StreamingAlgorithm<Sada2Update> {
public:
    Sada2Evaluator(const Sada2Params& params, DecFn dec);

    double process(const Sada2Update& u) override;
    double current() const;
    std::uint64_t state_bits() const override;
    void serialize_state(BitWriter& w) const override;
    void deserialize_state(BitReader& r) override;

    std::uint64_t present_count() const { return present_count_; }
    std::uint64_t tracked_points() const { return points_.size(); }

private:
    struct PointState {
        bool present = false;
        std::uint64_t key = 0;  // starts all-ones; AND-accumulates
        std::uint32_t j = 0;
        std::uint64_t c = 0;  // starts all-ones
    };

    void fold(PointState& ps, const Sada2Update& u);
    int contribution(const PointState& ps) const;

    Sada2Params params_;
    DecFn dec_;
    std::map<Point, PointState> points_;
    std::uint64_t present_count_ = 0;
    std::int64_t dec_sum_ = 0;
};

/// The sampling algorithm: draws an i.i.d. multiset over the padded domain
/// up front and maintains the per-point aggregates only inside the sample.
class ObliviousSada2 : public StreamingAlgorithm<Sada2Update> {
public:
    ObliviousSada2(const Sada2Params& params, DecFn dec, std::size_t sample_size,
                   std::uint64_t seed);
    /// Test hook: run with a known sample. Elements index the padded domain
    /// [0, 2^d + bot): values below 2^d are points, the rest padding symbols.
    ObliviousSada2(const Sada2Params& params, DecFn dec,
                   std::vector<std::uint32_t> elements, std::uint64_t seed);

    double process(const Sada2Update& u) override;
    double current() const;
    std::uint64_t state_bits() const override;
    void serialize_state(BitWriter& w) const override;
    void deserialize_state(BitReader& r) override;
    void switch_tape() override { tape_.switch_to_second(); }

    const std::vector<std::uint32_t>& sample_elements() const { return elements_; }
    bool is_sampled(Point p) const { return tracked_.count(p) != 0; }
    std::vector<Point> sampled_points() const;

private:
    struct PointState {
        std::uint32_t mult = 0;
        bool in_s = false;
        std::uint64_t key = 0;
        std::uint32_t j = 0;
        std::uint64_t c = 0;
    };

    void index_sample();
    int contribution(const PointState& ps) const;

    Sada2Params params_;
    DecFn dec_;
    TapePair tape_;
    std::vector<std::uint32_t> elements_;  // draw order, for serialization
    std::uint64_t bot_mult_ = 0;
    std::map<Point, PointState> tracked_;
    std::int64_t present_weight_ = 0;
    std::int64_t dec_weight_ = 0;
};

/// Honest wire encoding of one query round: for every point in canonical
/// order, one query update carrying the encrypted query value. Round
/// indices must strictly increase across calls.
class QueryRoundEncoder {
public:
    using EncFn = std::function<std::uint64_t(int msg, Point p, std::uint32_t j)>;

    explicit QueryRoundEncoder(const Sada2Params& params) : params_(params) {}

    std::vector<Sada2Update> encode(const StatQuery& q, std::uint32_t j,
                                    const EncFn& enc);

private:
    Sada2Params params_;
    std::uint32_t last_j_ = 0;
    bool any_ = false;
};

// Stream file format: magic "SAD2"; u32 d, kappa, psi; u64 m; f64 gamma;
// u64 update count; packed fixed-width updates.
void write_sada2_stream(const std::string& path, const Sada2Params& params,
                        const std::vector<Sada2Update>& updates);
std::pair<Sada2Params, std::vector<Sada2Update>> read_sada2_stream(const std::string& path);

}  // namespace sada
