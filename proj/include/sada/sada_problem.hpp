#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "sada/bsm_prg.hpp"
#include "sada/game.hpp"
#include "sada/tape.hpp"

namespace sada {

/// Problem shape for the bulk-query streaming problem: updates are
/// (point, key) pairs of d+b bits; after the first n updates, every bulk of
/// (a+1)*2^d updates encodes one query to be evaluated on the stored
/// multiset, which also carries gamma*n/(1-gamma) padding symbols.
struct SadaParams {
    unsigned a = 16;
    unsigned b = 8;
    unsigned d = 3;
    std::uint64_t m = 0;
    std::uint64_t n = 0;
    double gamma = 0.2;

    std::uint64_t bot_count() const;
    std::uint64_t bulk_len() const { return (std::uint64_t{a} + 1) << d; }
    std::uint64_t query_bulks() const { return (m - n) / bulk_len(); }
    unsigned update_width() const { return d + b; }

    std::vector<std::string> validate() const;
    void check() const;
};

struct SadaUpdate {
    std::uint64_t bits = 0;
};

inline SadaUpdate make_sada_update(Point p, std::uint64_t key, const SadaParams& pr) {
    return SadaUpdate{(key << pr.d) | p};
}
inline Point sada_point(const SadaUpdate& u, const SadaParams& pr) {
    return static_cast<Point>(u.bits & ((std::uint64_t{1} << pr.d) - 1));
}
inline std::uint64_t sada_key(const SadaUpdate& u, const SadaParams& pr) {
    return (u.bits >> pr.d) & (pr.b == 64 ? ~0ull : ((std::uint64_t{1} << pr.b) - 1));
}
inline int sada_first_bit(const SadaUpdate& u) { return static_cast<int>(u.bits & 1u); }
void validate_sada_update(const SadaUpdate& u, const SadaParams& pr);

/// One stream element: a (point,key) pair or the reserved padding symbol,
/// which never appears on the wire.
struct SampleItem {
    bool bot = false;
    std::uint64_t pk = 0;
    bool operator==(const SampleItem&) const = default;
};

/// s independent single-item reservoirs: after N fed items each slot holds a
/// uniform, independent pick among them.
template <class T>
class IndependentReservoir {
public:
    explicit IndependentReservoir(std::size_t capacity) : slots_(capacity) {}

    template <class R>
    void feed(const T& item, R& rng) {
        ++seen_;
        for (auto& s : slots_)
            if (rng.below(seen_) == 0) s = item;
    }

    std::uint64_t items_seen() const { return seen_; }
    const std::vector<T>& slots() const { return slots_; }

private:
    std::vector<T> slots_;
    std::uint64_t seen_ = 0;
};

/// Sample size that makes the oblivious algorithm accurate on fixed streams:
/// ceil(8/(alpha^2*gamma) * ln(3m/beta)).
std::size_t sada_sample_size(double alpha, double beta, double gamma, std::uint64_t m);

/// Exact reference evaluator: stores the full multiset, reconstructs each
/// bulk query verbatim and reports the true bulk-end value (0 elsewhere).
class SadaEvaluator : public StreamingAlgorithm<SadaUpdate> {
public:
    SadaEvaluator(const SadaParams& params, const PrgParams& prg);

    double process(const SadaUpdate& u) override;
    std::uint64_t state_bits() const override;
    void serialize_state(BitWriter& w) const override;
    void deserialize_state(BitReader& r) override;
    bool mid_bulk() const override;

    std::uint64_t distinct_pairs() const { return counts_.size(); }

private:
    bool in_query_phase() const { return step_ >= params_.n; }
    bool present(Point p) const;
    double eval_bulk();

    SadaParams params_;
    PrgParams prg_;
    std::vector<bool> present_;
    std::uint64_t step_ = 0;
    std::uint64_t data_count_ = 0;
    std::map<std::uint64_t, std::uint32_t> counts_;  // (p,k) -> multiplicity
    std::map<Point, std::vector<std::uint8_t>> gamma_;
    std::map<Point, int> sigma_;
};

/// The sampling algorithm: keeps an independent uniform sample of the data
/// phase (padding included) and answers each bulk with the sample average.
/// A sample at least as large as the population keeps it outright and
/// degenerates to the exact evaluator.
class ObliviousSada : public StreamingAlgorithm<SadaUpdate> {
public:
    ObliviousSada(const SadaParams& params, const PrgParams& prg,
                  std::size_t sample_size, std::uint64_t seed);

    double process(const SadaUpdate& u) override;
    std::uint64_t state_bits() const override;
    void serialize_state(BitWriter& w) const override;
    void deserialize_state(BitReader& r) override;
    bool mid_bulk() const override;
    void switch_tape() override { tape_.switch_to_second(); }

    const std::vector<SampleItem>& sample() const { return slots_; }

private:
    void feed_sample(const SampleItem& item);
    void finalize_sample();

    SadaParams params_;
    PrgParams prg_;
    std::size_t sample_size_;
    bool keep_all_;
    TapePair tape_;

    std::vector<SampleItem> slots_;
    std::uint64_t items_seen_ = 0;
    std::uint64_t bot_slots_ = 0;
    std::uint64_t step_ = 0;

    bool sample_final_ = false;
    std::uint64_t bot_mult_ = 0;
    std::map<Point, std::map<std::uint64_t, std::uint32_t>> keyed_;

    std::map<std::uint64_t, PrgCursor> cursors_;
    std::uint64_t hits_ = 0;
};

// Stream file format: magic "SADA"; u32 a, b, d; u64 m, n; f64 gamma;
// u64 update count; then the updates packed d+b bits each, little-endian
// within bytes.
void write_sada_stream(const std::string& path, const SadaParams& params,
                       const std::vector<SadaUpdate>& updates);
std::pair<SadaParams, std::vector<SadaUpdate>> read_sada_stream(const std::string& path);

}  // namespace sada
