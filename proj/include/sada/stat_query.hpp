#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "sada/errors.hpp"

namespace sada {

using Point = std::uint32_t;

/// A statistical query: a total {0,1}-valued predicate on {0,1}^d, with the
/// value on the padding symbol fixed to 1. The table is always materialized,
/// which doubles as the totality check (d stays small in this testbed).
class StatQuery {
public:
    StatQuery(unsigned domain_bits, std::vector<std::uint8_t> table);
    StatQuery(unsigned domain_bits, const std::function<int(Point)>& pred);

    static StatQuery constant(unsigned domain_bits, int value);
    static StatQuery singleton(unsigned domain_bits, Point p);
    static StatQuery random(unsigned domain_bits, std::uint64_t seed);

    int operator()(Point p) const { return table_[p]; }
    int bottom() const { return 1; }  // q(bot) is 1 by definition
    unsigned domain_bits() const { return d_; }
    std::size_t domain_size() const { return table_.size(); }

    /// Value on the uniform distribution over {0,1}^d.
    double mean() const;

    /// Empirical average over a database (multiset semantics).
    double average(std::span<const Point> db) const;

    const std::vector<std::uint8_t>& table() const { return table_; }
    bool operator==(const StatQuery& o) const = default;

private:
    unsigned d_;
    std::vector<std::uint8_t> table_;
};

/// 16-bit fixed-point answer encoding used by the canonical transcript
/// serialization; answers are held at full precision in memory.
std::uint16_t quantize_answer(double z);
double dequantize_answer(std::uint16_t q);

struct TranscriptEntry {
    std::uint32_t query_id = 0;
    double answer = 0.0;
    std::shared_ptr<const StatQuery> query;  // optional; dropped on serialization
};

/// Ordered (query, answer) record of one accuracy game.
class Transcript {
public:
    void push(std::uint32_t query_id, double answer,
              std::shared_ptr<const StatQuery> query = nullptr) {
        entries_.push_back({query_id, answer, std::move(query)});
    }

    std::size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }
    const TranscriptEntry& operator[](std::size_t i) const { return entries_[i]; }
    const std::vector<TranscriptEntry>& entries() const { return entries_; }

    /// Canonical serialization: u32 count, then per entry (query-id: u32,
    /// answer: u16 fixed point), all little-endian.
    std::vector<std::uint8_t> serialize() const;
    static Transcript deserialize(const std::vector<std::uint8_t>& bytes);

    /// Equality at the canonical (quantized) resolution; attached query
    /// payloads are not compared.
    bool operator==(const Transcript& o) const;

    /// True only if ids match and answers are bit-identical doubles.
    bool identical(const Transcript& o) const;

private:
    std::vector<TranscriptEntry> entries_;
};

/// Exposes exact query means of a distribution plus a sampler.
class Distribution {
public:
    virtual ~Distribution() = default;
    virtual double query_mean(const StatQuery& q) const = 0;
    virtual Point sample(std::uint64_t seed, std::uint64_t index) const = 0;
};

class UniformDistribution : public Distribution {
public:
    explicit UniformDistribution(unsigned domain_bits) : d_(domain_bits) {}
    double query_mean(const StatQuery& q) const override;
    Point sample(std::uint64_t seed, std::uint64_t index) const override;

private:
    unsigned d_;
};

/// max_i |q_i(db) - z_i|. Requires every entry to carry its query.
double empirical_error(const Transcript& t, std::span<const Point> db);

/// max_i |q_i(dist) - z_i|.
double statistical_error(const Transcript& t, const Distribution& dist);

/// Greedy multiplicative flip count: re-anchor each time a value leaves
/// [v/(1+alpha), v*(1+alpha)] around the current anchor v. An anchor of 0 is
/// left exactly when a nonzero value arrives (and a 0 leaves any nonzero
/// anchor), each counting one flip.
std::uint64_t flip_number(std::span<const double> values, double alpha);

/// Compression accounting for a completed game against a deterministic
/// analyst: the queries are recoverable from the answers, so only the
/// answers count. answer_bits defaults to the canonical 16-bit encoding.
std::uint64_t transcript_bits(const Transcript& t, unsigned answer_bits = 16);

}  // namespace sada
