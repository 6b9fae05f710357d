#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "sada/bits.hpp"
#include "sada/errors.hpp"
#include "sada/stat_query.hpp"

namespace sada {

/// A streaming algorithm over update type U. `process` consumes one update
/// and returns the current output. State accounting covers the serialized
/// state between updates, not transient working memory; `state_bits` must
/// equal the size `serialize_state` would produce.
template <class U>
class StreamingAlgorithm {
public:
    virtual ~StreamingAlgorithm() = default;
    virtual double process(const U& update) = 0;
    virtual std::uint64_t state_bits() const = 0;
    virtual bool snapshot_supported() const { return true; }
    virtual void serialize_state(BitWriter& w) const = 0;
    virtual void deserialize_state(BitReader& r) = 0;
    /// True while inside a partially consumed query bulk.
    virtual bool mid_bulk() const { return false; }
    /// Move the coin supply to its second tape (no-op for coinless handles).
    virtual void switch_tape() {}
};

/// Stream-side adversary. The engine guarantees it never sees the round-i
/// output before emitting the round-i update.
template <class U>
class StreamAdversary {
public:
    virtual ~StreamAdversary() = default;
    virtual U next_update(std::size_t round) = 0;
    virtual void observe_output(std::size_t round, double z) = 0;
};

struct GameReport {
    Transcript transcript;  // (step, output) pairs
    std::vector<double> per_step_truth;
    std::vector<double> per_step_output;
    std::vector<std::uint8_t> step_violation;  // z outside (1 +/- alpha) * truth
    double max_empirical_error = 0.0;
    std::optional<double> max_statistical_error;
    std::uint64_t flip_number = 0;
    std::uint64_t peak_state_bits = 0;
    bool truncated = false;

    bool any_violation() const {
        return std::find(step_violation.begin(), step_violation.end(), 1) !=
               step_violation.end();
    }
};

template <class U>
struct GameOptions {
    double alpha = 0.3;  // multiplicative tolerance for flags and flip count
    std::function<void(const U&)> validate_update;  // throws on malformed updates
};

/// The adversarial streaming game: m rounds of (adversary update, algorithm
/// output), with ground truth tracked by an exact evaluator run in lockstep.
template <class U>
GameReport run_streaming_game(StreamingAlgorithm<U>& algorithm,
                              StreamAdversary<U>& adversary, std::size_t m,
                              StreamingAlgorithm<U>& truth_oracle,
                              const GameOptions<U>& opts = {}) {
    GameReport report;
    report.per_step_truth.reserve(m);
    report.per_step_output.reserve(m);
    report.step_violation.reserve(m);

    for (std::size_t i = 0; i < m; ++i) {
        U x = adversary.next_update(i);
        if (opts.validate_update) {
            try {
                opts.validate_update(x);
            } catch (const std::exception& e) {
                throw ProtocolViolationError(i, e.what());
            }
        }
        const double z = algorithm.process(x);
        const double g = truth_oracle.process(x);
        adversary.observe_output(i, z);

        report.per_step_output.push_back(z);
        report.per_step_truth.push_back(g);
        report.transcript.push(static_cast<std::uint32_t>(i), z);
        const bool bad = (g == 0.0)
                             ? (z != 0.0)
                             : (z < g * (1.0 - opts.alpha) || z > g * (1.0 + opts.alpha));
        report.step_violation.push_back(bad ? 1 : 0);
        report.max_empirical_error =
            std::max(report.max_empirical_error, std::abs(z - g));
        report.peak_state_bits = std::max(report.peak_state_bits, algorithm.state_bits());
    }
    report.flip_number = flip_number(report.per_step_truth, opts.alpha);
    report.truncated = algorithm.mid_bulk() || truth_oracle.mid_bulk();
    return report;
}

/// Replays a stream fixed in advance; the oblivious setting.
template <class U>
class FixedStreamAdversary : public StreamAdversary<U> {
public:
    explicit FixedStreamAdversary(std::vector<U> updates) : updates_(std::move(updates)) {}
    U next_update(std::size_t round) override { return updates_.at(round); }
    void observe_output(std::size_t, double) override {}

private:
    std::vector<U> updates_;
};

/// Query-answering mechanism for the accuracy game.
class Mechanism {
public:
    virtual ~Mechanism() = default;
    virtual void init(std::span<const Point> database) = 0;
    virtual double answer(const StatQuery& q) = 0;
    virtual unsigned domain_bits() const = 0;
};

/// Adaptive analyst: emits queries, sees answers.
class Analyst {
public:
    virtual ~Analyst() = default;
    virtual StatQuery next_query(std::size_t round) = 0;
    virtual void observe_answer(std::size_t round, double z) = 0;
};

/// The accuracy game: ell rounds of adaptively chosen statistical queries.
Transcript run_accuracy_game(Mechanism& mechanism, Analyst& analyst,
                             std::span<const Point> database, std::size_t ell);

/// Answers every query with its exact empirical average.
class ExactEmpiricalMechanism : public Mechanism {
public:
    explicit ExactEmpiricalMechanism(unsigned domain_bits) : d_(domain_bits) {}
    void init(std::span<const Point> database) override {
        db_.assign(database.begin(), database.end());
    }
    double answer(const StatQuery& q) override { return q.average(db_); }
    unsigned domain_bits() const override { return d_; }

private:
    unsigned d_;
    std::vector<Point> db_;
};

}  // namespace sada
