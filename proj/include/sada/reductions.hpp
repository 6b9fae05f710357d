#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <set>
#include <vector>

#include "sada/crypto_box.hpp"
#include "sada/game.hpp"
#include "sada/sada_problem.hpp"
#include "sada/sada2_problem.hpp"
#include "sada/seeding.hpp"

namespace sada {

enum class MechanismVariant { aq, aq_otp, aq2, aq2_natural };

/// Round budget contract for the reduction mechanisms. The bulk-query
/// reduction always spends whole bulks, so its round count is pinned to
/// (m-n)/((a+1)*2^d); the symmetric-problem reduction may use any prefix of
/// the stream budget (n + ell*2^d <= m).
struct MechanismConfig {
    MechanismVariant variant = MechanismVariant::aq2;
    std::optional<SadaParams> sada;
    std::optional<Sada2Params> sada2;
    std::uint64_t n = 0;
    std::size_t ell = 0;

    std::vector<std::string> validate() const;
    void check() const;
};

using SadaBackendFactory =
    std::function<std::unique_ptr<StreamingAlgorithm<SadaUpdate>>(std::uint64_t seed)>;

struct ReductionResult {
    Transcript transcript;
    std::vector<std::uint8_t> snapshot;  // backend state at the tape switch
    std::uint64_t snapshot_bits = 0;
    bool snapshot_ok = false;
};

/// The transcript-determining quantity: size of the backend snapshot taken
/// at the tape-switch point.
std::uint64_t measure_compression(const ReductionResult& r);

// Bulk-query reduction (point,key) -> statistical queries. `otp` replaces
// the pad for points outside the input database with a fresh uniform bit,
// which makes the mechanism natural.
ReductionResult run_answer_queries(const std::vector<Point>& db, Analyst& analyst,
                                   const SadaBackendFactory& make_backend,
                                   const PrgParams& prg, const SadaParams& params,
                                   std::size_t ell, std::uint64_t master_seed,
                                   bool otp);

/// Query phase only, resuming from a snapshot. External randomness (keys,
/// blocks, pads) is re-derived from the master seed.
Transcript replay_answer_queries(const std::vector<std::uint8_t>& snapshot,
                                 const std::vector<Point>& db, Analyst& analyst,
                                 const SadaBackendFactory& make_backend,
                                 const PrgParams& prg, const SadaParams& params,
                                 std::size_t ell, std::uint64_t master_seed, bool otp);

// Symmetric-problem reduction: queries travel as per-point encryptions.
// `natural` encrypts 0 for points outside the input database.
ReductionResult run_answer_queries2(const std::vector<Point>& db, Analyst& analyst,
                                    const Sada2BackendFactory& make_backend,
                                    const EncScheme& scheme, const Sada2Params& params,
                                    std::size_t ell, std::uint64_t master_seed,
                                    bool natural);

Transcript replay_answer_queries2(const std::vector<std::uint8_t>& snapshot,
                                  const std::vector<Point>& db, Analyst& analyst,
                                  const Sada2BackendFactory& make_backend,
                                  const EncScheme& scheme, const Sada2Params& params,
                                  std::size_t ell, std::uint64_t master_seed,
                                  bool natural);

// ---------------------------------------------------------------------------
// Accuracy-game adapters.

/// Runs the symmetric-problem reduction behind the Mechanism interface.
class Sada2ReductionMechanism : public Mechanism {
public:
    Sada2ReductionMechanism(Sada2BackendFactory make_backend, const EncScheme& scheme,
                            const Sada2Params& params, bool natural,
                            std::uint64_t master_seed);

    void init(std::span<const Point> database) override;
    double answer(const StatQuery& q) override;
    unsigned domain_bits() const override { return params_.d; }

    const StreamingAlgorithm<Sada2Update>* backend() const { return backend_.get(); }

private:
    Sada2BackendFactory make_backend_;
    EncScheme scheme_;
    Sada2Params params_;
    bool natural_;
    std::uint64_t master_;
    std::unique_ptr<StreamingAlgorithm<Sada2Update>> backend_;
    std::set<Point> support_;
    std::uint32_t round_ = 0;
};

/// Runs the bulk-query reduction behind the Mechanism interface.
class SadaReductionMechanism : public Mechanism {
public:
    SadaReductionMechanism(SadaBackendFactory make_backend, const PrgParams& prg,
                           const SadaParams& params, bool otp,
                           std::uint64_t master_seed);

    void init(std::span<const Point> database) override;
    double answer(const StatQuery& q) override;
    unsigned domain_bits() const override { return params_.d; }

private:
    SadaBackendFactory make_backend_;
    PrgParams prg_;
    SadaParams params_;
    bool otp_;
    std::uint64_t master_;
    std::unique_ptr<StreamingAlgorithm<SadaUpdate>> backend_;
    std::set<Point> support_;
    std::uint32_t round_ = 0;
};

}  // namespace sada
