#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "sada/game.hpp"
#include "sada/rng.hpp"
#include "sada/sada2_problem.hpp"
#include "sada/stat_query.hpp"

namespace sada {

struct EncKey {
    std::uint64_t bits = 0;
    unsigned width = 0;
};

/// psi-bit ciphertext: nonce in the low psi-1 bits, masked message bit on top.
struct Ciphertext {
    std::uint64_t bits = 0;
    unsigned width = 0;

    std::uint64_t nonce() const { return bits & ((std::uint64_t{1} << (width - 1)) - 1); }
    int masked_bit() const { return static_cast<int>((bits >> (width - 1)) & 1u); }
};

/// Toy single-bit private-key scheme: Enc(msg) = (nonce, msg XOR F(key,nonce))
/// with F a fixed keyed bit mixer. Dec is total: any psi-bit string parses.
/// No security is assumed; the harness measures distinguishing advantage.
class EncScheme {
public:
    explicit EncScheme(unsigned kappa, unsigned psi = 0);  // psi defaults to kappa+1

    EncKey gen(Rng& rng) const;
    Ciphertext enc(int msg, const EncKey& key, Rng& rng) const;
    Ciphertext enc_with_nonce(int msg, const EncKey& key, std::uint64_t nonce) const;
    int dec(std::uint64_t ciphertext, const EncKey& key) const;
    int dec(const Ciphertext& c, const EncKey& key) const { return dec(c.bits, key); }

    unsigned kappa() const { return kappa_; }
    unsigned psi() const { return psi_; }

    /// Adapter for the streaming problem (raw key bits).
    DecFn dec_fn() const;

    /// The keyed mixer behind Enc/Dec: three splitmix64 rounds over
    /// key and nonce, reduced to the parity of the final word.
    static int prf_bit(std::uint64_t key, std::uint64_t nonce);

private:
    unsigned kappa_;
    unsigned psi_;
};

// ---------------------------------------------------------------------------
// The E0/E1 oracle game.

/// Oracle over N keys: world 1 encrypts the submitted message, world 0
/// always encrypts 0. Nonces come from the shared per-(call#, index)
/// derivation so game runs can be coupled with direct mechanism runs.
class EncOracle {
public:
    EncOracle(const EncScheme& scheme, std::vector<EncKey> keys, int world,
              std::uint64_t master_seed);

    Ciphertext query(std::size_t index, int msg);
    std::size_t calls() const { return calls_; }

private:
    const EncScheme& scheme_;
    std::vector<EncKey> keys_;
    int world_;
    std::uint64_t master_;
    std::size_t calls_ = 0;
    std::vector<std::uint32_t> per_index_calls_;
};

class OracleAdversary {
public:
    virtual ~OracleAdversary() = default;
    virtual int run(EncOracle& oracle) = 0;
};

struct SemanticGameResult {
    int output = 0;
    std::size_t oracle_calls = 0;
};

/// Draws N keys from the per-point key substreams of master_seed and runs
/// the adversary against the world-b oracle.
SemanticGameResult run_semantic_game(OracleAdversary& adv, std::size_t N, int world,
                                     const EncScheme& scheme, std::uint64_t master_seed);

// ---------------------------------------------------------------------------
// The reduction adversary: wraps a streaming algorithm and an analyst; in
// world 1 the run coincides with the encrypt-the-query mechanism, in world 0
// with its natural variant. Outputs 1 iff a statistical-accuracy failure
// (error above alpha versus the uniform distribution) occurred.

using Sada2BackendFactory =
    std::function<std::unique_ptr<StreamingAlgorithm<Sada2Update>>(std::uint64_t seed)>;
using AnalystFactory = std::function<std::unique_ptr<Analyst>(std::uint64_t seed)>;

class AdversaryB : public OracleAdversary {
public:
    AdversaryB(Sada2BackendFactory backend, AnalystFactory analyst,
               const Sada2Params& params, std::size_t n, std::size_t ell, double alpha,
               std::uint64_t master_seed);

    int run(EncOracle& oracle) override;

    const Transcript& transcript() const { return transcript_; }
    bool failure_event() const { return failure_; }

private:
    Sada2BackendFactory backend_factory_;
    AnalystFactory analyst_factory_;
    Sada2Params params_;
    std::size_t n_;
    std::size_t ell_;
    double alpha_;
    std::uint64_t master_;
    Transcript transcript_;
    bool failure_ = false;
};

struct AdvantageEstimateB {
    double advantage = 0.0;
    double ci_halfwidth = 0.0;
    double p_world1 = 0.0;
    double p_world0 = 0.0;
};

/// Measured distinguishing advantage of an oracle adversary over seeded
/// trials (reported, never asserted).
AdvantageEstimateB estimate_semantic_advantage(
    const std::function<std::unique_ptr<OracleAdversary>(std::uint64_t master)>& make_adv,
    std::size_t N, const EncScheme& scheme, std::size_t trials, std::uint64_t seed);

}  // namespace sada
