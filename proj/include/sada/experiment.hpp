#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sada/attacks.hpp"
#include "sada/bsm_prg.hpp"
#include "sada/reductions.hpp"

namespace sada {

/// Flat key=value experiment description ('#' starts a comment). Common
/// keys: kind, trials, seed, out; the rest are kind-specific and documented
/// in the README.
struct ExperimentSpec {
    std::map<std::string, std::string> kv;

    static ExperimentSpec parse_file(const std::string& path);
    static ExperimentSpec parse_text(const std::string& text);

    std::string kind() const { return get("kind", ""); }
    std::size_t trials() const { return static_cast<std::size_t>(get_int("trials", 0)); }
    std::uint64_t seed() const { return get_int("seed", 1); }
    std::string out() const { return get("out", ""); }

    std::string get(const std::string& key, const std::string& dflt) const;
    std::uint64_t get_int(const std::string& key, std::uint64_t dflt) const;
    double get_real(const std::string& key, double dflt) const;
    bool has(const std::string& key) const { return kv.count(key) != 0; }

    /// All violated constraints, across every referenced parameter set.
    std::vector<std::string> validate() const;
};

struct ExperimentOutcome {
    std::string result_path;
    std::string csv_path;
    std::string summary;  // one human-readable line
};

/// Runs every trial (deterministically, regardless of jobs), writes one
/// line-delimited record per trial plus a summary record, and a one-row CSV
/// digest next to it.
ExperimentOutcome run_experiment(const ExperimentSpec& spec, unsigned jobs = 1);

// ---------------------------------------------------------------------------
// Harnesses shared by the CLI and the acceptance suite.

struct SadaFixedTrialResult {
    bool violated = false;
    double max_rel_deviation = 0.0;
    std::uint64_t peak_state_bits = 0;
    std::uint64_t flip_number = 0;
};

/// One seeded oblivious run of the bulk-query problem: a fixed uniformly
/// random stream, the sampling algorithm against the exact evaluator.
SadaFixedTrialResult run_sada_fixed_stream_trial(const SadaParams& params,
                                                 const PrgParams& prg,
                                                 std::size_t sample_size,
                                                 double alpha_rel, std::uint64_t seed);

struct MemoryScalingResult {
    std::vector<std::size_t> x;
    std::vector<std::uint64_t> peak_bits;
    double slope = 0.0;
    double expected_record = 0.0;
    double rel_err = 1.0;
};

double least_squares_slope(const std::vector<std::size_t>& x,
                           const std::vector<std::uint64_t>& y);

MemoryScalingResult sada2_oblivious_memory_scaling(const Sada2Params& params,
                                                   const std::vector<std::size_t>& sizes,
                                                   std::size_t n, std::size_t rounds,
                                                   std::uint64_t seed);
MemoryScalingResult sada2_evaluator_memory_scaling(const Sada2Params& params,
                                                   const std::vector<std::size_t>& counts,
                                                   std::size_t rounds, std::uint64_t seed);
MemoryScalingResult sada_oblivious_memory_scaling(const SadaParams& base,
                                                  const PrgParams& prg,
                                                  const std::vector<std::size_t>& sizes,
                                                  std::uint64_t seed);
MemoryScalingResult sada_evaluator_memory_scaling(const PrgParams& prg,
                                                  const std::vector<std::size_t>& counts,
                                                  std::uint64_t seed);

}  // namespace sada
