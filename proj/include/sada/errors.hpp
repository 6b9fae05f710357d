#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace sada {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// An adversary / analyst broke the game protocol (malformed update,
// non-total query, bad round index). Carries the offending round.
struct ProtocolViolationError : Error {
    ProtocolViolationError(std::size_t round, const std::string& what)
        : Error("protocol violation at round " + std::to_string(round) + ": " + what),
          round(round) {}
    std::size_t round;
};

// A read-once bit source ran out of bits.
struct SourceUnderflowError : Error {
    using Error::Error;
};

// BSM adversary state exceeded its storage bound.
struct StorageViolationError : Error {
    StorageViolationError(std::size_t round, std::size_t bits, std::size_t bound)
        : Error("storage violation at round " + std::to_string(round) + ": " +
                std::to_string(bits) + " bits > bound " + std::to_string(bound)),
          round(round) {}
    std::size_t round;
};

// Malformed stream update or stream file.
struct DecodeError : Error {
    using Error::Error;
};

// A handle was asked for something it cannot do (e.g. state snapshots).
struct CapabilityError : Error {
    using Error::Error;
};

// Encryption-oracle misuse (key index out of range).
struct OracleAbuseError : Error {
    using Error::Error;
};

// Parameter validation failure; carries every violated constraint.
struct ValidationError : Error {
    explicit ValidationError(std::vector<std::string> violations)
        : Error(join(violations)), violations(std::move(violations)) {}
    std::vector<std::string> violations;

private:
    static std::string join(const std::vector<std::string>& v) {
        std::string s = "invalid parameters:";
        for (const auto& x : v) { s += "\n  - "; s += x; }
        return s;
    }
};

}  // namespace sada
