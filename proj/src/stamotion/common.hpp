#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace stamotion {

// Error taxonomy. The CLI maps these onto distinct exit codes.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bad run configuration (invalid keys, inconsistent flags, impossible dims).
struct ConfigError : Error {
    using Error::Error;
};

// Dataset / checkpoint / provider file problems.
struct DataError : Error {
    using Error::Error;
};
struct FileMissingError : DataError {
    using DataError::DataError;
};
struct VersionError : DataError {
    using DataError::DataError;
};
struct CorruptFileError : DataError {
    using DataError::DataError;
};
struct ShapeMismatchError : DataError {
    using DataError::DataError;
};

// Non-finite values, divergence, degenerate geometry.
struct NumericError : Error {
    using Error::Error;
};

// Violated call contract (conformance of shapes, empty windows, ...).
struct ContractError : Error {
    using Error::Error;
};

inline void check_contract(bool ok, const std::string& msg) {
    if (!ok) throw ContractError(msg);
}

// Deterministic RNG. mt19937_64 provides the raw stream; uniform/normal
// extraction is done by hand so results do not depend on the standard
// library's distribution implementations.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : state_(seed ? seed : 0x9e3779b97f4a7c15ull) {}

    std::uint64_t next_u64() {
        // xorshift* keeps the generator self-contained and portable.
        std::uint64_t x = state_;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        state_ = x;
        return x * 0x2545f4914f6cdd1dull;
    }

    // Uniform in [0,1) with 53 random bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Box-Muller; one value per call, cached pair member.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        double u2 = uniform();
        while (u1 <= 1e-300) u1 = uniform();
        const double two_pi = 6.283185307179586476925286766559;
        double r = std::sqrt(-2.0 * std::log(u1));
        spare_ = r * std::sin(two_pi * u2);
        has_spare_ = true;
        return r * std::cos(two_pi * u2);
    }

    double normal(double mean, double sigma) { return mean + sigma * normal(); }

    int uniform_int(int n) {  // in [0, n)
        return static_cast<int>(next_u64() % static_cast<std::uint64_t>(n));
    }

    // Derive an independent stream, e.g. one per sequence.
    Rng fork(std::uint64_t stream) const {
        std::uint64_t mix = state_ ^ (0x9e3779b97f4a7c15ull + stream * 0xbf58476d1ce4e5b9ull);
        mix ^= mix >> 30;
        mix *= 0x94d049bb133111ebull;
        mix ^= mix >> 31;
        return Rng(mix);
    }

  private:
    std::uint64_t state_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace stamotion
