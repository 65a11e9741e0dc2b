#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace ovg {

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Shape/contract violations (mismatched dimensions, invalid boxes, ...).
struct DimensionError : Error {
    using Error::Error;
};

// Out-of-range parameter values (beta <= 0, lambda outside [0,1], ...).
struct ParamError : Error {
    using Error::Error;
};

// A row whose norm fell below eps during normalization.
struct RowDegenerateError : Error {
    std::size_t row;
    explicit RowDegenerateError(std::size_t r)
        : Error("degenerate row " + std::to_string(r) + ": norm below eps"), row(r) {}
};

struct EmptyTextError : Error {
    EmptyTextError() : Error("text sequence has no tokens") {}
};

struct EmptySceneError : Error {
    EmptySceneError() : Error("feature map has no locations") {}
};

struct EmptyCandidatesError : Error {
    EmptyCandidatesError() : Error("candidate box list is empty") {}
};

struct EmptyCropError : Error {
    EmptyCropError() : Error("crop contains no object pixels") {}
};

struct NoCandidatesError : Error {
    using Error::Error;
    NoCandidatesError() : Error("no grasp candidates found") {}
};

struct AnnotationAmbiguousError : Error {
    using Error::Error;
};

// Malformed description string; carries the slot that failed.
struct ParseError : Error {
    std::string slot;
    ParseError(std::string which, const std::string& detail)
        : Error("parse error in <" + which + ">: " + detail), slot(std::move(which)) {}
};

struct ConfigError : Error {
    using Error::Error;
};

struct IoError : Error {
    using Error::Error;
};

// ---------------------------------------------------------------------------
// Deterministic random numbers
//
// splitmix64 stream. std::mt19937 plus the standard distributions would be
// implementation-defined across libstdc++/libc++; this keeps every generated
// artifact bit-identical regardless of toolchain.
// ---------------------------------------------------------------------------

class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    // uniform in [0, 1)
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // uniform integer in [0, n)
    std::size_t below(std::size_t n) {
        unsigned __int128 m = static_cast<unsigned __int128>(next_u64()) * n;
        return static_cast<std::size_t>(m >> 64);
    }

    // standard normal via Box-Muller (two uniforms per call, no cached spare)
    double normal() {
        double u1 = uniform();
        double u2 = uniform();
        while (u1 <= 1e-300) u1 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
    }

    bool coin(double p_true) { return uniform() < p_true; }

private:
    std::uint64_t state_;
};

// Derive an independent stream from a parent seed and a salt. Used to give
// every scene/suite/object its own reproducible generator.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (salt + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

}  // namespace ovg
