#pragma once

#include "rirs/rational.hpp"

#include <cstdint>

namespace rirs {

/// Deterministic splitmix64 generator. Outputs are reproducible across
/// platforms, unlike std::uniform_int_distribution, so seeded reports stay
/// byte-identical.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Uniform in [0, n); n > 0. Rejection-free modulo is fine here: n is
    /// always tiny relative to 2^64 so the bias is far below any tolerance
    /// we test at, and determinism is what matters.
    std::uint64_t below(std::uint64_t n) { return next_u64() % n; }

    double unit() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Uniform integer in [lo, hi] inclusive.
    std::int64_t range(std::int64_t lo, std::int64_t hi) {
        return lo + static_cast<std::int64_t>(below(static_cast<std::uint64_t>(hi - lo + 1)));
    }

    /// Random rational in (0, 1) with denominator <= max_den.
    Rat unit_rational(unsigned max_den) {
        std::uint64_t den = 2 + below(max_den - 1);
        std::uint64_t num = 1 + below(den - 1);
        return Rat(num, den);
    }

    /// Derive an independent stream, e.g. one per shard.
    Rng fork(std::uint64_t stream) const {
        Rng r(state_ ^ (0xa0761d6478bd642fULL * (stream + 1)));
        r.next_u64();
        return r;
    }

private:
    std::uint64_t state_;
};

}  // namespace rirs
