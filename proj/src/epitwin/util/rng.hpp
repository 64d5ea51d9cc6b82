#pragma once

#include <cstdint>
#include <cstddef>

namespace epitwin {

/// Counter-based deterministic generator. Every random decision in the
/// engine draws from an Rng derived from one root seed via stream(),
/// so independent components never share or race a generator state.
/// The output sequence depends only on (seed, stream path), not on the
/// platform's <random> distribution implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    /// Derive an independent child generator. Deterministic in
    /// (this generator's seed, stream_id); does not advance *this.
    Rng stream(std::uint64_t stream_id) const;

    std::uint64_t next_u64();

    /// Uniform in [0, 1).
    double uniform();
    /// Uniform in [lo, hi).
    double uniform(double lo, double hi);
    /// Standard normal via Box-Muller (explicit transform, portable).
    double normal();
    /// Uniform integer in [0, n). n must be > 0.
    std::size_t below(std::size_t n);
    /// Bernoulli with probability p.
    bool chance(double p);

private:
    std::uint64_t state_;
    double cached_normal_ = 0.0;
    bool has_cached_ = false;
};

} // namespace epitwin
