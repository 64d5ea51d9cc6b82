#include "epitwin/util/rng.hpp"
#include "epitwin/util/error.hpp"

#include <cmath>
#include <numbers>

namespace epitwin {

namespace {

// splitmix64; full-period, well mixed, trivially seedable.
std::uint64_t mix(std::uint64_t& s)
{
    std::uint64_t z = (s += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

} // namespace

Rng::Rng(std::uint64_t seed) : state_(seed)
{
    // Scramble so nearby seeds give unrelated sequences.
    mix(state_);
}

Rng Rng::stream(std::uint64_t stream_id) const
{
    std::uint64_t s = state_;
    std::uint64_t a = mix(s);
    s ^= stream_id * 0xda942042e4dd58b5ULL;
    std::uint64_t b = mix(s);
    return Rng(a ^ (b + stream_id));
}

std::uint64_t Rng::next_u64()
{
    return mix(state_);
}

double Rng::uniform()
{
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi)
{
    return lo + (hi - lo) * uniform();
}

double Rng::normal()
{
    if (has_cached_) {
        has_cached_ = false;
        return cached_normal_;
    }
    // Box-Muller on (0,1] x [0,1).
    double u1 = 1.0 - uniform();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * std::numbers::pi * u2;
    cached_normal_ = r * std::sin(a);
    has_cached_ = true;
    return r * std::cos(a);
}

std::size_t Rng::below(std::size_t n)
{
    require(n > 0, Errc::contract_error, "Rng::below requires n > 0");
    return static_cast<std::size_t>(
        (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
}

bool Rng::chance(double p)
{
    return uniform() < p;
}

} // namespace epitwin
