#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>

namespace ncwwlab {

// Deterministic random stream built on splitmix64. The usual std::
// distributions are implementation-defined bit-wise, so everything that
// feeds a report goes through this generator instead.
class DetRng {
public:
    explicit DetRng(std::uint64_t seed) : seed_(seed), state_(seed) {}

    std::uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1) with 53 significant bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Box-Muller, one value per call (the second root is discarded so the
    // stream position does not depend on caller parity).
    double gaussian() {
        double u1 = uniform();
        double u2 = uniform();
        if (u1 <= 0.0) u1 = 0x1.0p-53;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    std::complex<double> gaussian_complex() {
        const double re = gaussian();
        const double im = gaussian();
        return {re, im};
    }

    std::complex<double> unit_complex() {
        return std::polar(1.0, 2.0 * std::numbers::pi * uniform());
    }

    // Independent child stream; depends only on the construction seed and the
    // salt, not on how many values were drawn so far.
    DetRng fork(std::uint64_t salt) const {
        std::uint64_t z = seed_ ^ (0x9e3779b97f4a7c15ULL * (salt + 0x632be59bd9b4e019ULL));
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return DetRng(z ^ (z >> 31));
    }

    std::uint64_t seed() const { return seed_; }

private:
    std::uint64_t seed_;
    std::uint64_t state_;
};

// Stateless hash of (seed, index) to a uniform double in [0, 1); used by
// generators that must be indexable at arbitrary positions.
inline double hash_uniform(std::uint64_t seed, std::uint64_t index) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    z ^= z >> 31;
    return static_cast<double>(z >> 11) * 0x1.0p-53;
}

}  // namespace ncwwlab
