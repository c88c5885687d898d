#pragma once

#include <cstdint>
#include <random>

namespace preq {

// splitmix64 mixing step.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

// Counter-based seed derivation: stream (seed, index) is reproducible
// independently of the order in which streams are consumed.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
    return splitmix64(seed ^ splitmix64(index + 0x9e3779b97f4a7c15ull));
}

// All randomness in the library flows through an explicitly passed Rng.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    // Uniform on [0,1) with 53-bit resolution; identical output on every
    // platform for a given seed (no implementation-defined std distributions).
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double a, double b) { return a + (b - a) * uniform(); }

    // Unbiased integer in [0, n) by rejection.
    std::uint64_t below(std::uint64_t n);

private:
    std::mt19937_64 engine_;
};

double sample_standard_normal(Rng& rng);
double sample_gamma(Rng& rng, double shape, double rate);
double sample_beta(Rng& rng, double a, double b);
double sample_inverse_gamma(Rng& rng, double shape, double rate);

}  // namespace preq
