#include "preq/rng.hpp"

#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <stdexcept>

namespace preq {

std::uint64_t Rng::below(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("Rng::below: n must be positive");
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t x;
    do {
        x = engine_();
    } while (x >= limit);
    return x % n;
}

double sample_standard_normal(Rng& rng) {
    // Inverse-cdf so the draw is a pure function of one uniform.
    static const boost::math::normal_distribution<double> unit(0.0, 1.0);
    double u = rng.uniform();
    while (u <= 0.0) u = rng.uniform();
    return boost::math::quantile(unit, u);
}

double sample_gamma(Rng& rng, double shape, double rate) {
    if (shape <= 0.0 || rate <= 0.0) throw std::invalid_argument("sample_gamma: shape and rate must be positive");
    // Marsaglia-Tsang squeeze; shape < 1 boosted via the power trick.
    if (shape < 1.0) {
        const double u = std::max(rng.uniform(), 1e-300);
        return sample_gamma(rng, shape + 1.0, rate) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x = sample_standard_normal(rng);
        double v = 1.0 + c * x;
        if (v <= 0.0) continue;
        v = v * v * v;
        const double u = rng.uniform();
        if (u < 1.0 - 0.0331 * x * x * x * x) return d * v / rate;
        if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v / rate;
    }
}

double sample_beta(Rng& rng, double a, double b) {
    const double x = sample_gamma(rng, a, 1.0);
    const double y = sample_gamma(rng, b, 1.0);
    return x / (x + y);
}

double sample_inverse_gamma(Rng& rng, double shape, double rate) {
    return 1.0 / sample_gamma(rng, shape, rate);
}

}  // namespace preq
