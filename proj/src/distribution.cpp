#include "preq/distribution.hpp"

#include <algorithm>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>

namespace preq {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_probability(double p) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("quantile: p must lie in [0,1]");
}

}  // namespace

double Distribution::log_density(double y) const {
    const double d = density(y);
    return d > 0.0 ? std::log(d) : -kInf;
}

double Distribution::cdf_left(double y) const {
    if (!is_discrete()) return cdf(y);
    throw std::logic_error("cdf_left must be overridden by discrete laws");
}

double Distribution::quantile(double p) const {
    check_probability(p);
    auto [lo, hi] = support();
    if (p == 0.0) return lo;
    if (p == 1.0) return hi;

    // Establish a finite bracket around the target, expanding from the
    // mean when the support is unbounded.
    const double center = std::isfinite(mean()) ? mean() : 0.0;
    const double spread = std::isfinite(variance()) && variance() > 0.0 ? std::sqrt(variance()) : 1.0;
    double a = std::isfinite(lo) ? lo : center - 8.0 * spread;
    double b = std::isfinite(hi) ? hi : center + 8.0 * spread;
    double width = b - a;
    for (int i = 0; i < 256 && cdf(a) > p; ++i) {
        a -= width;
        width *= 2.0;
    }
    width = b - a;
    for (int i = 0; i < 256 && cdf(b) < p; ++i) {
        b += width;
        width *= 2.0;
    }

    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (a + b);
        if (mid <= a || mid >= b) break;
        if (cdf(mid) < p) {
            a = mid;
        } else {
            b = mid;
        }
    }
    return 0.5 * (a + b);
}

double Distribution::sample(Rng& rng) const {
    return quantile(rng.uniform(std::numeric_limits<double>::min(), 1.0));
}

std::pair<double, double> Distribution::support() const { return {-kInf, kInf}; }

// ---------------------------------------------------------------------------
// Normal

NormalDistribution::NormalDistribution(double mean, double variance)
    : mean_(mean), variance_(variance), sd_(std::sqrt(variance)) {
    if (!(variance > 0.0)) throw std::invalid_argument("NormalDistribution: variance must be positive");
}

double NormalDistribution::density(double y) const {
    const double z = (y - mean_) / sd_;
    return std::exp(-0.5 * z * z) / (sd_ * std::sqrt(2.0 * M_PI));
}

double NormalDistribution::log_density(double y) const {
    const double z = (y - mean_) / sd_;
    return -0.5 * z * z - std::log(sd_) - 0.5 * std::log(2.0 * M_PI);
}

double NormalDistribution::cdf(double y) const {
    return boost::math::cdf(boost::math::normal_distribution<double>(mean_, sd_), y);
}

double NormalDistribution::quantile(double p) const {
    check_probability(p);
    if (p == 0.0) return -kInf;
    if (p == 1.0) return kInf;
    return boost::math::quantile(boost::math::normal_distribution<double>(mean_, sd_), p);
}

// ---------------------------------------------------------------------------
// Student-t

StudentTDistribution::StudentTDistribution(double dof, double location, double scale)
    : dof_(dof), location_(location), scale_(scale) {
    if (!(dof > 0.0)) throw std::invalid_argument("StudentTDistribution: dof must be positive");
    if (!(scale > 0.0)) throw std::invalid_argument("StudentTDistribution: scale must be positive");
}

double StudentTDistribution::density(double y) const {
    const double z = (y - location_) / scale_;
    return boost::math::pdf(boost::math::students_t_distribution<double>(dof_), z) / scale_;
}

double StudentTDistribution::log_density(double y) const {
    const double z = (y - location_) / scale_;
    return std::lgamma(0.5 * (dof_ + 1.0)) - std::lgamma(0.5 * dof_) - 0.5 * std::log(dof_ * M_PI) -
           std::log(scale_) - 0.5 * (dof_ + 1.0) * std::log1p(z * z / dof_);
}

double StudentTDistribution::cdf(double y) const {
    const double z = (y - location_) / scale_;
    return boost::math::cdf(boost::math::students_t_distribution<double>(dof_), z);
}

double StudentTDistribution::quantile(double p) const {
    check_probability(p);
    if (p == 0.0) return -kInf;
    if (p == 1.0) return kInf;
    return location_ + scale_ * boost::math::quantile(boost::math::students_t_distribution<double>(dof_), p);
}

double StudentTDistribution::mean() const {
    return dof_ > 1.0 ? location_ : std::numeric_limits<double>::quiet_NaN();
}

double StudentTDistribution::variance() const {
    if (dof_ > 2.0) return scale_ * scale_ * dof_ / (dof_ - 2.0);
    return kInf;
}

// ---------------------------------------------------------------------------
// Uniform

UniformDistribution::UniformDistribution(double lo, double hi) : lo_(lo), hi_(hi) {
    if (!(lo < hi)) throw std::invalid_argument("UniformDistribution: requires lo < hi");
}

double UniformDistribution::density(double y) const {
    return (y >= lo_ && y <= hi_) ? 1.0 / (hi_ - lo_) : 0.0;
}

double UniformDistribution::cdf(double y) const {
    if (y <= lo_) return 0.0;
    if (y >= hi_) return 1.0;
    return (y - lo_) / (hi_ - lo_);
}

double UniformDistribution::quantile(double p) const {
    check_probability(p);
    return lo_ + p * (hi_ - lo_);
}

double UniformDistribution::variance() const {
    const double w = hi_ - lo_;
    return w * w / 12.0;
}

// ---------------------------------------------------------------------------
// Discrete

DiscreteDistribution::DiscreteDistribution(std::vector<double> points, std::vector<double> masses) {
    if (points.size() != masses.size() || points.empty())
        throw std::invalid_argument("DiscreteDistribution: points and masses must be nonempty and aligned");
    std::map<double, double> merged;
    double total = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (!std::isfinite(points[i]) || !std::isfinite(masses[i]) || masses[i] < 0.0)
            throw std::invalid_argument("DiscreteDistribution: masses must be finite and nonnegative");
        merged[points[i]] += masses[i];
        total += masses[i];
    }
    if (!(total > 0.0)) throw std::invalid_argument("DiscreteDistribution: total mass must be positive");
    points_.reserve(merged.size());
    masses_.reserve(merged.size());
    cumulative_.reserve(merged.size());
    double running = 0.0;
    for (const auto& [point, mass] : merged) {
        points_.push_back(point);
        masses_.push_back(mass / total);
        running += mass / total;
        cumulative_.push_back(running);
    }
    cumulative_.back() = 1.0;
}

double DiscreteDistribution::density(double y) const {
    const auto it = std::lower_bound(points_.begin(), points_.end(), y);
    if (it != points_.end() && *it == y) return masses_[static_cast<std::size_t>(it - points_.begin())];
    return 0.0;
}

double DiscreteDistribution::cdf(double y) const {
    const auto it = std::upper_bound(points_.begin(), points_.end(), y);
    if (it == points_.begin()) return 0.0;
    return cumulative_[static_cast<std::size_t>(it - points_.begin()) - 1];
}

double DiscreteDistribution::cdf_left(double y) const {
    const auto it = std::lower_bound(points_.begin(), points_.end(), y);
    if (it == points_.begin()) return 0.0;
    return cumulative_[static_cast<std::size_t>(it - points_.begin()) - 1];
}

double DiscreteDistribution::quantile(double p) const {
    check_probability(p);
    const auto it = std::lower_bound(cumulative_.begin(), cumulative_.end(), p);
    if (it == cumulative_.end()) return points_.back();
    return points_[static_cast<std::size_t>(it - cumulative_.begin())];
}

double DiscreteDistribution::mean() const {
    double m = 0.0;
    for (std::size_t i = 0; i < points_.size(); ++i) m += points_[i] * masses_[i];
    return m;
}

double DiscreteDistribution::variance() const {
    const double m = mean();
    double v = 0.0;
    for (std::size_t i = 0; i < points_.size(); ++i) v += (points_[i] - m) * (points_[i] - m) * masses_[i];
    return v;
}

double DiscreteDistribution::mode() const {
    std::size_t best = 0;
    for (std::size_t i = 1; i < masses_.size(); ++i)
        if (masses_[i] > masses_[best]) best = i;  // first point wins ties
    return points_[best];
}

double DiscreteDistribution::sample(Rng& rng) const {
    const double u = rng.uniform();
    const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    if (it == cumulative_.end()) return points_.back();
    return points_[static_cast<std::size_t>(it - cumulative_.begin())];
}

std::pair<double, double> DiscreteDistribution::support() const {
    return {points_.front(), points_.back()};
}

DistPtr point_mass(double value) {
    return std::make_shared<DiscreteDistribution>(std::vector<double>{value}, std::vector<double>{1.0});
}

// ---------------------------------------------------------------------------
// Mixture

DistPtr mixture(std::vector<DistPtr> components, std::vector<double> weights) {
    if (components.empty() || components.size() != weights.size())
        throw std::invalid_argument("mixture: components and weights must be nonempty and aligned");
    const bool all_discrete = std::all_of(components.begin(), components.end(),
                                          [](const DistPtr& c) { return c->is_discrete(); });
    if (all_discrete) {
        std::vector<double> points, masses;
        for (std::size_t k = 0; k < components.size(); ++k) {
            const auto* d = dynamic_cast<const DiscreteDistribution*>(components[k].get());
            if (d == nullptr) throw std::invalid_argument("mixture: discrete components must be DiscreteDistribution");
            for (std::size_t i = 0; i < d->points().size(); ++i) {
                points.push_back(d->points()[i]);
                masses.push_back(weights[k] * d->masses()[i]);
            }
        }
        return std::make_shared<DiscreteDistribution>(std::move(points), std::move(masses));
    }
    return std::make_shared<MixtureDistribution>(std::move(components), std::move(weights));
}

MixtureDistribution::MixtureDistribution(std::vector<DistPtr> components, std::vector<double> weights)
    : components_(std::move(components)), weights_(std::move(weights)) {
    if (components_.empty() || components_.size() != weights_.size())
        throw std::invalid_argument("MixtureDistribution: components and weights must be aligned");
    double total = 0.0;
    for (const double w : weights_) {
        if (!(w >= 0.0)) throw std::invalid_argument("MixtureDistribution: weights must be nonnegative");
        total += w;
    }
    if (!(total > 0.0)) throw std::invalid_argument("MixtureDistribution: total weight must be positive");
    for (auto& w : weights_) w /= total;
    for (const auto& c : components_)
        if (c->is_discrete())
            throw std::invalid_argument("MixtureDistribution: use mixture() for discrete components");
}

double MixtureDistribution::density(double y) const {
    double d = 0.0;
    for (std::size_t k = 0; k < components_.size(); ++k) d += weights_[k] * components_[k]->density(y);
    return d;
}

double MixtureDistribution::cdf(double y) const {
    double c = 0.0;
    for (std::size_t k = 0; k < components_.size(); ++k) c += weights_[k] * components_[k]->cdf(y);
    return c;
}

double MixtureDistribution::mean() const {
    double m = 0.0;
    for (std::size_t k = 0; k < components_.size(); ++k) m += weights_[k] * components_[k]->mean();
    return m;
}

double MixtureDistribution::variance() const {
    const double m = mean();
    double v = 0.0;
    for (std::size_t k = 0; k < components_.size(); ++k) {
        const double mk = components_[k]->mean();
        v += weights_[k] * (components_[k]->variance() + (mk - m) * (mk - m));
    }
    return v;
}

double MixtureDistribution::mode() const {
    // Coarse grid over the central mass followed by golden-section refinement.
    const double lo = quantile(1e-3);
    const double hi = quantile(1.0 - 1e-3);
    const int grid = 1024;
    double best_x = lo, best_d = density(lo);
    for (int i = 1; i <= grid; ++i) {
        const double x = lo + (hi - lo) * i / grid;
        const double d = density(x);
        if (d > best_d) {
            best_d = d;
            best_x = x;
        }
    }
    const double step = (hi - lo) / grid;
    double a = best_x - step, b = best_x + step;
    const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
    double c1 = b - phi * (b - a), c2 = a + phi * (b - a);
    for (int i = 0; i < 200 && b - a > 1e-12 * (1.0 + std::abs(best_x)); ++i) {
        if (density(c1) < density(c2)) {
            a = c1;
            c1 = c2;
            c2 = a + phi * (b - a);
        } else {
            b = c2;
            c2 = c1;
            c1 = b - phi * (b - a);
        }
    }
    return 0.5 * (a + b);
}

double MixtureDistribution::sample(Rng& rng) const {
    const double u = rng.uniform();
    double acc = 0.0;
    std::size_t pick = components_.size() - 1;
    for (std::size_t k = 0; k < components_.size(); ++k) {
        acc += weights_[k];
        if (u < acc) {
            pick = k;
            break;
        }
    }
    return components_[pick]->sample(rng);
}

std::pair<double, double> MixtureDistribution::support() const {
    double lo = kInf, hi = -kInf;
    for (const auto& c : components_) {
        const auto [a, b] = c->support();
        lo = std::min(lo, a);
        hi = std::max(hi, b);
    }
    return {lo, hi};
}

// ---------------------------------------------------------------------------
// Interval and PIT

PredictionInterval predictive_interval(const Distribution& dist, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("predictive_interval: alpha must lie in (0,1)");
    const double lo = dist.quantile(0.5 * alpha);
    const double hi = dist.quantile(1.0 - 0.5 * alpha);
    if (!std::isfinite(lo) || !std::isfinite(hi))
        throw std::runtime_error("predictive_interval: non-finite quantiles (improper predictive)");
    return {lo, hi, 1.0 - alpha};
}

double pit(const Distribution& dist, double y, Rng& rng) {
    if (!dist.is_discrete()) return dist.cdf(y);
    const double left = dist.cdf_left(y);
    const double right = dist.cdf(y);
    return left + rng.uniform() * (right - left);
}

double pit(const Distribution& dist, double y) {
    if (dist.is_discrete())
        throw std::invalid_argument("pit: discrete laws need the randomized transform; pass an rng");
    return dist.cdf(y);
}

}  // namespace preq
