#pragma once

#include <memory>
#include <span>
#include <utility>
#include <vector>

#include "preq/rng.hpp"

namespace preq {

/// A queryable one-step-ahead predictive law.  Immutable after construction
/// and safe to share across threads.
class Distribution {
public:
    virtual ~Distribution() = default;

    virtual bool is_discrete() const = 0;

    /// Density for continuous laws, point mass for discrete ones.
    virtual double density(double y) const = 0;
    virtual double log_density(double y) const;

    /// P(Y <= y).
    virtual double cdf(double y) const = 0;
    /// P(Y < y); differs from cdf only at discrete atoms.
    virtual double cdf_left(double y) const;

    /// Generalized inverse cdf.  Non-closed-form laws fall back to bracketed
    /// bisection on cdf (monotone, derivative-free).
    virtual double quantile(double p) const;

    virtual double mean() const = 0;
    virtual double variance() const = 0;
    virtual double mode() const = 0;

    /// Inverse-cdf sampling by default, so equal seeds replay identically.
    virtual double sample(Rng& rng) const;

    /// Closed or infinite support bounds, used to bracket the bisection.
    virtual std::pair<double, double> support() const;
};

using DistPtr = std::shared_ptr<const Distribution>;

class NormalDistribution final : public Distribution {
public:
    NormalDistribution(double mean, double variance);
    bool is_discrete() const override { return false; }
    double density(double y) const override;
    double log_density(double y) const override;
    double cdf(double y) const override;
    double quantile(double p) const override;
    double mean() const override { return mean_; }
    double variance() const override { return variance_; }
    double mode() const override { return mean_; }

private:
    double mean_, variance_, sd_;
};

/// Location-scale Student-t.
class StudentTDistribution final : public Distribution {
public:
    StudentTDistribution(double dof, double location, double scale);
    bool is_discrete() const override { return false; }
    double density(double y) const override;
    double log_density(double y) const override;
    double cdf(double y) const override;
    double quantile(double p) const override;
    double mean() const override;
    double variance() const override;
    double mode() const override { return location_; }
    double dof() const { return dof_; }
    double scale() const { return scale_; }

private:
    double dof_, location_, scale_;
};

class UniformDistribution final : public Distribution {
public:
    UniformDistribution(double lo, double hi);
    bool is_discrete() const override { return false; }
    double density(double y) const override;
    double cdf(double y) const override;
    double quantile(double p) const override;
    double mean() const override { return 0.5 * (lo_ + hi_); }
    double variance() const override;
    double mode() const override { return mean(); }
    std::pair<double, double> support() const override { return {lo_, hi_}; }

private:
    double lo_, hi_;
};

/// Finite law over real support points.  Duplicate points are merged and
/// masses normalized to sum exactly to one.
class DiscreteDistribution final : public Distribution {
public:
    DiscreteDistribution(std::vector<double> points, std::vector<double> masses);

    bool is_discrete() const override { return true; }
    double density(double y) const override;
    double cdf(double y) const override;
    double cdf_left(double y) const override;
    double quantile(double p) const override;
    double mean() const override;
    double variance() const override;
    double mode() const override;
    double sample(Rng& rng) const override;
    std::pair<double, double> support() const override;

    const std::vector<double>& points() const { return points_; }
    const std::vector<double>& masses() const { return masses_; }

private:
    std::vector<double> points_;   // sorted ascending
    std::vector<double> masses_;
    std::vector<double> cumulative_;
};

DistPtr point_mass(double value);

/// Weighted mixture.  All-discrete components collapse to a single
/// DiscreteDistribution; otherwise every component must be continuous.
DistPtr mixture(std::vector<DistPtr> components, std::vector<double> weights);

class MixtureDistribution final : public Distribution {
public:
    MixtureDistribution(std::vector<DistPtr> components, std::vector<double> weights);
    bool is_discrete() const override { return false; }
    double density(double y) const override;
    double cdf(double y) const override;
    double mean() const override;
    double variance() const override;
    double mode() const override;
    double sample(Rng& rng) const override;
    std::pair<double, double> support() const override;

    const std::vector<DistPtr>& components() const { return components_; }
    const std::vector<double>& weights() const { return weights_; }

private:
    std::vector<DistPtr> components_;
    std::vector<double> weights_;
};

struct PredictionInterval {
    double lo = 0.0;
    double hi = 0.0;
    double level = 0.0;  // in (0,1)

    bool contains(double y) const { return lo <= y && y <= hi; }
};

/// Central 100(1-alpha)% interval: [quantile(alpha/2), quantile(1-alpha/2)].
PredictionInterval predictive_interval(const Distribution& dist, double alpha);

/// Probability integral transform.  Continuous laws return cdf(y); discrete
/// laws use the randomized transform u = F(y-) + V (F(y) - F(y-)) with
/// V ~ Uniform[0,1] from the supplied rng, so uniformity tests stay valid.
double pit(const Distribution& dist, double y, Rng& rng);
double pit(const Distribution& dist, double y);  // continuous only

}  // namespace preq
