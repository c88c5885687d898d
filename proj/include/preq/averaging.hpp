#pragma once

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "preq/conjugate.hpp"
#include "preq/linear.hpp"
#include "preq/selection.hpp"

namespace preq {

// One model in an ensemble: everything BMA needs is a marginal likelihood
// and a posterior predictive given the data so far.
class EnsembleMember {
public:
    explicit EnsembleMember(std::string label) : label_(std::move(label)) {}
    virtual ~EnsembleMember() = default;

    const std::string& label() const { return label_; }

    virtual double log_marginal(std::span<const double> ys) const = 0;
    virtual DistPtr predictive(std::span<const double> ys) const = 0;
    /// True when log_marginal is a BIC/2-style approximation rather than exact.
    virtual bool approximate_marginal() const { return false; }

private:
    std::string label_;
};

using MemberPtr = std::shared_ptr<const EnsembleMember>;

MemberPtr conjugate_member(std::string label, ConjugateModel prior);

/// Simple hypothesis: a fixed predictive law, marginal = its joint density.
MemberPtr fixed_member(std::string label, DistPtr law);

/// Arbitrary member from callables (flag marks approximate marginals).
MemberPtr callback_member(std::string label,
                          std::function<double(std::span<const double>)> log_marginal,
                          std::function<DistPtr(std::span<const double>)> predictive,
                          bool approximate = false);

struct ModelEnsemble {
    std::vector<MemberPtr> members;
    std::vector<double> prior_weights;  // defaults to uniform when empty

    std::vector<double> priors() const;
};

/// Posterior model weights: W(k|D) ∝ exp(logML_k) W(k), normalized with
/// log-sum-exp.
std::vector<double> bma_weights(const ModelEnsemble& ensemble, std::span<const double> ys);

/// Mixture of member posterior predictives under the posterior weights.
DistPtr bma_predictive(const ModelEnsemble& ensemble, std::span<const double> ys);

/// Posterior-weighted average of member predictive means.
double bma_point(const ModelEnsemble& ensemble, std::span<const double> ys);

/// Posterior weighted median: sort predictions, return the first whose
/// cumulative weight reaches 1/2.
double pwm_point(std::span<const double> predictions, std::span<const double> weights);

// --- stacking -------------------------------------------------------------

class PointModel {
public:
    virtual ~PointModel() = default;
    virtual double predict(const Eigen::VectorXd& x) const = 0;
};

using PointModelPtr = std::unique_ptr<PointModel>;
using MemberBuilder = std::function<PointModelPtr(const DesignData&)>;

/// Bayesian linear submodel member (posterior-mean coefficients under the
/// g-prior); g <= 0 requests the OLS / MLE fit.
MemberBuilder linear_member(GammaMask mask, double g);
MemberBuilder constant_member(double value);

enum class StackingConstraint { Simplex, PositiveOnly };

struct StackingSolution {
    std::vector<double> alphas;
    StackingConstraint constraint = StackingConstraint::Simplex;
    double objective = 0.0;  // recomputed CV residual sum of squares
    bool degenerate = false; // singular cross-prediction Gram matrix
    std::size_t iterations = 0;
};

/// Stacking weights: constrained least squares of y on the cross-validated
/// member predictions, solved by projected gradient from the uniform start
/// (deterministic; duplicate members end with equal shares).
StackingSolution stacking_fit(const std::vector<MemberBuilder>& members, const DesignData& data,
                              const FoldPlan& folds, StackingConstraint constraint = StackingConstraint::Simplex);

/// Weighted sum of full-data member predictions at x.
double stacking_predict(const StackingSolution& solution, const std::vector<MemberBuilder>& members,
                        const DesignData& data, const Eigen::VectorXd& x);

// --- bagging ----------------------------------------------------------------

/// Average prediction over B bootstrap refits; resample b is a pure function
/// of (seed, b).  A builder failure redraws the resample, up to 3B attempts.
double bag_point_predictor(const MemberBuilder& base, const DesignData& data, std::size_t B,
                           std::uint64_t seed, const Eigen::VectorXd& x);

/// Average of bma_weights over bootstrap resamples of ys.
std::vector<double> bag_posterior_weights(const ModelEnsemble& ensemble, std::span<const double> ys,
                                          std::size_t B, std::uint64_t seed);

// --- crowd pooling and the KL diagnostic -----------------------------------

enum class CrowdCombiner { Mean, Median };

struct CrowdSummary {
    std::size_t count = 0;
    double mean = 0.0;
    double median = 0.0;
    double pooled = 0.0;  // the value selected by the combiner
};

CrowdSummary pool_crowd(std::span<const double> values, CrowdCombiner combiner);

// Discrete posterior over a finite parameter grid, each point carrying a pmf
// over a finite outcome alphabet.  Diagnostic use only.
struct DiscretePosterior {
    std::vector<double> weights;                    // posterior over grid points
    std::vector<std::vector<double>> component_pmfs;  // per grid point
};

std::vector<double> mixture_pmf(const DiscretePosterior& posterior);

/// sum_theta w(theta|y) KL(p_theta || q); infinity when q has a zero where
/// some p_theta is positive.
double posterior_expected_kl(const DiscretePosterior& posterior, std::span<const double> q);

/// Shannon conditional mutual information term: posterior_expected_kl at the
/// mixture itself.
double conditional_mutual_information(const DiscretePosterior& posterior);

/// posterior_expected_kl(q) - CMI, which equals KL(mixture || q).
double mixture_kl_gap(const DiscretePosterior& posterior, std::span<const double> q);

}  // namespace preq
