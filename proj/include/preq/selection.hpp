#pragma once

#include <functional>
#include <span>
#include <vector>

#include "preq/conjugate.hpp"
#include "preq/linear.hpp"

namespace preq {

/// exp(logML_A - logML_B), computed in log space.
double bayes_factor(double log_ml_a, double log_ml_b);
double bayes_factor(const ConjugateModel& model_a, const ConjugateModel& model_b,
                    std::span<const double> ys);
double bayes_factor(const DesignData& data, const GammaMask& mask_a, const GammaMask& mask_b, double g);

enum class SubsetAverage { Arithmetic, Geometric, Median };

struct IntrinsicBfResult {
    double value = 1.0;
    SubsetAverage average = SubsetAverage::Arithmetic;
    bool exhaustive = true;                    // all training subsets enumerated
    std::vector<std::vector<int>> subsets;     // training index sets actually used
    std::vector<double> per_subset;            // BF conditioned on each subset
};

/// Intrinsic Bayes factor: the ratio of held-out marginals conditioned on a
/// minimal training subset, averaged over subsets.  All subsets are used when
/// there are at most max_subsets of them, otherwise a seeded subsample.
IntrinsicBfResult intrinsic_bf(const ConjugateModel& model_a, const ConjugateModel& model_b,
                               std::span<const double> ys, std::size_t min_train_size,
                               SubsetAverage average = SubsetAverage::Arithmetic,
                               std::size_t max_subsets = 500, std::uint64_t seed = 0);

/// Fractional Bayes factor with likelihood fraction f in (0,1].
double fractional_bf(const ConjugateModel& model_a, const ConjugateModel& model_b,
                     std::span<const double> ys, double f);

enum class IcPenalty { Bic, Aic, Custom };

/// -2 loglik + alpha(n) * k, with alpha = log n (BIC), 2 (AIC), or a custom value.
double information_criterion(double loglik_at_estimate, int k_params, std::size_t n,
                             IcPenalty penalty, double custom_alpha = 0.0);

/// Softmax of -IC/2: invariant to adding constants to the log likelihood and
/// preserving the lowest-IC-first ordering.
std::vector<double> ic_weights(std::span<const double> ics);

// Held-out evaluation plan.
struct FoldPlan {
    enum class Kind { InSample, Loo, KFold };
    Kind kind = Kind::InSample;
    std::size_t k = 0;       // folds for KFold
    std::uint64_t seed = 0;  // fold assignment seed

    static FoldPlan in_sample() { return {Kind::InSample, 0, 0}; }
    static FoldPlan loo() { return {Kind::Loo, 0, 0}; }
    static FoldPlan kfold(std::size_t k, std::uint64_t seed) { return {Kind::KFold, k, seed}; }
};

/// Fold id per index; folds partition {0..n-1} with sizes differing by <= 1.
std::vector<std::size_t> fold_assignment(std::size_t n, const FoldPlan& plan);

enum class WorthFunctional { Log, SquaredError };

/// Mean worth of the model's predictive at each point, trained per the plan:
/// the ELPD for the log functional (higher is better); mean squared
/// prediction error for the squared-error functional (lower is better).
double elpd(const ConjugateModel& model, std::span<const double> ys, const FoldPlan& plan,
            WorthFunctional worth = WorthFunctional::Log);

using PpcStatistic = std::function<double(std::span<const double> y, const ParamDraw& draw)>;

/// Posterior predictive p-value of statistic T: the fraction of posterior
/// replicate draws with T(y_rep, theta) > T(y_obs, theta); ties count 1/2.
double ppc_pvalue(const ConjugateModel& model, std::span<const double> ys, const PpcStatistic& statistic,
                  std::size_t draws, std::uint64_t seed);

struct ProjectionResult {
    Eigen::VectorXd theta_opt;  // coefficients on the target columns
    double distance = 0.0;      // average per-draw KL to the projection
};

/// Projection of a full-mask reference posterior onto a submodel: theta_opt
/// is the least-squares projection of the reference fitted values onto the
/// target columns; the distance is the Monte-Carlo average KL over S
/// posterior draws (per-draw projections), linear-Gaussian case.
ProjectionResult projection_distance(const DesignData& data, const LinearPosterior& reference,
                                     const GammaMask& target, std::size_t draws = 1000,
                                     std::uint64_t seed = 0);

}  // namespace preq
