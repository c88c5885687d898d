#pragma once

#include <optional>
#include <span>
#include <variant>

#include "preq/predictor.hpp"

namespace preq {

// Closed-form Bayesian models.  Each struct holds the hyperparameters of a
// prior (or posterior -- updating stays in family).

// Bernoulli likelihood with Beta(a, b) prior.
struct BetaBinomial {
    double a = 1.0;
    double b = 1.0;
};

// Normal likelihood with known noise variance and a normal prior on the mean.
struct NormalKnownVar {
    double mean = 0.0;      // prior mean mu0
    double mean_var = 1.0;  // prior variance tau0^2
    double noise_var = 1.0; // known sigma^2
};

// Normal likelihood with unknown mean and variance under a
// normal-inverse-gamma prior: theta | s2 ~ N(loc, s2/kappa), s2 ~ IG(shape, rate).
struct NormalInvGamma {
    double loc = 0.0;
    double kappa = 1.0;
    double shape = 1.0;
    double rate = 1.0;
};

using ConjugateModel = std::variant<BetaBinomial, NormalKnownVar, NormalInvGamma>;

void validate(const ConjugateModel& model);

// Hyperparameters after n_obs conjugate updates.
struct PosteriorState {
    ConjugateModel params;
    std::int64_t n_obs = 0;
};

PosteriorState make_posterior(const ConjugateModel& prior);

/// One-observation conjugate recursion; exchangeable over batches.
PosteriorState posterior_update(const PosteriorState& state, const Outcome& y);
PosteriorState posterior_update(const PosteriorState& state, std::span<const Outcome> ys);
PosteriorState posterior_update(const ConjugateModel& prior, std::span<const Outcome> ys);

/// Bernoulli for BetaBinomial, normal for NormalKnownVar, Student-t for
/// NormalInvGamma.
DistPtr posterior_predictive(const PosteriorState& state);

/// log of the closed-form marginal likelihood of ys under the prior.  Obeys
/// the chain rule: equals the summed log one-step predictive densities.
double log_marginal_likelihood(const ConjugateModel& prior, std::span<const Outcome> ys);
double log_marginal_likelihood(const ConjugateModel& prior, std::span<const double> ys);

/// Marginal of the fractional likelihood p(ys|theta)^f, f in (0,1]; powers of
/// Bernoulli/Gaussian likelihoods stay in family so this is closed form.
double log_fractional_marginal(const ConjugateModel& prior, std::span<const double> ys, double f);

// Posterior parameter draw, used by posterior predictive checks.
struct ParamDraw {
    double location = 0.0;  // Bernoulli probability or normal mean
    double variance = 0.0;  // observation variance (0 for Bernoulli)
};

ParamDraw sample_posterior(const PosteriorState& state, Rng& rng);
double sample_observation(const ConjugateModel& model, const ParamDraw& draw, Rng& rng);

/// Sequential Bayes predictor around a conjugate model.
class ConjugatePredictor final : public Predictor {
public:
    ConjugatePredictor(std::string label, ConjugateModel prior);

    using Predictor::observe;
    using Predictor::predictive;

    void observe(std::span<const double> x, const Outcome& y) override;
    DistPtr predictive(std::span<const double> x) override;
    void reset() override;

    const PosteriorState& state() const { return state_; }

private:
    ConjugateModel prior_;
    PosteriorState state_;
};

enum class PlugInFamily { Bernoulli, Normal };
enum class EstimatorTag { Mle, PosteriorMean };

/// Plug-in forecaster: the family density at a point estimate, with no
/// parameter uncertainty propagated.  The MLE variant refuses to predict
/// before its burn-in (1 observation for Bernoulli, 2 for Normal); the
/// posterior-mean variant needs a prior to take means under.
PredictorPtr plug_in_predictor(std::string label, PlugInFamily family, EstimatorTag estimator,
                               std::optional<ConjugateModel> prior = std::nullopt);

}  // namespace preq
