#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "preq/conjugate.hpp"
#include "preq/predictor.hpp"

namespace preq {

// phi(B) Y = theta(B) eps with iid N(0, sigma^2) innovations.
struct ArmaParams {
    std::vector<double> phi;    // AR coefficients, length p
    std::vector<double> theta;  // MA coefficients, length q
    double sigma = 1.0;
};

/// Conditional Gaussian log likelihood: innovations are recovered
/// recursively with pre-sample values set to zero and the first max(p,q)
/// terms conditioned away (sum runs over t = p+1..n).
double arma_conditional_loglik(const ArmaParams& params, std::span<const double> ys);

/// Bayesian AR(p) one-step predictor: y_t regressed on an intercept and its
/// p lags under a normal-inverse-gamma prior, conditional-likelihood
/// convention (the first p values are conditioned on, never modeled).  With
/// p = 0 this is exactly the conjugate NormalInvGamma predictor.
PredictorPtr ar_bayes_predictor(std::string label, std::size_t p, const NormalInvGamma& prior);

// Linear-Gaussian state space model:
//   X_{n+1} = F X_n + G eta_n,  eta ~ N(0, Q)
//   Y_n     = H X_n + eps_n,    eps ~ N(0, R)
struct SsmParams {
    Eigen::MatrixXd F;  // d x d
    Eigen::MatrixXd G;  // d x m
    Eigen::MatrixXd H;  // k x d
    Eigen::MatrixXd Q;  // m x m, PSD
    Eigen::MatrixXd R;  // k x k, PD
    Eigen::VectorXd initial_mean;
    Eigen::MatrixXd initial_cov;
};

void validate(const SsmParams& params);

struct FilterState {
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;
    std::int64_t step = 0;
};

FilterState initial_state(const SsmParams& params);

/// One-step-ahead prediction: mean <- F mean, cov <- F cov F' + G Q G'.
FilterState kalman_predict(const FilterState& state, const SsmParams& params);

/// Measurement update with the standard gain, covariance in Joseph form.
FilterState kalman_update(const FilterState& state, const SsmParams& params, const Eigen::VectorXd& y);

struct GaussianMoments {
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;
};

/// Moments of p(y_{n+1} | y^n) from a predicted state: N(H mean, H cov H' + R).
GaussianMoments kalman_observation_moments(const FilterState& predicted, const SsmParams& params);

/// Scalar-observation convenience returning a Distribution (k must be 1).
DistPtr kalman_observation_predictive(const FilterState& predicted, const SsmParams& params);

// Harness predictor around the filter; scalar observations.
class KalmanPredictor final : public Predictor {
public:
    KalmanPredictor(std::string label, SsmParams params);

    using Predictor::observe;
    using Predictor::predictive;

    void observe(std::span<const double> x, const Outcome& y) override;
    DistPtr predictive(std::span<const double> x) override;
    void reset() override;

    const FilterState& state() const { return state_; }

private:
    SsmParams params_;
    FilterState state_;  // filtered law of X_n given y^n
};

}  // namespace preq
