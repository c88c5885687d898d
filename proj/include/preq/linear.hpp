#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "preq/predictor.hpp"
#include "preq/rng.hpp"

namespace preq {

// Regression data.  When intercept is set (the default) the intercept is
// handled internally with a flat prior and is never part of a mask.
struct DesignData {
    Eigen::MatrixXd X;
    Eigen::VectorXd y;
    bool intercept = true;
};

void validate(const DesignData& data);

// Inclusion mask over the d covariate columns.
using GammaMask = std::vector<bool>;

std::uint32_t mask_bits(const GammaMask& mask);
std::string mask_to_string(const GammaMask& mask);

// g-prior posterior for one submodel.
struct LinearPosterior {
    GammaMask mask;
    double g = 0.0;
    double intercept_mean = 0.0;      // flat-prior intercept, original coordinates
    Eigen::VectorXd coef_mean;        // E(beta_mask | D) for the masked columns
    Eigen::MatrixXd coef_cov_scale;   // Cov(beta_mask | D, sigma^2) = sigma^2 * coef_cov_scale
    double sigma_shape = 0.0;         // sigma^2 | D ~ InvGamma(shape, rate)
    double sigma_rate = 0.0;
    Eigen::VectorXd column_means;     // centering offsets for the masked columns
    std::int64_t n = 0;

    double predict(const Eigen::VectorXd& x_full) const;  // x over all d covariates
};

/// Zellner g-prior fit of the submodel selected by mask.  coef_mean is the
/// (g/(1+g))-shrunk OLS estimate on the masked columns.
LinearPosterior fit_submodel(const DesignData& data, const GammaMask& mask, double g);

/// log marginal likelihood of the submodel, up to one additive constant
/// shared by every mask (it cancels in weights and Bayes factors).
double log_marginal_submodel(const DesignData& data, const GammaMask& mask, double g);

/// Unit-information default: g = n.
double default_g(const DesignData& data);

enum class MaskPrior { Uniform, SizePenalized };  // W(mask) uniform or ∝ 1/(d choose |mask|)

/// All 2^d masks in binary order (capped at d <= 20).
std::vector<GammaMask> enumerate_masks(std::size_t d);

struct SubmodelEnumeration {
    std::vector<GammaMask> masks;
    std::vector<LinearPosterior> posteriors;
    std::vector<double> log_marginals;
    std::vector<double> weights;  // posterior mask probabilities
};

SubmodelEnumeration enumerate_submodels(const DesignData& data, double g,
                                        MaskPrior prior = MaskPrior::Uniform);

/// p_j = sum of the weights of every mask containing covariate j.
std::vector<double> inclusion_probabilities(const std::vector<GammaMask>& masks,
                                            const std::vector<double>& weights);

struct MedianModel {
    GammaMask mask;
    const LinearPosterior* posterior;  // borrowed from the fitted set
    std::function<double(const Eigen::VectorXd&)> predict;
};

/// The submodel containing exactly the covariates with p_j >= 1/2.  Throws
/// if that mask was not fitted (no graphical model structure).
MedianModel median_probability_model(const std::vector<double>& inclusion_probs,
                                     const std::vector<GammaMask>& masks,
                                     const std::vector<LinearPosterior>& posteriors);

/// Joint posterior draw (beta over masked columns, sigma^2).
std::pair<Eigen::VectorXd, double> sample_posterior(const LinearPosterior& post, Rng& rng);

}  // namespace preq
