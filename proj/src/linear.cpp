#include "preq/linear.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace preq {

namespace {

// Columns of X selected by mask, centered when an intercept is present.
struct MaskedDesign {
    Eigen::MatrixXd Xm;           // n x p
    Eigen::VectorXd yc;           // centered response
    Eigen::VectorXd column_means; // p
    double y_mean = 0.0;
    std::vector<int> columns;
};

MaskedDesign masked_design(const DesignData& data, const GammaMask& mask) {
    const auto n = data.X.rows();
    MaskedDesign out;
    for (int j = 0; j < static_cast<int>(mask.size()); ++j)
        if (mask[j]) out.columns.push_back(j);
    const auto p = static_cast<int>(out.columns.size());
    out.Xm.resize(n, p);
    for (int k = 0; k < p; ++k) out.Xm.col(k) = data.X.col(out.columns[k]);
    out.column_means = Eigen::VectorXd::Zero(p);
    out.y_mean = 0.0;
    out.yc = data.y;
    if (data.intercept) {
        out.y_mean = data.y.mean();
        out.yc.array() -= out.y_mean;
        for (int k = 0; k < p; ++k) {
            out.column_means(k) = out.Xm.col(k).mean();
            out.Xm.col(k).array() -= out.column_means(k);
        }
    }
    return out;
}

void check_rank(const Eigen::MatrixXd& Xm, const std::vector<int>& columns) {
    if (Xm.cols() == 0) return;
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(Xm);
    qr.setThreshold(1e-10);
    if (qr.rank() < Xm.cols()) {
        std::string names;
        for (std::size_t i = 0; i < columns.size(); ++i)
            names += (i ? "," : "") + std::to_string(columns[i]);
        throw std::invalid_argument("fit_submodel: masked design is rank deficient (columns " + names + ")");
    }
}

}  // namespace

void validate(const DesignData& data) {
    if (data.X.rows() != data.y.size()) throw std::invalid_argument("DesignData: X and y row counts differ");
    if (data.X.rows() < data.X.cols() + 2)
        throw std::invalid_argument("DesignData: need n >= d + 2 for proper posteriors");
    for (int j = 0; j < data.X.cols(); ++j) {
        const double var = (data.X.col(j).array() - data.X.col(j).mean()).square().sum();
        if (!(var > 0.0))
            throw std::invalid_argument("DesignData: column " + std::to_string(j) + " is degenerate");
    }
}

std::uint32_t mask_bits(const GammaMask& mask) {
    std::uint32_t bits = 0;
    for (std::size_t j = 0; j < mask.size(); ++j)
        if (mask[j]) bits |= (1u << j);
    return bits;
}

std::string mask_to_string(const GammaMask& mask) {
    std::string s;
    s.reserve(mask.size());
    for (const bool b : mask) s += b ? '1' : '0';
    return s;
}

double LinearPosterior::predict(const Eigen::VectorXd& x_full) const {
    double yhat = intercept_mean;
    int k = 0;
    for (int j = 0; j < static_cast<int>(mask.size()); ++j) {
        if (mask[j]) {
            yhat += (x_full(j) - column_means(k)) * coef_mean(k);
            ++k;
        }
    }
    return yhat;
}

LinearPosterior fit_submodel(const DesignData& data, const GammaMask& mask, double g) {
    validate(data);
    if (mask.size() != static_cast<std::size_t>(data.X.cols()))
        throw std::invalid_argument("fit_submodel: mask length must equal the covariate count");
    if (!(g > 0.0)) throw std::invalid_argument("fit_submodel: g must be positive");

    const auto n = static_cast<double>(data.X.rows());
    const MaskedDesign md = masked_design(data, mask);
    check_rank(md.Xm, md.columns);

    const auto p = md.Xm.cols();
    const double shrink = g / (1.0 + g);

    LinearPosterior post;
    post.mask = mask;
    post.g = g;
    post.column_means = md.column_means;
    post.n = data.X.rows();

    Eigen::VectorXd residual = md.yc;
    if (p > 0) {
        const Eigen::MatrixXd gram = md.Xm.transpose() * md.Xm;
        const Eigen::LLT<Eigen::MatrixXd> llt(gram);
        if (llt.info() != Eigen::Success)
            throw std::invalid_argument("fit_submodel: masked Gram matrix is not positive definite");
        const Eigen::VectorXd ols = llt.solve(md.Xm.transpose() * md.yc);
        post.coef_mean = shrink * ols;
        post.coef_cov_scale = shrink * llt.solve(Eigen::MatrixXd::Identity(p, p));
        residual -= md.Xm * ols;
    } else {
        post.coef_mean.resize(0);
        post.coef_cov_scale.resize(0, 0);
    }
    post.intercept_mean = md.y_mean;

    const double tss = md.yc.squaredNorm();
    const double ssr = residual.squaredNorm();
    const double dof = data.intercept ? n - 1.0 : n;
    post.sigma_shape = 0.5 * dof;
    post.sigma_rate = 0.5 * (tss + g * ssr) / (1.0 + g);
    return post;
}

double log_marginal_submodel(const DesignData& data, const GammaMask& mask, double g) {
    validate(data);
    if (mask.size() != static_cast<std::size_t>(data.X.cols()))
        throw std::invalid_argument("log_marginal_submodel: mask length must equal the covariate count");
    if (!(g > 0.0)) throw std::invalid_argument("log_marginal_submodel: g must be positive");

    const auto n = static_cast<double>(data.X.rows());
    const MaskedDesign md = masked_design(data, mask);
    check_rank(md.Xm, md.columns);

    const auto p = static_cast<double>(md.Xm.cols());
    const double tss = md.yc.squaredNorm();
    double ssr = tss;
    if (md.Xm.cols() > 0) {
        const Eigen::VectorXd ols = (md.Xm.transpose() * md.Xm).llt().solve(md.Xm.transpose() * md.yc);
        ssr = (md.yc - md.Xm * ols).squaredNorm();
    }
    const double dof = data.intercept ? n - 1.0 : n;
    return 0.5 * (dof - p) * std::log1p(g) - 0.5 * dof * std::log(tss + g * ssr);
}

double default_g(const DesignData& data) { return static_cast<double>(data.X.rows()); }

std::vector<GammaMask> enumerate_masks(std::size_t d) {
    if (d > 20)
        throw std::invalid_argument("enumerate_masks: d > 20 would enumerate 2^d submodels; pass an explicit mask subset");
    std::vector<GammaMask> masks;
    masks.reserve(1u << d);
    for (std::uint32_t bits = 0; bits < (1u << d); ++bits) {
        GammaMask m(d, false);
        for (std::size_t j = 0; j < d; ++j) m[j] = (bits >> j) & 1u;
        masks.push_back(std::move(m));
    }
    return masks;
}

SubmodelEnumeration enumerate_submodels(const DesignData& data, double g, MaskPrior prior) {
    SubmodelEnumeration out;
    const auto d = static_cast<std::size_t>(data.X.cols());
    out.masks = enumerate_masks(d);
    out.posteriors.reserve(out.masks.size());
    out.log_marginals.reserve(out.masks.size());

    std::vector<double> log_weights(out.masks.size());
    for (std::size_t i = 0; i < out.masks.size(); ++i) {
        out.posteriors.push_back(fit_submodel(data, out.masks[i], g));
        out.log_marginals.push_back(log_marginal_submodel(data, out.masks[i], g));
        double log_prior = 0.0;
        if (prior == MaskPrior::SizePenalized) {
            std::size_t size = 0;
            for (const bool b : out.masks[i]) size += b;
            log_prior = -(std::lgamma(static_cast<double>(d) + 1.0) -
                          std::lgamma(static_cast<double>(size) + 1.0) -
                          std::lgamma(static_cast<double>(d - size) + 1.0));
        }
        log_weights[i] = out.log_marginals[i] + log_prior;
    }

    const double max_lw = *std::max_element(log_weights.begin(), log_weights.end());
    double total = 0.0;
    out.weights.resize(log_weights.size());
    for (std::size_t i = 0; i < log_weights.size(); ++i) {
        out.weights[i] = std::exp(log_weights[i] - max_lw);
        total += out.weights[i];
    }
    for (auto& w : out.weights) w /= total;
    return out;
}

std::vector<double> inclusion_probabilities(const std::vector<GammaMask>& masks,
                                            const std::vector<double>& weights) {
    if (masks.empty() || masks.size() != weights.size())
        throw std::invalid_argument("inclusion_probabilities: masks and weights must be nonempty and aligned");
    double total = 0.0;
    for (const double w : weights) {
        if (w < 0.0) throw std::invalid_argument("inclusion_probabilities: weights must be nonnegative");
        total += w;
    }
    if (std::abs(total - 1.0) > 1e-9)
        throw std::invalid_argument("inclusion_probabilities: weights must sum to 1");
    const std::size_t d = masks.front().size();
    std::vector<double> p(d, 0.0);
    for (std::size_t i = 0; i < masks.size(); ++i) {
        if (masks[i].size() != d) throw std::invalid_argument("inclusion_probabilities: mask lengths differ");
        for (std::size_t j = 0; j < d; ++j)
            if (masks[i][j]) p[j] += weights[i];
    }
    return p;
}

MedianModel median_probability_model(const std::vector<double>& inclusion_probs,
                                     const std::vector<GammaMask>& masks,
                                     const std::vector<LinearPosterior>& posteriors) {
    if (masks.size() != posteriors.size())
        throw std::invalid_argument("median_probability_model: masks and posteriors must be aligned");
    GammaMask median(inclusion_probs.size(), false);
    for (std::size_t j = 0; j < inclusion_probs.size(); ++j) median[j] = inclusion_probs[j] >= 0.5;

    for (std::size_t i = 0; i < masks.size(); ++i) {
        if (masks[i] == median) {
            const LinearPosterior* post = &posteriors[i];
            return {median, post, [post](const Eigen::VectorXd& x) { return post->predict(x); }};
        }
    }
    throw std::runtime_error("median_probability_model: the median mask " + mask_to_string(median) +
                             " was not fitted (model list lacks graphical model structure)");
}

std::pair<Eigen::VectorXd, double> sample_posterior(const LinearPosterior& post, Rng& rng) {
    const double sigma2 = sample_inverse_gamma(rng, post.sigma_shape, post.sigma_rate);
    const auto p = post.coef_mean.size();
    Eigen::VectorXd beta = post.coef_mean;
    if (p > 0) {
        const Eigen::MatrixXd chol = (sigma2 * post.coef_cov_scale).llt().matrixL();
        Eigen::VectorXd z(p);
        for (int i = 0; i < p; ++i) z(i) = sample_standard_normal(rng);
        beta += chol * z;
    }
    return {beta, sigma2};
}

}  // namespace preq
