#include "preq/timeseries.hpp"

#include <cmath>
#include <deque>
#include <stdexcept>

namespace preq {

namespace {
constexpr double kLog2Pi = 1.8378770664093454836;

void check_symmetric_psd(const Eigen::MatrixXd& m, const char* name, double floor) {
    if (m.rows() != m.cols()) throw std::invalid_argument(std::string(name) + " must be square");
    if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-8 * (1.0 + m.cwiseAbs().maxCoeff()))
        throw std::invalid_argument(std::string(name) + " must be symmetric");
    if (m.rows() == 0) return;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m);
    if (eig.eigenvalues().minCoeff() < floor)
        throw std::invalid_argument(std::string(name) + " violates its eigenvalue floor");
}

Eigen::MatrixXd symmetrized(const Eigen::MatrixXd& m) { return 0.5 * (m + m.transpose()); }

}  // namespace

double arma_conditional_loglik(const ArmaParams& params, std::span<const double> ys) {
    if (!(params.sigma > 0.0)) throw std::invalid_argument("arma_conditional_loglik: sigma must be positive");
    const std::size_t p = params.phi.size();
    const std::size_t q = params.theta.size();
    const std::size_t n = ys.size();
    if (n <= std::max(p, q))
        throw std::invalid_argument("arma_conditional_loglik: series must be longer than max(p,q)");

    // eps_t = y_t - sum_j phi_j y_{t-j} - sum_j theta_j eps_{t-j}, with
    // pre-sample innovations fixed at zero.
    std::vector<double> eps(n, 0.0);
    double sum_sq = 0.0;
    for (std::size_t t = p; t < n; ++t) {
        double e = ys[t];
        for (std::size_t j = 1; j <= p; ++j) e -= params.phi[j - 1] * ys[t - j];
        for (std::size_t j = 1; j <= q && j <= t; ++j) {
            if (t - j >= p) e -= params.theta[j - 1] * eps[t - j];
        }
        eps[t] = e;
        sum_sq += e * e;
    }
    const auto terms = static_cast<double>(n - p);
    const double s2 = params.sigma * params.sigma;
    return -0.5 * terms * (kLog2Pi + std::log(s2)) - 0.5 * sum_sq / s2;
}

// ---------------------------------------------------------------------------
// Bayesian AR(p)

namespace {

// Conjugate normal-inverse-gamma regression of y_t on (1, y_{t-1},..,y_{t-p}).
class ArBayesPredictor final : public Predictor {
public:
    ArBayesPredictor(std::string label, std::size_t p, const NormalInvGamma& prior)
        : Predictor(std::move(label)), p_(p), prior_(prior) {
        validate(ConjugateModel{prior});
        reset();
    }

    void observe(std::span<const double>, const Outcome& y) override {
        if (history_.size() >= p_) {
            Eigen::VectorXd row = regressor_row();
            gram_ += row * row.transpose();
            xty_ += row * y.value;
            yty_ += y.value * y.value;
            ++rows_;
        }
        history_.push_back(y.value);
        if (history_.size() > p_) history_.pop_front();
    }

    DistPtr predictive(std::span<const double>) override {
        // rows_ >= 2 is exactly n >= p + 2 under the conditional convention.
        if (rows_ < 2)
            throw std::runtime_error("ar_bayes_predictor: needs at least p + 2 observations before predicting");

        const Eigen::MatrixXd precision = prior_precision() + gram_;
        const Eigen::LLT<Eigen::MatrixXd> llt(precision);
        if (llt.info() != Eigen::Success)
            throw std::runtime_error("ar_bayes_predictor: singular posterior precision");
        const Eigen::VectorXd b = prior_precision() * prior_mean() + xty_;
        const Eigen::VectorXd mean = llt.solve(b);

        const double shape_n = prior_.shape + 0.5 * static_cast<double>(rows_);
        const Eigen::VectorXd m0 = prior_mean();
        const double rate_n = prior_.rate + 0.5 * (yty_ + m0.dot(prior_precision() * m0) - mean.dot(precision * mean));

        const Eigen::VectorXd x_next = regressor_row();
        const double h = x_next.dot(llt.solve(x_next));
        const double scale = std::sqrt(std::max(rate_n / shape_n * (1.0 + h), 1e-300));
        return std::make_shared<StudentTDistribution>(2.0 * shape_n, mean.dot(x_next), scale);
    }

    void reset() override {
        const auto k = static_cast<Eigen::Index>(p_ + 1);
        gram_ = Eigen::MatrixXd::Zero(k, k);
        xty_ = Eigen::VectorXd::Zero(k);
        yty_ = 0.0;
        rows_ = 0;
        history_.clear();
    }

private:
    Eigen::VectorXd regressor_row() const {
        Eigen::VectorXd row(p_ + 1);
        row(0) = 1.0;
        for (std::size_t j = 0; j < p_; ++j) row(static_cast<Eigen::Index>(j + 1)) = history_[history_.size() - 1 - j];
        return row;
    }

    Eigen::MatrixXd prior_precision() const {
        return prior_.kappa * Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(p_ + 1),
                                                        static_cast<Eigen::Index>(p_ + 1));
    }

    Eigen::VectorXd prior_mean() const {
        Eigen::VectorXd m = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p_ + 1));
        m(0) = prior_.loc;
        return m;
    }

    std::size_t p_;
    NormalInvGamma prior_;
    Eigen::MatrixXd gram_;
    Eigen::VectorXd xty_;
    double yty_ = 0.0;
    std::size_t rows_ = 0;
    std::deque<double> history_;  // last p outcomes
};

}  // namespace

PredictorPtr ar_bayes_predictor(std::string label, std::size_t p, const NormalInvGamma& prior) {
    return std::make_unique<ArBayesPredictor>(std::move(label), p, prior);
}

// ---------------------------------------------------------------------------
// Kalman filtering

void validate(const SsmParams& params) {
    const auto d = params.F.rows();
    const auto m = params.G.cols();
    const auto k = params.H.rows();
    if (params.F.cols() != d) throw std::invalid_argument("SsmParams: F must be d x d");
    if (params.G.rows() != d) throw std::invalid_argument("SsmParams: G must be d x m");
    if (params.H.cols() != d) throw std::invalid_argument("SsmParams: H must be k x d");
    if (params.Q.rows() != m || params.Q.cols() != m) throw std::invalid_argument("SsmParams: Q must be m x m");
    if (params.R.rows() != k || params.R.cols() != k) throw std::invalid_argument("SsmParams: R must be k x k");
    if (params.initial_mean.size() != d) throw std::invalid_argument("SsmParams: initial mean must have length d");
    if (params.initial_cov.rows() != d || params.initial_cov.cols() != d)
        throw std::invalid_argument("SsmParams: initial covariance must be d x d");
    check_symmetric_psd(params.Q, "Q", -1e-10);
    check_symmetric_psd(params.R, "R", 1e-300);
    check_symmetric_psd(params.initial_cov, "initial covariance", -1e-10);
}

FilterState initial_state(const SsmParams& params) {
    validate(params);
    return {params.initial_mean, params.initial_cov, 0};
}

FilterState kalman_predict(const FilterState& state, const SsmParams& params) {
    if (state.mean.size() != params.F.cols())
        throw std::invalid_argument("kalman_predict: state dimension mismatch");
    FilterState next;
    next.mean = params.F * state.mean;
    next.cov = symmetrized(params.F * state.cov * params.F.transpose() +
                           params.G * params.Q * params.G.transpose());
    next.step = state.step;
    return next;
}

FilterState kalman_update(const FilterState& state, const SsmParams& params, const Eigen::VectorXd& y) {
    if (y.size() != params.H.rows()) throw std::invalid_argument("kalman_update: observation dimension mismatch");
    const Eigen::MatrixXd innovation_cov =
        symmetrized(params.H * state.cov * params.H.transpose() + params.R);
    const Eigen::LLT<Eigen::MatrixXd> llt(innovation_cov);
    if (llt.info() != Eigen::Success)
        throw std::runtime_error("kalman_update: innovation covariance is not invertible");
    const Eigen::MatrixXd gain = llt.solve(params.H * state.cov).transpose();

    FilterState next;
    next.mean = state.mean + gain * (y - params.H * state.mean);
    const Eigen::MatrixXd ikh =
        Eigen::MatrixXd::Identity(state.cov.rows(), state.cov.cols()) - gain * params.H;
    // Joseph form keeps the covariance PSD under roundoff.
    next.cov = symmetrized(ikh * state.cov * ikh.transpose() + gain * params.R * gain.transpose());
    next.step = state.step + 1;
    return next;
}

GaussianMoments kalman_observation_moments(const FilterState& predicted, const SsmParams& params) {
    GaussianMoments out;
    out.mean = params.H * predicted.mean;
    out.cov = symmetrized(params.H * predicted.cov * params.H.transpose() + params.R);
    return out;
}

DistPtr kalman_observation_predictive(const FilterState& predicted, const SsmParams& params) {
    if (params.H.rows() != 1)
        throw std::invalid_argument("kalman_observation_predictive: needs a scalar observation equation");
    const auto moments = kalman_observation_moments(predicted, params);
    return std::make_shared<NormalDistribution>(moments.mean(0), moments.cov(0, 0));
}

KalmanPredictor::KalmanPredictor(std::string label, SsmParams params)
    : Predictor(std::move(label)), params_(std::move(params)), state_(initial_state(params_)) {
    if (params_.H.rows() != 1)
        throw std::invalid_argument("KalmanPredictor: needs a scalar observation equation");
}

void KalmanPredictor::observe(std::span<const double>, const Outcome& y) {
    Eigen::VectorXd obs(1);
    obs(0) = y.value;
    state_ = kalman_update(kalman_predict(state_, params_), params_, obs);
}

DistPtr KalmanPredictor::predictive(std::span<const double>) {
    return kalman_observation_predictive(kalman_predict(state_, params_), params_);
}

void KalmanPredictor::reset() { state_ = initial_state(params_); }

}  // namespace preq
