#include "preq/conjugate.hpp"

#include <cmath>
#include <stdexcept>

namespace preq {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

double lbeta(double a, double b) { return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b); }

void check_support(const ConjugateModel& model, double y) {
    if (std::holds_alternative<BetaBinomial>(model)) {
        if (y != 0.0 && y != 1.0)
            throw std::invalid_argument("BetaBinomial: outcomes must be 0 or 1");
    } else if (!std::isfinite(y)) {
        throw std::invalid_argument("conjugate update: outcome must be finite");
    }
}

struct Moments {
    std::int64_t n = 0;
    double sum = 0.0;
    double sum_sq_dev = 0.0;  // sum of (y - mean)^2
    double mean = 0.0;

    // One-pass Welford update with compensated mean accumulation.
    void add(double y) {
        ++n;
        const double delta = y - mean;
        mean += delta / static_cast<double>(n);
        sum_sq_dev += delta * (y - mean);
        sum += y;
    }
};

Moments moments_of(std::span<const double> ys) {
    Moments m;
    for (const double y : ys) m.add(y);
    return m;
}

}  // namespace

void validate(const ConjugateModel& model) {
    if (const auto* bb = std::get_if<BetaBinomial>(&model)) {
        if (!(bb->a > 0.0 && bb->b > 0.0)) throw std::invalid_argument("BetaBinomial: a, b must be positive");
    } else if (const auto* nk = std::get_if<NormalKnownVar>(&model)) {
        if (!(nk->mean_var > 0.0 && nk->noise_var > 0.0))
            throw std::invalid_argument("NormalKnownVar: variances must be positive");
    } else if (const auto* ng = std::get_if<NormalInvGamma>(&model)) {
        if (!(ng->kappa > 0.0 && ng->shape > 0.0 && ng->rate > 0.0))
            throw std::invalid_argument("NormalInvGamma: kappa, shape, rate must be positive");
    }
}

PosteriorState make_posterior(const ConjugateModel& prior) {
    validate(prior);
    return {prior, 0};
}

PosteriorState posterior_update(const PosteriorState& state, const Outcome& y) {
    check_support(state.params, y.value);
    PosteriorState next = state;
    next.n_obs += 1;
    if (auto* bb = std::get_if<BetaBinomial>(&next.params)) {
        if (y.value == 1.0) {
            bb->a += 1.0;
        } else {
            bb->b += 1.0;
        }
    } else if (auto* nk = std::get_if<NormalKnownVar>(&next.params)) {
        const double precision = 1.0 / nk->mean_var + 1.0 / nk->noise_var;
        nk->mean = (nk->mean / nk->mean_var + y.value / nk->noise_var) / precision;
        nk->mean_var = 1.0 / precision;
    } else if (auto* ng = std::get_if<NormalInvGamma>(&next.params)) {
        const double kappa_new = ng->kappa + 1.0;
        const double resid = y.value - ng->loc;
        ng->rate += 0.5 * (ng->kappa / kappa_new) * resid * resid;
        ng->loc = (ng->kappa * ng->loc + y.value) / kappa_new;
        ng->kappa = kappa_new;
        ng->shape += 0.5;
    }
    return next;
}

PosteriorState posterior_update(const PosteriorState& state, std::span<const Outcome> ys) {
    PosteriorState s = state;
    for (const auto& y : ys) s = posterior_update(s, y);
    return s;
}

PosteriorState posterior_update(const ConjugateModel& prior, std::span<const Outcome> ys) {
    return posterior_update(make_posterior(prior), ys);
}

DistPtr posterior_predictive(const PosteriorState& state) {
    if (const auto* bb = std::get_if<BetaBinomial>(&state.params)) {
        const double p1 = bb->a / (bb->a + bb->b);
        return std::make_shared<DiscreteDistribution>(std::vector<double>{0.0, 1.0},
                                                      std::vector<double>{1.0 - p1, p1});
    }
    if (const auto* nk = std::get_if<NormalKnownVar>(&state.params)) {
        return std::make_shared<NormalDistribution>(nk->mean, nk->mean_var + nk->noise_var);
    }
    const auto& ng = std::get<NormalInvGamma>(state.params);
    const double scale = std::sqrt(ng.rate * (1.0 + 1.0 / ng.kappa) / ng.shape);
    return std::make_shared<StudentTDistribution>(2.0 * ng.shape, ng.loc, scale);
}

double log_marginal_likelihood(const ConjugateModel& prior, std::span<const double> ys) {
    validate(prior);
    if (ys.empty()) throw std::invalid_argument("log_marginal_likelihood: empty sequence");
    const auto n = static_cast<double>(ys.size());

    if (const auto* bb = std::get_if<BetaBinomial>(&prior)) {
        double successes = 0.0;
        for (const double y : ys) {
            check_support(prior, y);
            successes += y;
        }
        return lbeta(bb->a + successes, bb->b + (n - successes)) - lbeta(bb->a, bb->b);
    }

    const Moments m = moments_of(ys);
    if (const auto* nk = std::get_if<NormalKnownVar>(&prior)) {
        // y ~ N(mu0 1, sigma^2 I + tau0^2 J); determinant and quadratic form
        // via the matrix determinant lemma / Sherman-Morrison.
        const double s2 = nk->noise_var;
        const double t2 = nk->mean_var;
        const double dev = m.mean - nk->mean;
        const double log_det = n * std::log(s2) + std::log1p(n * t2 / s2);
        const double quad = (m.sum_sq_dev + n * dev * dev) / s2 - (t2 / s2) * n * n * dev * dev / (s2 + n * t2);
        return -0.5 * (n * kLog2Pi + log_det + quad);
    }

    const auto& ng = std::get<NormalInvGamma>(prior);
    const double kappa_n = ng.kappa + n;
    const double shape_n = ng.shape + 0.5 * n;
    const double dev = m.mean - ng.loc;
    const double rate_n = ng.rate + 0.5 * (m.sum_sq_dev + ng.kappa * n * dev * dev / kappa_n);
    return -0.5 * n * kLog2Pi + 0.5 * std::log(ng.kappa / kappa_n) + ng.shape * std::log(ng.rate) -
           shape_n * std::log(rate_n) + std::lgamma(shape_n) - std::lgamma(ng.shape);
}

double log_marginal_likelihood(const ConjugateModel& prior, std::span<const Outcome> ys) {
    std::vector<double> values;
    values.reserve(ys.size());
    for (const auto& y : ys) values.push_back(y.value);
    return log_marginal_likelihood(prior, std::span<const double>(values));
}

double log_fractional_marginal(const ConjugateModel& prior, std::span<const double> ys, double f) {
    validate(prior);
    if (ys.empty()) throw std::invalid_argument("log_fractional_marginal: empty sequence");
    if (!(f > 0.0 && f <= 1.0)) throw std::invalid_argument("log_fractional_marginal: f must lie in (0,1]");
    const auto n = static_cast<double>(ys.size());

    if (const auto* bb = std::get_if<BetaBinomial>(&prior)) {
        double successes = 0.0;
        for (const double y : ys) {
            check_support(prior, y);
            successes += y;
        }
        return lbeta(bb->a + f * successes, bb->b + f * (n - successes)) - lbeta(bb->a, bb->b);
    }

    const Moments m = moments_of(ys);
    if (const auto* nk = std::get_if<NormalKnownVar>(&prior)) {
        const double s2 = nk->noise_var;
        const double t2 = nk->mean_var;
        const double a = f * n / (2.0 * s2);
        const double dev = m.mean - nk->mean;
        return -0.5 * f * n * (kLog2Pi + std::log(s2)) - f * m.sum_sq_dev / (2.0 * s2) -
               0.5 * std::log1p(2.0 * a * t2) - a * dev * dev / (1.0 + 2.0 * a * t2);
    }

    const auto& ng = std::get<NormalInvGamma>(prior);
    const double kappa_f = ng.kappa + f * n;
    const double shape_f = ng.shape + 0.5 * f * n;
    const double dev = m.mean - ng.loc;
    const double rate_f = ng.rate + 0.5 * (f * m.sum_sq_dev + f * n * ng.kappa * dev * dev / kappa_f);
    return -0.5 * f * n * kLog2Pi + 0.5 * std::log(ng.kappa / kappa_f) + ng.shape * std::log(ng.rate) -
           shape_f * std::log(rate_f) + std::lgamma(shape_f) - std::lgamma(ng.shape);
}

ParamDraw sample_posterior(const PosteriorState& state, Rng& rng) {
    if (const auto* bb = std::get_if<BetaBinomial>(&state.params)) {
        return {sample_beta(rng, bb->a, bb->b), 0.0};
    }
    if (const auto* nk = std::get_if<NormalKnownVar>(&state.params)) {
        return {nk->mean + std::sqrt(nk->mean_var) * sample_standard_normal(rng), nk->noise_var};
    }
    const auto& ng = std::get<NormalInvGamma>(state.params);
    const double s2 = sample_inverse_gamma(rng, ng.shape, ng.rate);
    return {ng.loc + std::sqrt(s2 / ng.kappa) * sample_standard_normal(rng), s2};
}

double sample_observation(const ConjugateModel& model, const ParamDraw& draw, Rng& rng) {
    if (std::holds_alternative<BetaBinomial>(model)) return rng.uniform() < draw.location ? 1.0 : 0.0;
    return draw.location + std::sqrt(draw.variance) * sample_standard_normal(rng);
}

// ---------------------------------------------------------------------------
// Predictors

ConjugatePredictor::ConjugatePredictor(std::string label, ConjugateModel prior)
    : Predictor(std::move(label)), prior_(prior), state_(make_posterior(prior)) {}

void ConjugatePredictor::observe(std::span<const double>, const Outcome& y) {
    state_ = posterior_update(state_, y);
}

DistPtr ConjugatePredictor::predictive(std::span<const double>) { return posterior_predictive(state_); }

void ConjugatePredictor::reset() { state_ = make_posterior(prior_); }

namespace {

class PlugInPredictor final : public Predictor {
public:
    PlugInPredictor(std::string label, PlugInFamily family, EstimatorTag estimator,
                    std::optional<ConjugateModel> prior)
        : Predictor(std::move(label)), family_(family), estimator_(estimator), prior_(std::move(prior)) {
        if (estimator_ == EstimatorTag::PosteriorMean) {
            if (!prior_.has_value())
                throw std::invalid_argument("plug_in_predictor: posterior-mean estimator needs a prior");
            validate(*prior_);
            state_ = make_posterior(*prior_);
        }
    }

    void observe(std::span<const double>, const Outcome& y) override {
        if (family_ == PlugInFamily::Bernoulli && y.value != 0.0 && y.value != 1.0)
            throw std::invalid_argument("plug-in Bernoulli: outcomes must be 0 or 1");
        moments_.add(y.value);
        if (estimator_ == EstimatorTag::PosteriorMean) state_ = posterior_update(state_, y);
    }

    DistPtr predictive(std::span<const double>) override {
        if (family_ == PlugInFamily::Bernoulli) {
            const double p1 = bernoulli_estimate();
            return std::make_shared<DiscreteDistribution>(std::vector<double>{0.0, 1.0},
                                                          std::vector<double>{1.0 - p1, p1});
        }
        const auto [mu, var] = normal_estimate();
        return std::make_shared<NormalDistribution>(mu, var);
    }

    void reset() override {
        moments_ = {};
        if (estimator_ == EstimatorTag::PosteriorMean) state_ = make_posterior(*prior_);
    }

private:
    double bernoulli_estimate() const {
        if (estimator_ == EstimatorTag::Mle) {
            if (moments_.n < 1)
                throw std::runtime_error("plug-in MLE needs a burn-in of at least 1 observation");
            return moments_.sum / static_cast<double>(moments_.n);
        }
        const auto& bb = std::get<BetaBinomial>(state_.params);
        return bb.a / (bb.a + bb.b);
    }

    std::pair<double, double> normal_estimate() const {
        if (estimator_ == EstimatorTag::Mle) {
            // Biased 1/n variance: the likelihood-maximizing plug-in.
            if (moments_.n < 2)
                throw std::runtime_error("plug-in MLE needs a burn-in of at least 2 observations");
            return {moments_.mean, moments_.sum_sq_dev / static_cast<double>(moments_.n)};
        }
        if (const auto* nk = std::get_if<NormalKnownVar>(&state_.params)) return {nk->mean, nk->noise_var};
        const auto& ng = std::get<NormalInvGamma>(state_.params);
        if (!(ng.shape > 1.0))
            throw std::runtime_error("plug-in posterior mean of the variance needs shape > 1");
        return {ng.loc, ng.rate / (ng.shape - 1.0)};
    }

    PlugInFamily family_;
    EstimatorTag estimator_;
    std::optional<ConjugateModel> prior_;
    PosteriorState state_;
    Moments moments_;
};

}  // namespace

PredictorPtr plug_in_predictor(std::string label, PlugInFamily family, EstimatorTag estimator,
                               std::optional<ConjugateModel> prior) {
    if (estimator == EstimatorTag::PosteriorMean && prior.has_value()) {
        const bool bernoulli_prior = std::holds_alternative<BetaBinomial>(*prior);
        if (bernoulli_prior != (family == PlugInFamily::Bernoulli))
            throw std::invalid_argument("plug_in_predictor: prior family does not match the likelihood family");
    }
    return std::make_unique<PlugInPredictor>(std::move(label), family, estimator, std::move(prior));
}

}  // namespace preq
