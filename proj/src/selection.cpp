#include "preq/selection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <stdexcept>

namespace preq {

namespace {

double checked_exp_diff(double log_a, double log_b) {
    if (!std::isfinite(log_a) || !std::isfinite(log_b))
        throw std::runtime_error("bayes_factor: non-finite marginal likelihood");
    return std::exp(log_a - log_b);
}

std::vector<double> subset_values(std::span<const double> ys, const std::vector<int>& idx) {
    std::vector<double> out;
    out.reserve(idx.size());
    for (const int i : idx) out.push_back(ys[static_cast<std::size_t>(i)]);
    return out;
}

// log marginal of the complement given the training subset:
// log p(D \ S | M, S) = log ML(D) - log ML(S).
double log_conditional_marginal(const ConjugateModel& model, std::span<const double> ys,
                                const std::vector<int>& train) {
    const double full = log_marginal_likelihood(model, ys);
    if (train.empty()) return full;
    const auto train_ys = subset_values(ys, train);
    return full - log_marginal_likelihood(model, std::span<const double>(train_ys));
}

std::uint64_t binomial_count(std::size_t n, std::size_t k) {
    if (k > n) return 0;
    k = std::min(k, n - k);
    std::uint64_t c = 1;
    for (std::size_t i = 0; i < k; ++i) {
        if (c > (std::numeric_limits<std::uint64_t>::max() >> 8) / (n - i)) return std::numeric_limits<std::uint64_t>::max();
        c = c * (n - i) / (i + 1);
    }
    return c;
}

void enumerate_subsets(std::size_t n, std::size_t k, std::vector<std::vector<int>>& out) {
    std::vector<int> current(k);
    std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t start, std::size_t depth) {
        if (depth == k) {
            out.push_back(current);
            return;
        }
        for (std::size_t i = start; i + (k - depth) <= n; ++i) {
            current[depth] = static_cast<int>(i);
            rec(i + 1, depth + 1);
        }
    };
    rec(0, 0);
}

}  // namespace

double bayes_factor(double log_ml_a, double log_ml_b) { return checked_exp_diff(log_ml_a, log_ml_b); }

double bayes_factor(const ConjugateModel& model_a, const ConjugateModel& model_b,
                    std::span<const double> ys) {
    return checked_exp_diff(log_marginal_likelihood(model_a, ys), log_marginal_likelihood(model_b, ys));
}

double bayes_factor(const DesignData& data, const GammaMask& mask_a, const GammaMask& mask_b, double g) {
    return checked_exp_diff(log_marginal_submodel(data, mask_a, g), log_marginal_submodel(data, mask_b, g));
}

IntrinsicBfResult intrinsic_bf(const ConjugateModel& model_a, const ConjugateModel& model_b,
                               std::span<const double> ys, std::size_t min_train_size,
                               SubsetAverage average, std::size_t max_subsets, std::uint64_t seed) {
    const std::size_t n = ys.size();
    if (min_train_size >= n)
        throw std::invalid_argument("intrinsic_bf: the training subset must leave data to evaluate");

    IntrinsicBfResult out;
    out.average = average;
    const std::uint64_t total = binomial_count(n, min_train_size);
    if (total <= max_subsets) {
        enumerate_subsets(n, min_train_size, out.subsets);
    } else {
        out.exhaustive = false;
        Rng rng(derive_seed(seed, 0x1bf));
        std::set<std::vector<int>> seen;
        while (seen.size() < max_subsets) {
            // Partial Fisher-Yates draw of a size-m index subset.
            std::vector<int> pool(n);
            std::iota(pool.begin(), pool.end(), 0);
            std::vector<int> pick;
            for (std::size_t i = 0; i < min_train_size; ++i) {
                const auto j = i + static_cast<std::size_t>(rng.below(n - i));
                std::swap(pool[i], pool[j]);
                pick.push_back(pool[i]);
            }
            std::sort(pick.begin(), pick.end());
            if (seen.insert(pick).second) out.subsets.push_back(std::move(pick));
        }
    }

    out.per_subset.reserve(out.subsets.size());
    for (const auto& train : out.subsets) {
        const double log_a = log_conditional_marginal(model_a, ys, train);
        const double log_b = log_conditional_marginal(model_b, ys, train);
        if (!std::isfinite(log_a) || !std::isfinite(log_b))
            throw std::runtime_error("intrinsic_bf: improper posterior on a training subset");
        out.per_subset.push_back(std::exp(log_a - log_b));
    }

    switch (average) {
        case SubsetAverage::Arithmetic:
            out.value = std::accumulate(out.per_subset.begin(), out.per_subset.end(), 0.0) /
                        static_cast<double>(out.per_subset.size());
            break;
        case SubsetAverage::Geometric: {
            double log_sum = 0.0;
            for (const double v : out.per_subset) log_sum += std::log(v);
            out.value = std::exp(log_sum / static_cast<double>(out.per_subset.size()));
            break;
        }
        case SubsetAverage::Median: {
            std::vector<double> sorted = out.per_subset;
            std::sort(sorted.begin(), sorted.end());
            const std::size_t m = sorted.size();
            out.value = (m % 2 == 1) ? sorted[m / 2] : 0.5 * (sorted[m / 2 - 1] + sorted[m / 2]);
            break;
        }
    }
    return out;
}

double fractional_bf(const ConjugateModel& model_a, const ConjugateModel& model_b,
                     std::span<const double> ys, double f) {
    const double qa = log_marginal_likelihood(model_a, ys) - log_fractional_marginal(model_a, ys, f);
    const double qb = log_marginal_likelihood(model_b, ys) - log_fractional_marginal(model_b, ys, f);
    if (!std::isfinite(qa) || !std::isfinite(qb))
        throw std::runtime_error("fractional_bf: non-integrable fractional likelihood");
    return std::exp(qa - qb);
}

double information_criterion(double loglik_at_estimate, int k_params, std::size_t n,
                             IcPenalty penalty, double custom_alpha) {
    if (n < 1) throw std::invalid_argument("information_criterion: n must be >= 1");
    if (k_params < 0) throw std::invalid_argument("information_criterion: k must be >= 0");
    double alpha = custom_alpha;
    if (penalty == IcPenalty::Bic) alpha = std::log(static_cast<double>(n));
    if (penalty == IcPenalty::Aic) alpha = 2.0;
    return -2.0 * loglik_at_estimate + alpha * k_params;
}

std::vector<double> ic_weights(std::span<const double> ics) {
    if (ics.empty()) throw std::invalid_argument("ic_weights: empty input");
    const double min_ic = *std::min_element(ics.begin(), ics.end());
    std::vector<double> w(ics.size());
    double total = 0.0;
    for (std::size_t i = 0; i < ics.size(); ++i) {
        w[i] = std::exp(-0.5 * (ics[i] - min_ic));
        total += w[i];
    }
    for (auto& v : w) v /= total;
    return w;
}

std::vector<std::size_t> fold_assignment(std::size_t n, const FoldPlan& plan) {
    std::vector<std::size_t> folds(n, 0);
    switch (plan.kind) {
        case FoldPlan::Kind::InSample: break;
        case FoldPlan::Kind::Loo:
            std::iota(folds.begin(), folds.end(), std::size_t{0});
            break;
        case FoldPlan::Kind::KFold: {
            if (plan.k < 2 || plan.k > n)
                throw std::invalid_argument("fold_assignment: need 2 <= K <= n");
            std::vector<std::size_t> order(n);
            std::iota(order.begin(), order.end(), std::size_t{0});
            Rng rng(derive_seed(plan.seed, 0xf01d));
            for (std::size_t i = n; i > 1; --i)
                std::swap(order[i - 1], order[static_cast<std::size_t>(rng.below(i))]);
            for (std::size_t pos = 0; pos < n; ++pos) folds[order[pos]] = pos % plan.k;
            break;
        }
    }
    return folds;
}

double elpd(const ConjugateModel& model, std::span<const double> ys, const FoldPlan& plan,
            WorthFunctional worth) {
    const std::size_t n = ys.size();
    if (n == 0) throw std::invalid_argument("elpd: empty data");
    if (plan.kind != FoldPlan::Kind::InSample && n < 2)
        throw std::invalid_argument("elpd: held-out plans need at least 2 observations");

    const auto folds = fold_assignment(n, plan);
    const std::size_t fold_count =
        plan.kind == FoldPlan::Kind::InSample ? 1 : (plan.kind == FoldPlan::Kind::Loo ? n : plan.k);

    // Posterior predictive per fold, trained on the fold complement.
    std::vector<DistPtr> fold_predictive(fold_count);
    for (std::size_t f = 0; f < fold_count; ++f) {
        std::vector<Outcome> train;
        train.reserve(n);
        for (std::size_t i = 0; i < n; ++i)
            if (plan.kind == FoldPlan::Kind::InSample || folds[i] != f)
                train.push_back(Outcome::real(ys[i]));
        const auto post = posterior_update(model, std::span<const Outcome>(train));
        fold_predictive[f] = posterior_predictive(post);
    }

    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const Distribution& pred = *fold_predictive[plan.kind == FoldPlan::Kind::InSample ? 0 : folds[i]];
        if (worth == WorthFunctional::Log) {
            total += pred.log_density(ys[i]);
        } else {
            const double e = ys[i] - pred.mean();
            total += e * e;
        }
    }
    return total / static_cast<double>(n);
}

double ppc_pvalue(const ConjugateModel& model, std::span<const double> ys, const PpcStatistic& statistic,
                  std::size_t draws, std::uint64_t seed) {
    if (draws < 100) throw std::invalid_argument("ppc_pvalue: need at least 100 posterior draws");
    if (ys.empty()) throw std::invalid_argument("ppc_pvalue: empty data");

    std::vector<Outcome> obs;
    obs.reserve(ys.size());
    for (const double y : ys) obs.push_back(Outcome::real(y));
    const auto post = posterior_update(model, std::span<const Outcome>(obs));

    double exceed = 0.0;
    std::vector<double> replica(ys.size());
    for (std::size_t s = 0; s < draws; ++s) {
        Rng rng(derive_seed(seed, s));
        const ParamDraw draw = sample_posterior(post, rng);
        for (auto& r : replica) r = sample_observation(model, draw, rng);
        const double t_rep = statistic(replica, draw);
        const double t_obs = statistic(ys, draw);
        if (!std::isfinite(t_rep) || !std::isfinite(t_obs))
            throw std::runtime_error("ppc_pvalue: statistic is not finite on a posterior draw");
        if (t_rep > t_obs) {
            exceed += 1.0;
        } else if (t_rep == t_obs) {
            exceed += 0.5;  // ties, so constant statistics sit at 1/2
        }
    }
    return exceed / static_cast<double>(draws);
}

ProjectionResult projection_distance(const DesignData& data, const LinearPosterior& reference,
                                     const GammaMask& target, std::size_t draws, std::uint64_t seed) {
    const auto d = static_cast<std::size_t>(data.X.cols());
    if (reference.mask.size() != d || target.size() != d)
        throw std::invalid_argument("projection_distance: mask lengths must equal the covariate count");
    for (std::size_t j = 0; j < d; ++j)
        if (target[j] && !reference.mask[j])
            throw std::invalid_argument("projection_distance: target mask must be contained in the reference mask");

    const auto n = data.X.rows();

    // Design matrices with the always-included intercept column.
    auto with_intercept = [&](const GammaMask& mask) {
        std::vector<int> cols;
        for (int j = 0; j < static_cast<int>(d); ++j)
            if (mask[j]) cols.push_back(j);
        Eigen::MatrixXd m(n, cols.size() + 1);
        m.col(0).setOnes();
        for (std::size_t k = 0; k < cols.size(); ++k) m.col(static_cast<int>(k) + 1) = data.X.col(cols[k]);
        return m;
    };
    const Eigen::MatrixXd Xref = with_intercept(reference.mask);
    const Eigen::MatrixXd Xtgt = with_intercept(target);

    const Eigen::LLT<Eigen::MatrixXd> tgt_llt((Xtgt.transpose() * Xtgt).eval());
    if (tgt_llt.info() != Eigen::Success)
        throw std::invalid_argument("projection_distance: target design is rank deficient");

    // Reference fitted values at the posterior mean, in intercept-augmented
    // coordinates.
    Eigen::VectorXd ref_mean_coef(Xref.cols());
    ref_mean_coef(0) = reference.intercept_mean;
    {
        int k = 0;
        for (std::size_t j = 0; j < d; ++j) {
            if (reference.mask[j]) {
                ref_mean_coef(0) -= reference.column_means(k) * reference.coef_mean(k);
                ref_mean_coef(k + 1) = reference.coef_mean(k);
                ++k;
            }
        }
    }
    const Eigen::VectorXd fitted_mean = Xref * ref_mean_coef;
    ProjectionResult out;
    out.theta_opt = tgt_llt.solve(Xtgt.transpose() * fitted_mean);

    // Monte-Carlo distance: average over posterior draws of the mean KL
    // between the reference predictive and its projection, which for equal
    // Gaussian noise is ||X beta_s - X_t theta_s||^2 / (2 n sigma_s^2).
    double total = 0.0;
    for (std::size_t s = 0; s < draws; ++s) {
        Rng rng(derive_seed(seed, s));
        const auto [beta, sigma2] = sample_posterior(reference, rng);
        Eigen::VectorXd coef(Xref.cols());
        coef(0) = reference.intercept_mean;
        int k = 0;
        for (std::size_t j = 0; j < d; ++j) {
            if (reference.mask[j]) {
                coef(0) -= reference.column_means(k) * beta(k);
                coef(k + 1) = beta(k);
                ++k;
            }
        }
        const Eigen::VectorXd fitted = Xref * coef;
        const Eigen::VectorXd theta_s = tgt_llt.solve(Xtgt.transpose() * fitted);
        const double gap = (fitted - Xtgt * theta_s).squaredNorm();
        total += gap / (2.0 * sigma2 * static_cast<double>(n));
    }
    out.distance = total / static_cast<double>(draws);
    return out;
}

}  // namespace preq
