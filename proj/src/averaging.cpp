#include "preq/averaging.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace preq {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

class ConjugateMember final : public EnsembleMember {
public:
    ConjugateMember(std::string label, ConjugateModel prior)
        : EnsembleMember(std::move(label)), prior_(prior) {
        validate(prior_);
    }

    double log_marginal(std::span<const double> ys) const override {
        return ys.empty() ? 0.0 : log_marginal_likelihood(prior_, ys);
    }

    DistPtr predictive(std::span<const double> ys) const override {
        PosteriorState state = make_posterior(prior_);
        for (const double y : ys) state = posterior_update(state, Outcome::real(y));
        return posterior_predictive(state);
    }

private:
    ConjugateModel prior_;
};

class FixedMember final : public EnsembleMember {
public:
    FixedMember(std::string label, DistPtr law) : EnsembleMember(std::move(label)), law_(std::move(law)) {}

    double log_marginal(std::span<const double> ys) const override {
        double total = 0.0;
        for (const double y : ys) total += law_->log_density(y);
        return total;
    }

    DistPtr predictive(std::span<const double>) const override { return law_; }

private:
    DistPtr law_;
};

class CallbackMember final : public EnsembleMember {
public:
    CallbackMember(std::string label, std::function<double(std::span<const double>)> log_marginal,
                   std::function<DistPtr(std::span<const double>)> predictive, bool approximate)
        : EnsembleMember(std::move(label)),
          log_marginal_(std::move(log_marginal)),
          predictive_(std::move(predictive)),
          approximate_(approximate) {}

    double log_marginal(std::span<const double> ys) const override { return log_marginal_(ys); }
    DistPtr predictive(std::span<const double> ys) const override { return predictive_(ys); }
    bool approximate_marginal() const override { return approximate_; }

private:
    std::function<double(std::span<const double>)> log_marginal_;
    std::function<DistPtr(std::span<const double>)> predictive_;
    bool approximate_;
};

DesignData resample(const DesignData& data, Rng& rng) {
    const auto n = data.X.rows();
    DesignData out;
    out.intercept = data.intercept;
    out.X.resize(n, data.X.cols());
    out.y.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto j = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n)));
        out.X.row(i) = data.X.row(j);
        out.y(i) = data.y(j);
    }
    return out;
}

}  // namespace

MemberPtr conjugate_member(std::string label, ConjugateModel prior) {
    return std::make_shared<ConjugateMember>(std::move(label), prior);
}

MemberPtr fixed_member(std::string label, DistPtr law) {
    return std::make_shared<FixedMember>(std::move(label), std::move(law));
}

MemberPtr callback_member(std::string label, std::function<double(std::span<const double>)> log_marginal,
                          std::function<DistPtr(std::span<const double>)> predictive, bool approximate) {
    return std::make_shared<CallbackMember>(std::move(label), std::move(log_marginal),
                                            std::move(predictive), approximate);
}

std::vector<double> ModelEnsemble::priors() const {
    if (members.empty()) throw std::invalid_argument("ModelEnsemble: needs at least one member");
    if (prior_weights.empty())
        return std::vector<double>(members.size(), 1.0 / static_cast<double>(members.size()));
    if (prior_weights.size() != members.size())
        throw std::invalid_argument("ModelEnsemble: prior weights and members must be aligned");
    double total = 0.0;
    for (const double w : prior_weights) {
        if (!(w >= 0.0)) throw std::invalid_argument("ModelEnsemble: prior weights must be nonnegative");
        total += w;
    }
    if (!(total > 0.0)) throw std::invalid_argument("ModelEnsemble: prior weights must not all vanish");
    std::vector<double> out = prior_weights;
    for (auto& w : out) w /= total;
    return out;
}

std::vector<double> bma_weights(const ModelEnsemble& ensemble, std::span<const double> ys) {
    const auto priors = ensemble.priors();
    std::vector<double> log_w(ensemble.members.size(), -kInf);
    double max_lw = -kInf;
    for (std::size_t k = 0; k < ensemble.members.size(); ++k) {
        if (priors[k] == 0.0) continue;
        log_w[k] = ensemble.members[k]->log_marginal(ys) + std::log(priors[k]);
        max_lw = std::max(max_lw, log_w[k]);
    }
    if (!std::isfinite(max_lw))
        throw std::runtime_error("bma_weights: every member has marginal likelihood zero");
    std::vector<double> w(log_w.size());
    double total = 0.0;
    for (std::size_t k = 0; k < log_w.size(); ++k) {
        w[k] = std::isfinite(log_w[k]) ? std::exp(log_w[k] - max_lw) : 0.0;
        total += w[k];
    }
    for (auto& v : w) v /= total;
    return w;
}

DistPtr bma_predictive(const ModelEnsemble& ensemble, std::span<const double> ys) {
    const auto weights = bma_weights(ensemble, ys);
    std::vector<DistPtr> components;
    components.reserve(ensemble.members.size());
    for (const auto& member : ensemble.members) components.push_back(member->predictive(ys));
    return mixture(std::move(components), weights);
}

double bma_point(const ModelEnsemble& ensemble, std::span<const double> ys) {
    const auto weights = bma_weights(ensemble, ys);
    double point = 0.0;
    for (std::size_t k = 0; k < ensemble.members.size(); ++k) {
        const double mk = ensemble.members[k]->predictive(ys)->mean();
        if (!std::isfinite(mk)) throw std::runtime_error("bma_point: member predictive mean is not finite");
        point += weights[k] * mk;
    }
    return point;
}

double pwm_point(std::span<const double> predictions, std::span<const double> weights) {
    if (predictions.empty() || predictions.size() != weights.size())
        throw std::invalid_argument("pwm_point: predictions and weights must be nonempty and aligned");
    std::vector<std::size_t> order(predictions.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return predictions[a] < predictions[b]; });
    double cum = 0.0;
    for (const std::size_t i : order) {
        cum += weights[i];
        if (cum >= 0.5) return predictions[i];
    }
    return predictions[order.back()];
}

// ---------------------------------------------------------------------------
// Stacking

namespace {

class LinearPointModel final : public PointModel {
public:
    LinearPointModel(LinearPosterior post) : post_(std::move(post)) {}
    double predict(const Eigen::VectorXd& x) const override { return post_.predict(x); }

private:
    LinearPosterior post_;
};

class OlsPointModel final : public PointModel {
public:
    OlsPointModel(const DesignData& data, const GammaMask& mask) {
        std::vector<int> cols;
        for (int j = 0; j < static_cast<int>(mask.size()); ++j)
            if (mask[j]) cols.push_back(j);
        columns_ = cols;
        const auto n = data.X.rows();
        Eigen::MatrixXd X(n, cols.size() + 1);
        X.col(0).setOnes();
        for (std::size_t k = 0; k < cols.size(); ++k) X.col(static_cast<int>(k) + 1) = data.X.col(cols[k]);
        coef_ = (X.transpose() * X).ldlt().solve(X.transpose() * data.y);
    }

    double predict(const Eigen::VectorXd& x) const override {
        double yhat = coef_(0);
        for (std::size_t k = 0; k < columns_.size(); ++k) yhat += coef_(static_cast<int>(k) + 1) * x(columns_[k]);
        return yhat;
    }

private:
    std::vector<int> columns_;
    Eigen::VectorXd coef_;
};

class ConstantPointModel final : public PointModel {
public:
    explicit ConstantPointModel(double value) : value_(value) {}
    double predict(const Eigen::VectorXd&) const override { return value_; }

private:
    double value_;
};

// Exact Euclidean projection onto the probability simplex (sort based).
std::vector<double> project_simplex(std::vector<double> v) {
    std::vector<double> u = v;
    std::sort(u.begin(), u.end(), std::greater<double>());
    double cum = 0.0, tau = 0.0;
    int support = 0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        cum += u[i];
        const double t = (cum - 1.0) / static_cast<double>(i + 1);
        if (u[i] - t > 0.0) {
            tau = t;
            support = static_cast<int>(i + 1);
        }
    }
    (void)support;
    for (auto& x : v) x = std::max(0.0, x - tau);
    return v;
}

std::vector<double> project_orthant(std::vector<double> v) {
    for (auto& x : v) x = std::max(0.0, x);
    return v;
}

DesignData rows_subset(const DesignData& data, const std::vector<Eigen::Index>& rows) {
    DesignData out;
    out.intercept = data.intercept;
    out.X.resize(rows.size(), data.X.cols());
    out.y.resize(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        out.X.row(static_cast<Eigen::Index>(i)) = data.X.row(rows[i]);
        out.y(static_cast<Eigen::Index>(i)) = data.y(rows[i]);
    }
    return out;
}

}  // namespace

MemberBuilder linear_member(GammaMask mask, double g) {
    return [mask, g](const DesignData& data) -> PointModelPtr {
        if (g > 0.0) return std::make_unique<LinearPointModel>(fit_submodel(data, mask, g));
        return std::make_unique<OlsPointModel>(data, mask);
    };
}

MemberBuilder constant_member(double value) {
    return [value](const DesignData&) -> PointModelPtr { return std::make_unique<ConstantPointModel>(value); };
}

StackingSolution stacking_fit(const std::vector<MemberBuilder>& members, const DesignData& data,
                              const FoldPlan& folds, StackingConstraint constraint) {
    const auto K = members.size();
    if (K == 0) throw std::invalid_argument("stacking_fit: no members");
    const auto n = data.X.rows();
    if (folds.kind == FoldPlan::Kind::InSample)
        throw std::invalid_argument("stacking_fit: needs a held-out fold plan (loo or kfold)");
    const auto assignment = fold_assignment(static_cast<std::size_t>(n), folds);
    const std::size_t fold_count = folds.kind == FoldPlan::Kind::Loo ? static_cast<std::size_t>(n) : folds.k;

    // Cross-prediction matrix: F(i,k) = member k refit without i's fold,
    // evaluated at x_i.
    Eigen::MatrixXd F(n, static_cast<Eigen::Index>(K));
    for (std::size_t f = 0; f < fold_count; ++f) {
        std::vector<Eigen::Index> train_rows;
        std::vector<Eigen::Index> test_rows;
        for (Eigen::Index i = 0; i < n; ++i)
            (assignment[static_cast<std::size_t>(i)] == f ? test_rows : train_rows).push_back(i);
        if (test_rows.empty()) continue;
        const DesignData train = rows_subset(data, train_rows);
        for (std::size_t k = 0; k < K; ++k) {
            const auto model = members[k](train);
            for (const auto i : test_rows) F(i, static_cast<Eigen::Index>(k)) = model->predict(data.X.row(i));
        }
    }

    const Eigen::MatrixXd gram = F.transpose() * F;
    const Eigen::VectorXd fty = F.transpose() * data.y;

    StackingSolution solution;
    solution.constraint = constraint;
    {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
        const double max_ev = eig.eigenvalues().maxCoeff();
        const double min_ev = eig.eigenvalues().minCoeff();
        solution.degenerate = !(min_ev > 1e-10 * std::max(1.0, max_ev));
    }

    // Projected gradient from the uniform start with a 1/L step.
    const double lipschitz = std::max(gram.norm(), 1e-12);
    const double step = 1.0 / lipschitz;
    std::vector<double> alpha(K, 1.0 / static_cast<double>(K));
    const std::size_t max_iterations = 100000;
    std::size_t it = 0;
    for (; it < max_iterations; ++it) {
        Eigen::VectorXd a = Eigen::Map<const Eigen::VectorXd>(alpha.data(), static_cast<Eigen::Index>(K));
        const Eigen::VectorXd grad = gram * a - fty;
        std::vector<double> next(K);
        for (std::size_t k = 0; k < K; ++k) next[k] = alpha[k] - step * grad(static_cast<Eigen::Index>(k));
        next = constraint == StackingConstraint::Simplex ? project_simplex(std::move(next))
                                                         : project_orthant(std::move(next));
        double delta = 0.0;
        for (std::size_t k = 0; k < K; ++k) delta = std::max(delta, std::abs(next[k] - alpha[k]));
        alpha = std::move(next);
        if (delta <= 1e-12) break;
    }
    solution.iterations = it;
    solution.alphas = alpha;

    const Eigen::VectorXd a = Eigen::Map<const Eigen::VectorXd>(alpha.data(), static_cast<Eigen::Index>(K));
    solution.objective = (data.y - F * a).squaredNorm();
    return solution;
}

double stacking_predict(const StackingSolution& solution, const std::vector<MemberBuilder>& members,
                        const DesignData& data, const Eigen::VectorXd& x) {
    if (solution.alphas.size() != members.size())
        throw std::invalid_argument("stacking_predict: solution and member list are misaligned");
    double yhat = 0.0;
    for (std::size_t k = 0; k < members.size(); ++k) {
        if (solution.alphas[k] == 0.0) continue;
        yhat += solution.alphas[k] * members[k](data)->predict(x);
    }
    return yhat;
}

// ---------------------------------------------------------------------------
// Bagging

double bag_point_predictor(const MemberBuilder& base, const DesignData& data, std::size_t B,
                           std::uint64_t seed, const Eigen::VectorXd& x) {
    if (B < 1) throw std::invalid_argument("bag_point_predictor: B must be >= 1");
    double total = 0.0;
    std::size_t failures = 0;
    for (std::size_t b = 0; b < B; ++b) {
        for (std::uint64_t attempt = 0;; ++attempt) {
            Rng rng(derive_seed(seed, b + (attempt << 32)));
            try {
                const DesignData boot = resample(data, rng);
                total += base(boot)->predict(x);
                break;
            } catch (const std::exception&) {
                if (++failures >= 3 * B)
                    throw std::runtime_error("bag_point_predictor: too many resample failures");
            }
        }
    }
    return total / static_cast<double>(B);
}

std::vector<double> bag_posterior_weights(const ModelEnsemble& ensemble, std::span<const double> ys,
                                          std::size_t B, std::uint64_t seed) {
    if (B < 1) throw std::invalid_argument("bag_posterior_weights: B must be >= 1");
    if (ys.empty()) throw std::invalid_argument("bag_posterior_weights: empty data");
    std::vector<double> total(ensemble.members.size(), 0.0);
    std::vector<double> boot(ys.size());
    std::size_t failures = 0;
    for (std::size_t b = 0; b < B; ++b) {
        for (std::uint64_t attempt = 0;; ++attempt) {
            Rng rng(derive_seed(seed, b + (attempt << 32)));
            for (auto& v : boot) v = ys[static_cast<std::size_t>(rng.below(ys.size()))];
            try {
                const auto w = bma_weights(ensemble, boot);
                for (std::size_t k = 0; k < w.size(); ++k) total[k] += w[k];
                break;
            } catch (const std::exception&) {
                if (++failures >= 3 * B)
                    throw std::runtime_error("bag_posterior_weights: too many resample failures");
            }
        }
    }
    for (auto& v : total) v /= static_cast<double>(B);
    return total;
}

// ---------------------------------------------------------------------------
// Crowd pooling and the KL diagnostic

CrowdSummary pool_crowd(std::span<const double> values, CrowdCombiner combiner) {
    if (values.empty()) throw std::invalid_argument("pool_crowd: empty input");
    CrowdSummary out;
    out.count = values.size();
    out.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    const std::size_t m = sorted.size();
    out.median = (m % 2 == 1) ? sorted[m / 2] : 0.5 * (sorted[m / 2 - 1] + sorted[m / 2]);
    out.pooled = combiner == CrowdCombiner::Mean ? out.mean : out.median;
    return out;
}

namespace {

void check_posterior_grid(const DiscretePosterior& posterior) {
    if (posterior.weights.empty() || posterior.weights.size() != posterior.component_pmfs.size())
        throw std::invalid_argument("DiscretePosterior: weights and pmfs must be nonempty and aligned");
    const std::size_t alphabet = posterior.component_pmfs.front().size();
    for (const auto& pmf : posterior.component_pmfs)
        if (pmf.size() != alphabet)
            throw std::invalid_argument("DiscretePosterior: pmfs must share one alphabet");
}

double kl_discrete(std::span<const double> p, std::span<const double> q) {
    double kl = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] == 0.0) continue;
        if (q[i] == 0.0) return kInf;
        kl += p[i] * std::log(p[i] / q[i]);
    }
    return kl;
}

}  // namespace

std::vector<double> mixture_pmf(const DiscretePosterior& posterior) {
    check_posterior_grid(posterior);
    std::vector<double> m(posterior.component_pmfs.front().size(), 0.0);
    for (std::size_t j = 0; j < posterior.weights.size(); ++j)
        for (std::size_t i = 0; i < m.size(); ++i) m[i] += posterior.weights[j] * posterior.component_pmfs[j][i];
    return m;
}

double posterior_expected_kl(const DiscretePosterior& posterior, std::span<const double> q) {
    check_posterior_grid(posterior);
    double total = 0.0;
    for (std::size_t j = 0; j < posterior.weights.size(); ++j) {
        const double kl = kl_discrete(posterior.component_pmfs[j], q);
        if (kl == kInf) return kInf;
        total += posterior.weights[j] * kl;
    }
    return total;
}

double conditional_mutual_information(const DiscretePosterior& posterior) {
    const auto m = mixture_pmf(posterior);
    return posterior_expected_kl(posterior, m);
}

double mixture_kl_gap(const DiscretePosterior& posterior, std::span<const double> q) {
    const double lhs = posterior_expected_kl(posterior, q);
    if (lhs == kInf) return kInf;
    return lhs - conditional_mutual_information(posterior);
}

}  // namespace preq
