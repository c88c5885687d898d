#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "oracles.hpp"
#include "preq/conjugate.hpp"
#include "preq/loss.hpp"

using namespace preq;

namespace {

std::vector<Outcome> real_outcomes(const std::vector<double>& ys) {
    std::vector<Outcome> out;
    for (const double y : ys) out.push_back(Outcome::real(y));
    return out;
}

// Quadrature route for the NormalKnownVar marginal: integrate the product of
// prior and likelihood over theta.
double nkv_log_marginal_quadrature(const NormalKnownVar& model, const std::vector<double>& ys) {
    const auto integrand = [&](double theta) {
        double log_p = -0.5 * std::pow(theta - model.mean, 2) / model.mean_var -
                       0.5 * std::log(2.0 * M_PI * model.mean_var);
        for (const double y : ys)
            log_p += -0.5 * std::pow(y - theta, 2) / model.noise_var -
                     0.5 * std::log(2.0 * M_PI * model.noise_var);
        return std::exp(log_p);
    };
    const double spread = 10.0 * std::sqrt(model.mean_var + model.noise_var);
    return std::log(oracle::integrate(integrand, model.mean - spread, model.mean + spread, 1e-12));
}

}  // namespace

TEST_CASE("beta-binomial counting update") {
    PosteriorState state = make_posterior(BetaBinomial{1.0, 1.0});
    for (int i = 0; i < 7; ++i) state = posterior_update(state, Outcome::real(1.0));
    for (int i = 0; i < 3; ++i) state = posterior_update(state, Outcome::real(0.0));
    const auto& bb = std::get<BetaBinomial>(state.params);
    CHECK(bb.a == 8.0);
    CHECK(bb.b == 4.0);
    CHECK(state.n_obs == 10);
    CHECK_THROWS(posterior_update(state, Outcome::real(0.5)));
}

TEST_CASE("normal known-variance update matches gridded Bayes rule") {
    PosteriorState state = make_posterior(NormalKnownVar{0.0, 1.0, 1.0});
    state = posterior_update(state, Outcome::real(2.0));
    const auto& nk = std::get<NormalKnownVar>(state.params);
    CHECK(nk.mean == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(nk.mean_var == doctest::Approx(0.5).epsilon(1e-12));

    // gridded Bayes-rule oracle for the posterior mean
    const auto prior_lik = [&](double theta) {
        return std::exp(-0.5 * theta * theta) * std::exp(-0.5 * std::pow(2.0 - theta, 2));
    };
    const double z = oracle::integrate(prior_lik, -12.0, 14.0, 1e-12);
    const double post_mean =
        oracle::integrate([&](double t) { return t * prior_lik(t); }, -12.0, 14.0, 1e-12) / z;
    CHECK(nk.mean == doctest::Approx(post_mean).epsilon(1e-8));
}

TEST_CASE("normal-inverse-gamma symmetric update") {
    PosteriorState state = make_posterior(NormalInvGamma{0.0, 1.0, 2.0, 2.0});
    state = posterior_update(state, Outcome::real(0.0));
    const auto& ng = std::get<NormalInvGamma>(state.params);
    CHECK(ng.loc == doctest::Approx(0.0));
    CHECK(ng.kappa == doctest::Approx(2.0));
    CHECK(ng.shape == doctest::Approx(2.5));
}

TEST_CASE("posterior predictives") {
    SUBCASE("beta mean") {
        const auto pred = posterior_predictive({BetaBinomial{8.0, 4.0}, 0});
        CHECK(pred->density(1.0) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    }
    SUBCASE("normal known var widens by the noise variance") {
        const auto pred = posterior_predictive({NormalKnownVar{1.0, 0.5, 1.0}, 0});
        CHECK(pred->mean() == doctest::Approx(1.0));
        CHECK(pred->variance() == doctest::Approx(1.5));
        // quadrature of the parameter mixture
        const auto mix_density = [&](double y) {
            return oracle::integrate(
                [&](double theta) {
                    return std::exp(-0.5 * std::pow(theta - 1.0, 2) / 0.5) / std::sqrt(2.0 * M_PI * 0.5) *
                           std::exp(-0.5 * std::pow(y - theta, 2)) / std::sqrt(2.0 * M_PI);
                },
                -9.0, 11.0, 1e-11);
        };
        for (const double y : {-1.0, 0.0, 0.7, 2.5})
            CHECK(pred->density(y) == doctest::Approx(mix_density(y)).epsilon(1e-6));
    }
    SUBCASE("normal-inverse-gamma predictive is the stated student-t") {
        const auto pred = posterior_predictive({NormalInvGamma{0.0, 1.0, 2.0, 2.0}, 0});
        const auto* t = dynamic_cast<const StudentTDistribution*>(pred.get());
        REQUIRE(t != nullptr);
        CHECK(t->dof() == doctest::Approx(4.0));
        CHECK(t->scale() == doctest::Approx(std::sqrt(2.0)));
        // 2-D quadrature over (theta, log sigma^2) on 50 density grid points
        const auto joint_density = [&](double y) {
            return oracle::integrate(
                [&](double v) {
                    const double s2 = std::exp(v);
                    const double ig = 4.0 * std::pow(s2, -3.0) * std::exp(-2.0 / s2);
                    const double sd = std::sqrt(s2);
                    const double inner = oracle::integrate(
                        [&](double theta) {
                            return std::exp(-0.5 * theta * theta / s2) / std::sqrt(2.0 * M_PI * s2) *
                                   std::exp(-0.5 * std::pow(y - theta, 2) / s2) /
                                   std::sqrt(2.0 * M_PI * s2);
                        },
                        0.5 * y - 12.0 * sd, 0.5 * y + 12.0 * sd, 1e-11, 128);
                    return ig * inner * s2;  // jacobian of s2 = e^v
                },
                std::log(2e-3), std::log(2e3), 1e-9, 128);
        };
        for (int i = 0; i < 50; ++i) {
            const double y = -5.0 + 10.0 * i / 49.0;
            CHECK(pred->density(y) == doctest::Approx(joint_density(y)).epsilon(2e-6));
        }
    }
}

TEST_CASE("log marginal likelihoods") {
    SUBCASE("uniform prior coin") {
        const std::vector<double> ys = {1.0, 0.0};
        CHECK(log_marginal_likelihood(BetaBinomial{1.0, 1.0}, std::span<const double>(ys)) ==
              doctest::Approx(std::log(1.0 / 6.0)).epsilon(1e-12));
    }
    SUBCASE("single draw at the prior mean") {
        const std::vector<double> ys = {1.0};
        CHECK(log_marginal_likelihood(BetaBinomial{2.0, 2.0}, std::span<const double>(ys)) ==
              doctest::Approx(std::log(0.5)).epsilon(1e-12));
    }
    SUBCASE("normal known var against tensor quadrature") {
        const NormalKnownVar model{0.0, 1.0, 1.0};
        const std::vector<double> ys = {0.5, -0.5};
        CHECK(log_marginal_likelihood(model, std::span<const double>(ys)) ==
              doctest::Approx(nkv_log_marginal_quadrature(model, ys)).epsilon(1e-6));
    }
    SUBCASE("empty sequence is rejected") {
        CHECK_THROWS(log_marginal_likelihood(BetaBinomial{1.0, 1.0}, std::span<const double>()));
    }
}

TEST_CASE("chain rule: marginal equals the product of one-step predictives") {
    Rng rng(2024);
    for (int rep = 0; rep < 50; ++rep) {
        const BetaBinomial prior{rng.uniform(0.5, 3.0), rng.uniform(0.5, 3.0)};
        std::vector<double> ys;
        PosteriorState state = make_posterior(prior);
        double log_chain = 0.0;
        for (int i = 0; i < 10; ++i) {
            const double y = rng.uniform() < 0.6 ? 1.0 : 0.0;
            log_chain += std::log(posterior_predictive(state)->density(y));
            state = posterior_update(state, Outcome::real(y));
            ys.push_back(y);
        }
        const double log_ml = log_marginal_likelihood(prior, std::span<const double>(ys));
        CHECK(std::exp(log_ml) == doctest::Approx(std::exp(log_chain)).epsilon(1e-12));
    }
}

TEST_CASE("exchangeability of batch updates") {
    Rng rng(5);
    std::vector<Outcome> batch;
    for (int i = 0; i < 12; ++i) batch.push_back(Outcome::real(rng.uniform(-2.0, 2.0)));
    auto shuffled = batch;
    for (std::size_t i = shuffled.size(); i > 1; --i)
        std::swap(shuffled[i - 1], shuffled[static_cast<std::size_t>(rng.below(i))]);

    for (const ConjugateModel prior :
         {ConjugateModel{NormalKnownVar{0.3, 2.0, 0.7}}, ConjugateModel{NormalInvGamma{0.1, 1.5, 2.0, 1.0}}}) {
        const auto a = posterior_update(prior, std::span<const Outcome>(batch));
        const auto b = posterior_update(prior, std::span<const Outcome>(shuffled));
        if (const auto* nk = std::get_if<NormalKnownVar>(&a.params)) {
            const auto& nk2 = std::get<NormalKnownVar>(b.params);
            CHECK(nk->mean == doctest::Approx(nk2.mean).epsilon(1e-13));
            CHECK(nk->mean_var == doctest::Approx(nk2.mean_var).epsilon(1e-13));
        } else {
            const auto& g1 = std::get<NormalInvGamma>(a.params);
            const auto& g2 = std::get<NormalInvGamma>(b.params);
            CHECK(g1.loc == doctest::Approx(g2.loc).epsilon(1e-13));
            CHECK(g1.kappa == doctest::Approx(g2.kappa).epsilon(1e-13));
            CHECK(g1.shape == doctest::Approx(g2.shape).epsilon(1e-13));
            CHECK(g1.rate == doctest::Approx(g2.rate).epsilon(1e-13));
        }
    }

    // Bernoulli counting is exact
    const auto a = posterior_update(ConjugateModel{BetaBinomial{1.0, 1.0}},
                                    std::span<const Outcome>(real_outcomes({1, 0, 1, 1, 0})));
    const auto b = posterior_update(ConjugateModel{BetaBinomial{1.0, 1.0}},
                                    std::span<const Outcome>(real_outcomes({0, 1, 1, 0, 1})));
    CHECK(std::get<BetaBinomial>(a.params).a == std::get<BetaBinomial>(b.params).a);
    CHECK(std::get<BetaBinomial>(a.params).b == std::get<BetaBinomial>(b.params).b);
}

TEST_CASE("predictive normalization") {
    const auto discrete = posterior_predictive({BetaBinomial{3.0, 5.0}, 0});
    const auto* d = dynamic_cast<const DiscreteDistribution*>(discrete.get());
    REQUIRE(d != nullptr);
    CHECK(std::accumulate(d->masses().begin(), d->masses().end(), 0.0) ==
          doctest::Approx(1.0).epsilon(1e-12));

    const auto continuous = posterior_predictive({NormalInvGamma{0.5, 2.0, 3.0, 1.5}, 0});
    const double total = oracle::integrate([&](double y) { return continuous->density(y); }, -60.0, 61.0, 1e-9);
    CHECK(total == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("plug-in predictors") {
    SUBCASE("bernoulli mle frequency") {
        auto p = plug_in_predictor("mle", PlugInFamily::Bernoulli, EstimatorTag::Mle);
        CHECK_THROWS(p->predictive());  // demands burn-in
        for (const double y : {1.0, 1.0, 0.0}) p->observe(Outcome::real(y));
        CHECK(p->predictive()->density(1.0) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    }
    SUBCASE("normal mle uses the biased variance") {
        auto p = plug_in_predictor("mle", PlugInFamily::Normal, EstimatorTag::Mle);
        p->observe(Outcome::real(1.0));
        CHECK_THROWS(p->predictive());
        p->observe(Outcome::real(3.0));
        const auto dist = p->predictive();
        CHECK(dist->mean() == doctest::Approx(2.0));
        CHECK(dist->variance() == doctest::Approx(1.0));
    }
    SUBCASE("posterior mean tag") {
        auto p = plug_in_predictor("pm", PlugInFamily::Bernoulli, EstimatorTag::PosteriorMean,
                                   ConjugateModel{BetaBinomial{1.0, 1.0}});
        p->observe(Outcome::real(1.0));
        p->observe(Outcome::real(0.0));
        CHECK(p->predictive()->density(1.0) == doctest::Approx(0.5).epsilon(1e-12));
    }
    SUBCASE("plug-in variance never exceeds the Bayes predictive variance") {
        Rng rng(99);
        for (int rep = 0; rep < 20; ++rep) {
            const NormalKnownVar prior{0.0, rng.uniform(0.5, 2.0), 1.0};
            auto plug = plug_in_predictor("pm", PlugInFamily::Normal, EstimatorTag::PosteriorMean,
                                          ConjugateModel{prior});
            ConjugatePredictor bayes("bayes", prior);
            for (int i = 0; i < 10; ++i) {
                const Outcome y = Outcome::real(rng.uniform(-1.0, 1.0));
                plug->observe(y);
                bayes.observe(y);
                CHECK(plug->predictive()->variance() <= bayes.predictive()->variance() + 1e-12);
            }
        }
    }
}

TEST_CASE("predictor replay determinism") {
    const NormalInvGamma prior{0.0, 1.0, 2.0, 2.0};
    ConjugatePredictor a("a", prior);
    ConjugatePredictor b("b", prior);
    Rng stream(4);
    std::vector<double> points_a, points_b;
    for (int i = 0; i < 30; ++i) {
        const double y = stream.uniform(-1.0, 1.0);
        a.observe(Outcome::real(y));
        b.observe(Outcome::real(y));
        points_a.push_back(point_prediction(*a.predictive(), LossFunction::squared()));
        points_b.push_back(point_prediction(*b.predictive(), LossFunction::squared()));
    }
    CHECK(points_a == points_b);  // bit identical
}
