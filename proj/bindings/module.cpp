// Python bindings for the main operations: distributions, conjugate models,
// scoring, selection, averaging, sketches, Shtarkov prediction, Kalman
// filtering and the prequential harness.

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "preq/averaging.hpp"
#include "preq/conjugate.hpp"
#include "preq/harness.hpp"
#include "preq/linear.hpp"
#include "preq/scoring.hpp"
#include "preq/selection.hpp"
#include "preq/shtarkov.hpp"
#include "preq/streaming.hpp"
#include "preq/timeseries.hpp"

namespace py = pybind11;
using namespace preq;

namespace {

// Python-side handle for the immutable distribution values.
struct PyDist {
    DistPtr ptr;
};

ConjugateModel model_from_dict(const py::dict& spec) {
    const std::string kind = spec["kind"].cast<std::string>();
    if (kind == "beta_binomial")
        return BetaBinomial{spec["a"].cast<double>(), spec["b"].cast<double>()};
    if (kind == "normal_known_var")
        return NormalKnownVar{spec["mu0"].cast<double>(), spec["tau0sq"].cast<double>(),
                              spec["sigmasq"].cast<double>()};
    if (kind == "normal_inv_gamma")
        return NormalInvGamma{spec["m"].cast<double>(), spec["kappa"].cast<double>(),
                              spec["shape"].cast<double>(), spec["rate"].cast<double>()};
    throw std::invalid_argument("unknown conjugate kind: " + kind);
}

std::vector<Expert> experts_from(const std::vector<std::pair<double, std::vector<double>>>& specs) {
    std::vector<Expert> experts;
    experts.reserve(specs.size());
    for (const auto& [weight, pmf] : specs) experts.push_back(iid_expert(weight, pmf));
    return experts;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "prequential Bayesian prediction toolkit";

    // --- core ---------------------------------------------------------------
    py::class_<Rng>(m, "Rng").def(py::init<std::uint64_t>()).def("uniform", [](Rng& r) { return r.uniform(); });

    py::class_<PyDist>(m, "Distribution")
        .def_property_readonly("discrete", [](const PyDist& d) { return d.ptr->is_discrete(); })
        .def("density", [](const PyDist& d, double y) { return d.ptr->density(y); })
        .def("log_density", [](const PyDist& d, double y) { return d.ptr->log_density(y); })
        .def("cdf", [](const PyDist& d, double y) { return d.ptr->cdf(y); })
        .def("quantile", [](const PyDist& d, double p) { return d.ptr->quantile(p); })
        .def("mean", [](const PyDist& d) { return d.ptr->mean(); })
        .def("variance", [](const PyDist& d) { return d.ptr->variance(); })
        .def("mode", [](const PyDist& d) { return d.ptr->mode(); })
        .def("sample", [](const PyDist& d, std::uint64_t seed, std::size_t n) {
            Rng rng(seed);
            std::vector<double> out(n);
            for (auto& v : out) v = d.ptr->sample(rng);
            return out;
        }, py::arg("seed"), py::arg("n") = 1);

    m.def("normal", [](double mean, double var) {
        return PyDist{std::make_shared<NormalDistribution>(mean, var)};
    });
    m.def("student_t", [](double dof, double loc, double scale) {
        return PyDist{std::make_shared<StudentTDistribution>(dof, loc, scale)};
    });
    m.def("uniform_dist", [](double lo, double hi) {
        return PyDist{std::make_shared<UniformDistribution>(lo, hi)};
    });
    m.def("discrete", [](std::vector<double> points, std::vector<double> masses) {
        return PyDist{std::make_shared<DiscreteDistribution>(std::move(points), std::move(masses))};
    });
    m.def("point_mass", [](double v) { return PyDist{point_mass(v)}; });
    m.def("mixture", [](std::vector<PyDist> components, std::vector<double> weights) {
        std::vector<DistPtr> parts;
        for (const auto& c : components) parts.push_back(c.ptr);
        return PyDist{mixture(std::move(parts), std::move(weights))};
    });

    py::class_<PredictionInterval>(m, "PredictionInterval")
        .def_readonly("lo", &PredictionInterval::lo)
        .def_readonly("hi", &PredictionInterval::hi)
        .def_readonly("level", &PredictionInterval::level)
        .def("contains", &PredictionInterval::contains)
        .def("__repr__", [](const PredictionInterval& pi) {
            std::ostringstream ss;
            ss << "PredictionInterval(lo=" << pi.lo << ", hi=" << pi.hi << ", level=" << pi.level << ")";
            return ss.str();
        });

    m.def("predictive_interval",
          [](const PyDist& d, double alpha) { return predictive_interval(*d.ptr, alpha); });
    m.def("pit", [](const PyDist& d, double y, std::uint64_t seed) {
        Rng rng(seed);
        return pit(*d.ptr, y, rng);
    }, py::arg("dist"), py::arg("y"), py::arg("seed") = 0);

    py::class_<LossFunction>(m, "LossFunction")
        .def_static("squared", &LossFunction::squared)
        .def_static("absolute", &LossFunction::absolute)
        .def_static("zero_one_pi", &LossFunction::zero_one_pi)
        .def_static("check", &LossFunction::check)
        .def("evaluate", py::overload_cast<double, double>(&LossFunction::evaluate, py::const_));

    m.def("point_prediction",
          [](const PyDist& d, const LossFunction& loss) { return point_prediction(*d.ptr, loss); });

    // --- conjugate ------------------------------------------------------------
    py::class_<PosteriorState>(m, "PosteriorState")
        .def_property_readonly("n_obs", [](const PosteriorState& s) { return s.n_obs; })
        .def_property_readonly("hyperparameters", [](const PosteriorState& s) {
            py::dict out;
            if (const auto* bb = std::get_if<BetaBinomial>(&s.params)) {
                out["kind"] = "beta_binomial";
                out["a"] = bb->a;
                out["b"] = bb->b;
            } else if (const auto* nk = std::get_if<NormalKnownVar>(&s.params)) {
                out["kind"] = "normal_known_var";
                out["mu0"] = nk->mean;
                out["tau0sq"] = nk->mean_var;
                out["sigmasq"] = nk->noise_var;
            } else {
                const auto& ng = std::get<NormalInvGamma>(s.params);
                out["kind"] = "normal_inv_gamma";
                out["m"] = ng.loc;
                out["kappa"] = ng.kappa;
                out["shape"] = ng.shape;
                out["rate"] = ng.rate;
            }
            return out;
        });

    m.def("make_posterior", [](const py::dict& spec) { return make_posterior(model_from_dict(spec)); });
    m.def("posterior_update", [](const PosteriorState& state, const std::vector<double>& ys) {
        PosteriorState s = state;
        for (const double y : ys) s = posterior_update(s, Outcome::real(y));
        return s;
    });
    m.def("posterior_predictive", [](const PosteriorState& s) { return PyDist{posterior_predictive(s)}; });
    m.def("log_marginal_likelihood", [](const py::dict& spec, const std::vector<double>& ys) {
        return log_marginal_likelihood(model_from_dict(spec), std::span<const double>(ys));
    });

    // --- scoring ----------------------------------------------------------------
    m.def("log_score", [](const PyDist& d, double y) {
        const auto s = log_score(*d.ptr, y);
        return py::make_tuple(s.value, s.out_of_support);
    });
    m.def("cpe", [](const std::vector<double>& losses) { return cpe(losses); });
    m.def("pit_uniformity", [](const std::vector<double>& us) {
        const auto ks = pit_uniformity(us);
        return py::make_tuple(ks.statistic, ks.p_value);
    });
    m.def("compare_forecasters",
          [](const std::vector<double>& scores_q, const std::vector<double>& scores_r) {
              std::vector<LogScore> q, r;
              for (const double v : scores_q) q.push_back({v, false});
              for (const double v : scores_r) r.push_back({v, false});
              const auto c = compare_forecasters(q, r);
              return py::make_tuple(c.total, c.per_step_mean);
          });

    // --- selection ------------------------------------------------------------------
    m.def("bayes_factor", [](const py::dict& a, const py::dict& b, const std::vector<double>& ys) {
        return bayes_factor(model_from_dict(a), model_from_dict(b), ys);
    });
    m.def("fractional_bf", [](const py::dict& a, const py::dict& b, const std::vector<double>& ys, double f) {
        return fractional_bf(model_from_dict(a), model_from_dict(b), ys, f);
    });
    m.def("intrinsic_bf", [](const py::dict& a, const py::dict& b, const std::vector<double>& ys,
                             std::size_t min_train_size, std::uint64_t seed) {
        return intrinsic_bf(model_from_dict(a), model_from_dict(b), ys, min_train_size,
                            SubsetAverage::Arithmetic, 500, seed).value;
    }, py::arg("model_a"), py::arg("model_b"), py::arg("ys"), py::arg("min_train_size"), py::arg("seed") = 0);
    m.def("information_criterion", [](double loglik, int k, std::size_t n, const std::string& penalty,
                                      double custom_alpha) {
        const IcPenalty tag = penalty == "bic" ? IcPenalty::Bic
                                               : (penalty == "aic" ? IcPenalty::Aic : IcPenalty::Custom);
        return information_criterion(loglik, k, n, tag, custom_alpha);
    }, py::arg("loglik"), py::arg("k"), py::arg("n"), py::arg("penalty") = "bic", py::arg("custom_alpha") = 0.0);
    m.def("ic_weights", [](const std::vector<double>& ics) { return ic_weights(ics); });
    m.def("elpd", [](const py::dict& model, const std::vector<double>& ys, const std::string& plan,
                     std::size_t k, std::uint64_t seed) {
        FoldPlan fp = FoldPlan::in_sample();
        if (plan == "loo") fp = FoldPlan::loo();
        if (plan == "kfold") fp = FoldPlan::kfold(k, seed);
        return elpd(model_from_dict(model), ys, fp);
    }, py::arg("model"), py::arg("ys"), py::arg("plan") = "loo", py::arg("k") = 5, py::arg("seed") = 0);
    m.def("ppc_pvalue", [](const py::dict& model, const std::vector<double>& ys,
                           const std::function<double(std::vector<double>, double)>& statistic,
                           std::size_t draws, std::uint64_t seed) {
        return ppc_pvalue(model_from_dict(model), ys,
                          [&](std::span<const double> y, const ParamDraw& d) {
                              return statistic(std::vector<double>(y.begin(), y.end()), d.location);
                          },
                          draws, seed);
    }, py::arg("model"), py::arg("ys"), py::arg("statistic"), py::arg("draws") = 1000, py::arg("seed") = 0);

    // --- linear ------------------------------------------------------------------------
    py::class_<LinearPosterior>(m, "LinearPosterior")
        .def_property_readonly("mask", [](const LinearPosterior& p) { return p.mask; })
        .def_property_readonly("coef_mean", [](const LinearPosterior& p) { return p.coef_mean; })
        .def_property_readonly("intercept", [](const LinearPosterior& p) { return p.intercept_mean; })
        .def_property_readonly("sigma_shape", [](const LinearPosterior& p) { return p.sigma_shape; })
        .def_property_readonly("sigma_rate", [](const LinearPosterior& p) { return p.sigma_rate; })
        .def("predict", &LinearPosterior::predict);

    m.def("fit_submodel", [](const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                             const std::vector<bool>& mask, double g) {
        return fit_submodel({X, y, true}, mask, g);
    });
    m.def("log_marginal_submodel", [](const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                      const std::vector<bool>& mask, double g) {
        return log_marginal_submodel({X, y, true}, mask, g);
    });
    m.def("submodel_weights", [](const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double g) {
        const auto fits = enumerate_submodels({X, y, true}, g);
        py::dict out;
        out["masks"] = fits.masks;
        out["log_marginals"] = fits.log_marginals;
        out["weights"] = fits.weights;
        out["inclusion"] = inclusion_probabilities(fits.masks, fits.weights);
        return out;
    });
    m.def("median_probability_mask", [](const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double g) {
        const auto fits = enumerate_submodels({X, y, true}, g);
        const auto p = inclusion_probabilities(fits.masks, fits.weights);
        return median_probability_model(p, fits.masks, fits.posteriors).mask;
    });

    // --- averaging ------------------------------------------------------------------------
    m.def("bma_weights", [](const std::vector<py::dict>& members, const std::vector<double>& ys) {
        ModelEnsemble ensemble;
        for (const auto& spec : members)
            ensemble.members.push_back(conjugate_member(
                spec.contains("label") ? spec["label"].cast<std::string>() : "member",
                model_from_dict(spec)));
        return bma_weights(ensemble, ys);
    });
    m.def("bma_predictive", [](const std::vector<py::dict>& members, const std::vector<double>& ys) {
        ModelEnsemble ensemble;
        for (const auto& spec : members)
            ensemble.members.push_back(conjugate_member(
                spec.contains("label") ? spec["label"].cast<std::string>() : "member",
                model_from_dict(spec)));
        return PyDist{bma_predictive(ensemble, ys)};
    });
    m.def("pwm_point", [](const std::vector<double>& predictions, const std::vector<double>& weights) {
        return pwm_point(predictions, weights);
    });
    m.def("pool_crowd", [](const std::vector<double>& values, const std::string& combiner) {
        const auto s = pool_crowd(values, combiner == "median" ? CrowdCombiner::Median : CrowdCombiner::Mean);
        py::dict out;
        out["count"] = s.count;
        out["mean"] = s.mean;
        out["median"] = s.median;
        out["pooled"] = s.pooled;
        return out;
    }, py::arg("values"), py::arg("combiner") = "mean");
    m.def("stacking_fit", [](const std::vector<std::vector<bool>>& member_masks, const Eigen::MatrixXd& X,
                             const Eigen::VectorXd& y, double g, std::size_t folds, std::uint64_t seed,
                             const std::string& constraint) {
        std::vector<MemberBuilder> members;
        for (const auto& mask : member_masks) members.push_back(linear_member(mask, g));
        const auto solution = stacking_fit(members, {X, y, true}, FoldPlan::kfold(folds, seed),
                                           constraint == "positive" ? StackingConstraint::PositiveOnly
                                                                    : StackingConstraint::Simplex);
        py::dict out;
        out["alphas"] = solution.alphas;
        out["objective"] = solution.objective;
        out["degenerate"] = solution.degenerate;
        return out;
    }, py::arg("member_masks"), py::arg("X"), py::arg("y"), py::arg("g"), py::arg("folds") = 10,
       py::arg("seed") = 0, py::arg("constraint") = "simplex");

    // --- streaming ------------------------------------------------------------------------
    py::class_<CountMinSketch>(m, "CountMinSketch")
        .def(py::init<double, double, std::uint64_t, std::uint64_t>(), py::arg("epsilon"),
             py::arg("delta"), py::arg("universe"), py::arg("seed"))
        .def("update", &CountMinSketch::update)
        .def("estimate", &CountMinSketch::estimate)
        .def("merge", &CountMinSketch::merge)
        .def_property_readonly("depth", &CountMinSketch::depth)
        .def_property_readonly("width", &CountMinSketch::width)
        .def_property_readonly("total", &CountMinSketch::total)
        .def_property_readonly("cells", &CountMinSketch::cells)
        .def("serialize", [](const CountMinSketch& s) {
            std::ostringstream out(std::ios::binary);
            s.serialize(out);
            return py::bytes(out.str());
        })
        .def_static("deserialize", [](const py::bytes& data) {
            std::istringstream in(std::string(data), std::ios::binary);
            return CountMinSketch::deserialize(in);
        });

    m.def("cms_predict_next", [](const CountMinSketch& sketch, const std::vector<std::uint64_t>& candidates,
                                 const LossFunction& loss) {
        return cms_predict_next(sketch, candidates, loss);
    });

    m.def("shtarkov_joint", [](const std::vector<std::pair<double, std::vector<double>>>& experts,
                               int alphabet, int horizon) {
        const auto table = shtarkov_joint(experts_from(experts), alphabet, horizon);
        py::dict out;
        out["probs"] = table.probs;
        out["log_normalizer"] = table.log_normalizer;
        return out;
    });
    m.def("shtarkov_predict", [](const std::vector<std::pair<double, std::vector<double>>>& experts,
                                 int alphabet, const std::vector<int>& prefix) {
        return PyDist{shtarkov_predict(experts_from(experts), alphabet, prefix)};
    });

    // --- timeseries ------------------------------------------------------------------------
    m.def("arma_conditional_loglik", [](const std::vector<double>& phi, const std::vector<double>& theta,
                                        double sigma, const std::vector<double>& ys) {
        return arma_conditional_loglik({phi, theta, sigma}, ys);
    });

    py::class_<FilterState>(m, "FilterState")
        .def_property_readonly("mean", [](const FilterState& s) { return s.mean; })
        .def_property_readonly("cov", [](const FilterState& s) { return s.cov; })
        .def_property_readonly("step", [](const FilterState& s) { return s.step; });

    py::class_<SsmParams>(m, "SsmParams")
        .def(py::init([](Eigen::MatrixXd F, Eigen::MatrixXd G, Eigen::MatrixXd H, Eigen::MatrixXd Q,
                         Eigen::MatrixXd R, Eigen::VectorXd x0, Eigen::MatrixXd P0) {
                 SsmParams p{std::move(F), std::move(G), std::move(H), std::move(Q), std::move(R),
                             std::move(x0), std::move(P0)};
                 validate(p);
                 return p;
             }),
             py::arg("F"), py::arg("G"), py::arg("H"), py::arg("Q"), py::arg("R"), py::arg("x0"),
             py::arg("P0"));

    m.def("kalman_initial_state", [](const SsmParams& p) { return initial_state(p); });
    m.def("kalman_predict", [](const FilterState& s, const SsmParams& p) { return kalman_predict(s, p); });
    m.def("kalman_update", [](const FilterState& s, const SsmParams& p, const Eigen::VectorXd& y) {
        return kalman_update(s, p, y);
    });
    m.def("kalman_observation_predictive",
          [](const FilterState& s, const SsmParams& p) { return PyDist{kalman_observation_predictive(s, p)}; });

    // --- harness ---------------------------------------------------------------------------
    m.def("run_benchmark", [](const std::string& config_json) {
        const auto config = parse_config(nlohmann::json::parse(config_json));
        const auto result = run(config);
        py::dict out;
        out["records_csv"] = result.records_csv;
        out["summary_json"] = result.summary.dump(2);
        return out;
    }, "Run the prequential loop for a JSON config string; the stream is read from the configured path.");
    m.def("validate_config", [](const std::string& config_json) {
        const auto result = validate_config(nlohmann::json::parse(config_json));
        std::vector<std::string> diags;
        for (const auto& d : result.diagnostics)
            diags.push_back((d.severity == Diagnostic::Severity::Error ? "error " : "warning ") + d.where +
                            ": " + d.message);
        return py::make_tuple(result.ok(), diags);
    });
}
