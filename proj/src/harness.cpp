#include "preq/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "preq/averaging.hpp"
#include "preq/conjugate.hpp"
#include "preq/shtarkov.hpp"
#include "preq/streaming.hpp"
#include "preq/timeseries.hpp"

namespace preq {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

const std::vector<std::string> kKinds = {
    "beta_binomial", "normal_known_var", "normal_inv_gamma", "plug_in", "edf",
    "count_min",     "ar_bayes",         "kalman",           "bma",     "shtarkov",
};

const std::set<std::string> kScores = {"log", "squared", "absolute", "pi"};

std::string format_double(double v) {
    char buffer[64];
    std::snprintf(buffer, sizeof(buffer), "%.12g", v);
    return buffer;
}

// --- config validation -------------------------------------------------------

class Checker {
public:
    explicit Checker(const json& config) : config_(config) {}

    ValidationResult run() {
        result_.resolved = ordered_json::object();
        if (!config_.is_object()) {
            error("", "config must be a JSON object");
            return result_;
        }
        check_data();
        check_outcome();
        check_predictors();
        check_scores();
        check_pi_level();
        check_reselection();
        check_output_dir();
        warn_unknown_keys(config_, "",
                          {"data", "outcome", "predictors", "scores", "pi_level", "reselection", "output_dir"});
        return result_;
    }

private:
    void error(const std::string& where, const std::string& message) {
        result_.diagnostics.push_back({Diagnostic::Severity::Error, where, message});
    }
    void warning(const std::string& where, const std::string& message) {
        result_.diagnostics.push_back({Diagnostic::Severity::Warning, where, message});
    }

    void warn_unknown_keys(const json& node, const std::string& where, const std::set<std::string>& known) {
        if (!node.is_object()) return;
        for (const auto& [key, value] : node.items()) {
            (void)value;
            if (!known.count(key)) warning(where + "/" + key, "unknown key ignored");
        }
    }

    template <typename T>
    std::optional<T> require(const json& node, const std::string& where, const std::string& key) {
        if (!node.is_object() || !node.contains(key)) {
            error(where + "/" + key, "missing required key");
            return std::nullopt;
        }
        try {
            return node.at(key).get<T>();
        } catch (const json::exception&) {
            error(where + "/" + key, "wrong type");
            return std::nullopt;
        }
    }

    void check_data() {
        if (!config_.contains("data")) {
            error("/data", "missing required key");
            return;
        }
        const auto& data = config_.at("data");
        auto path = require<std::string>(data, "/data", "path");
        std::string format = data.value("format", std::string("csv"));
        if (format != "csv" && format != "jsonl") error("/data/format", "format must be csv or jsonl");
        warn_unknown_keys(data, "/data", {"path", "format"});
        result_.resolved["data"] = {{"path", path.value_or("")}, {"format", format}};
    }

    void check_outcome() {
        std::string kind = "real";
        int alphabet = 0;
        if (config_.contains("outcome")) {
            const auto& outcome = config_.at("outcome");
            kind = outcome.value("kind", std::string("real"));
            if (kind != "real" && kind != "category" && kind != "count")
                error("/outcome/kind", "kind must be real, category or count");
            alphabet = outcome.value("alphabet_size", 0);
            if (kind == "category" && alphabet < 2)
                error("/outcome/alphabet_size", "category outcomes need alphabet_size >= 2");
            warn_unknown_keys(outcome, "/outcome", {"kind", "alphabet_size"});
        }
        result_.resolved["outcome"] = {{"kind", kind}, {"alphabet_size", alphabet}};
    }

    void check_predictors() {
        if (!config_.contains("predictors") || !config_.at("predictors").is_array() ||
            config_.at("predictors").empty()) {
            error("/predictors", "need a nonempty array of predictor specs");
            return;
        }
        std::map<std::string, std::size_t> label_first_seen;
        ordered_json resolved = ordered_json::array();
        std::size_t index = 0;
        for (const auto& spec : config_.at("predictors")) {
            const std::string where = "/predictors/" + std::to_string(index);
            auto label = require<std::string>(spec, where, "label");
            auto kind = require<std::string>(spec, where, "kind");
            if (spec.is_object() && !spec.contains("seed"))
                error(where + "/seed", "seed is mandatory (reproducible runs have no entropy defaults)");
            auto seed = require<std::uint64_t>(spec, where, "seed");
            std::int64_t warm_up = 0;
            if (spec.is_object() && spec.contains("warm_up")) {
                warm_up = spec.value("warm_up", std::int64_t{0});
                if (warm_up < 0) error(where + "/warm_up", "warm_up must be nonnegative");
            }
            if (label) {
                const auto [it, fresh] = label_first_seen.insert({*label, index});
                if (!fresh)
                    error(where + "/label", "duplicate label '" + *label + "' (first used by spec " +
                                                std::to_string(it->second) + ")");
            }
            if (kind && std::find(kKinds.begin(), kKinds.end(), *kind) == kKinds.end()) {
                std::string known;
                for (const auto& k : kKinds) known += (known.empty() ? "" : ", ") + k;
                error(where + "/kind", "unknown predictor kind '" + *kind + "'; available kinds: " + known);
            }
            warn_unknown_keys(spec, where, {"label", "kind", "seed", "warm_up", "params"});
            ordered_json r = {{"label", label.value_or("")},
                              {"kind", kind.value_or("")},
                              {"seed", seed.value_or(0)},
                              {"warm_up", warm_up},
                              {"params", spec.is_object() ? spec.value("params", json::object()) : json::object()}};
            resolved.push_back(r);
            ++index;
        }
        result_.resolved["predictors"] = resolved;
    }

    void check_scores() {
        std::vector<std::string> scores = {"log", "squared", "absolute", "pi"};
        if (config_.contains("scores")) {
            if (!config_.at("scores").is_array()) {
                error("/scores", "scores must be an array");
            } else {
                scores.clear();
                std::size_t i = 0;
                for (const auto& s : config_.at("scores")) {
                    if (!s.is_string() || !kScores.count(s.get<std::string>()))
                        error("/scores/" + std::to_string(i), "scores are log, squared, absolute, pi");
                    else
                        scores.push_back(s.get<std::string>());
                    ++i;
                }
            }
        }
        result_.resolved["scores"] = scores;
    }

    void check_pi_level() {
        double level = config_.value("pi_level", 0.9);
        if (!(level > 0.0 && level < 1.0)) error("/pi_level", "pi_level must lie in (0,1)");
        result_.resolved["pi_level"] = level;
    }

    void check_reselection() {
        if (!config_.contains("reselection")) return;
        const auto& rule = config_.at("reselection");
        auto window = require<std::int64_t>(rule, "/reselection", "window");
        if (window && *window < 1) error("/reselection/window", "window must be >= 1");
        std::string loss = rule.is_object() ? rule.value("loss", std::string("squared")) : "squared";
        if (loss != "squared" && loss != "absolute" && loss != "pi")
            error("/reselection/loss", "loss must be squared, absolute or pi");
        auto threshold = require<double>(rule, "/reselection", "threshold");
        if (threshold && !std::isfinite(*threshold)) error("/reselection/threshold", "threshold must be finite");
        std::string action = rule.is_object() ? rule.value("action", std::string("refit")) : "refit";
        std::string target;
        if (action == "switch") {
            if (!rule.contains("switch_to")) {
                error("/reselection/switch_to", "switch action needs a target label");
            } else {
                target = rule.value("switch_to", std::string());
            }
        } else if (action != "refit") {
            error("/reselection/action", "action must be refit or switch");
        }
        warn_unknown_keys(rule, "/reselection", {"window", "loss", "threshold", "action", "switch_to"});
        result_.resolved["reselection"] = {{"window", window.value_or(1)},
                                           {"loss", loss},
                                           {"threshold", threshold.value_or(0.0)},
                                           {"action", action},
                                           {"switch_to", target}};
    }

    void check_output_dir() {
        result_.resolved["output_dir"] = config_.value("output_dir", std::string("."));
    }

    const json& config_;
    ValidationResult result_;
};

}  // namespace

bool ValidationResult::ok() const {
    return std::none_of(diagnostics.begin(), diagnostics.end(),
                        [](const Diagnostic& d) { return d.severity == Diagnostic::Severity::Error; });
}

const std::vector<std::string>& known_predictor_kinds() { return kKinds; }

ValidationResult validate_config(const json& config) { return Checker(config).run(); }

ValidationResult validate_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    json config;
    try {
        config = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("config parse error: " + std::string(e.what()));
    }
    return validate_config(config);
}

RunConfig parse_config(const json& config) {
    const auto validation = validate_config(config);
    for (const auto& d : validation.diagnostics)
        if (d.severity == Diagnostic::Severity::Error) throw ConfigError(d.where + ": " + d.message);

    const auto& r = validation.resolved;
    RunConfig out;
    out.data_path = r.at("data").at("path").get<std::string>();
    out.format = r.at("data").at("format") == "jsonl" ? StreamFormat::JsonLines : StreamFormat::Csv;
    const std::string kind = r.at("outcome").at("kind").get<std::string>();
    out.outcome_kind = kind == "category" ? OutcomeKind::Category
                                          : (kind == "count" ? OutcomeKind::Count : OutcomeKind::Real);
    out.alphabet_size = r.at("outcome").at("alphabet_size").get<int>();
    for (const auto& spec : r.at("predictors")) {
        out.predictors.push_back({spec.at("label").get<std::string>(), spec.at("kind").get<std::string>(),
                                  spec.at("seed").get<std::uint64_t>(),
                                  spec.at("warm_up").get<std::size_t>(), spec.at("params")});
    }
    for (const auto& s : r.at("scores")) out.scores.push_back(s.get<std::string>());
    out.pi_level = r.at("pi_level").get<double>();
    if (r.contains("reselection")) {
        ReselectionRule rule;
        rule.window = r.at("reselection").at("window").get<std::size_t>();
        rule.loss = r.at("reselection").at("loss").get<std::string>();
        rule.threshold = r.at("reselection").at("threshold").get<double>();
        rule.action = r.at("reselection").at("action").get<std::string>();
        rule.switch_to = r.at("reselection").at("switch_to").get<std::string>();
        if (rule.action == "switch") {
            const bool found = std::any_of(out.predictors.begin(), out.predictors.end(),
                                           [&](const PredictorSpec& p) { return p.label == rule.switch_to; });
            if (!found) throw ConfigError("/reselection/switch_to: no predictor labelled '" + rule.switch_to + "'");
        }
        out.reselection = rule;
    }
    out.output_dir = r.at("output_dir").get<std::string>();
    return out;
}

RunConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    json config;
    try {
        config = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("config parse error: " + std::string(e.what()));
    }
    return parse_config(config);
}

// --- predictor factory -------------------------------------------------------

namespace {

double param_or_throw(const json& params, const std::string& key, const std::string& kind) {
    if (!params.contains(key)) throw ConfigError(kind + ": missing parameter '" + key + "'");
    try {
        return params.at(key).get<double>();
    } catch (const json::exception&) {
        throw ConfigError(kind + ": parameter '" + key + "' must be a number");
    }
}

DistPtr initial_law_from(const json& params) {
    if (!params.contains("initial")) return nullptr;
    const auto& init = params.at("initial");
    const std::string type = init.value("type", std::string());
    if (type == "point_mass") return point_mass(param_or_throw(init, "value", "edf initial"));
    if (type == "uniform")
        return std::make_shared<UniformDistribution>(param_or_throw(init, "lo", "edf initial"),
                                                     param_or_throw(init, "hi", "edf initial"));
    if (type == "normal")
        return std::make_shared<NormalDistribution>(param_or_throw(init, "mean", "edf initial"),
                                                    param_or_throw(init, "var", "edf initial"));
    if (type == "discrete_uniform") {
        if (!init.contains("points") || !init.at("points").is_array() || init.at("points").empty())
            throw ConfigError("edf initial: discrete_uniform needs a nonempty points array");
        std::vector<double> points;
        for (const auto& p : init.at("points")) points.push_back(p.get<double>());
        return std::make_shared<DiscreteDistribution>(points, std::vector<double>(points.size(), 1.0));
    }
    throw ConfigError("edf initial: type must be point_mass, uniform, normal or discrete_uniform");
}

Eigen::MatrixXd matrix_from(const json& params, const std::string& key) {
    if (!params.contains(key) || !params.at(key).is_array())
        throw ConfigError("kalman: missing matrix '" + key + "'");
    const auto& rows = params.at(key);
    const auto r = rows.size();
    const auto c = rows.at(0).is_array() ? rows.at(0).size() : 0;
    if (c == 0) throw ConfigError("kalman: matrix '" + key + "' must be an array of rows");
    Eigen::MatrixXd m(r, c);
    for (std::size_t i = 0; i < r; ++i) {
        if (!rows.at(i).is_array() || rows.at(i).size() != c)
            throw ConfigError("kalman: ragged matrix '" + key + "'");
        for (std::size_t j = 0; j < c; ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows.at(i).at(j).get<double>();
    }
    return m;
}

Eigen::VectorXd vector_from(const json& params, const std::string& key) {
    if (!params.contains(key) || !params.at(key).is_array())
        throw ConfigError("kalman: missing vector '" + key + "'");
    const auto& values = params.at(key);
    Eigen::VectorXd v(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) v(static_cast<Eigen::Index>(i)) = values.at(i).get<double>();
    return v;
}

ConjugateModel conjugate_from(const std::string& kind, const json& params) {
    if (kind == "beta_binomial")
        return BetaBinomial{param_or_throw(params, "a", kind), param_or_throw(params, "b", kind)};
    if (kind == "normal_known_var")
        return NormalKnownVar{param_or_throw(params, "mu0", kind), param_or_throw(params, "tau0sq", kind),
                              param_or_throw(params, "sigmasq", kind)};
    if (kind == "normal_inv_gamma")
        return NormalInvGamma{param_or_throw(params, "m", kind), param_or_throw(params, "kappa", kind),
                              param_or_throw(params, "shape", kind), param_or_throw(params, "rate", kind)};
    throw ConfigError("unknown conjugate kind: " + kind);
}

// Sequential BMA over conjugate members: weights are refreshed from the
// accumulated history at every step.
class BmaPredictor final : public Predictor {
public:
    BmaPredictor(std::string label, ModelEnsemble ensemble)
        : Predictor(std::move(label)), ensemble_(std::move(ensemble)) {}

    void observe(std::span<const double>, const Outcome& y) override { ys_.push_back(y.value); }
    DistPtr predictive(std::span<const double>) override { return bma_predictive(ensemble_, ys_); }
    void reset() override { ys_.clear(); }

private:
    ModelEnsemble ensemble_;
    std::vector<double> ys_;
};

class ShtarkovPredictor final : public Predictor {
public:
    ShtarkovPredictor(std::string label, std::vector<Expert> experts, int alphabet, double offset)
        : Predictor(std::move(label)), experts_(std::move(experts)), alphabet_(alphabet), offset_(offset) {}

    void observe(std::span<const double>, const Outcome& y) override {
        const double symbol = y.value - offset_;
        if (symbol != std::floor(symbol) || symbol < 0.0 || symbol >= alphabet_)
            throw std::invalid_argument("shtarkov: outcome outside the declared alphabet");
        prefix_.push_back(static_cast<int>(symbol));
    }

    DistPtr predictive(std::span<const double>) override {
        const DistPtr raw = shtarkov_predict(experts_, alphabet_, prefix_);
        if (offset_ == 0.0) return raw;
        const auto* discrete = dynamic_cast<const DiscreteDistribution*>(raw.get());
        std::vector<double> points = discrete->points();
        for (auto& p : points) p += offset_;
        return std::make_shared<DiscreteDistribution>(std::move(points), discrete->masses());
    }

    void reset() override { prefix_.clear(); }

private:
    std::vector<Expert> experts_;
    int alphabet_;
    double offset_;  // category streams use symbols 1..L
    std::vector<int> prefix_;
};

}  // namespace

PredictorPtr build_predictor(const PredictorSpec& spec, OutcomeKind kind, int alphabet_size) {
    const json& params = spec.params;
    try {
        if (spec.kind == "beta_binomial" || spec.kind == "normal_known_var" ||
            spec.kind == "normal_inv_gamma")
            return std::make_unique<ConjugatePredictor>(spec.label, conjugate_from(spec.kind, params));

        if (spec.kind == "plug_in") {
            const std::string family = params.value("family", std::string("normal"));
            const std::string estimator = params.value("estimator", std::string("mle"));
            if (family != "normal" && family != "bernoulli")
                throw ConfigError("plug_in: family must be normal or bernoulli");
            if (estimator != "mle" && estimator != "posterior_mean")
                throw ConfigError("plug_in: estimator must be mle or posterior_mean");
            std::optional<ConjugateModel> prior;
            if (estimator == "posterior_mean") {
                if (!params.contains("prior") || !params.at("prior").is_object() ||
                    !params.at("prior").contains("kind"))
                    throw ConfigError("plug_in: posterior_mean estimator needs a prior spec");
                prior = conjugate_from(params.at("prior").at("kind").get<std::string>(),
                                       params.at("prior"));
            }
            return plug_in_predictor(spec.label,
                                     family == "normal" ? PlugInFamily::Normal : PlugInFamily::Bernoulli,
                                     estimator == "mle" ? EstimatorTag::Mle : EstimatorTag::PosteriorMean,
                                     prior);
        }

        if (spec.kind == "edf") return std::make_unique<EdfPredictor>(spec.label, initial_law_from(params));

        if (spec.kind == "count_min") {
            const double epsilon = param_or_throw(params, "epsilon", spec.kind);
            const double delta = param_or_throw(params, "delta", spec.kind);
            const double universe = param_or_throw(params, "universe", spec.kind);
            return std::make_unique<CountMinPredictor>(spec.label, epsilon, delta,
                                                       static_cast<std::uint64_t>(universe), spec.seed);
        }

        if (spec.kind == "ar_bayes") {
            const auto p = static_cast<std::size_t>(param_or_throw(params, "p", spec.kind));
            const NormalInvGamma prior{params.value("m", 0.0), param_or_throw(params, "kappa", spec.kind),
                                       param_or_throw(params, "shape", spec.kind),
                                       param_or_throw(params, "rate", spec.kind)};
            return ar_bayes_predictor(spec.label, p, prior);
        }

        if (spec.kind == "kalman") {
            SsmParams ssm;
            ssm.F = matrix_from(params, "F");
            ssm.G = matrix_from(params, "G");
            ssm.H = matrix_from(params, "H");
            ssm.Q = matrix_from(params, "Q");
            ssm.R = matrix_from(params, "R");
            ssm.initial_mean = vector_from(params, "x0");
            ssm.initial_cov = matrix_from(params, "P0");
            return std::make_unique<KalmanPredictor>(spec.label, std::move(ssm));
        }

        if (spec.kind == "bma") {
            if (!params.contains("members") || !params.at("members").is_array() || params.at("members").empty())
                throw ConfigError("bma: needs a nonempty members array");
            ModelEnsemble ensemble;
            for (const auto& member : params.at("members")) {
                const std::string mkind = member.value("kind", std::string());
                const std::string mlabel = member.value("label", mkind);
                ensemble.members.push_back(conjugate_member(mlabel, conjugate_from(mkind, member)));
            }
            if (params.contains("prior_weights"))
                for (const auto& w : params.at("prior_weights"))
                    ensemble.prior_weights.push_back(w.get<double>());
            return std::make_unique<BmaPredictor>(spec.label, std::move(ensemble));
        }

        if (spec.kind == "shtarkov") {
            const int alphabet = params.contains("alphabet")
                                     ? params.at("alphabet").get<int>()
                                     : alphabet_size;
            if (alphabet < 2) throw ConfigError("shtarkov: alphabet must be >= 2");
            if (!params.contains("experts") || !params.at("experts").is_array() || params.at("experts").empty())
                throw ConfigError("shtarkov: needs a nonempty experts array");
            std::vector<Expert> experts;
            for (const auto& e : params.at("experts")) {
                const double weight = e.value("weight", 1.0);
                if (e.contains("theta")) {
                    if (alphabet != 2) throw ConfigError("shtarkov: bernoulli experts need alphabet 2");
                    experts.push_back(bernoulli_expert(weight, e.at("theta").get<double>()));
                } else if (e.contains("pmf")) {
                    std::vector<double> pmf;
                    for (const auto& p : e.at("pmf")) pmf.push_back(p.get<double>());
                    if (pmf.size() != static_cast<std::size_t>(alphabet))
                        throw ConfigError("shtarkov: expert pmf length must equal the alphabet");
                    experts.push_back(iid_expert(weight, std::move(pmf)));
                } else {
                    throw ConfigError("shtarkov: experts need a theta or pmf");
                }
            }
            const double offset = kind == OutcomeKind::Category ? 1.0 : 0.0;
            return std::make_unique<ShtarkovPredictor>(spec.label, std::move(experts), alphabet, offset);
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError("predictor '" + spec.label + "': " + e.what());
    }
    throw ConfigError("unknown predictor kind: " + spec.kind);
}

// --- the prequential loop ----------------------------------------------------

namespace {

struct Slot {
    PredictorSpec spec;
    PredictorPtr predictor;
    Rng pit_rng;
    CpeTracker reselection_tracker;
    CpeTracker cpe_squared;
    CpeTracker cpe_absolute;
    CpeTracker coverage;
    std::vector<LogScore> scores;
    std::vector<double> pits;
    std::vector<ReselectionEvent> events;
    std::optional<QuarantineInfo> quarantine;
    std::size_t steps = 0;
};

double reselection_loss(const ReselectionRule& rule, const PrequentialRecord& record, double y) {
    if (rule.loss == "squared") return (record.point - y) * (record.point - y);
    if (rule.loss == "absolute") return std::abs(record.point - y);
    return record.covered ? 1.0 : 0.0;
}

}  // namespace

RunResult run(const RunConfig& config, const ObservationStream& stream) {
    const double alpha = 1.0 - config.pi_level;

    std::vector<Slot> slots;
    slots.reserve(config.predictors.size());
    for (const auto& spec : config.predictors) {
        Slot slot{spec,
                  build_predictor(spec, config.outcome_kind, config.alphabet_size),
                  Rng(derive_seed(spec.seed, 0x917)),
                  CpeTracker(config.reselection ? config.reselection->window : 0),
                  CpeTracker(),
                  CpeTracker(),
                  CpeTracker(),
                  {},
                  {},
                  {},
                  std::nullopt,
                  0};
        slots.push_back(std::move(slot));
    }

    RunResult result;
    std::ostringstream csv;
    csv << "t,predictor,point,lo,hi,level,log_score,loss_sq,loss_abs,pit,covered\n";

    for (std::size_t step = 0; step < stream.size(); ++step) {
        const auto& record_in = stream[step];
        const std::span<const double> x(record_in.x);
        const double y = record_in.y.value;

        for (auto& slot : slots) {
            if (slot.quarantine) continue;
            try {
                if (step < slot.spec.warm_up) {
                    // declared burn-in: observe only, no prediction is scored
                    slot.predictor->observe(x, record_in.y);
                    continue;
                }
                // Prediction strictly precedes the outcome.
                const DistPtr dist = slot.predictor->predictive(x);
                PrequentialRecord rec;
                rec.t = record_in.t;
                rec.predictor = slot.spec.label;
                rec.point = point_prediction(*dist, LossFunction::squared());
                rec.interval = predictive_interval(*dist, alpha);
                rec.score = log_score(*dist, y);
                rec.loss_squared = (rec.point - y) * (rec.point - y);
                rec.loss_absolute = std::abs(rec.point - y);
                rec.pit = pit(*dist, y, slot.pit_rng);
                rec.covered = rec.interval.contains(y);

                slot.predictor->observe(x, record_in.y);

                slot.cpe_squared.add(rec.loss_squared);
                slot.cpe_absolute.add(rec.loss_absolute);
                slot.coverage.add(rec.covered ? 1.0 : 0.0);
                slot.scores.push_back(rec.score);
                if (rec.pit) slot.pits.push_back(*rec.pit);
                ++slot.steps;

                // Reselection looks only at strictly past losses: it runs
                // after the outcome is scored and acts from the next step on.
                if (config.reselection) {
                    slot.reselection_tracker.add(reselection_loss(*config.reselection, rec, y));
                    const auto window_cpe = slot.reselection_tracker.window_cpe();
                    if (window_cpe && *window_cpe > config.reselection->threshold) {
                        ReselectionEvent event{record_in.t, slot.spec.label, *window_cpe,
                                               config.reselection->action};
                        const PredictorSpec& source =
                            config.reselection->action == "switch"
                                ? *std::find_if(config.predictors.begin(), config.predictors.end(),
                                                [&](const PredictorSpec& p) {
                                                    return p.label == config.reselection->switch_to;
                                                })
                                : slot.spec;
                        auto rebuilt = build_predictor(source, config.outcome_kind, config.alphabet_size);
                        for (std::size_t i = 0; i <= step; ++i)
                            rebuilt->observe(std::span<const double>(stream[i].x), stream[i].y);
                        slot.predictor = std::move(rebuilt);
                        slot.reselection_tracker.clear_window();
                        slot.events.push_back(std::move(event));
                    }
                }

                result.records.push_back(std::move(rec));
                const auto& r = result.records.back();
                csv << r.t << ',' << r.predictor << ',' << format_double(r.point) << ','
                    << format_double(r.interval.lo) << ',' << format_double(r.interval.hi) << ','
                    << format_double(r.interval.level) << ',' << format_double(r.score.value) << ','
                    << format_double(r.loss_squared) << ',' << format_double(r.loss_absolute) << ','
                    << (r.pit ? format_double(*r.pit) : std::string("")) << ',' << (r.covered ? 1 : 0)
                    << '\n';
            } catch (const std::exception& e) {
                slot.quarantine = QuarantineInfo{record_in.t, e.what()};
            }
        }
    }

    result.records_csv = csv.str();

    ordered_json summary_predictors = ordered_json::array();
    for (auto& slot : slots) {
        PredictorSummary s;
        s.label = slot.spec.label;
        s.steps = slot.steps;
        s.events = slot.events;
        s.quarantine = slot.quarantine;
        const auto cls = cumulative_log_score(std::span<const LogScore>(slot.scores));
        s.cumulative_log_score = cls.total;
        s.out_of_support_count = cls.out_of_support_indices.size();
        if (slot.steps > 0) {
            s.cpe_squared = slot.cpe_squared.cumulative();
            s.cpe_absolute = slot.cpe_absolute.cumulative();
            s.pi_coverage = slot.coverage.cumulative();
        }
        if (slot.pits.size() >= 5) s.pit_ks = pit_uniformity(slot.pits);

        ordered_json js = {{"label", s.label},
                           {"steps", s.steps},
                           {"cpe", ordered_json{{"squared", s.cpe_squared},
                                                {"absolute", s.cpe_absolute},
                                                {"pi_coverage", s.pi_coverage}}},
                           {"cumulative_log_score", s.cumulative_log_score},
                           {"out_of_support", s.out_of_support_count}};
        if (s.pit_ks)
            js["pit_ks"] = ordered_json{{"statistic", s.pit_ks->statistic}, {"p_value", s.pit_ks->p_value}};
        ordered_json events = ordered_json::array();
        for (const auto& e : s.events)
            events.push_back(ordered_json{{"step", e.step}, {"trigger", e.trigger}, {"action", e.action}});
        js["reselection_events"] = events;
        if (s.quarantine)
            js["quarantined"] = ordered_json{{"step", s.quarantine->step}, {"reason", s.quarantine->reason}};
        summary_predictors.push_back(js);
        result.summaries.push_back(std::move(s));

        // Sketch snapshots in the streaming module's binary format.
        if (const auto* cms = dynamic_cast<const CountMinPredictor*>(slot.predictor.get())) {
            std::ostringstream bin(std::ios::binary);
            cms->sketch().serialize(bin);
            result.snapshots[slot.spec.label] = bin.str();
        }
    }

    result.summary = ordered_json{{"pi_level", config.pi_level},
                                  {"steps", stream.size()},
                                  {"predictors", summary_predictors}};
    return result;
}

RunResult run(const RunConfig& config) {
    return run(config, read_stream_file(config.data_path, config.format, config.outcome_kind,
                                        config.alphabet_size));
}

}  // namespace preq
