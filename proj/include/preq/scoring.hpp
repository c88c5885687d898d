#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "preq/distribution.hpp"
#include "preq/loss.hpp"

namespace preq {

// Negative log predictive density/mass.  Outcomes off the support yield a
// tagged +infinity instead of aborting a run, so a comparative sweep
// survives one bad forecaster.
struct LogScore {
    double value = 0.0;
    bool out_of_support = false;
};

LogScore log_score(const Distribution& dist, double y);

/// Brier score of a discrete law: sum_k (p_k - 1{y = x_k})^2.  Proper on
/// finite alphabets.
double brier_score(const Distribution& dist, double y);

// Tagged per-step score.  log and brier are penalties against the whole
// forecast law, squared/absolute score the loss-optimal point, and
// zero_one_pi reports the PI coverage indicator (the one score where larger
// is better).
class ScoreFunction {
public:
    enum class Kind { Log, Brier, SquaredPoint, AbsolutePoint, ZeroOnePI };

    static ScoreFunction log_density() { return ScoreFunction(Kind::Log, 0.0); }
    static ScoreFunction brier() { return ScoreFunction(Kind::Brier, 0.0); }
    static ScoreFunction squared_point() { return ScoreFunction(Kind::SquaredPoint, 0.0); }
    static ScoreFunction absolute_point() { return ScoreFunction(Kind::AbsolutePoint, 0.0); }
    static ScoreFunction zero_one_pi(double level);

    Kind kind() const { return kind_; }
    double score(const Distribution& dist, double y) const;

private:
    ScoreFunction(Kind kind, double level) : kind_(kind), level_(level) {}
    Kind kind_;
    double level_;
};

// Everything the harness records about one prediction step.
struct PrequentialRecord {
    std::int64_t t = 0;
    std::string predictor;
    double point = 0.0;
    PredictionInterval interval;
    LogScore score;
    double loss_squared = 0.0;
    double loss_absolute = 0.0;
    std::optional<double> pit;
    bool covered = false;
};

struct CumulativeLogScore {
    double total = 0.0;
    std::vector<std::size_t> out_of_support_indices;
};

/// Sum of per-step log scores; equals -log of the joint predictive for a
/// Bayes predictor by the chain rule.
CumulativeLogScore cumulative_log_score(std::span<const LogScore> scores);
CumulativeLogScore cumulative_log_score(std::span<const PrequentialRecord> records);

// Relative assessment of forecasters Q and R on the same stream:
// sum_i [log r(y_i|.) - log q(y_i|.)].  Positive means R placed more mass on
// the realized data.
struct ForecastComparison {
    double total = 0.0;
    double per_step_mean = 0.0;
    std::size_t n = 0;
};

ForecastComparison compare_forecasters(std::span<const LogScore> scores_q,
                                       std::span<const LogScore> scores_r);

/// Per-step predictive error.
double pe(double prediction, double y, const LossFunction& loss);

/// Cumulative predictive error: the running mean loss.  With zero_one_pi
/// loss values this is the empirical coverage.
double cpe(std::span<const double> losses);

// Streaming CPE with a trailing window for reselection rules.
class CpeTracker {
public:
    explicit CpeTracker(std::size_t window = 0) : window_(window) {}

    void add(double loss);
    void clear_window() { ring_.clear(); }

    std::size_t count() const { return n_; }
    double cumulative() const;
    std::optional<double> window_cpe() const;  // mean over the last `window` losses
    std::size_t window_fill() const { return ring_.size(); }

private:
    std::size_t window_;
    std::size_t n_ = 0;
    double sum_ = 0.0;
    double compensation_ = 0.0;
    std::deque<double> ring_;
};

struct KsTest {
    double statistic = 0.0;
    double p_value = 1.0;
};

/// One-sample Kolmogorov-Smirnov test of PIT values against Uniform[0,1];
/// p-value from the asymptotic Kolmogorov series.
KsTest pit_uniformity(std::span<const double> us);

}  // namespace preq
