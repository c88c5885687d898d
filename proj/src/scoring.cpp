#include "preq/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace preq {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

LogScore log_score(const Distribution& dist, double y) {
    const double ld = dist.log_density(y);
    if (!std::isfinite(ld)) return {kInf, true};
    return {-ld, false};
}

double brier_score(const Distribution& dist, double y) {
    const auto* discrete = dynamic_cast<const DiscreteDistribution*>(&dist);
    if (discrete == nullptr) throw std::invalid_argument("brier_score: needs a discrete law");
    double total = 0.0;
    bool hit = false;
    for (std::size_t k = 0; k < discrete->points().size(); ++k) {
        const double indicator = discrete->points()[k] == y ? 1.0 : 0.0;
        hit = hit || indicator > 0.0;
        const double gap = discrete->masses()[k] - indicator;
        total += gap * gap;
    }
    if (!hit) total += 1.0;  // outcome off the alphabet
    return total;
}

ScoreFunction ScoreFunction::zero_one_pi(double level) {
    if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("zero_one_pi: level must lie in (0,1)");
    return ScoreFunction(Kind::ZeroOnePI, level);
}

double ScoreFunction::score(const Distribution& dist, double y) const {
    switch (kind_) {
        case Kind::Log: return log_score(dist, y).value;
        case Kind::Brier: return brier_score(dist, y);
        case Kind::SquaredPoint: {
            const double e = dist.mean() - y;
            return e * e;
        }
        case Kind::AbsolutePoint: return std::abs(dist.quantile(0.5) - y);
        case Kind::ZeroOnePI: return predictive_interval(dist, 1.0 - level_).contains(y) ? 1.0 : 0.0;
    }
    throw std::logic_error("ScoreFunction: unknown tag");
}

CumulativeLogScore cumulative_log_score(std::span<const LogScore> scores) {
    CumulativeLogScore out;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (scores[i].out_of_support) out.out_of_support_indices.push_back(i);
        out.total += scores[i].value;
    }
    if (!out.out_of_support_indices.empty()) out.total = kInf;
    return out;
}

CumulativeLogScore cumulative_log_score(std::span<const PrequentialRecord> records) {
    std::vector<LogScore> scores;
    scores.reserve(records.size());
    for (const auto& r : records) scores.push_back(r.score);
    return cumulative_log_score(scores);
}

ForecastComparison compare_forecasters(std::span<const LogScore> scores_q,
                                       std::span<const LogScore> scores_r) {
    if (scores_q.size() != scores_r.size())
        throw std::invalid_argument("compare_forecasters: record lengths differ");
    ForecastComparison out;
    out.n = scores_q.size();
    for (std::size_t i = 0; i < scores_q.size(); ++i) {
        // log r - log q == score_q - score_r (scores are negative log densities)
        out.total += scores_q[i].value - scores_r[i].value;
    }
    out.per_step_mean = out.n > 0 ? out.total / static_cast<double>(out.n) : 0.0;
    return out;
}

double pe(double prediction, double y, const LossFunction& loss) { return loss.evaluate(prediction, y); }

double cpe(std::span<const double> losses) {
    if (losses.empty()) throw std::invalid_argument("cpe: empty loss sequence");
    double sum = 0.0, comp = 0.0;
    for (const double l : losses) {
        const double t = l - comp;
        const double s = sum + t;
        comp = (s - sum) - t;
        sum = s;
    }
    return sum / static_cast<double>(losses.size());
}

void CpeTracker::add(double loss) {
    ++n_;
    const double t = loss - compensation_;
    const double s = sum_ + t;
    compensation_ = (s - sum_) - t;
    sum_ = s;
    if (window_ > 0) {
        ring_.push_back(loss);
        if (ring_.size() > window_) ring_.pop_front();
    }
}

double CpeTracker::cumulative() const {
    if (n_ == 0) throw std::logic_error("CpeTracker: no losses recorded");
    return sum_ / static_cast<double>(n_);
}

std::optional<double> CpeTracker::window_cpe() const {
    if (window_ == 0 || ring_.size() < window_) return std::nullopt;
    double sum = 0.0;
    for (const double l : ring_) sum += l;
    return sum / static_cast<double>(ring_.size());
}

namespace {

// Asymptotic Kolmogorov tail Q(lambda) = 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 lambda^2).
double kolmogorov_tail(double lambda) {
    if (lambda < 1e-8) return 1.0;
    double sum = 0.0, sign = 1.0, prev_term = kInf;
    for (int k = 1; k <= 200; ++k) {
        const double term = std::exp(-2.0 * k * k * lambda * lambda);
        sum += sign * term;
        if (term < 1e-16 * std::abs(sum) || term >= prev_term) break;
        prev_term = term;
        sign = -sign;
    }
    return std::clamp(2.0 * sum, 0.0, 1.0);
}

}  // namespace

KsTest pit_uniformity(std::span<const double> us) {
    if (us.size() < 5) throw std::invalid_argument("pit_uniformity: need at least 5 PIT values");
    std::vector<double> sorted(us.begin(), us.end());
    for (const double u : sorted)
        if (!(u >= 0.0 && u <= 1.0)) throw std::invalid_argument("pit_uniformity: PIT values must lie in [0,1]");
    std::sort(sorted.begin(), sorted.end());
    const auto n = static_cast<double>(sorted.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        const double hi = (static_cast<double>(i) + 1.0) / n - sorted[i];
        const double lo = sorted[i] - static_cast<double>(i) / n;
        d = std::max({d, hi, lo});
    }
    return {d, kolmogorov_tail(std::sqrt(n) * d)};
}

}  // namespace preq
