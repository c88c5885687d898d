#include "preq/loss.hpp"

#include <cmath>
#include <stdexcept>

namespace preq {

LossFunction LossFunction::zero_one_pi(double level) {
    if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("zero_one_pi: level must lie in (0,1)");
    return LossFunction(Kind::ZeroOnePI, level);
}

LossFunction LossFunction::check(double tau) {
    if (!(tau > 0.0 && tau < 1.0)) throw std::invalid_argument("check: tau must lie in (0,1)");
    return LossFunction(Kind::Check, tau);
}

double LossFunction::evaluate(double prediction, double y) const {
    const double e = y - prediction;
    switch (kind_) {
        case Kind::Squared: return e * e;
        case Kind::Absolute: return std::abs(e);
        case Kind::Check: return e >= 0.0 ? param_ * e : (param_ - 1.0) * e;
        case Kind::ZeroOnePI:
            throw std::invalid_argument("zero_one_pi loss scores an interval, not a point");
    }
    return 0.0;
}

double LossFunction::evaluate(const PredictionInterval& interval, double y) const {
    if (kind_ != Kind::ZeroOnePI)
        throw std::invalid_argument("interval form is only defined for zero_one_pi loss");
    return interval.contains(y) ? 1.0 : 0.0;
}

double point_prediction(const Distribution& dist, const LossFunction& loss) {
    switch (loss.kind()) {
        case LossFunction::Kind::Squared: {
            const double m = dist.mean();
            if (!std::isfinite(m))
                throw std::runtime_error("point_prediction: mean is not finite under squared loss");
            return m;
        }
        case LossFunction::Kind::Absolute: return dist.quantile(0.5);
        case LossFunction::Kind::Check: return dist.quantile(loss.param());
        case LossFunction::Kind::ZeroOnePI: return dist.mode();
    }
    throw std::logic_error("point_prediction: unknown loss");
}

}  // namespace preq
