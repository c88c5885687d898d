#pragma once

#include "preq/distribution.hpp"

namespace preq {

// Point-prediction losses.  zero_one_pi scores interval coverage: it is 1
// when the outcome falls inside the interval and 0 outside, so its running
// mean is the empirical coverage.
class LossFunction {
public:
    enum class Kind { Squared, Absolute, ZeroOnePI, Check };

    static LossFunction squared() { return LossFunction(Kind::Squared, 0.0); }
    static LossFunction absolute() { return LossFunction(Kind::Absolute, 0.0); }
    static LossFunction zero_one_pi(double level);
    static LossFunction check(double tau);

    Kind kind() const { return kind_; }
    double param() const { return param_; }  // level or tau

    double evaluate(double prediction, double y) const;
    double evaluate(const PredictionInterval& interval, double y) const;

private:
    LossFunction(Kind kind, double param) : kind_(kind), param_(param) {}
    Kind kind_;
    double param_;
};

/// Loss-optimal point prediction: mean under squared loss, median under
/// absolute, quantile(tau) under check(tau), mode under zero-one.
double point_prediction(const Distribution& dist, const LossFunction& loss);

}  // namespace preq
