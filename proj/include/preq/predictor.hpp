#pragma once

#include <memory>
#include <span>
#include <string>

#include "preq/distribution.hpp"
#include "preq/outcome.hpp"

namespace preq {

// Sequential predictor contract: predictive(x) must be computable before the
// matching outcome is observed, and after n observes it may depend only on
// the first n records and x.  A predictor is a single-owner state machine;
// it may be moved between threads between steps but never mutated
// concurrently.
class Predictor {
public:
    explicit Predictor(std::string label) : label_(std::move(label)) {}
    virtual ~Predictor() = default;

    virtual void observe(std::span<const double> x, const Outcome& y) = 0;
    virtual DistPtr predictive(std::span<const double> x) = 0;
    virtual void reset() = 0;

    const std::string& label() const { return label_; }

    // Covariate-free convenience.
    void observe(const Outcome& y) { observe({}, y); }
    DistPtr predictive() { return predictive({}); }

private:
    std::string label_;
};

using PredictorPtr = std::unique_ptr<Predictor>;

}  // namespace preq
