#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <vector>

#include "preq/loss.hpp"
#include "preq/predictor.hpp"

namespace preq {

// Empirical-distribution predictor: after n observations the predictive is
// the empirical law of the first n outcomes.  Before any data it falls back
// to a user-supplied initial law P_1 and refuses to predict without one.
class EdfPredictor final : public Predictor {
public:
    explicit EdfPredictor(std::string label, DistPtr initial = nullptr);

    using Predictor::observe;
    using Predictor::predictive;

    void observe(std::span<const double> x, const Outcome& y) override;
    DistPtr predictive(std::span<const double> x) override;
    void reset() override;

    std::size_t count() const { return n_; }

private:
    DistPtr initial_;
    std::map<double, std::size_t> counts_;
    std::size_t n_ = 0;
};

// h(u) = ((a u + b) mod p) mod W with p = 2^61 - 1 and a != 0: the textbook
// 2-universal construction, so distinct keys collide with probability 1/W.
class UniversalHash {
public:
    static constexpr std::uint64_t kPrime = (std::uint64_t{1} << 61) - 1;

    UniversalHash(std::uint64_t a, std::uint64_t b, std::uint64_t range);
    static UniversalHash draw(Rng& rng, std::uint64_t range);

    std::uint64_t operator()(std::uint64_t u) const;

    std::uint64_t a() const { return a_; }
    std::uint64_t b() const { return b_; }

private:
    std::uint64_t a_, b_, range_;
};

// Count-Min sketch: d = ceil(log2(1/delta)) rows of W = ceil(2/eps)
// counters.  Row-minimum estimates never undercount and overcount by more
// than eps*n with probability at most delta (over the hash draw).
class CountMinSketch {
public:
    CountMinSketch(double epsilon, double delta, std::uint64_t universe, std::uint64_t seed);

    void update(std::uint64_t u);
    std::uint64_t estimate(std::uint64_t u) const;

    /// Cell-wise sum; both sketches must share seed and shape, and the result
    /// equals the sketch of the concatenated stream exactly.
    void merge(const CountMinSketch& other);

    void serialize(std::ostream& out) const;
    static CountMinSketch deserialize(std::istream& in);

    std::size_t depth() const { return d_; }
    std::size_t width() const { return w_; }
    std::uint64_t total() const { return n_; }
    std::uint64_t universe() const { return universe_; }
    std::uint64_t seed() const { return seed_; }
    std::size_t cells() const { return d_ * w_; }
    const std::vector<std::uint64_t>& counters() const { return counters_; }

private:
    CountMinSketch() = default;
    void draw_hashes();

    std::size_t d_ = 0;
    std::size_t w_ = 0;
    std::uint64_t n_ = 0;
    std::uint64_t universe_ = 0;
    std::uint64_t seed_ = 0;
    std::vector<UniversalHash> hashes_;
    std::vector<std::uint64_t> counters_;  // row-major d x W
};

/// Empirical law over the candidate set from normalized sketch estimates.
DistPtr cms_frequency_law(const CountMinSketch& sketch, std::span<const std::uint64_t> candidates);

/// Point prediction from the sketch law: mean under squared loss, median
/// under absolute, mode under zero-one.
double cms_predict_next(const CountMinSketch& sketch, std::span<const std::uint64_t> candidates,
                        const LossFunction& loss);

// Sequential predictor wrapper over the sketch for harness use.
class CountMinPredictor final : public Predictor {
public:
    CountMinPredictor(std::string label, double epsilon, double delta, std::uint64_t universe,
                      std::uint64_t seed);

    using Predictor::observe;
    using Predictor::predictive;

    void observe(std::span<const double> x, const Outcome& y) override;
    DistPtr predictive(std::span<const double> x) override;
    void reset() override;

    const CountMinSketch& sketch() const { return sketch_; }

private:
    double epsilon_, delta_;
    std::uint64_t universe_, seed_;
    CountMinSketch sketch_;
    std::vector<std::uint64_t> seen_;  // distinct observed values, insertion order
    std::vector<bool> seen_flags_;
};

}  // namespace preq
