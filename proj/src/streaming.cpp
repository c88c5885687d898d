#include "preq/streaming.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace preq {

// ---------------------------------------------------------------------------
// EDF

EdfPredictor::EdfPredictor(std::string label, DistPtr initial)
    : Predictor(std::move(label)), initial_(std::move(initial)) {}

void EdfPredictor::observe(std::span<const double>, const Outcome& y) {
    counts_[y.value] += 1;
    ++n_;
}

DistPtr EdfPredictor::predictive(std::span<const double>) {
    if (n_ == 0) {
        if (initial_) return initial_;
        throw std::runtime_error(
            "EdfPredictor: no data yet; an initial distribution P_1 is required to start the sequence");
    }
    std::vector<double> points, masses;
    points.reserve(counts_.size());
    masses.reserve(counts_.size());
    for (const auto& [value, count] : counts_) {
        points.push_back(value);
        masses.push_back(static_cast<double>(count) / static_cast<double>(n_));
    }
    return std::make_shared<DiscreteDistribution>(std::move(points), std::move(masses));
}

void EdfPredictor::reset() {
    counts_.clear();
    n_ = 0;
}

// ---------------------------------------------------------------------------
// Hashing

namespace {

std::uint64_t mulmod_mersenne61(std::uint64_t a, std::uint64_t b) {
    const unsigned __int128 prod = static_cast<unsigned __int128>(a) * b;
    std::uint64_t lo = static_cast<std::uint64_t>(prod & UniversalHash::kPrime);
    std::uint64_t hi = static_cast<std::uint64_t>(prod >> 61);
    std::uint64_t r = lo + hi;
    if (r >= UniversalHash::kPrime) r -= UniversalHash::kPrime;
    return r;
}

std::uint64_t draw_below_prime(Rng& rng) {
    // 61-bit rejection sampling keeps the draw exactly uniform on [0, p).
    for (;;) {
        const std::uint64_t x = rng.next() >> 3;
        if (x < UniversalHash::kPrime) return x;
    }
}

void write_u64_le(std::ostream& out, std::uint64_t v) {
    char bytes[8];
    for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    out.write(bytes, 8);
}

std::uint64_t read_u64_le(std::istream& in) {
    char bytes[8];
    in.read(bytes, 8);
    if (!in) throw std::runtime_error("CountMinSketch: truncated serialization");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[i])) << (8 * i);
    return v;
}

// ceil with a guard against values that are integers up to FP noise.
std::uint64_t ceil_positive(double v) {
    return static_cast<std::uint64_t>(std::ceil(v - 1e-9));
}

}  // namespace

UniversalHash::UniversalHash(std::uint64_t a, std::uint64_t b, std::uint64_t range)
    : a_(a), b_(b), range_(range) {
    if (a == 0 || a >= kPrime || b >= kPrime)
        throw std::invalid_argument("UniversalHash: need 0 < a < p and 0 <= b < p");
    if (range == 0) throw std::invalid_argument("UniversalHash: range must be positive");
}

UniversalHash UniversalHash::draw(Rng& rng, std::uint64_t range) {
    std::uint64_t a = 0;
    while (a == 0) a = draw_below_prime(rng);
    return UniversalHash(a, draw_below_prime(rng), range);
}

std::uint64_t UniversalHash::operator()(std::uint64_t u) const {
    std::uint64_t r = mulmod_mersenne61(a_, u % kPrime) + b_;
    if (r >= kPrime) r -= kPrime;
    return r % range_;
}

// ---------------------------------------------------------------------------
// Count-Min sketch

CountMinSketch::CountMinSketch(double epsilon, double delta, std::uint64_t universe, std::uint64_t seed) {
    if (!(epsilon > 0.0 && epsilon < 1.0)) throw std::invalid_argument("CountMinSketch: epsilon must lie in (0,1)");
    if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("CountMinSketch: delta must lie in (0,1)");
    if (universe < 2) throw std::invalid_argument("CountMinSketch: universe must be >= 2");
    w_ = static_cast<std::size_t>(ceil_positive(2.0 / epsilon));
    d_ = static_cast<std::size_t>(ceil_positive(std::log2(1.0 / delta)));
    d_ = std::max<std::size_t>(d_, 1);
    universe_ = universe;
    seed_ = seed;
    counters_.assign(d_ * w_, 0);
    draw_hashes();
}

void CountMinSketch::draw_hashes() {
    hashes_.clear();
    hashes_.reserve(d_);
    Rng rng(derive_seed(seed_, 0xc35));
    for (std::size_t j = 0; j < d_; ++j) hashes_.push_back(UniversalHash::draw(rng, w_));
}

void CountMinSketch::update(std::uint64_t u) {
    if (u >= universe_) throw std::invalid_argument("CountMinSketch: item outside the declared universe");
    for (std::size_t j = 0; j < d_; ++j) counters_[j * w_ + hashes_[j](u)] += 1;
    ++n_;
}

std::uint64_t CountMinSketch::estimate(std::uint64_t u) const {
    if (u >= universe_) throw std::invalid_argument("CountMinSketch: item outside the declared universe");
    std::uint64_t best = std::numeric_limits<std::uint64_t>::max();
    for (std::size_t j = 0; j < d_; ++j) best = std::min(best, counters_[j * w_ + hashes_[j](u)]);
    return best;
}

void CountMinSketch::merge(const CountMinSketch& other) {
    if (other.d_ != d_ || other.w_ != w_ || other.seed_ != seed_)
        throw std::invalid_argument("CountMinSketch::merge: sketches must share seed and shape");
    for (std::size_t i = 0; i < counters_.size(); ++i) counters_[i] += other.counters_[i];
    n_ += other.n_;
}

void CountMinSketch::serialize(std::ostream& out) const {
    out.write("CMS1", 4);
    write_u64_le(out, d_);
    write_u64_le(out, w_);
    write_u64_le(out, n_);
    write_u64_le(out, seed_);
    for (const auto c : counters_) write_u64_le(out, c);
}

CountMinSketch CountMinSketch::deserialize(std::istream& in) {
    char magic[4];
    in.read(magic, 4);
    if (!in || std::string_view(magic, 4) != "CMS1")
        throw std::runtime_error("CountMinSketch: bad magic bytes");
    CountMinSketch sketch;
    sketch.d_ = static_cast<std::size_t>(read_u64_le(in));
    sketch.w_ = static_cast<std::size_t>(read_u64_le(in));
    sketch.n_ = read_u64_le(in);
    sketch.seed_ = read_u64_le(in);
    sketch.universe_ = std::numeric_limits<std::uint64_t>::max();
    sketch.counters_.resize(sketch.d_ * sketch.w_);
    for (auto& c : sketch.counters_) c = read_u64_le(in);
    sketch.draw_hashes();
    return sketch;
}

DistPtr cms_frequency_law(const CountMinSketch& sketch, std::span<const std::uint64_t> candidates) {
    if (candidates.empty()) throw std::invalid_argument("cms_frequency_law: empty candidate set");
    if (sketch.total() == 0) throw std::invalid_argument("cms_frequency_law: sketch has no updates");
    std::vector<double> points, masses;
    points.reserve(candidates.size());
    masses.reserve(candidates.size());
    double total = 0.0;
    for (const auto u : candidates) {
        const auto est = static_cast<double>(sketch.estimate(u));
        points.push_back(static_cast<double>(u));
        masses.push_back(est);
        total += est;
    }
    if (!(total > 0.0)) throw std::runtime_error("cms_frequency_law: all candidate estimates are zero");
    return std::make_shared<DiscreteDistribution>(std::move(points), std::move(masses));
}

double cms_predict_next(const CountMinSketch& sketch, std::span<const std::uint64_t> candidates,
                        const LossFunction& loss) {
    return point_prediction(*cms_frequency_law(sketch, candidates), loss);
}

// ---------------------------------------------------------------------------
// Harness predictor

CountMinPredictor::CountMinPredictor(std::string label, double epsilon, double delta,
                                     std::uint64_t universe, std::uint64_t seed)
    : Predictor(std::move(label)),
      epsilon_(epsilon),
      delta_(delta),
      universe_(universe),
      seed_(seed),
      sketch_(epsilon, delta, universe, seed),
      seen_flags_(universe, false) {}

void CountMinPredictor::observe(std::span<const double>, const Outcome& y) {
    if (!(y.value >= 0.0) || y.value != std::floor(y.value))
        throw std::invalid_argument("CountMinPredictor: outcomes must be nonnegative integers");
    const auto u = static_cast<std::uint64_t>(y.value);
    sketch_.update(u);
    if (!seen_flags_[u]) {
        seen_flags_[u] = true;
        seen_.push_back(u);
    }
}

DistPtr CountMinPredictor::predictive(std::span<const double>) {
    if (seen_.empty())
        throw std::runtime_error("CountMinPredictor: no data yet; the candidate set is empty");
    std::vector<std::uint64_t> candidates = seen_;
    std::sort(candidates.begin(), candidates.end());
    return cms_frequency_law(sketch_, candidates);
}

void CountMinPredictor::reset() {
    sketch_ = CountMinSketch(epsilon_, delta_, universe_, seed_);
    seen_.clear();
    seen_flags_.assign(universe_, false);
}

}  // namespace preq
