#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace preq {

enum class OutcomeKind { Real, Category, Count };

// One observed (or predicted) value: a real scalar, a category index in
// {1..L}, or a nonnegative integer count.  Categories and counts are carried
// as doubles so that distributions, losses and scores treat every kind
// uniformly on the real line.
struct Outcome {
    OutcomeKind kind = OutcomeKind::Real;
    double value = 0.0;

    static Outcome real(double v) { return {OutcomeKind::Real, v}; }
    static Outcome category(int index);
    static Outcome count(std::int64_t c);
};

std::string to_string(OutcomeKind kind);

// One stream record.  x may be empty for covariate-free streams.
struct StreamRecord {
    std::int64_t t = 0;
    std::vector<double> x;
    Outcome y;
};

// Ordered records with strictly increasing t, a fixed covariate arity and a
// single outcome kind.  Mixed arity (missing x on some rows) is rejected at
// ingestion.
class ObservationStream {
public:
    ObservationStream() = default;
    explicit ObservationStream(std::vector<StreamRecord> records);

    void append(StreamRecord record);

    const std::vector<StreamRecord>& records() const { return records_; }
    std::size_t size() const { return records_.size(); }
    bool empty() const { return records_.empty(); }
    const StreamRecord& operator[](std::size_t i) const { return records_[i]; }

    std::size_t covariate_dim() const { return covariate_dim_; }
    OutcomeKind outcome_kind() const { return outcome_kind_; }

    // Outcome values in stream order.
    std::vector<double> outcome_values() const;

private:
    std::vector<StreamRecord> records_;
    std::size_t covariate_dim_ = 0;
    OutcomeKind outcome_kind_ = OutcomeKind::Real;
};

}  // namespace preq
