#include "preq/outcome.hpp"

#include <stdexcept>

namespace preq {

Outcome Outcome::category(int index) {
    if (index < 1) throw std::invalid_argument("Outcome::category: index must be >= 1");
    return {OutcomeKind::Category, static_cast<double>(index)};
}

Outcome Outcome::count(std::int64_t c) {
    if (c < 0) throw std::invalid_argument("Outcome::count: count must be nonnegative");
    return {OutcomeKind::Count, static_cast<double>(c)};
}

std::string to_string(OutcomeKind kind) {
    switch (kind) {
        case OutcomeKind::Real: return "real";
        case OutcomeKind::Category: return "category";
        case OutcomeKind::Count: return "count";
    }
    return "unknown";
}

ObservationStream::ObservationStream(std::vector<StreamRecord> records) {
    for (auto& r : records) append(std::move(r));
}

void ObservationStream::append(StreamRecord record) {
    if (records_.empty()) {
        covariate_dim_ = record.x.size();
        outcome_kind_ = record.y.kind;
    } else {
        if (record.t <= records_.back().t)
            throw std::invalid_argument("ObservationStream: t must be strictly increasing");
        if (record.x.size() != covariate_dim_)
            throw std::invalid_argument("ObservationStream: inconsistent covariate arity at t=" +
                                        std::to_string(record.t));
        if (record.y.kind != outcome_kind_)
            throw std::invalid_argument("ObservationStream: mixed outcome kinds at t=" +
                                        std::to_string(record.t));
    }
    records_.push_back(std::move(record));
}

std::vector<double> ObservationStream::outcome_values() const {
    std::vector<double> ys;
    ys.reserve(records_.size());
    for (const auto& r : records_) ys.push_back(r.y.value);
    return ys;
}

}  // namespace preq
