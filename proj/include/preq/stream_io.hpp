#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>

#include "preq/outcome.hpp"

namespace preq {

enum class StreamFormat { Csv, JsonLines };

// Thrown on malformed stream files; the CLI maps it to exit code 3.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// CSV with header `t,x1,...,xd,y` or JSON lines `{"t":..,"x":[..],"y":..}`.
ObservationStream read_stream(std::istream& in, StreamFormat format, OutcomeKind kind,
                              int alphabet_size = 0);
ObservationStream read_stream_file(const std::string& path, StreamFormat format, OutcomeKind kind,
                                   int alphabet_size = 0);

/// One numeric value per row (the crowd-pooling input format).
std::vector<double> read_value_file(const std::string& path);

}  // namespace preq
