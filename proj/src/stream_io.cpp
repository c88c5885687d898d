#include "preq/stream_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <sstream>

namespace preq {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
}

double parse_double(const std::string& text, std::size_t line_no) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(text, &pos);
        while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
        if (pos != text.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw DataError("line " + std::to_string(line_no) + ": not a number: '" + text + "'");
    }
}

Outcome make_outcome(double v, OutcomeKind kind, int alphabet_size, std::size_t line_no) {
    switch (kind) {
        case OutcomeKind::Real: return Outcome::real(v);
        case OutcomeKind::Category: {
            if (v != std::floor(v) || v < 1.0 || (alphabet_size > 0 && v > alphabet_size))
                throw DataError("line " + std::to_string(line_no) +
                                ": category outcome must be an integer in {1.." +
                                std::to_string(alphabet_size) + "}");
            return Outcome::category(static_cast<int>(v));
        }
        case OutcomeKind::Count: {
            if (v != std::floor(v) || v < 0.0)
                throw DataError("line " + std::to_string(line_no) + ": count outcome must be a nonnegative integer");
            return Outcome::count(static_cast<std::int64_t>(v));
        }
    }
    throw DataError("unknown outcome kind");
}

ObservationStream read_csv(std::istream& in, OutcomeKind kind, int alphabet_size) {
    std::string line;
    if (!std::getline(in, line)) throw DataError("empty stream file");
    const auto header = split_csv_line(line);
    if (header.size() < 2 || header.front() != "t" || header.back() != "y")
        throw DataError("line 1: header must be t,x1,...,xd,y");
    const std::size_t d = header.size() - 2;

    ObservationStream stream;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != header.size())
            throw DataError("line " + std::to_string(line_no) + ": expected " +
                            std::to_string(header.size()) + " fields, got " + std::to_string(fields.size()));
        StreamRecord record;
        const double t = parse_double(fields[0], line_no);
        if (t != std::floor(t)) throw DataError("line " + std::to_string(line_no) + ": t must be an integer");
        record.t = static_cast<std::int64_t>(t);
        record.x.reserve(d);
        for (std::size_t j = 0; j < d; ++j) record.x.push_back(parse_double(fields[j + 1], line_no));
        record.y = make_outcome(parse_double(fields.back(), line_no), kind, alphabet_size, line_no);
        try {
            stream.append(std::move(record));
        } catch (const std::invalid_argument& e) {
            throw DataError("line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    if (stream.empty()) throw DataError("stream file holds no records");
    return stream;
}

ObservationStream read_jsonl(std::istream& in, OutcomeKind kind, int alphabet_size) {
    ObservationStream stream;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw DataError("line " + std::to_string(line_no) + ": " + e.what());
        }
        if (!j.is_object() || !j.contains("t") || !j.contains("y"))
            throw DataError("line " + std::to_string(line_no) + ": records need fields t and y");
        StreamRecord record;
        record.t = j.at("t").get<std::int64_t>();
        if (j.contains("x")) {
            if (!j.at("x").is_array())
                throw DataError("line " + std::to_string(line_no) + ": x must be an array");
            for (const auto& v : j.at("x")) record.x.push_back(v.get<double>());
        }
        record.y = make_outcome(j.at("y").get<double>(), kind, alphabet_size, line_no);
        try {
            stream.append(std::move(record));
        } catch (const std::invalid_argument& e) {
            throw DataError("line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    if (stream.empty()) throw DataError("stream file holds no records");
    return stream;
}

}  // namespace

ObservationStream read_stream(std::istream& in, StreamFormat format, OutcomeKind kind, int alphabet_size) {
    return format == StreamFormat::Csv ? read_csv(in, kind, alphabet_size)
                                       : read_jsonl(in, kind, alphabet_size);
}

ObservationStream read_stream_file(const std::string& path, StreamFormat format, OutcomeKind kind,
                                   int alphabet_size) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open stream file: " + path);
    return read_stream(in, format, kind, alphabet_size);
}

std::vector<double> read_value_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open file: " + path);
    std::vector<double> values;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        // Trim whitespace; skip blank lines.
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        const auto last = line.find_last_not_of(" \t\r");
        values.push_back(parse_double(line.substr(first, last - first + 1), line_no));
    }
    if (values.empty()) throw DataError("file holds no numeric rows: " + path);
    return values;
}

}  // namespace preq
