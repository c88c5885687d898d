#pragma once

#include <json.hpp>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "preq/predictor.hpp"
#include "preq/scoring.hpp"
#include "preq/stream_io.hpp"

namespace preq {

// Thrown on malformed configuration; the CLI maps it to exit code 2.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct PredictorSpec {
    std::string label;
    std::string kind;
    std::uint64_t seed = 0;      // mandatory: no entropy defaults anywhere
    std::size_t warm_up = 0;     // observe-only steps before the first prediction
    nlohmann::json params;
};

struct ReselectionRule {
    std::size_t window = 1;
    std::string loss = "squared";  // squared | absolute | pi
    double threshold = 0.0;
    std::string action = "refit";  // refit | switch
    std::string switch_to;         // target label when action == switch
};

struct RunConfig {
    std::string data_path;
    StreamFormat format = StreamFormat::Csv;
    OutcomeKind outcome_kind = OutcomeKind::Real;
    int alphabet_size = 0;
    std::vector<PredictorSpec> predictors;
    std::vector<std::string> scores;  // subset of log, squared, absolute, pi
    double pi_level = 0.9;
    std::optional<ReselectionRule> reselection;
    std::string output_dir = ".";
};

struct Diagnostic {
    enum class Severity { Error, Warning };
    Severity severity = Severity::Error;
    std::string where;  // JSON pointer of the offending node
    std::string message;
};

struct ValidationResult {
    std::vector<Diagnostic> diagnostics;
    nlohmann::ordered_json resolved;  // config with defaults filled in

    bool ok() const;
};

const std::vector<std::string>& known_predictor_kinds();

ValidationResult validate_config(const nlohmann::json& config);
ValidationResult validate_config_file(const std::string& path);

/// Parses and validates; throws ConfigError on the first error.
RunConfig parse_config(const nlohmann::json& config);
RunConfig parse_config_file(const std::string& path);

/// Builds one predictor from its spec (outcome kind decides symbol maps).
PredictorPtr build_predictor(const PredictorSpec& spec, OutcomeKind kind, int alphabet_size);

struct ReselectionEvent {
    std::int64_t step = 0;
    std::string label;
    double trigger = 0.0;
    std::string action;
};

struct QuarantineInfo {
    std::int64_t step = 0;
    std::string reason;
};

struct PredictorSummary {
    std::string label;
    std::size_t steps = 0;
    double cpe_squared = 0.0;
    double cpe_absolute = 0.0;
    double pi_coverage = 0.0;
    double cumulative_log_score = 0.0;
    std::size_t out_of_support_count = 0;
    std::optional<KsTest> pit_ks;
    std::vector<ReselectionEvent> events;
    std::optional<QuarantineInfo> quarantine;
};

struct RunResult {
    std::vector<PrequentialRecord> records;
    std::vector<PredictorSummary> summaries;
    std::string records_csv;                       // byte-stable record file content
    nlohmann::ordered_json summary;                // byte-stable report document
    std::map<std::string, std::string> snapshots;  // label -> serialized sketch bytes
};

/// The prequential loop: at each step every predictor issues its predictive
/// before seeing the outcome; records and summaries never reference the
/// generating mechanism beyond the predictor label.
RunResult run(const RunConfig& config, const ObservationStream& stream);

/// Convenience: load the stream named by the config and run.
RunResult run(const RunConfig& config);

}  // namespace preq
