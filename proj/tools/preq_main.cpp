// preq: prequential benchmark runner.
//   preq run --config <path> [--out <dir>]
//   preq galton --file <path> [--combiner mean|median]
//   preq validate --config <path>
// Exit codes: 0 success, 2 config error, 3 data error, 4 internal error.

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "preq/averaging.hpp"
#include "preq/harness.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitInternal = 4;

int run_command(const std::string& config_path, const std::string& out_override) {
    preq::RunConfig config = preq::parse_config_file(config_path);
    if (!out_override.empty()) config.output_dir = out_override;

    const preq::RunResult result = preq::run(config);

    std::filesystem::create_directories(config.output_dir);
    const auto records_path = std::filesystem::path(config.output_dir) / "records.csv";
    const auto summary_path = std::filesystem::path(config.output_dir) / "summary.json";
    {
        std::ofstream out(records_path, std::ios::binary);
        out << result.records_csv;
    }
    {
        std::ofstream out(summary_path, std::ios::binary);
        out << result.summary.dump(2) << '\n';
    }
    for (const auto& [label, bytes] : result.snapshots) {
        std::ofstream out(std::filesystem::path(config.output_dir) / (label + "_sketch.bin"),
                          std::ios::binary);
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    }

    for (const auto& s : result.summaries) {
        std::printf("%-16s steps=%zu cpe_sq=%.6g cpe_abs=%.6g coverage=%.4f logscore=%.6g%s\n",
                    s.label.c_str(), s.steps, s.cpe_squared, s.cpe_absolute, s.pi_coverage,
                    s.cumulative_log_score, s.quarantine ? " [quarantined]" : "");
        if (s.quarantine)
            std::printf("  quarantined at t=%lld: %s\n", static_cast<long long>(s.quarantine->step),
                        s.quarantine->reason.c_str());
        for (const auto& e : s.events)
            std::printf("  reselection at t=%lld (window cpe %.6g, action %s)\n",
                        static_cast<long long>(e.step), e.trigger, e.action.c_str());
    }
    std::printf("wrote %s and %s\n", records_path.c_str(), summary_path.c_str());
    return kExitOk;
}

int galton_command(const std::string& file, const std::string& combiner) {
    const auto values = preq::read_value_file(file);
    const auto summary = preq::pool_crowd(
        values, combiner == "median" ? preq::CrowdCombiner::Median : preq::CrowdCombiner::Mean);
    std::printf("n = %zu\n", summary.count);
    std::printf("mean = %.12g\n", summary.mean);
    std::printf("median = %.12g\n", summary.median);
    std::printf("pooled (%s) = %.12g\n", combiner.c_str(), summary.pooled);
    return kExitOk;
}

int validate_command(const std::string& config_path) {
    const auto result = preq::validate_config_file(config_path);
    for (const auto& d : result.diagnostics) {
        std::fprintf(stderr, "%s: %s: %s\n",
                     d.severity == preq::Diagnostic::Severity::Error ? "error" : "warning",
                     d.where.empty() ? "/" : d.where.c_str(), d.message.c_str());
    }
    if (!result.ok()) return kExitConfig;
    std::printf("%s\n", result.resolved.dump(2).c_str());
    std::printf("ok: 0 errors, %zu warnings\n", result.diagnostics.size());
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"prequential Bayesian prediction benchmarks"};
    app.require_subcommand(1);

    std::string config_path, out_dir, file_path, combiner = "mean";

    auto* run = app.add_subcommand("run", "run the predict-observe-score loop over a stream");
    run->add_option("--config", config_path, "config file (JSON)")->required();
    run->add_option("--out", out_dir, "output directory (overrides the config)");

    auto* galton = app.add_subcommand("galton", "pool one-guess-per-row point predictions");
    galton->add_option("--file", file_path, "file with one numeric guess per row")->required();
    galton->add_option("--combiner", combiner, "mean|median")
        ->check(CLI::IsMember({"mean", "median"}));

    auto* validate = app.add_subcommand("validate", "check a config file and echo resolved defaults");
    validate->add_option("--config", config_path, "config file (JSON)")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (run->parsed()) return run_command(config_path, out_dir);
        if (galton->parsed()) return galton_command(file_path, combiner);
        if (validate->parsed()) return validate_command(config_path);
    } catch (const preq::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitConfig;
    } catch (const preq::DataError& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return kExitData;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "internal error: %s\n", e.what());
        return kExitInternal;
    }
    return kExitInternal;
}
