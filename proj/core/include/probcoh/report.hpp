#pragma once

// Run-directory artifacts and the combined summary built from them.

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "probcoh/identities.hpp"
#include "probcoh/meanvar.hpp"

namespace probcoh {

namespace files {
inline constexpr std::string_view judgments = "judgments.jsonl";
inline constexpr std::string_view thetas = "thetas.csv";
inline constexpr std::string_view identities_csv = "identities.csv";
inline constexpr std::string_view identities_plot = "identities_plot.json";
inline constexpr std::string_view meanvar_points = "meanvar_points.csv";
inline constexpr std::string_view meanvar_fit = "meanvar_fit.json";
inline constexpr std::string_view meanvar_plot = "meanvar_plot.json";
inline constexpr std::string_view fit = "fit.json";
inline constexpr std::string_view exclusions = "exclusions.csv";
inline constexpr std::string_view cache = "cache.jsonl";
inline constexpr std::string_view report_json = "report.json";
inline constexpr std::string_view report_txt = "report.txt";
} // namespace files

nlohmann::ordered_json recovered_params_json(const RecoveredParams& p);

// Summary written by the meanvar command.
nlohmann::ordered_json meanvar_summary_json(const MeanVarResult& result, const QuadraticFit& fit,
                                            const std::optional<PlainQuadraticFit>& quadratic);

struct ReportIdentityRow {
    std::string identity;
    double mean = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    int k = 0;
    std::size_t n_pairs = 0;
    std::string condition;
};

std::vector<ReportIdentityRow> parse_identity_report_csv(std::string_view text);

struct RunSummary {
    std::vector<ReportIdentityRow> identities;
    nlohmann::ordered_json meanvar;
    nlohmann::ordered_json fit;
    std::size_t elicitation_exclusions = 0;
    std::size_t meanvar_skipped_cells = 0;

    nlohmann::ordered_json to_json() const;
    std::string to_text() const;
};

// Reads identities.csv, meanvar_fit.json and fit.json (required) plus
// exclusions.csv (optional). Throws IoError listing every missing input.
RunSummary build_run_summary(const std::filesystem::path& run_dir);

// Builds the summary and writes report.json and report.txt into run_dir.
RunSummary write_run_report(const std::filesystem::path& run_dir);

} // namespace probcoh
