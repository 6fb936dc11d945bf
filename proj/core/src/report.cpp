#include "probcoh/report.hpp"

#include <cmath>

#include <fmt/format.h>

#include "probcoh/csv.hpp"
#include "probcoh/elicitation.hpp"
#include "probcoh/error.hpp"
#include "probcoh/io.hpp"
#include "probcoh/table_io.hpp"

namespace probcoh {

namespace {

nlohmann::ordered_json finite_or_null(double x) {
    if (std::isfinite(x)) return x;
    return nullptr;
}

double parse_double(const std::string& s) {
    if (s == "inf") return INFINITY;
    if (s == "-inf") return -INFINITY;
    if (s == "nan") return NAN;
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != s.size()) throw ValidationError(fmt::format("'{}' is not a number", s));
    return v;
}

nlohmann::ordered_json read_json(const std::filesystem::path& path) {
    try {
        return nlohmann::ordered_json::parse(io::read_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(fmt::format("{}: malformed JSON: {}", path.string(), e.what()));
    }
}

} // namespace

nlohmann::ordered_json recovered_params_json(const RecoveredParams& p) {
    return {{"method", std::string(to_string(p.method))}, {"n_hat", p.n_hat}, {"beta_hat", p.beta_hat}};
}

nlohmann::ordered_json meanvar_summary_json(const MeanVarResult& result, const QuadraticFit& fit,
                                            const std::optional<PlainQuadraticFit>& quadratic) {
    nlohmann::ordered_json out;
    out["form"] = "V = a*E*(1-E) - c";
    out["a"] = fit.a;
    out["c"] = fit.c;
    out["residual_sum"] = fit.residual_sum;
    out["n_points"] = fit.n_points;
    out["degenerate"] = fit.degenerate;
    out["weighting"] = std::string(to_string(fit.weighting));
    out["skipped_cells"] = result.skipped.size();
    try {
        out["recovered"] = recovered_params_json(recover_params_meanvar(fit));
    } catch (const InfeasibleFitError& e) {
        out["recovered"] = nullptr;
        out["recovery_error"] = e.what();
    }
    if (quadratic) {
        out["quadratic_diagnostic"] = {{"form", "V = q0 + q1*E + q2*E^2"},
                                       {"q0", quadratic->q0},
                                       {"q1", quadratic->q1},
                                       {"q2", quadratic->q2},
                                       {"residual_sum", quadratic->residual_sum}};
    }
    return out;
}

std::vector<ReportIdentityRow> parse_identity_report_csv(std::string_view text) {
    const auto rows = csv::parse(text);
    const csv::Row header = {"identity", "mean", "ci_low", "ci_high", "k", "n_pairs", "condition"};
    if (rows.empty() || rows.front().fields != header) {
        throw ValidationError("identity report CSV has an unexpected header");
    }
    std::vector<ReportIdentityRow> out;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& f = rows[i].fields;
        try {
            if (f.size() != header.size()) throw ValidationError("wrong number of fields");
            out.push_back({f[0], parse_double(f[1]), parse_double(f[2]), parse_double(f[3]), std::stoi(f[4]),
                           static_cast<std::size_t>(std::stoul(f[5])), f[6]});
        } catch (const std::exception& e) {
            throw ValidationError(fmt::format("identity report line {}: {}", rows[i].line, e.what()));
        }
    }
    return out;
}

constexpr std::string_view kPtnNote =
    "PT+N uses the adopted read-noise form x ~ Binomial(N, theta(1-2d)+d), not a fitted model";

nlohmann::ordered_json RunSummary::to_json() const {
    nlohmann::ordered_json out;
    out["identities"] = nlohmann::ordered_json::array();
    for (const auto& r : identities) {
        out["identities"].push_back({{"identity", r.identity},
                                     {"condition", r.condition},
                                     {"k", r.k},
                                     {"mean", r.mean},
                                     {"ci_low", finite_or_null(r.ci_low)},
                                     {"ci_high", finite_or_null(r.ci_high)},
                                     {"n_pairs", r.n_pairs}});
    }
    out["meanvar"] = meanvar;
    out["fit"] = fit;
    for (const auto& r : identities) {
        if (r.condition.rfind("ptn(", 0) == 0) {
            out["notes"] = {kPtnNote};
            break;
        }
    }
    out["exclusions"] = {{"elicitation", elicitation_exclusions}, {"meanvar_skipped_cells", meanvar_skipped_cells}};
    return out;
}

std::string RunSummary::to_text() const {
    std::string out = "Probabilistic identities (mean deviation, 95% CI)\n";
    std::string current;
    for (const auto& r : identities) {
        if (r.condition != current) {
            current = r.condition;
            out += fmt::format("  [{}]\n", current);
            if (current.rfind("ptn(", 0) == 0) out += fmt::format("    note: {}\n", kPtnNote);
        }
        out += fmt::format("    {:<4} k={:+d}  mean={:+.6f}  CI=[{:+.6f}, {:+.6f}]  pairs={}\n", r.identity, r.k, r.mean,
                           r.ci_low, r.ci_high, r.n_pairs);
    }
    out += "\nMean-variance fit (V = a*E*(1-E) - c)\n";
    out += fmt::format("  a={}  c={}  points={}  degenerate={}\n", meanvar.value("a", 0.0), meanvar.value("c", 0.0),
                       meanvar.value("n_points", 0), meanvar.value("degenerate", false));
    out += "\nRecovered Bayesian Sampler parameters\n";
    out += fmt::format("  {}\n", fit.dump());
    out += fmt::format("\nExclusions: elicitation={} meanvar_skipped_cells={}\n", elicitation_exclusions,
                       meanvar_skipped_cells);
    return out;
}

RunSummary build_run_summary(const std::filesystem::path& run_dir) {
    const std::vector<std::string_view> required = {files::identities_csv, files::meanvar_fit, files::fit};
    std::vector<std::string> missing;
    for (auto name : required) {
        if (!std::filesystem::is_regular_file(run_dir / name)) missing.emplace_back(name);
    }
    if (!missing.empty()) {
        std::string list;
        for (const auto& m : missing) list += (list.empty() ? "" : ", ") + m;
        throw IoError(fmt::format("missing inputs in '{}': {}", run_dir.string(), list));
    }
    RunSummary summary;
    const auto id_path = run_dir / files::identities_csv;
    try {
        summary.identities = parse_identity_report_csv(io::read_file(id_path));
    } catch (const ValidationError& e) {
        throw ValidationError(fmt::format("{}: {}", id_path.string(), e.what()));
    }
    summary.meanvar = read_json(run_dir / files::meanvar_fit);
    summary.fit = read_json(run_dir / files::fit);
    summary.meanvar_skipped_cells = summary.meanvar.value("skipped_cells", std::size_t{0});
    const auto excl = run_dir / files::exclusions;
    if (std::filesystem::is_regular_file(excl)) {
        summary.elicitation_exclusions = exclusions_from_csv(io::read_file(excl)).size();
    }
    return summary;
}

RunSummary write_run_report(const std::filesystem::path& run_dir) {
    RunSummary summary = build_run_summary(run_dir);
    io::write_file(run_dir / files::report_json, summary.to_json().dump(2) + "\n");
    io::write_file(run_dir / files::report_txt, summary.to_text());
    return summary;
}

} // namespace probcoh
