#include <gtest/gtest.h>

#include <filesystem>

#include "probcoh/catalog.hpp"
#include "probcoh/error.hpp"
#include "probcoh/identities.hpp"
#include "probcoh/io.hpp"
#include "probcoh/meanvar.hpp"
#include "probcoh/report.hpp"
#include "probcoh/simulators.hpp"

using namespace probcoh;

namespace {

std::filesystem::path fresh_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("probcoh_report_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

} // namespace

TEST(Report, IdentityCsvRoundTrip) {
    const auto& catalog = builtin_catalog();
    const auto t = simulate_experiment({BayesianSamplerAgent{{10, 1.0}}, 3, 2, 1.0}, catalog,
                                       random_thetas(catalog, 2));
    const auto reports = aggregate_by_condition(builtin_identities(), t);
    const auto rows = parse_identity_report_csv(reports_to_csv(reports));
    ASSERT_EQ(rows.size(), 8u);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        EXPECT_EQ(rows[i].identity, reports[0].identities[i].name);
        EXPECT_EQ(rows[i].mean, reports[0].identities[i].mean);
        EXPECT_EQ(rows[i].ci_low, reports[0].identities[i].ci_low);
        EXPECT_EQ(rows[i].k, reports[0].identities[i].k);
        EXPECT_EQ(rows[i].n_pairs, 24u);
        EXPECT_EQ(rows[i].condition, "bayesian_sampler(N=10,beta=1)@T1/simulated");
    }
    EXPECT_THROW(parse_identity_report_csv("a,b\n1,2\n"), ValidationError);
}

TEST(Report, MissingInputsAreListed) {
    const auto dir = fresh_dir("missing");
    io::write_file(dir / files::fit, "{}");
    try {
        build_run_summary(dir);
        FAIL();
    } catch (const IoError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("identities.csv"), std::string::npos);
        EXPECT_NE(msg.find("meanvar_fit.json"), std::string::npos);
        EXPECT_EQ(msg.find("fit.json,"), std::string::npos);
    }
    std::filesystem::remove_all(dir);
}

TEST(Report, SummaryFromArtifacts) {
    const auto dir = fresh_dir("summary");
    const auto& catalog = builtin_catalog();
    const auto t = simulate_experiment({BayesianSamplerAgent{{10, 1.0}}, 10, 3, 1.0}, catalog,
                                       random_thetas(catalog, 3));
    io::write_file(dir / files::identities_csv, reports_to_csv(aggregate_by_condition(builtin_identities(), t)));
    const auto mv = mean_variance_points(t);
    const auto fit = fit_inverted_u(mv.points);
    io::write_file(dir / files::meanvar_fit, meanvar_summary_json(mv, fit, fit_plain_quadratic(mv.points)).dump());
    io::write_file(dir / files::fit, recovered_params_json(recover_params_meanvar(fit)).dump());
    io::write_file(dir / files::exclusions, "pair_id,query,rep,reason,raw_text\nw01,A,0,noncompliant,maybe\n");
    const auto s = write_run_report(dir);
    EXPECT_EQ(s.identities.size(), 8u);
    EXPECT_EQ(s.elicitation_exclusions, 1u);
    EXPECT_EQ(s.meanvar["n_points"], 144);
    EXPECT_TRUE(std::filesystem::exists(dir / files::report_json));
    EXPECT_NE(io::read_file(dir / files::report_txt).find("Z7"), std::string::npos);
    const auto j = nlohmann::json::parse(io::read_file(dir / files::report_json));
    EXPECT_EQ(j["identities"].size(), 8u);
    std::filesystem::remove_all(dir);
}

TEST(Report, MeanvarSummaryRecordsRecoveryFailure) {
    QuadraticFit fit;
    fit.a = -0.01;
    fit.degenerate = true;
    const auto j = meanvar_summary_json({}, fit, std::nullopt);
    EXPECT_TRUE(j["recovered"].is_null());
    EXPECT_TRUE(j.contains("recovery_error"));
}

TEST(Report, PtnConditionsCarryModelNote) {
    RunSummary s;
    s.meanvar = nlohmann::ordered_json::object();
    ReportIdentityRow row;
    row.identity = "Z1";
    row.condition = "ptn(N=10,d=0.1)@T1/simulated";
    s.identities.push_back(row);
    EXPECT_NE(s.to_text().find("note: PT+N uses the adopted"), std::string::npos);
    EXPECT_EQ(s.to_json()["notes"].size(), 1u);

    s.identities[0].condition = "bayesian_sampler(N=10,beta=1)@T1/simulated";
    EXPECT_EQ(s.to_text().find("note:"), std::string::npos);
    EXPECT_FALSE(s.to_json().contains("notes"));
}
