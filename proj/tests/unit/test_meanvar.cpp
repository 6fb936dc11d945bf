#include <gtest/gtest.h>

#include <cmath>

#include "probcoh/catalog.hpp"
#include "probcoh/error.hpp"
#include "probcoh/meanvar.hpp"
#include "probcoh/simulators.hpp"

using namespace probcoh;

namespace {

// (E, V) of the Bayesian Sampler judgment by pmf enumeration.
std::pair<double, double> enumerated_moments(unsigned n, double beta, double theta) {
    double m = 0, m2 = 0;
    for (unsigned k = 0; k <= n; ++k) {
        const double w = std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0) +
                                  k * std::log(theta) + (n - k) * std::log1p(-theta));
        const double j = (k + beta) / (n + 2 * beta);
        m += w * j;
        m2 += w * j * j;
    }
    return {m, m2 - m * m};
}

MeanVarPoint point(double e, double v) {
    MeanVarPoint p;
    p.pair_id = "x";
    p.mean = e;
    p.variance = v;
    p.n_reps = 10;
    return p;
}

} // namespace

// Solve V = a u - c through two enumerated points and compare with the
// closed-form coefficients; a third point checks the relation is exact.
TEST(InvertedU, CoefficientsMatchEnumeration) {
    for (unsigned n : {2u, 5u, 10u, 20u}) {
        for (double beta : {0.25, 1.0, 5.0}) {
            const auto [e1, v1] = enumerated_moments(n, beta, 0.15);
            const auto [e2, v2] = enumerated_moments(n, beta, 0.6);
            const double u1 = e1 * (1 - e1), u2 = e2 * (1 - e2);
            const double a = (v1 - v2) / (u1 - u2);
            const double c = a * u1 - v1;
            const auto coef = inverted_u_coefficients(n, beta);
            EXPECT_NEAR(coef.a, a, 1e-10);
            EXPECT_NEAR(coef.c, c, 1e-10);
            const auto [e3, v3] = enumerated_moments(n, beta, 0.9);
            EXPECT_NEAR(v3, coef.a * e3 * (1 - e3) - coef.c, 1e-12);
        }
    }
}

// Property: c is increasing in beta with limit 1/(4N).
TEST(InvertedU, InterceptMonotoneWithLimit) {
    for (double n : {1.0, 3.0, 10.0}) {
        double prev = inverted_u_intercept(n, 0.0);
        EXPECT_EQ(prev, 0.0);
        for (double beta = 0.01; beta < 1000; beta *= 1.3) {
            const double c = inverted_u_intercept(n, beta);
            EXPECT_GT(c, prev);
            EXPECT_LT(c, 1.0 / (4 * n));
            prev = c;
        }
        EXPECT_NEAR(inverted_u_intercept(n, 1e9), 1.0 / (4 * n), 1e-8);
    }
}

TEST(InvertedU, FitIsExactOnNoiselessPoints) {
    const auto coef = inverted_u_coefficients(10, 1.0);
    std::vector<MeanVarPoint> pts;
    for (double e : {0.1, 0.3, 0.45, 0.6, 0.85}) pts.push_back(point(e, coef.a * e * (1 - e) - coef.c));
    for (Weighting w : {Weighting::none, Weighting::inverse_variance}) {
        const auto fit = fit_inverted_u(pts, w);
        EXPECT_NEAR(fit.a, coef.a, 1e-12);
        EXPECT_NEAR(fit.c, coef.c, 1e-12);
        EXPECT_FALSE(fit.degenerate);
        EXPECT_EQ(fit.n_points, 5u);
        const auto rec = recover_params_meanvar(fit);
        EXPECT_NEAR(rec.n_hat, 10.0, 1e-8);
        EXPECT_NEAR(rec.beta_hat, 1.0, 1e-6);
    }
}

TEST(InvertedU, InfeasibleFits) {
    EXPECT_THROW(fit_inverted_u({point(0.3, 0.01), point(0.7, 0.01)}), InfeasibleFitError);
    EXPECT_THROW(fit_inverted_u({}), InfeasibleFitError);
    QuadraticFit f;
    f.a = -0.1;
    f.c = 0.0;
    EXPECT_THROW(recover_params_meanvar(f), InfeasibleFitError);
    f.a = 0.1;
    f.c = 0.03;  // >= 1/(4 * 10)
    EXPECT_THROW(recover_params_meanvar(f), InfeasibleFitError);
    f.c = -0.001;
    EXPECT_THROW(recover_params_meanvar(f), InfeasibleFitError);
    f.c = 0.0;
    EXPECT_EQ(recover_params_meanvar(f).beta_hat, 0.0);
}

TEST(InvertedU, PlainQuadratic) {
    std::vector<MeanVarPoint> pts;
    for (double e : {0.1, 0.2, 0.5, 0.7, 0.9}) pts.push_back(point(e, 0.01 + 0.2 * e - 0.2 * e * e));
    const auto q = fit_plain_quadratic(pts);
    EXPECT_NEAR(q.q0, 0.01, 1e-12);
    EXPECT_NEAR(q.q1, 0.2, 1e-12);
    EXPECT_NEAR(q.q2, -0.2, 1e-12);
}

TEST(MeanVar, PointsAndSkippedCells) {
    const std::vector<EventPair> catalog{builtin_catalog()[0], builtin_catalog()[1]};
    auto js = simulate_experiment({BayesianSamplerAgent{{10, 1.0}}, 4, 1, 1.0}, catalog,
                                  random_thetas(catalog, 1))
                  .judgments();
    // Keep only rep 0 for the first cell.
    js.erase(js.begin() + 1, js.begin() + 4);
    const auto res = mean_variance_points(JudgmentTable(catalog, js));
    EXPECT_EQ(res.points.size(), 11u);
    ASSERT_EQ(res.skipped.size(), 1u);
    EXPECT_EQ(res.skipped[0].n_reps, 1u);
    const auto& p = res.points[0];
    EXPECT_EQ(p.n_reps, 4u);
    std::vector<double> xs;
    for (const auto& j : js) {
        if (j.pair_id == p.pair_id && j.query == p.query) xs.push_back(j.value);
    }
    ASSERT_EQ(xs.size(), 4u);
    const double m = (xs[0] + xs[1] + xs[2] + xs[3]) / 4;
    double ss = 0;
    for (double x : xs) ss += (x - m) * (x - m);
    EXPECT_NEAR(p.mean, m, 1e-15);
    EXPECT_NEAR(p.variance, ss / 3, 1e-15);
    EXPECT_THROW(mean_variance_points(JudgmentTable(catalog, {})), ValidationError);
}

TEST(Recovery, IdentityDeviation) {
    IdentityReport report;
    auto add = [&](std::string name, int k, double mean) {
        IdentitySummary s;
        s.name = std::move(name);
        s.k = k;
        s.mean = mean;
        report.identities.push_back(s);
    };
    add("Z1", 0, 0.3);  // ignored: k = 0
    add("Z3", 1, 0.08);
    add("Z7", 2, 0.17);
    const auto est = recover_params_identities(report);
    const double s = (0.08 + 2 * 0.17) / 5;
    EXPECT_NEAR(est.s, s, 1e-15);
    EXPECT_NEAR(est.beta_per_n, s / (1 - 2 * s), 1e-15);
    EXPECT_FALSE(est.params);
    const auto hinted = recover_params_identities(report, 10.0);
    ASSERT_TRUE(hinted.params);
    EXPECT_NEAR(hinted.params->beta_hat, 10 * s / (1 - 2 * s), 1e-12);

    IdentityReport only_zero;
    only_zero.identities.push_back(report.identities[0]);
    EXPECT_THROW(recover_params_identities(only_zero), ValidationError);

    report.identities[1].mean = -0.5;
    report.identities[2].mean = -0.5;
    EXPECT_THROW(recover_params_identities(report, 10.0), InfeasibleFitError);
}

TEST(Recovery, Combined) {
    const auto coef = inverted_u_coefficients(8, 2.0);
    QuadraticFit fit;
    fit.a = coef.a;
    fit.c = coef.c;
    IdentityReport report;
    IdentitySummary s;
    s.name = "Z3";
    s.k = 1;
    s.mean = 2.0 / 12.0;
    report.identities.push_back(s);
    const auto r = recover_params_combined(fit, report);
    EXPECT_NEAR(r.n_hat, 8.0, 1e-12);
    EXPECT_NEAR(r.beta_hat, 2.0, 1e-12);
    EXPECT_EQ(r.method, RecoveryMethod::combined);
}

TEST(MeanVar, Serialization) {
    const auto coef = inverted_u_coefficients(10, 1.0);
    std::vector<MeanVarPoint> pts{point(0.2, coef.a * 0.16 - coef.c), point(0.5, coef.a * 0.25 - coef.c)};
    const auto fit = fit_inverted_u(pts);
    const auto plot = meanvar_points_plot_json(pts, fit, 50);
    EXPECT_EQ(plot["curve"].size(), 50u);
    const std::string csv = meanvar_points_to_csv(pts);
    EXPECT_EQ(csv.rfind("pair_id,query,condition,mean,variance,n_reps\n", 0), 0u);
    EXPECT_EQ(parse_weighting("inverse_variance"), Weighting::inverse_variance);
    EXPECT_THROW(parse_weighting("x"), ValidationError);
    EXPECT_EQ(parse_recovery_method("combined"), RecoveryMethod::combined);
}
