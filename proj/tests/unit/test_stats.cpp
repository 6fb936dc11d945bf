#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "probcoh/stats.hpp"

using namespace probcoh;

TEST(Stats, MeanAndVariance) {
    const std::vector<double> xs{1, 2, 3, 4};
    EXPECT_DOUBLE_EQ(stats::mean(xs), 2.5);
    EXPECT_DOUBLE_EQ(stats::sample_variance(xs), 5.0 / 3.0);
}

// Reference quantiles from standard t tables.
TEST(Stats, StudentTQuantiles) {
    EXPECT_NEAR(stats::student_t_quantile(0.975, 1), 12.7062047, 1e-6);
    EXPECT_NEAR(stats::student_t_quantile(0.975, 23), 2.0686576, 1e-6);
    EXPECT_NEAR(stats::student_t_quantile(0.95, 10), 1.8124611, 1e-6);
    EXPECT_NEAR(stats::student_t_quantile(0.5, 5), 0.0, 1e-12);
}

TEST(Stats, StudentTInterval) {
    const std::vector<double> xs{0.1, 0.2, 0.3, 0.4, 0.5};
    const auto ci = stats::student_t_interval(xs);
    const double half = 2.7764451 * std::sqrt(0.025 / 5);
    EXPECT_NEAR(ci.low, 0.3 - half, 1e-6);
    EXPECT_NEAR(ci.high, 0.3 + half, 1e-6);
}

TEST(Stats, StudentTIntervalSingleValueIsUnbounded) {
    const std::vector<double> xs{0.3};
    const auto ci = stats::student_t_interval(xs);
    EXPECT_TRUE(std::isinf(ci.low) && ci.low < 0);
    EXPECT_TRUE(std::isinf(ci.high) && ci.high > 0);
}

TEST(Stats, ConstantSampleGivesDegenerateInterval) {
    const std::vector<double> xs(10, 0.25);
    const auto t = stats::student_t_interval(xs);
    EXPECT_DOUBLE_EQ(t.low, 0.25);
    EXPECT_DOUBLE_EQ(t.high, 0.25);
    const auto b = stats::bootstrap_percentile_interval(xs, 500, 1);
    EXPECT_DOUBLE_EQ(b.low, 0.25);
    EXPECT_DOUBLE_EQ(b.high, 0.25);
}

TEST(Stats, BootstrapIsDeterministicAndBracketsMean) {
    std::vector<double> xs;
    for (int i = 0; i < 40; ++i) xs.push_back(std::sin(i * 1.7));
    const auto a = stats::bootstrap_percentile_interval(xs, 2000, 9);
    const auto b = stats::bootstrap_percentile_interval(xs, 2000, 9);
    EXPECT_EQ(a.low, b.low);
    EXPECT_EQ(a.high, b.high);
    const double m = stats::mean(xs);
    EXPECT_LT(a.low, m);
    EXPECT_GT(a.high, m);
    // Close to the normal-theory width for a sample this size.
    const double se = std::sqrt(stats::sample_variance(xs) / xs.size());
    EXPECT_NEAR(a.high - a.low, 2 * 1.96 * se, 0.25 * 2 * 1.96 * se);
}
