#pragma once

// Repeated-judgment mean/variance analysis and Bayesian Sampler parameter
// recovery.
//
// Under the Bayesian Sampler the per-query mean E and variance V satisfy
//     V = a * E(1 - E) - c,   a = 1/N,   c = beta (N + beta) / (N (N + 2 beta)^2)
// which is linear in (a, c) after substituting u = E(1 - E).

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "probcoh/identities.hpp"
#include "probcoh/model.hpp"

namespace probcoh {

struct MeanVarPoint {
    std::string pair_id;
    QueryKind query = QueryKind::A;
    std::string condition;  // condition_label
    double mean = 0.0;
    double variance = 0.0;  // unbiased
    std::uint32_t n_reps = 0;
};

struct SkippedCell {
    std::string pair_id;
    QueryKind query = QueryKind::A;
    std::string condition;
    std::uint32_t n_reps = 0;
};

struct MeanVarResult {
    std::vector<MeanVarPoint> points;  // sorted by (condition, pair_id, query)
    std::vector<SkippedCell> skipped;  // cells with fewer than two repetitions
};

// One point per (condition, pair, query) cell. Throws ValidationError on an
// empty table.
MeanVarResult mean_variance_points(const JudgmentTable& table);

enum class Weighting : std::uint8_t { none, inverse_variance };

std::string_view to_string(Weighting w) noexcept;
Weighting parse_weighting(std::string_view s);

struct QuadraticFit {
    double a = 0.0;
    double c = 0.0;
    double residual_sum = 0.0;
    std::size_t n_points = 0;
    bool degenerate = false;  // a <= 0
    Weighting weighting = Weighting::none;
};

// Least squares for variance = a u - c. Throws InfeasibleFitError when
// fewer than two distinct u values are present.
QuadraticFit fit_inverted_u(const std::vector<MeanVarPoint>& points, Weighting weighting = Weighting::none);

// Diagnostic alternative: variance = q0 + q1 E + q2 E^2.
struct PlainQuadraticFit {
    double q0 = 0.0;
    double q1 = 0.0;
    double q2 = 0.0;
    double residual_sum = 0.0;
};
PlainQuadraticFit fit_plain_quadratic(const std::vector<MeanVarPoint>& points);

struct InvertedUCoefficients {
    double a = 0.0;
    double c = 0.0;
};

// Forward map (N, beta) -> (a, c). N > 0.
InvertedUCoefficients inverted_u_coefficients(double n, double beta);

// c as a function of beta for fixed N; continuous, increasing, limit 1/(4N).
double inverted_u_intercept(double n, double beta);

enum class RecoveryMethod : std::uint8_t { meanvar, identity_deviation, combined };

std::string_view to_string(RecoveryMethod m) noexcept;
RecoveryMethod parse_recovery_method(std::string_view s);

struct RecoveredParams {
    double n_hat = 0.0;
    double beta_hat = 0.0;
    RecoveryMethod method = RecoveryMethod::meanvar;
};

inline constexpr double kBetaSearchMax = 1e6;
inline constexpr double kBetaTolerance = 1e-9;

// n_hat = 1/a; beta_hat solves inverted_u_intercept(n_hat, beta) = c by
// bisection on [0, 1e6]. Throws InfeasibleFitError for a <= 0 or c outside
// [0, 1/(4 n_hat)).
RecoveredParams recover_params_meanvar(const QuadraticFit& fit);

struct IdentityDeviationEstimate {
    double s = 0.0;           // least-squares estimate of beta / (N + 2 beta)
    double beta_per_n = 0.0;  // s / (1 - 2s); infinite when s = 0.5
    std::size_t n_identities = 0;
    std::optional<RecoveredParams> params;  // present when n_hint was given
};

// Regression of mean deviation on k through the origin over identities with
// k != 0. With n_hint, beta_hat = s n_hint / (1 - 2s); s outside [0, 0.5)
// then throws InfeasibleFitError.
IdentityDeviationEstimate recover_params_identities(const IdentityReport& report,
                                                    std::optional<double> n_hint = std::nullopt);

// n_hat from the mean-variance fit, beta_hat from identity deviations with
// n_hint = n_hat.
RecoveredParams recover_params_combined(const QuadraticFit& fit, const IdentityReport& report);

nlohmann::ordered_json meanvar_points_plot_json(const std::vector<MeanVarPoint>& points, const QuadraticFit& fit,
                                                std::size_t curve_samples = 200);
std::string meanvar_points_to_csv(const std::vector<MeanVarPoint>& points);

} // namespace probcoh
