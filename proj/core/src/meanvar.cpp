#include "probcoh/meanvar.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <tuple>

#include <fmt/format.h>

#include "probcoh/csv.hpp"
#include "probcoh/error.hpp"
#include "probcoh/stats.hpp"
#include "probcoh/table_io.hpp"

namespace probcoh {

MeanVarResult mean_variance_points(const JudgmentTable& table) {
    if (table.empty()) throw ValidationError("judgment table is empty");

    using Key = std::tuple<std::string, std::string, std::size_t>;
    std::map<Key, std::vector<std::pair<std::uint32_t, double>>> cells;
    for (const auto& j : table.judgments()) {
        cells[{condition_label(j.condition), j.pair_id, index_of(j.query)}].emplace_back(j.rep_index, j.value);
    }

    MeanVarResult result;
    std::vector<double> values;
    for (auto& [key, reps] : cells) {
        const auto& [label, pair_id, qi] = key;
        const QueryKind q = kAllQueries[qi];
        const auto n = static_cast<std::uint32_t>(reps.size());
        if (n < 2) {
            result.skipped.push_back({pair_id, q, label, n});
            continue;
        }
        std::sort(reps.begin(), reps.end());
        values.clear();
        for (const auto& [rep, v] : reps) values.push_back(v);
        result.points.push_back({pair_id, q, label, stats::mean(values), stats::sample_variance(values), n});
    }
    return result;
}

std::string_view to_string(Weighting w) noexcept {
    return w == Weighting::none ? "none" : "inverse_variance";
}

Weighting parse_weighting(std::string_view s) {
    if (s == "none") return Weighting::none;
    if (s == "inverse_variance") return Weighting::inverse_variance;
    throw ValidationError(fmt::format("unknown weighting '{}'", s));
}

namespace {

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double rss = 0.0;
};

// Weighted least squares y = slope x + intercept, centered two-pass sums.
LineFit weighted_line(const std::vector<double>& x, const std::vector<double>& y, const std::vector<double>& w) {
    double sw = 0.0, swx = 0.0, swy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sw += w[i];
        swx += w[i] * x[i];
        swy += w[i] * y[i];
    }
    const double xbar = swx / sw;
    const double ybar = swy / sw;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - xbar;
        sxx += w[i] * dx * dx;
        sxy += w[i] * dx * (y[i] - ybar);
    }
    if (!(sxx > 0.0)) throw InfeasibleFitError("mean-variance fit is degenerate: all u = E(1-E) coincide");
    LineFit f;
    f.slope = sxy / sxx;
    f.intercept = ybar - f.slope * xbar;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = y[i] - (f.slope * x[i] + f.intercept);
        f.rss += w[i] * r * r;
    }
    return f;
}

std::vector<MeanVarPoint> sorted_points(const std::vector<MeanVarPoint>& points) {
    std::vector<MeanVarPoint> sorted = points;
    std::sort(sorted.begin(), sorted.end(), [](const MeanVarPoint& l, const MeanVarPoint& r) {
        return std::tie(l.condition, l.pair_id, l.query) < std::tie(r.condition, r.pair_id, r.query);
    });
    return sorted;
}

} // namespace

QuadraticFit fit_inverted_u(const std::vector<MeanVarPoint>& points, Weighting weighting) {
    if (points.size() < 2) throw InfeasibleFitError("mean-variance fit needs at least two points");
    const auto sorted = sorted_points(points);
    std::vector<double> u, v, w(sorted.size(), 1.0);
    double u_min = std::numeric_limits<double>::infinity();
    double u_max = -u_min;
    for (const auto& p : sorted) {
        u.push_back(p.mean * (1.0 - p.mean));
        v.push_back(p.variance);
        u_min = std::min(u_min, u.back());
        u_max = std::max(u_max, u.back());
    }
    // E and 1 - E give the same u up to rounding.
    if (!(u_max - u_min > 1e-12)) throw InfeasibleFitError("mean-variance fit is degenerate: all u = E(1-E) coincide");

    LineFit line = weighted_line(u, v, w);
    if (weighting == Weighting::inverse_variance) {
        // Var(sample variance) ~ 2 sigma^4 / (n - 1); sigma^2 taken from the unweighted fit.
        double v_scale = 0.0;
        for (double x : v) v_scale = std::max(v_scale, x);
        const double floor = std::max(1e-12, 1e-3 * v_scale);
        for (std::size_t i = 0; i < sorted.size(); ++i) {
            const double sigma2 = std::max(floor, line.slope * u[i] + line.intercept);
            const double dof = std::max(1.0, static_cast<double>(sorted[i].n_reps) - 1.0);
            w[i] = dof / (2.0 * sigma2 * sigma2);
        }
        line = weighted_line(u, v, w);
    }

    QuadraticFit fit;
    fit.a = line.slope;
    fit.c = -line.intercept;
    fit.residual_sum = line.rss;
    fit.n_points = sorted.size();
    fit.degenerate = !(fit.a > 0.0);
    fit.weighting = weighting;
    return fit;
}

PlainQuadraticFit fit_plain_quadratic(const std::vector<MeanVarPoint>& points) {
    const auto sorted = sorted_points(points);
    // Normal equations for [1, E, E^2].
    std::array<std::array<double, 4>, 3> m{};
    for (const auto& p : sorted) {
        const std::array<double, 3> x = {1.0, p.mean, p.mean * p.mean};
        for (int r = 0; r < 3; ++r) {
            for (int c = 0; c < 3; ++c) m[r][c] += x[r] * x[c];
            m[r][3] += x[r] * p.variance;
        }
    }
    for (int col = 0; col < 3; ++col) {
        int pivot = col;
        for (int r = col + 1; r < 3; ++r) {
            if (std::abs(m[r][col]) > std::abs(m[pivot][col])) pivot = r;
        }
        if (std::abs(m[pivot][col]) < 1e-14) {
            throw InfeasibleFitError("quadratic fit needs at least three distinct means");
        }
        std::swap(m[col], m[pivot]);
        for (int r = 0; r < 3; ++r) {
            if (r == col) continue;
            const double f = m[r][col] / m[col][col];
            for (int c = col; c < 4; ++c) m[r][c] -= f * m[col][c];
        }
    }
    PlainQuadraticFit fit{m[0][3] / m[0][0], m[1][3] / m[1][1], m[2][3] / m[2][2], 0.0};
    for (const auto& p : sorted) {
        const double r = p.variance - (fit.q0 + fit.q1 * p.mean + fit.q2 * p.mean * p.mean);
        fit.residual_sum += r * r;
    }
    return fit;
}

double inverted_u_intercept(double n, double beta) {
    const double denom = n + 2.0 * beta;
    return beta * (n + beta) / (n * denom * denom);
}

InvertedUCoefficients inverted_u_coefficients(double n, double beta) {
    if (!(n > 0.0)) throw ValidationError("inverted-U coefficients need N > 0");
    if (!(beta >= 0.0)) throw ValidationError("inverted-U coefficients need beta >= 0");
    return {1.0 / n, inverted_u_intercept(n, beta)};
}

std::string_view to_string(RecoveryMethod m) noexcept {
    switch (m) {
    case RecoveryMethod::meanvar: return "meanvar";
    case RecoveryMethod::identity_deviation: return "identity_deviation";
    case RecoveryMethod::combined: return "combined";
    }
    return "?";
}

RecoveryMethod parse_recovery_method(std::string_view s) {
    if (s == "meanvar") return RecoveryMethod::meanvar;
    if (s == "identity_deviation") return RecoveryMethod::identity_deviation;
    if (s == "combined") return RecoveryMethod::combined;
    throw ValidationError(fmt::format("unknown recovery method '{}'", s));
}

RecoveredParams recover_params_meanvar(const QuadraticFit& fit) {
    if (!(fit.a > 0.0) || !std::isfinite(fit.a)) {
        throw InfeasibleFitError(fmt::format("fitted slope a = {} is not positive; N cannot be recovered", fit.a));
    }
    const double n = 1.0 / fit.a;
    const double bound = 1.0 / (4.0 * n);
    if (!(fit.c >= 0.0) || !(fit.c < bound)) {
        throw InfeasibleFitError(
            fmt::format("fitted intercept c = {} outside the feasible range [0, {}) for N = {}", fit.c, bound, n));
    }
    RecoveredParams out{n, 0.0, RecoveryMethod::meanvar};
    if (fit.c == 0.0) return out;

    double lo = 0.0;
    double hi = kBetaSearchMax;
    if (inverted_u_intercept(n, hi) < fit.c) {
        throw InfeasibleFitError(fmt::format("fitted intercept c = {} requires beta beyond {}", fit.c, hi));
    }
    while (hi - lo > kBetaTolerance) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (inverted_u_intercept(n, mid) < fit.c) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    out.beta_hat = 0.5 * (lo + hi);
    return out;
}

IdentityDeviationEstimate recover_params_identities(const IdentityReport& report, std::optional<double> n_hint) {
    double skk = 0.0;
    double skm = 0.0;
    IdentityDeviationEstimate est;
    for (const auto& s : report.identities) {
        if (s.k == 0) continue;
        const double k = static_cast<double>(s.k);
        skk += k * k;
        skm += k * s.mean;
        ++est.n_identities;
    }
    if (est.n_identities == 0) throw ValidationError("identity report has no identity with nonzero imbalance");
    est.s = skm / skk;
    est.beta_per_n = est.s == 0.5 ? std::numeric_limits<double>::infinity() : est.s / (1.0 - 2.0 * est.s);
    if (n_hint) {
        if (!(*n_hint > 0.0)) throw ValidationError("n_hint must be positive");
        if (!(est.s >= 0.0) || !(est.s < 0.5)) {
            throw InfeasibleFitError(fmt::format(
                "identity deviation scale s = {} is outside [0, 0.5); no beta >= 0 is consistent with N = {}",
                est.s, *n_hint));
        }
        est.params = RecoveredParams{*n_hint, est.s * *n_hint / (1.0 - 2.0 * est.s),
                                     RecoveryMethod::identity_deviation};
    }
    return est;
}

RecoveredParams recover_params_combined(const QuadraticFit& fit, const IdentityReport& report) {
    if (!(fit.a > 0.0) || !std::isfinite(fit.a)) {
        throw InfeasibleFitError(fmt::format("fitted slope a = {} is not positive; N cannot be recovered", fit.a));
    }
    const double n = 1.0 / fit.a;
    auto est = recover_params_identities(report, n);
    RecoveredParams out = *est.params;
    out.method = RecoveryMethod::combined;
    return out;
}

nlohmann::ordered_json meanvar_points_plot_json(const std::vector<MeanVarPoint>& points, const QuadraticFit& fit,
                                                std::size_t curve_samples) {
    nlohmann::ordered_json plot;
    plot["kind"] = "scatter_with_curve";
    plot["title"] = "Mean-variance relationship of repeated judgments";
    plot["x_label"] = "mean";
    plot["y_label"] = "variance";
    plot["fit"] = {{"a", fit.a}, {"c", fit.c}, {"form", "V = a*E*(1-E) - c"}};
    plot["points"] = nlohmann::ordered_json::array();
    for (const auto& p : sorted_points(points)) {
        plot["points"].push_back({{"pair_id", p.pair_id},
                                  {"query", std::string(to_string(p.query))},
                                  {"condition", p.condition},
                                  {"mean", p.mean},
                                  {"variance", p.variance},
                                  {"n_reps", p.n_reps}});
    }
    plot["curve"] = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < curve_samples; ++i) {
        const double e = curve_samples > 1 ? static_cast<double>(i) / static_cast<double>(curve_samples - 1) : 0.5;
        plot["curve"].push_back({{"mean", e}, {"variance", fit.a * e * (1.0 - e) - fit.c}});
    }
    return plot;
}

std::string meanvar_points_to_csv(const std::vector<MeanVarPoint>& points) {
    std::string out = "pair_id,query,condition,mean,variance,n_reps\n";
    for (const auto& p : sorted_points(points)) {
        out += csv::join({p.pair_id, std::string(to_string(p.query)), p.condition, format_number(p.mean),
                          format_number(p.variance), std::to_string(p.n_reps)});
        out += '\n';
    }
    return out;
}

} // namespace probcoh
