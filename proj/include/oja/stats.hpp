#pragma once

#include <oja/errors.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <utility>
#include <vector>

namespace oja::stats {

// ---------------------------------------------------------------------------
// Ordinary least squares
// ---------------------------------------------------------------------------

struct OlsFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
    std::size_t n = 0;
};

/// Least-squares line through (x, y) points, computed with centered sums.
/// r2 = 1 - SS_res/SS_tot; a constant-y input with zero residuals counts as a
/// perfect fit (r2 = 1) rather than 0/0.
inline OlsFit ols(const std::vector<std::pair<double, double>>& points) {
    const std::size_t n = points.size();
    if (n < 2) throw TooFewPointsError("ols requires at least 2 points");

    double mean_x = 0.0, mean_y = 0.0;
    for (const auto& [x, y] : points) {
        mean_x += x;
        mean_y += y;
    }
    mean_x /= static_cast<double>(n);
    mean_y /= static_cast<double>(n);

    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (const auto& [x, y] : points) {
        const double dx = x - mean_x;
        const double dy = y - mean_y;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if (sxx == 0.0) throw DegenerateXError("ols requires at least 2 distinct x values");

    OlsFit fit;
    fit.n = n;
    fit.slope = sxy / sxx;
    fit.intercept = mean_y - fit.slope * mean_x;

    double ss_res = 0.0;
    for (const auto& [x, y] : points) {
        const double e = y - (fit.intercept + fit.slope * x);
        ss_res += e * e;
    }
    if (syy == 0.0) {
        fit.r2 = (ss_res == 0.0) ? 1.0 : 0.0;
    } else {
        fit.r2 = 1.0 - ss_res / syy;
        fit.r2 = std::clamp(fit.r2, 0.0, 1.0);
    }
    return fit;
}

// ---------------------------------------------------------------------------
// Pearson correlation
// ---------------------------------------------------------------------------

/// Sample Pearson r, clamped to [-1, 1] against floating-point overshoot
/// (downstream band classification needs the closed interval).
inline double pearson(const std::vector<double>& xs, const std::vector<double>& ys) {
    if (xs.size() != ys.size())
        throw LengthMismatchError("pearson inputs must have equal length");
    const std::size_t n = xs.size();
    if (n < 3) throw TooFewPointsError("pearson requires at least 3 points");

    double mean_x = 0.0, mean_y = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mean_x += xs[i];
        mean_y += ys[i];
    }
    mean_x /= static_cast<double>(n);
    mean_y /= static_cast<double>(n);

    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = xs[i] - mean_x;
        const double dy = ys[i] - mean_y;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if (sxx == 0.0 || syy == 0.0)
        throw ConstantInputError("pearson inputs must not be constant");
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

// ---------------------------------------------------------------------------
// Standard normal CDF and one-sample z-test
// ---------------------------------------------------------------------------

/// Phi(z) via the complementary error function; absolute error well under
/// 1e-10 across the double range.
inline double std_normal_cdf(double z) { return 0.5 * std::erfc(-z * M_SQRT1_2); }

struct ZTestResult {
    std::size_t n = 0;
    double mean = 0.0;
    double stddev = 0.0; // sample stddev, n-1 denominator
    double z = 0.0;
    double p = 1.0;
};

/// One-sample z-test of H0: mu = mu0. The sample stddev stands in for sigma,
/// which is why n >= 30 is required.
inline ZTestResult z_test(const std::vector<double>& samples, double mu0,
                          bool two_sided = true) {
    const std::size_t n = samples.size();
    if (n < 30) throw SampleTooSmallError("z_test requires at least 30 samples");

    double mean = 0.0;
    for (double v : samples) mean += v;
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (double v : samples) {
        const double d = v - mean;
        ss += d * d;
    }
    const double var = ss / static_cast<double>(n - 1);
    if (var <= 0.0) throw ZeroVarianceError("z_test requires positive sample variance");

    ZTestResult r;
    r.n = n;
    r.mean = mean;
    r.stddev = std::sqrt(var);
    r.z = (mean - mu0) / (r.stddev / std::sqrt(static_cast<double>(n)));
    r.p = two_sided ? 2.0 * (1.0 - std_normal_cdf(std::fabs(r.z))) : 1.0 - std_normal_cdf(r.z);
    if (r.p > 1.0) r.p = 1.0;
    return r;
}

// ---------------------------------------------------------------------------
// Small helpers
// ---------------------------------------------------------------------------

/// Percent change from prev to curr; (10491, 8493) -> -19.04...
inline double yoy_change(std::int64_t prev, std::int64_t curr) {
    if (prev <= 0) throw ZeroBaselineError("yoy_change requires a positive baseline");
    return 100.0 * static_cast<double>(curr - prev) / static_cast<double>(prev);
}

/// Integer-precision rendering: "-19%", "+5%", "0%".
inline std::string format_percent_int(double percent) {
    const long long r = std::llround(percent);
    char buf[32];
    if (r > 0) std::snprintf(buf, sizeof(buf), "+%lld%%", r);
    else std::snprintf(buf, sizeof(buf), "%lld%%", r);
    return buf;
}

/// Linear-interpolation quantile on sorted values, inclusive endpoints
/// (q = 0 gives the minimum, q = 100 the maximum).
inline double percentile(std::vector<double> values, double q) {
    if (values.empty()) throw EmptyInputError("percentile requires a nonempty input");
    std::sort(values.begin(), values.end());
    if (values.size() == 1) return values.front();
    const double pos = std::clamp(q, 0.0, 100.0) / 100.0 *
                       static_cast<double>(values.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    if (lo + 1 >= values.size()) return values.back();
    const double frac = pos - static_cast<double>(lo);
    return values[lo] + frac * (values[lo + 1] - values[lo]);
}

} // namespace oja::stats
