#pragma once

// Small statistics toolbox shared by the measure, oracle and acceptance code.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <span>
#include <vector>

#include <boost/math/special_functions/erf.hpp>

namespace qpsde::stats {

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

inline double normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }

using DoublePolicy = boost::math::policies::policy<boost::math::policies::promote_double<false>>;

/// Inverse of the standard normal CDF for u in (0, 1).
inline double normal_quantile(double u) {
    return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * u, DoublePolicy());
}

inline double mean(std::span<const double> xs) {
    double s = 0.0;
    for (double x : xs) s += x;
    return s / static_cast<double>(xs.size());
}

/// Unbiased sample variance.
inline double variance(std::span<const double> xs) {
    const double m = mean(xs);
    double s = 0.0;
    for (double x : xs) s += (x - m) * (x - m);
    return s / static_cast<double>(xs.size() - 1);
}

struct LinearFit {
    double slope = std::numeric_limits<double>::quiet_NaN();
    double intercept = std::numeric_limits<double>::quiet_NaN();
};

/// Ordinary least squares y = intercept + slope * x. Needs at least two distinct x.
inline LinearFit linear_fit(std::span<const double> x, std::span<const double> y) {
    LinearFit fit;
    const std::size_t n = std::min(x.size(), y.size());
    if (n < 2) return fit;
    const double mx = mean(x.first(n));
    const double my = mean(y.first(n));
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx == 0.0) return fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    return fit;
}

/// Two-sided one-sample Kolmogorov-Smirnov statistic against a continuous CDF.
template <class Cdf>
double ks_statistic(std::vector<double> xs, Cdf&& cdf) {
    std::sort(xs.begin(), xs.end());
    const double n = static_cast<double>(xs.size());
    double d = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double f = cdf(xs[i]);
        const double di = static_cast<double>(i);
        d = std::max({d, (di + 1.0) / n - f, f - di / n});
    }
    return d;
}

inline double ks_statistic_normal(std::vector<double> xs) { return ks_statistic(std::move(xs), normal_cdf); }

/// Asymptotic Kolmogorov critical value c(level)/sqrt(n) for level in {0.05, 0.01}.
inline double ks_critical(std::size_t n, double level = 0.01) {
    const double c = level <= 0.01 ? 1.628 : 1.358;
    return c / std::sqrt(static_cast<double>(n));
}

struct MeanWithError {
    double mean = 0.0;
    double stderr_ = 0.0;
};

/// Mean and batch-means standard error of a correlated series.
inline MeanWithError batch_means(std::span<const double> series, std::size_t batches) {
    MeanWithError out;
    const std::size_t n = series.size();
    if (n == 0) return out;
    double total = 0.0;
    for (double v : series) total += v;
    out.mean = total / static_cast<double>(n);
    batches = std::clamp<std::size_t>(batches, 1, n);
    if (batches < 2) return out;
    const std::size_t len = n / batches;
    std::vector<double> bm(batches);
    for (std::size_t b = 0; b < batches; ++b) {
        double s = 0.0;
        for (std::size_t i = b * len; i < (b + 1) * len; ++i) s += series[i];
        bm[b] = s / static_cast<double>(len);
    }
    out.stderr_ = std::sqrt(variance(bm) / static_cast<double>(batches));
    return out;
}

}  // namespace qpsde::stats
