#pragma once

// Descriptive statistics shared by the reporting, scoring and diagnostics code.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "skewres/error.hpp"

namespace skewres {

inline double mean(const std::vector<double>& x) {
    if (x.empty()) throw InputError("mean of an empty sample");
    double s = 0.0;
    for (double v : x) s += v;
    return s / static_cast<double>(x.size());
}

/// Sample variance (n - 1 denominator).
inline double sample_variance(const std::vector<double>& x) {
    if (x.size() < 2) throw InputError("variance needs at least two values");
    const double m = mean(x);
    double s = 0.0;
    for (double v : x) s += (v - m) * (v - m);
    return s / static_cast<double>(x.size() - 1);
}

/// Type-7 (linear interpolation) quantile of an already sorted sample.
inline double quantile_sorted(const std::vector<double>& sorted, double p) {
    if (sorted.empty()) throw InputError("quantile of an empty sample");
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("quantile probability must lie in [0,1]");
    const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

inline double quantile(std::vector<double> x, double p) {
    std::sort(x.begin(), x.end());
    return quantile_sorted(x, p);
}

inline double median(std::vector<double> x) { return quantile(std::move(x), 0.5); }

/// Moment skewness m3 / m2^{3/2} with population (1/n) moments.
inline double sample_skewness(const std::vector<double>& x) {
    const double m = mean(x);
    double m2 = 0.0, m3 = 0.0;
    for (double v : x) {
        const double d = v - m;
        m2 += d * d;
        m3 += d * d * d;
    }
    const double n = static_cast<double>(x.size());
    m2 /= n;
    m3 /= n;
    return m3 / std::pow(m2, 1.5);
}

/// Excess kurtosis m4 / m2^2 - 3 with population (1/n) moments.
inline double sample_excess_kurtosis(const std::vector<double>& x) {
    const double m = mean(x);
    double m2 = 0.0, m4 = 0.0;
    for (double v : x) {
        const double d = v - m;
        m2 += d * d;
        m4 += d * d * d * d;
    }
    const double n = static_cast<double>(x.size());
    m2 /= n;
    m4 /= n;
    return m4 / (m2 * m2) - 3.0;
}

struct Summary {
    double mean;
    double median;
    double sd;
    double skewness;
    double excess_kurtosis;
    std::size_t n;
};

inline Summary summarize(const std::vector<double>& x) {
    return {mean(x), median(x), std::sqrt(sample_variance(x)), sample_skewness(x), sample_excess_kurtosis(x),
            x.size()};
}

}  // namespace skewres
