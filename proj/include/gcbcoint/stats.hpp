#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include <boost/math/distributions/gamma.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "gcbcoint/errors.hpp"

namespace gcb::stats {

/// Upper tail P(X > x) for X ~ chi^2(df).
[[nodiscard]] inline double chi2_sf(double x, double df) {
    if (df <= 0.0) {
        throw DomainError("chi2_sf: degrees of freedom must be positive");
    }
    if (!(x > 0.0)) {
        return 1.0;
    }
    return boost::math::gamma_q(0.5 * df, 0.5 * x);
}

/// Mean and variance of a gamma law fitted to the asymptotic trace distribution.
struct GammaMoments {
    double mean;
    double variance;
};

/// Doornik's response-surface moments of the asymptotic trace statistic,
/// unrestricted-constant case, for `n` = p - r common trends.
[[nodiscard]] inline GammaMoments doornik_trace_moments(int n) {
    if (n < 1) {
        throw DomainError("doornik_trace_moments: need at least one common trend");
    }
    const double dn = n;
    const double one = n == 1 ? 1.0 : 0.0;
    const double two = n == 2 ? 1.0 : 0.0;
    const double mean = 2.0 * dn * dn + 1.05 * dn - 1.55 - 0.50 * one - 0.23 * two;
    const double var = 3.0 * dn * dn + 1.80 * dn + 0.00 - 2.80 * one - 1.10 * two;
    return {mean, var};
}

/// Asymptotic p-value of a trace statistic with `n` common trends.
[[nodiscard]] inline double trace_pvalue(double stat, int n) {
    const auto [m, v] = doornik_trace_moments(n);
    if (!(stat > 0.0)) {
        return 1.0;
    }
    const double shape = m * m / v;
    const double scale = v / m;
    return boost::math::gamma_q(shape, stat / scale);
}

/// Asymptotic critical value at upper-tail probability `level`.
[[nodiscard]] inline double trace_critical_value(int n, double level) {
    const auto [m, v] = doornik_trace_moments(n);
    boost::math::gamma_distribution<double> law(m * m / v, v / m);
    return boost::math::quantile(boost::math::complement(law, level));
}

/// Type-7 (linear interpolation) quantile. `sorted` must be ascending.
[[nodiscard]] inline double quantile_sorted(std::span<const double> sorted, double prob) {
    if (sorted.empty()) {
        throw DegenerateInputError("quantile of an empty sample");
    }
    const double h = (static_cast<double>(sorted.size()) - 1.0) * prob;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

/// Type-7 quantiles of an unsorted sample, probabilities in any order.
[[nodiscard]] inline std::vector<double> quantiles(std::vector<double> sample, std::span<const double> probs) {
    std::sort(sample.begin(), sample.end());
    std::vector<double> out;
    out.reserve(probs.size());
    for (double p : probs) {
        out.push_back(quantile_sorted(sample, p));
    }
    return out;
}

/// Central moments with divisor n.
struct Moments {
    double mean = 0.0;
    double m2 = 0.0;
    double m3 = 0.0;
    double m4 = 0.0;
};

[[nodiscard]] inline Moments central_moments(std::span<const double> x) {
    Moments m;
    if (x.empty()) {
        return m;
    }
    const double n = static_cast<double>(x.size());
    for (double v : x) {
        m.mean += v;
    }
    m.mean /= n;
    for (double v : x) {
        const double d = v - m.mean;
        const double d2 = d * d;
        m.m2 += d2;
        m.m3 += d2 * d;
        m.m4 += d2 * d2;
    }
    m.m2 /= n;
    m.m3 /= n;
    m.m4 /= n;
    return m;
}

}  // namespace gcb::stats
