#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gcbcoint/errors.hpp"
#include "gcbcoint/stats.hpp"

namespace gcb {

struct TestStatistic {
    double statistic = 0.0;
    double p_value = 1.0;
    int df = 0;
};

/// One equation of a residual diagnostics table. Empty optionals mark a degenerate column.
struct DiagnosticsRow {
    std::string label;
    double std_dev = 0.0;
    double skewness = 0.0;
    double kurtosis = 0.0;
    double jb_p = 1.0;
    double lb5_p = 1.0;
    double lb10_p = 1.0;
    std::optional<std::string> error;
};

struct SystemDiagnostics {
    double jb_p = 1.0;
    double lb5_p = 1.0;
    double lb10_p = 1.0;
    std::optional<std::string> error;
};

struct DiagnosticsTable {
    std::vector<DiagnosticsRow> rows;
    SystemDiagnostics system_row;
};

namespace diag {

using Eigen::MatrixXd;
using Eigen::VectorXd;

inline void require_variance(const stats::Moments& m) {
    if (!(m.m2 > 0.0)) {
        throw DegenerateInputError("series has zero variance");
    }
}

/// Sample standard deviation (divisor T - 1).
[[nodiscard]] inline double std_dev(std::span<const double> x) {
    const auto m = stats::central_moments(x);
    const double n = static_cast<double>(x.size());
    return n > 1 ? std::sqrt(m.m2 * n / (n - 1.0)) : 0.0;
}

[[nodiscard]] inline double skewness(std::span<const double> x) {
    const auto m = stats::central_moments(x);
    require_variance(m);
    return m.m3 / std::pow(m.m2, 1.5);
}

/// Raw (non-excess) kurtosis: 3 for a Gaussian.
[[nodiscard]] inline double kurtosis(std::span<const double> x) {
    const auto m = stats::central_moments(x);
    require_variance(m);
    return m.m4 / (m.m2 * m.m2);
}

/// JB = T (S^2 / 6 + (K - 3)^2 / 24), chi^2(2).
[[nodiscard]] inline TestStatistic jarque_bera(std::span<const double> x) {
    if (x.size() < 8) {
        throw SampleError("Jarque-Bera needs at least 8 observations");
    }
    const auto m = stats::central_moments(x);
    require_variance(m);
    const double s = m.m3 / std::pow(m.m2, 1.5);
    const double k = m.m4 / (m.m2 * m.m2);
    const double n = static_cast<double>(x.size());
    TestStatistic out;
    out.statistic = n * (s * s / 6.0 + (k - 3.0) * (k - 3.0) / 24.0);
    out.df = 2;
    out.p_value = stats::chi2_sf(out.statistic, 2);
    return out;
}

/// Sample autocorrelations 1..lags (mean removed, denominator sum of squares).
[[nodiscard]] inline std::vector<double> autocorrelations(std::span<const double> x, int lags) {
    const auto m = stats::central_moments(x);
    require_variance(m);
    const std::size_t n = x.size();
    const double denom = m.m2 * static_cast<double>(n);
    std::vector<double> rho(static_cast<std::size_t>(lags));
    for (int j = 1; j <= lags; ++j) {
        double s = 0.0;
        for (std::size_t t = static_cast<std::size_t>(j); t < n; ++t) {
            s += (x[t] - m.mean) * (x[t - static_cast<std::size_t>(j)] - m.mean);
        }
        rho[static_cast<std::size_t>(j - 1)] = s / denom;
    }
    return rho;
}

/// Q = T (T + 2) sum_j rho_j^2 / (T - j), chi^2(lags).
[[nodiscard]] inline TestStatistic ljung_box(std::span<const double> x, int lags) {
    if (lags < 0 || 2 * lags >= static_cast<int>(x.size())) {
        throw DomainError("Ljung-Box lags must be below half the sample size");
    }
    TestStatistic out;
    out.df = lags;
    if (lags == 0) {
        return out;
    }
    const auto rho = autocorrelations(x, lags);
    const double n = static_cast<double>(x.size());
    double q = 0.0;
    for (int j = 1; j <= lags; ++j) {
        const double r = rho[static_cast<std::size_t>(j - 1)];
        q += r * r / (n - j);
    }
    out.statistic = n * (n + 2.0) * q;
    out.p_value = stats::chi2_sf(out.statistic, lags);
    return out;
}

namespace detail {

inline MatrixXd centered(const MatrixXd& x) { return x.rowwise() - x.colwise().mean(); }

/// Transformed skewness (D'Agostino) used by the Doornik-Hansen test.
inline double dh_skew_z(double skew, double n) {
    const double beta = 3.0 * (n * n + 27.0 * n - 70.0) * (n + 1.0) * (n + 3.0) /
                        ((n - 2.0) * (n + 5.0) * (n + 7.0) * (n + 9.0));
    const double w2 = -1.0 + std::sqrt(2.0 * (beta - 1.0));
    const double delta = 1.0 / std::sqrt(std::log(std::sqrt(w2)));
    const double y = skew * std::sqrt((w2 - 1.0) * (n + 1.0) * (n + 3.0) / (12.0 * (n - 2.0)));
    return delta * std::log(y + std::sqrt(y * y + 1.0));
}

/// Transformed kurtosis (gamma approximation) used by the Doornik-Hansen test.
inline double dh_kurt_z(double skew, double kurt, double n) {
    const double b1 = skew * skew;
    const double delta = (n - 3.0) * (n + 1.0) * (n * n + 15.0 * n - 4.0);
    const double a = (n - 2.0) * (n + 5.0) * (n + 7.0) * (n * n + 27.0 * n - 70.0) / (6.0 * delta);
    const double c = (n - 7.0) * (n + 5.0) * (n + 7.0) * (n * n + 2.0 * n - 5.0) / (6.0 * delta);
    const double k = (n + 5.0) * (n + 7.0) * (n * n * n + 37.0 * n * n + 11.0 * n - 313.0) / (12.0 * delta);
    const double alpha = a + b1 * c;
    const double chi = (kurt - 1.0 - b1) * 2.0 * k;
    return (std::cbrt(chi / (2.0 * alpha)) - 1.0 + 1.0 / (9.0 * alpha)) * std::sqrt(9.0 * alpha);
}

}  // namespace detail

/// Doornik-Hansen omnibus normality test on the orthogonalised residuals, chi^2(2p).
[[nodiscard]] inline TestStatistic system_normality(const MatrixXd& residuals) {
    const auto T = residuals.rows();
    const auto p = residuals.cols();
    if (T <= p + 8) {
        throw SampleError("system normality test needs T > p + 8");
    }
    const MatrixXd x = detail::centered(residuals);
    const MatrixXd s = x.transpose() * x / static_cast<double>(T);
    const VectorXd sd = s.diagonal().cwiseSqrt();
    if ((sd.array() <= 0.0).any()) {
        throw ConditioningError("residual column with zero variance");
    }
    const MatrixXd vinv = sd.cwiseInverse().asDiagonal();
    const MatrixXd corr = vinv * s * vinv;
    const Eigen::SelfAdjointEigenSolver<MatrixXd> es(corr);
    const VectorXd lambda = es.eigenvalues();
    if (lambda.minCoeff() <= 1e-10 * lambda.maxCoeff()) {
        throw ConditioningError("residual correlation matrix is singular");
    }
    const MatrixXd h = es.eigenvectors();
    const MatrixXd transform = h * lambda.cwiseInverse().cwiseSqrt().asDiagonal() * h.transpose() * vinv;
    const MatrixXd y = x * transform.transpose();
    const double n = static_cast<double>(T);
    double stat = 0.0;
    for (Eigen::Index j = 0; j < p; ++j) {
        std::vector<double> col(y.col(j).data(), y.col(j).data() + T);
        const auto m = stats::central_moments(col);
        const double sk = m.m3 / std::pow(m.m2, 1.5);
        const double ku = m.m4 / (m.m2 * m.m2);
        const double z1 = detail::dh_skew_z(sk, n);
        const double z2 = detail::dh_kurt_z(sk, ku, n);
        stat += z1 * z1 + z2 * z2;
    }
    TestStatistic out;
    out.statistic = stat;
    out.df = static_cast<int>(2 * p);
    out.p_value = stats::chi2_sf(stat, out.df);
    return out;
}

/// Hosking's multivariate portmanteau statistic, chi^2(p^2 (lags - fitted_lags)).
[[nodiscard]] inline TestStatistic system_portmanteau(const MatrixXd& residuals, int lags, int fitted_lags = 0) {
    const auto T = residuals.rows();
    const auto p = residuals.cols();
    if (T <= p + 8) {
        throw SampleError("system portmanteau test needs T > p + 8");
    }
    if (lags < 0 || 2 * lags >= T) {
        throw DomainError("portmanteau lags must be below half the sample size");
    }
    TestStatistic out;
    if (lags == 0) {
        return out;
    }
    const int df = static_cast<int>(p * p) * (lags - fitted_lags);
    if (df <= 0) {
        throw DomainError("portmanteau lags must exceed the fitted lag order");
    }
    const MatrixXd x = detail::centered(residuals);
    const double n = static_cast<double>(T);
    const MatrixXd c0 = x.transpose() * x / n;
    const Eigen::LLT<MatrixXd> llt(c0);
    if (llt.info() != Eigen::Success || c0.determinant() <= 1e-14 * c0.diagonal().prod()) {
        throw ConditioningError("residual covariance is singular");
    }
    const MatrixXd c0inv = llt.solve(MatrixXd::Identity(p, p));
    double q = 0.0;
    for (int j = 1; j <= lags; ++j) {
        const MatrixXd cj = x.bottomRows(T - j).transpose() * x.topRows(T - j) / n;
        q += (cj.transpose() * c0inv * cj * c0inv).trace() / (n - j);
    }
    out.statistic = n * n * q;
    out.df = df;
    out.p_value = stats::chi2_sf(out.statistic, df);
    return out;
}

/// Per-equation and system diagnostics as laid out in the residual tables.
[[nodiscard]] inline DiagnosticsTable diagnostics_table(const MatrixXd& residuals,
                                                        const std::vector<std::string>& labels, int fitted_lags = 0) {
    if (static_cast<Eigen::Index>(labels.size()) != residuals.cols()) {
        throw DomainError("one label per residual column required");
    }
    DiagnosticsTable table;
    const auto T = residuals.rows();
    for (Eigen::Index j = 0; j < residuals.cols(); ++j) {
        DiagnosticsRow row;
        row.label = labels[static_cast<std::size_t>(j)];
        std::vector<double> col(static_cast<std::size_t>(T));
        for (Eigen::Index t = 0; t < T; ++t) {
            col[static_cast<std::size_t>(t)] = residuals(t, j);
        }
        try {
            row.std_dev = std_dev(col);
            row.skewness = skewness(col);
            row.kurtosis = kurtosis(col);
            row.jb_p = jarque_bera(col).p_value;
            row.lb5_p = ljung_box(col, 5).p_value;
            row.lb10_p = ljung_box(col, 10).p_value;
        } catch (const Error& e) {
            row.error = e.what();
        }
        table.rows.push_back(std::move(row));
    }
    try {
        table.system_row.jb_p = system_normality(residuals).p_value;
        table.system_row.lb5_p = system_portmanteau(residuals, 5, fitted_lags).p_value;
        table.system_row.lb10_p = system_portmanteau(residuals, 10, fitted_lags).p_value;
    } catch (const Error& e) {
        table.system_row.error = e.what();
    }
    return table;
}

}  // namespace diag
}  // namespace gcb
