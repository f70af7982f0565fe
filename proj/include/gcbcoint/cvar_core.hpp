#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gcbcoint/data_ingest.hpp"
#include "gcbcoint/errors.hpp"
#include "gcbcoint/stats.hpp"

namespace gcb {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Column order of the system: (S^L, S^O, E, C).
enum Variable : int { kLandSink = 0, kOceanSink = 1, kEmissions = 2, kConcentration = 3 };
inline constexpr const char* kVariableNames[] = {"sL", "sO", "E", "C"};

/// Unrestricted VECM specification. The constant is always unrestricted.
struct VecmSpec {
    int rank = 3;
    int lagged_differences = 1;
    bool include_soi = true;
};

/// Levels (rows = years) plus one exogenous stationary regressor.
struct SystemData {
    std::vector<int> years;
    MatrixXd levels;
    VectorXd exog;
};

[[nodiscard]] inline SystemData system_data(const AlignedDataset& d) {
    SystemData s;
    s.years = d.years;
    const auto n = static_cast<Eigen::Index>(d.size());
    s.levels.resize(n, 4);
    s.exog.resize(n);
    for (Eigen::Index t = 0; t < n; ++t) {
        const auto i = static_cast<std::size_t>(t);
        s.levels(t, kLandSink) = d.land_sink[i];
        s.levels(t, kOceanSink) = d.ocean_sink[i];
        s.levels(t, kEmissions) = d.emissions[i];
        s.levels(t, kConcentration) = d.concentration[i];
        s.exog(t) = d.soi[i];
    }
    return s;
}

/// Product moments of the partialled series, S_ij = R_i' R_j / T (rows = time).
struct ConcentratedMoments {
    int T = 0;
    int p = 0;
    int k = 0;
    bool soi_used = false;
    /// Index (into the levels) of the first Delta Y_t used.
    int first_row = 0;
    MatrixXd z0;  ///< Delta Y_t
    MatrixXd z1;  ///< Y_{t-1}
    MatrixXd z2;  ///< constant, Delta Y_{t-1}, SOI_t
    MatrixXd r0;
    MatrixXd r1;
    MatrixXd s00;
    MatrixXd s01;
    MatrixXd s11;
    std::vector<std::string> warnings;
};

namespace cvar {

inline constexpr double kEigenTolerance = 1e-8;

/// OLS residuals of `y` on `x`; throws when `x` is numerically rank deficient.
[[nodiscard]] inline MatrixXd partial_out(const MatrixXd& y, const MatrixXd& x, MatrixXd* coef = nullptr) {
    if (x.cols() == 0) {
        if (coef != nullptr) {
            coef->resize(0, y.cols());
        }
        return y;
    }
    Eigen::ColPivHouseholderQR<MatrixXd> qr(x);
    qr.setThreshold(1e-10);
    if (qr.rank() < x.cols()) {
        throw NumericalRankError("regressor cross-product is singular (rank " + std::to_string(qr.rank()) + " of " +
                                 std::to_string(x.cols()) + ")");
    }
    MatrixXd b = qr.solve(y);
    if (coef != nullptr) {
        *coef = b;
    }
    return y - x * b;
}

[[nodiscard]] inline ConcentratedMoments concentrate(const MatrixXd& levels, const VectorXd& exog,
                                                     const VecmSpec& spec) {
    const int p = static_cast<int>(levels.cols());
    const int n = static_cast<int>(levels.rows());
    const int k = spec.lagged_differences;
    if (k < 0 || k > 1) {
        throw DomainError("lagged_differences must be 0 or 1");
    }
    if (spec.rank < 0 || spec.rank > p) {
        throw DomainError("rank must lie in [0, p]");
    }
    if (n < k + 2) {
        throw SampleError("sample too short for the requested lag order");
    }
    ConcentratedMoments m;
    m.p = p;
    m.k = k;
    m.first_row = k + 1;
    m.T = n - k - 1;
    m.soi_used = spec.include_soi;
    if (spec.include_soi) {
        if (exog.size() != n) {
            throw AlignmentError("SOI length differs from the levels");
        }
        const double lo = exog.segment(m.first_row, m.T).minCoeff();
        const double hi = exog.segment(m.first_row, m.T).maxCoeff();
        if (hi - lo == 0.0) {
            m.soi_used = false;
            m.warnings.emplace_back("SOI is constant over the sample; dropped from the regressors");
        }
    }
    const int T = m.T;
    m.z0.resize(T, p);
    m.z1.resize(T, p);
    m.z2.resize(T, 1 + k * p + (m.soi_used ? 1 : 0));
    for (int i = 0; i < T; ++i) {
        const int t = m.first_row + i;
        m.z0.row(i) = levels.row(t) - levels.row(t - 1);
        m.z1.row(i) = levels.row(t - 1);
        int c = 0;
        m.z2(i, c++) = 1.0;
        if (k == 1) {
            m.z2.block(i, c, 1, p) = levels.row(t - 1) - levels.row(t - 2);
            c += p;
        }
        if (m.soi_used) {
            m.z2(i, c++) = exog(t);
        }
    }
    m.r0 = partial_out(m.z0, m.z2);
    m.r1 = partial_out(m.z1, m.z2);
    m.s00 = m.r0.transpose() * m.r0 / T;
    m.s01 = m.r0.transpose() * m.r1 / T;
    m.s11 = m.r1.transpose() * m.r1 / T;
    return m;
}

[[nodiscard]] inline ConcentratedMoments concentrate(const AlignedDataset& d, const VecmSpec& spec) {
    const auto s = system_data(d);
    return concentrate(s.levels, s.exog, spec);
}

/// Eigenvalues (descending) and eigenvectors of |lambda S11 - S10 S00^-1 S01| = 0,
/// with eigenvectors normalised so that V' S11 V = I.
struct Eigensystem {
    VectorXd values;
    MatrixXd vectors;
};

[[nodiscard]] inline Eigensystem reduced_rank_eigen(const MatrixXd& s00, const MatrixXd& s01, const MatrixXd& s11) {
    const Eigen::LLT<MatrixXd> l00(s00);
    if (l00.info() != Eigen::Success) {
        throw NumericalRankError("S00 is not positive definite");
    }
    const Eigen::LLT<MatrixXd> l11(s11);
    if (l11.info() != Eigen::Success) {
        throw NumericalRankError("S11 is not positive definite");
    }
    const MatrixXd L = l11.matrixL();
    // C = L^-1 S10 S00^-1 S01 L^-T, symmetric.
    const MatrixXd a = L.triangularView<Eigen::Lower>().solve(s01.transpose());
    MatrixXd c = a * l00.solve(a.transpose());
    c = 0.5 * (c + c.transpose());
    const Eigen::SelfAdjointEigenSolver<MatrixXd> es(c);
    if (es.info() != Eigen::Success) {
        throw ConditioningError("eigen decomposition failed");
    }
    const Eigen::Index q = c.rows();
    Eigensystem out;
    out.values.resize(q);
    out.vectors.resize(q, q);
    for (Eigen::Index i = 0; i < q; ++i) {
        double lambda = es.eigenvalues()(q - 1 - i);
        if (lambda < -kEigenTolerance || lambda >= 1.0 - kEigenTolerance) {
            throw ConditioningError("reduced-rank eigenvalue outside [0, 1): " + std::to_string(lambda));
        }
        out.values(i) = std::max(lambda, 0.0);
        out.vectors.col(i) = es.eigenvectors().col(q - 1 - i);
    }
    out.vectors = L.transpose().triangularView<Eigen::Upper>().solve(out.vectors);
    return out;
}

[[nodiscard]] inline Eigensystem reduced_rank_eigen(const ConcentratedMoments& m) {
    return reduced_rank_eigen(m.s00, m.s01, m.s11);
}

/// Gaussian log-likelihood with Sigma profiled out: -(Tp/2) log 2pi - (T/2) log det Sigma - Tp/2.
[[nodiscard]] inline double quasi_loglik(const MatrixXd& residuals) {
    const double T = static_cast<double>(residuals.rows());
    const double p = static_cast<double>(residuals.cols());
    if (residuals.rows() <= residuals.cols()) {
        throw SampleError("quasi_loglik needs more observations than variables");
    }
    const MatrixXd sigma = residuals.transpose() * residuals / T;
    const Eigen::LLT<MatrixXd> llt(sigma);
    if (llt.info() != Eigen::Success) {
        throw NumericalRankError("residual covariance is singular");
    }
    const MatrixXd L = llt.matrixL();
    double logdet = 0.0;
    for (Eigen::Index i = 0; i < L.rows(); ++i) {
        const double d = L(i, i);
        if (!(d > 0.0) || !std::isfinite(d) || d * d <= 1e-12 * sigma(i, i)) {
            throw NumericalRankError("residual covariance is singular");
        }
        logdet += 2.0 * std::log(d);
    }
    return -0.5 * T * p * std::log(2.0 * std::numbers::pi) - 0.5 * T * logdet - 0.5 * T * p;
}

/// Log-likelihood of a rank-r model from the concentrated eigenvalues.
[[nodiscard]] inline double concentrated_loglik(const ConcentratedMoments& m, const VectorXd& eigenvalues, int r) {
    const double T = m.T;
    const double p = m.p;
    const double logdet00 = std::log(m.s00.determinant());
    double sum = 0.0;
    for (int i = 0; i < r; ++i) {
        sum += std::log1p(-eigenvalues(i));
    }
    return -0.5 * T * p * std::log(2.0 * std::numbers::pi) - 0.5 * T * (logdet00 + sum) - 0.5 * T * p;
}

}  // namespace cvar

/// Reduced-form VECM estimate.
struct VecmEstimate {
    VecmSpec spec;
    int T = 0;
    int first_row = 0;
    bool soi_used = false;
    VectorXd eigenvalues;
    MatrixXd alpha;  ///< p x r
    MatrixXd beta;   ///< p x r, leading r x r block = I
    VectorXd mu;
    MatrixXd gamma1;  ///< p x p, empty when k = 0
    VectorXd phi_soi;  ///< zero when SOI is not used
    MatrixXd sigma;
    MatrixXd residuals;  ///< T x p
    double loglik = 0.0;
    int n_free_params = 0;
};

namespace cvar {

[[nodiscard]] inline int free_parameters(int p, int r, int k, bool soi) {
    return p * r + (p - r) * r + p + k * p * p + (soi ? p : 0);
}

/// Normalises the first r columns of `vectors` so that their leading r x r block is I.
[[nodiscard]] inline MatrixXd normalize_beta(const MatrixXd& vectors, int r) {
    if (r == 0) {
        return MatrixXd(vectors.rows(), 0);
    }
    const MatrixXd raw = vectors.leftCols(r);
    const Eigen::FullPivLU<MatrixXd> lu(raw.topRows(r));
    if (!lu.isInvertible()) {
        throw ConditioningError("leading block of beta is singular; cannot normalise");
    }
    MatrixXd beta = raw * lu.inverse();
    beta.topRows(r).setIdentity();
    return beta;
}

/// Remaining parameters and residuals given beta (alpha by OLS on the partialled system).
[[nodiscard]] inline VecmEstimate estimate_given_beta(const ConcentratedMoments& m, const MatrixXd& beta, int r) {
    VecmEstimate est;
    est.T = m.T;
    est.first_row = m.first_row;
    est.soi_used = m.soi_used;
    est.spec = {r, m.k, m.soi_used};
    est.beta = beta;
    const int p = m.p;
    if (r > 0) {
        const MatrixXd bsb = beta.transpose() * m.s11 * beta;
        est.alpha = m.s01 * beta * bsb.ldlt().solve(MatrixXd::Identity(r, r));
    } else {
        est.alpha.resize(p, 0);
    }
    const MatrixXd pi = est.alpha * beta.transpose();
    const MatrixXd y = m.z0 - m.z1 * pi.transpose();
    MatrixXd coef;
    est.residuals = partial_out(y, m.z2, &coef);
    est.mu = coef.row(0).transpose();
    int c = 1;
    if (m.k == 1) {
        est.gamma1 = coef.block(c, 0, p, p).transpose();
        c += p;
    }
    est.phi_soi = VectorXd::Zero(p);
    if (m.soi_used) {
        est.phi_soi = coef.row(c).transpose();
    }
    est.sigma = est.residuals.transpose() * est.residuals / m.T;
    est.loglik = quasi_loglik(est.residuals);
    est.n_free_params = free_parameters(p, r, m.k, m.soi_used);
    return est;
}

[[nodiscard]] inline VecmEstimate solve_rrr(const ConcentratedMoments& m, int r) {
    if (r < 0 || r > m.p) {
        throw DomainError("rank must lie in [0, p]");
    }
    const auto eig = reduced_rank_eigen(m);
    auto est = estimate_given_beta(m, normalize_beta(eig.vectors, r), r);
    est.eigenvalues = eig.values;
    return est;
}

[[nodiscard]] inline VecmEstimate estimate(const AlignedDataset& d, const VecmSpec& spec) {
    return solve_rrr(concentrate(d, spec), spec.rank);
}

}  // namespace cvar

/// Johansen trace test table.
struct TraceTestResult {
    int T = 0;
    VectorXd eigenvalues;
    std::vector<double> trace_stats;
    std::vector<double> critical_5pct;
    std::vector<double> p_values;
    int selected_rank = 0;
};

namespace cvar {

/// 5% critical values for the unrestricted-constant case, indexed by p - r = 1..4.
inline constexpr double kTraceCritical5[] = {3.84, 15.41, 29.80, 47.71};

[[nodiscard]] inline TraceTestResult trace_test_from_eigenvalues(const VectorXd& eigenvalues, int T) {
    TraceTestResult out;
    out.T = T;
    out.eigenvalues = eigenvalues;
    const int p = static_cast<int>(eigenvalues.size());
    out.selected_rank = p;
    bool selected = false;
    for (int r = 0; r < p; ++r) {
        double stat = 0.0;
        for (int i = r; i < p; ++i) {
            stat -= std::log1p(-eigenvalues(i));
        }
        stat *= T;
        const int n = p - r;
        out.trace_stats.push_back(stat);
        out.critical_5pct.push_back(n <= 4 ? kTraceCritical5[n - 1] : stats::trace_critical_value(n, 0.05));
        out.p_values.push_back(stats::trace_pvalue(stat, n));
        if (!selected && out.p_values.back() >= 0.05) {
            out.selected_rank = r;
            selected = true;
        }
    }
    return out;
}

[[nodiscard]] inline TraceTestResult trace_test(const ConcentratedMoments& m) {
    return trace_test_from_eigenvalues(reduced_rank_eigen(m).values, m.T);
}

}  // namespace cvar
}  // namespace gcb
