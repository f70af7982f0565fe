#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <future>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gcbcoint/cvar_core.hpp"
#include "gcbcoint/hypothesis_tests.hpp"
#include "gcbcoint/optimizer.hpp"

namespace gcb {

/// Parameters of the restricted carbon-cycle model.
///
/// Sinks:      S^j_t = a_j + b_j C_t + X_{j,t}       (j = land, ocean; b3, b4 load SOI)
/// Emissions:  E_t   = d + E_{t-1} + X_{3,t}
/// Budget:     C_t   = C_{t-1} + E_t - S^L_t - S^O_t + X_{4,t}
/// with X_{j,t} = phi_j X_{j,t-1} + eps_{j,t}.
struct StructuralTheta {
    double a1 = 0.0;
    double a2 = 0.0;
    double b1 = 0.0;
    double b2 = 0.0;
    double b3 = 0.0;
    double b4 = 0.0;
    double d = 0.0;
    double phi1 = 0.0;
    double phi2 = 0.0;
    double phi3 = 0.0;
    double phi4 = 0.0;

    static constexpr int kSize = 11;
    static constexpr std::array<const char*, kSize> kNames = {"a1", "a2", "b1", "b2", "b3", "b4",
                                                              "d",  "phi1", "phi2", "phi3", "phi4"};

    [[nodiscard]] double c() const noexcept { return 1.0 + b1 + b2; }

    [[nodiscard]] VectorXd to_vector() const {
        VectorXd v(kSize);
        v << a1, a2, b1, b2, b3, b4, d, phi1, phi2, phi3, phi4;
        return v;
    }

    [[nodiscard]] static StructuralTheta from_vector(const VectorXd& v) {
        if (v.size() != kSize) {
            throw DomainError("theta vector must have 11 entries");
        }
        return {v(0), v(1), v(2), v(3), v(4), v(5), v(6), v(7), v(8), v(9), v(10)};
    }

    friend bool operator==(const StructuralTheta&, const StructuralTheta&) = default;
};

/// Published point estimates on GCB 1959-2022 data; used as a reference parameter set.
inline constexpr StructuralTheta kReferenceTheta{-5.0392, -4.8127, 0.0098, 0.0089, 0.5723, -0.1086,
                                                 0.1076,  0.0923,  0.4841, -0.1169, 0.2810};
inline constexpr std::array<double, 11> kReferenceStandardErrors{1.1134, 0.2860, 0.0014, 0.0004, 0.1121, 0.0174,
                                                                 0.0213, 0.1066, 0.0834, 0.1259, 0.1216};

/// Structural VAR form: a0 dY_t = intercept + soi_load SOI_t + level_coef Y_{t-1} + diff_coef dY_{t-1} + eps_t.
struct StructuralSystem {
    Eigen::Matrix4d a0;
    Eigen::Vector4d intercept;
    Eigen::Vector4d soi_load;
    Eigen::Matrix4d level_coef;
    Eigen::Matrix4d diff_coef;
    double c = 1.0;
};

/// Implied reduced-form VECM coefficients; U_t = error_rotation eps_t.
struct ReducedForm {
    Eigen::Vector4d mu;
    Eigen::Matrix<double, 4, 3> alpha;
    Eigen::Matrix<double, 3, 4> beta_t;
    Eigen::Matrix4d gamma1;
    Eigen::Vector4d phi_soi;
    Eigen::Matrix4d error_rotation;
};

struct StructuralFit {
    StructuralTheta theta;
    double loglik = -std::numeric_limits<double>::infinity();
    VectorXd se;
    MatrixXd residuals_u;    ///< T x 4 reduced form
    MatrixXd residuals_eps;  ///< T x 4 structural
    MatrixXd sigma_u;
    int T = 0;
    int first_row = 0;
    std::vector<int> years;  ///< calendar year of each residual row
    bool converged = false;
    int n_iter = 0;
    int start_index = 0;
    double gradient_norm = 0.0;
};

struct FitOptions {
    int n_starts = 5;  ///< OLS start plus n_starts - 1 perturbations
    unsigned long long seed = 20240101ULL;
    double perturbation = 0.05;
    opt::BfgsOptions bfgs{};
    bool parallel = true;
};

enum class SeMethod { Hessian, Sandwich };

namespace structural {

inline constexpr double kPhiBound = 0.999;
inline constexpr double kMinC = 1e-6;

[[nodiscard]] inline bool in_domain(const StructuralTheta& th) {
    return std::abs(th.phi1) < kPhiBound && std::abs(th.phi2) < kPhiBound && std::abs(th.phi3) < kPhiBound &&
           std::abs(th.phi4) < kPhiBound && th.c() > kMinC;
}

[[nodiscard]] inline StructuralSystem theta_to_structural(const StructuralTheta& th) {
    if (!(th.c() > 0.0)) {
        throw DomainError("1 + b1 + b2 must be positive");
    }
    StructuralSystem s;
    s.c = th.c();
    s.a0 << 1, 0, 0, -th.b1,  //
        0, 1, 0, -th.b2,      //
        0, 0, 1, 0,           //
        1, 1, -1, 1;
    s.intercept << th.a1 * (1 - th.phi1), th.a2 * (1 - th.phi2), th.d * (1 - th.phi3), 0.0;
    s.soi_load << th.b3, th.b4, 0.0, 0.0;
    s.level_coef << -(1 - th.phi1), 0, 0, th.b1 * (1 - th.phi1),  //
        0, -(1 - th.phi2), 0, th.b2 * (1 - th.phi2),              //
        0, 0, 0, 0,                                               //
        -(1 - th.phi4), -(1 - th.phi4), 1 - th.phi4, 0;
    s.diff_coef.setZero();
    s.diff_coef(2, 2) = th.phi3;
    s.diff_coef(3, 3) = th.phi4;
    return s;
}

/// Closed-form reduced form obtained by premultiplying the structural system with a0^-1.
[[nodiscard]] inline ReducedForm theta_to_reduced(const StructuralTheta& th) {
    const double c = th.c();
    if (!(c > 0.0)) {
        throw DomainError("1 + b1 + b2 must be positive");
    }
    const double b1 = th.b1;
    const double b2 = th.b2;
    const double g1 = th.a1 * (1 - th.phi1);
    const double g2 = th.a2 * (1 - th.phi2);
    const double g3 = th.d * (1 - th.phi3);
    const double q1 = 1 - th.phi1;
    const double q2 = 1 - th.phi2;
    const double q4 = 1 - th.phi4;
    ReducedForm rf;
    rf.mu << (g1 * (1 + b2) - b1 * (g2 - g3)) / c,  //
        (g2 * (1 + b1) - b2 * (g1 - g3)) / c,       //
        g3,                                         //
        (g3 - g1 - g2) / c;
    rf.alpha << -(1 + b2) * q1 / c, b1 * q2 / c, b1 * q4 / c,  //
        b2 * q1 / c, -(1 + b1) * q2 / c, b2 * q4 / c,          //
        0, 0, 0,                                               //
        q1 / c, q2 / c, q4 / c;
    rf.beta_t << 1, 0, 0, -b1,  //
        0, 1, 0, -b2,           //
        -1, -1, 1, 0;
    rf.gamma1 << 0, 0, b1 * th.phi3 / c, b1 * th.phi4 / c,  //
        0, 0, b2 * th.phi3 / c, b2 * th.phi4 / c,           //
        0, 0, th.phi3, 0,                                   //
        0, 0, th.phi3 / c, th.phi4 / c;
    rf.phi_soi << (th.b3 * (1 + b2) - b1 * th.b4) / c,  //
        (th.b4 * (1 + b1) - b2 * th.b3) / c,            //
        0,                                              //
        -(th.b3 + th.b4) / c;
    rf.error_rotation << (1 + b2) / c, -b1 / c, b1 / c, b1 / c,  //
        -b2 / c, (1 + b1) / c, b2 / c, b2 / c,                   //
        0, 0, 1, 0,                                              //
        -1 / c, -1 / c, 1 / c, 1 / c;
    return rf;
}

/// Structural (eps) and reduced-form (U) residuals; rows t = 2..N-1 of the levels.
struct Residuals {
    MatrixXd eps;
    MatrixXd u;
    int first_row = 2;
};

[[nodiscard]] inline Residuals structural_residuals(const StructuralTheta& th, const MatrixXd& levels,
                                                    const VectorXd& soi) {
    const auto n = levels.rows();
    if (n < 4 || levels.cols() != 4) {
        throw SampleError("structural model needs at least four annual observations of four variables");
    }
    if (soi.size() != n) {
        throw AlignmentError("SOI length differs from the levels");
    }
    const auto sys = theta_to_structural(th);
    const Eigen::Matrix4d a0inv = sys.a0.inverse();
    Residuals r;
    const auto T = n - 2;
    r.eps.resize(T, 4);
    r.u.resize(T, 4);
    for (Eigen::Index i = 0; i < T; ++i) {
        const auto t = i + 2;
        const Eigen::Vector4d dy = (levels.row(t) - levels.row(t - 1)).transpose();
        const Eigen::Vector4d dy1 = (levels.row(t - 1) - levels.row(t - 2)).transpose();
        const Eigen::Vector4d y1 = levels.row(t - 1).transpose();
        const Eigen::Vector4d e =
            sys.a0 * dy - sys.intercept - sys.soi_load * soi(t) - sys.level_coef * y1 - sys.diff_coef * dy1;
        r.eps.row(i) = e.transpose();
        r.u.row(i) = (a0inv * e).transpose();
    }
    return r;
}

[[nodiscard]] inline Residuals structural_residuals(const StructuralTheta& th, const AlignedDataset& d) {
    const auto s = system_data(d);
    return structural_residuals(th, s.levels, s.exog);
}

/// Quasi log-likelihood of the restricted model; -inf outside the domain or on singular covariance.
[[nodiscard]] inline double loglik(const StructuralTheta& th, const MatrixXd& levels, const VectorXd& soi) {
    if (!in_domain(th)) {
        return -std::numeric_limits<double>::infinity();
    }
    try {
        return cvar::quasi_loglik(structural_residuals(th, levels, soi).u);
    } catch (const NumericalRankError&) {
        return -std::numeric_limits<double>::infinity();
    }
}

namespace detail {

inline double ar1_coefficient(const VectorXd& x) {
    const auto n = x.size();
    const double num = x.tail(n - 1).dot(x.head(n - 1));
    const double den = x.head(n - 1).squaredNorm();
    const double phi = den > 0.0 ? num / den : 0.0;
    return std::clamp(phi, -0.9, 0.9);
}

}  // namespace detail

/// Equation-by-equation OLS starting values.
[[nodiscard]] inline StructuralTheta initial_theta(const MatrixXd& levels, const VectorXd& soi) {
    const auto n = levels.rows();
    StructuralTheta th;
    MatrixXd x(n, 3);
    x.col(0).setOnes();
    x.col(1) = levels.col(kConcentration);
    x.col(2) = soi;
    const bool soi_constant = soi.maxCoeff() - soi.minCoeff() == 0.0;
    const MatrixXd xr = soi_constant ? MatrixXd(x.leftCols(2)) : x;
    for (int j = 0; j < 2; ++j) {
        MatrixXd coef;
        const MatrixXd resid = cvar::partial_out(levels.col(j), xr, &coef);
        const double a = coef(0, 0);
        const double b = coef(1, 0);
        const double load = soi_constant ? 0.0 : coef(2, 0);
        const double phi = detail::ar1_coefficient(resid.col(0));
        if (j == 0) {
            th.a1 = a;
            th.b1 = b;
            th.b3 = load;
            th.phi1 = phi;
        } else {
            th.a2 = a;
            th.b2 = b;
            th.b4 = load;
            th.phi2 = phi;
        }
    }
    const VectorXd de = levels.col(kEmissions).tail(n - 1) - levels.col(kEmissions).head(n - 1);
    th.d = de.mean();
    th.phi3 = detail::ar1_coefficient(de.array() - th.d);
    VectorXd x4(n - 1);
    for (Eigen::Index t = 1; t < n; ++t) {
        x4(t - 1) = levels(t, kConcentration) - levels(t - 1, kConcentration) - levels(t, kEmissions) +
                    levels(t, kLandSink) + levels(t, kOceanSink);
    }
    th.phi4 = detail::ar1_coefficient(x4);
    if (!in_domain(th)) {
        th.b1 = std::max(th.b1, 0.0);
        th.b2 = std::max(th.b2, 0.0);
    }
    return th;
}

/// Per-parameter scales from the curvature at `th`, with magnitude-based fallbacks.
[[nodiscard]] inline VectorXd parameter_scales(const StructuralTheta& th, const MatrixXd& levels, const VectorXd& soi) {
    const VectorXd x = th.to_vector();
    VectorXd fallback(StructuralTheta::kSize);
    for (int j = 0; j < StructuralTheta::kSize; ++j) {
        fallback(j) = 1e-3 * std::max(std::abs(x(j)), 1e-2);
    }
    const opt::Objective f = [&](const VectorXd& v) { return -loglik(StructuralTheta::from_vector(v), levels, soi); };
    VectorXd scale = fallback;
    for (int pass = 0; pass < 2; ++pass) {
        const MatrixXd h = opt::numerical_hessian(f, x, 1e-2 * scale);
        for (int j = 0; j < StructuralTheta::kSize; ++j) {
            const double hjj = h(j, j);
            scale(j) = (std::isfinite(hjj) && hjj > 0.0) ? 1.0 / std::sqrt(hjj) : 10.0 * fallback(j);
        }
    }
    return scale;
}

[[nodiscard]] inline StructuralFit finish_fit(const StructuralTheta& th, const MatrixXd& levels, const VectorXd& soi,
                                              const std::vector<int>& years) {
    StructuralFit fit;
    fit.theta = th;
    const auto r = structural_residuals(th, levels, soi);
    fit.residuals_u = r.u;
    fit.residuals_eps = r.eps;
    fit.T = static_cast<int>(r.u.rows());
    fit.first_row = r.first_row;
    fit.sigma_u = r.u.transpose() * r.u / fit.T;
    fit.loglik = cvar::quasi_loglik(r.u);
    if (!years.empty()) {
        fit.years.assign(years.begin() + r.first_row, years.end());
    }
    return fit;
}

/// Maximum likelihood by multistart BFGS. Ties on log-likelihood go to the lower start index.
[[nodiscard]] inline StructuralFit fit_mle(const MatrixXd& levels, const VectorXd& soi,
                                           const std::vector<int>& years, const StructuralTheta& init,
                                           const FitOptions& options = {}) {
    if (!in_domain(init)) {
        throw DomainError("initial theta outside the parameter domain");
    }
    std::vector<StructuralTheta> starts{init};
    std::mt19937_64 rng(options.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int s = 1; s < options.n_starts; ++s) {
        VectorXd v = init.to_vector();
        for (int j = 0; j < StructuralTheta::kSize; ++j) {
            const double z = normal(rng);
            if (j >= 7) {
                v(j) = std::clamp(v(j) + 0.1 * z, -0.9, 0.9);
            } else {
                v(j) *= 1.0 + options.perturbation * z;
            }
        }
        auto th = StructuralTheta::from_vector(v);
        starts.push_back(in_domain(th) ? th : init);
    }

    const auto run = [&](const StructuralTheta& start) {
        const VectorXd scale = parameter_scales(start, levels, soi);
        const opt::Objective f = [&](const VectorXd& v) {
            return -loglik(StructuralTheta::from_vector(v), levels, soi);
        };
        return opt::minimize_bfgs(f, start.to_vector(), scale, options.bfgs);
    };

    std::vector<opt::BfgsResult> results(starts.size());
    if (options.parallel && starts.size() > 1) {
        std::vector<std::future<opt::BfgsResult>> jobs;
        for (const auto& s : starts) {
            jobs.push_back(std::async(std::launch::async, run, std::cref(s)));
        }
        for (std::size_t i = 0; i < jobs.size(); ++i) {
            results[i] = jobs[i].get();
        }
    } else {
        for (std::size_t i = 0; i < starts.size(); ++i) {
            results[i] = run(starts[i]);
        }
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i < results.size(); ++i) {
        if (results[i].value < results[best].value) {
            best = i;
        }
    }
    const auto& b = results[best];
    if (!std::isfinite(b.value)) {
        throw ConditioningError("likelihood not finite at any start");
    }
    auto fit = finish_fit(StructuralTheta::from_vector(b.x), levels, soi, years);
    fit.converged = b.converged;
    fit.n_iter = b.iterations;
    fit.start_index = static_cast<int>(best);
    fit.gradient_norm = b.gradient_norm;
    return fit;
}

[[nodiscard]] inline StructuralFit fit_mle(const AlignedDataset& d, const FitOptions& options = {}) {
    const auto s = system_data(d);
    return fit_mle(s.levels, s.exog, s.years, initial_theta(s.levels, s.exog), options);
}

[[nodiscard]] inline StructuralFit fit_mle(const AlignedDataset& d, const StructuralTheta& init,
                                           const FitOptions& options = {}) {
    const auto s = system_data(d);
    return fit_mle(s.levels, s.exog, s.years, init, options);
}

/// Standard errors from the inverse negative Hessian of a log-likelihood, evaluated with
/// finite-difference steps `steps`.
[[nodiscard]] inline VectorXd standard_errors_from_loglik(const opt::Objective& loglik_fn, const VectorXd& x,
                                                          const VectorXd& steps, MatrixXd* covariance = nullptr) {
    const opt::Objective neg = [&](const VectorXd& v) { return -loglik_fn(v); };
    MatrixXd info = opt::numerical_hessian(neg, x, steps);
    info = 0.5 * (info + info.transpose());
    const Eigen::SelfAdjointEigenSolver<MatrixXd> es(info);
    if (es.info() != Eigen::Success || es.eigenvalues().minCoeff() <= 0.0) {
        std::string msg = "Hessian of the log-likelihood is not negative definite; eigenvalues of -H:";
        for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
            msg += " " + std::to_string(es.eigenvalues()(i));
        }
        throw ConditioningError(msg);
    }
    const MatrixXd cov = es.eigenvectors() * es.eigenvalues().cwiseInverse().asDiagonal() *
                         es.eigenvectors().transpose();
    if (covariance != nullptr) {
        *covariance = cov;
    }
    return cov.diagonal().cwiseSqrt();
}

[[nodiscard]] inline VectorXd standard_errors(const StructuralFit& fit, const MatrixXd& levels, const VectorXd& soi,
                                              SeMethod method = SeMethod::Hessian) {
    const VectorXd x = fit.theta.to_vector();
    const VectorXd scale = parameter_scales(fit.theta, levels, soi);
    const VectorXd steps = 1e-3 * scale;
    const opt::Objective ll = [&](const VectorXd& v) { return loglik(StructuralTheta::from_vector(v), levels, soi); };
    MatrixXd hinv;
    VectorXd se = standard_errors_from_loglik(ll, x, steps, &hinv);
    if (method == SeMethod::Hessian) {
        return se;
    }
    // Outer product of per-observation scores with Sigma held at its estimate.
    const MatrixXd sigma_inv = fit.sigma_u.inverse();
    const auto per_obs = [&](const VectorXd& v) -> VectorXd {
        const auto r = structural_residuals(StructuralTheta::from_vector(v), levels, soi);
        VectorXd l(r.u.rows());
        for (Eigen::Index t = 0; t < r.u.rows(); ++t) {
            l(t) = -0.5 * r.u.row(t) * sigma_inv * r.u.row(t).transpose();
        }
        return l;
    };
    const int k = StructuralTheta::kSize;
    MatrixXd scores(fit.T, k);
    VectorXd xp = x;
    for (int j = 0; j < k; ++j) {
        xp(j) = x(j) + steps(j);
        const VectorXd lp = per_obs(xp);
        xp(j) = x(j) - steps(j);
        const VectorXd lm = per_obs(xp);
        xp(j) = x(j);
        scores.col(j) = (lp - lm) / (2.0 * steps(j));
    }
    const MatrixXd meat = scores.transpose() * scores;
    const MatrixXd cov = hinv * meat * hinv;
    return cov.diagonal().cwiseSqrt();
}

[[nodiscard]] inline VectorXd standard_errors(const StructuralFit& fit, const AlignedDataset& d,
                                              SeMethod method = SeMethod::Hessian) {
    const auto s = system_data(d);
    return standard_errors(fit, s.levels, s.exog, method);
}

/// LR test of the restricted model against an unrestricted VECM on the same sample.
[[nodiscard]] inline LrTestResult lr_restricted_vs_benchmark(const StructuralFit& fit, const VecmEstimate& benchmark) {
    if (fit.T != benchmark.T || fit.first_row != benchmark.first_row) {
        throw SampleError("restricted and benchmark models use different samples (T = " + std::to_string(fit.T) +
                          " vs " + std::to_string(benchmark.T) + ")");
    }
    return hyp::make_lr("restricted structural model", fit.loglik, benchmark.loglik,
                        benchmark.n_free_params - StructuralTheta::kSize);
}

/// One-step-ahead fitted differences dY_t - U_t (T x 4).
[[nodiscard]] inline MatrixXd fitted_differences(const StructuralFit& fit, const MatrixXd& levels) {
    MatrixXd out(fit.T, 4);
    for (int i = 0; i < fit.T; ++i) {
        const int t = fit.first_row + i;
        out.row(i) = levels.row(t) - levels.row(t - 1) - fit.residuals_u.row(i);
    }
    return out;
}

/// Deviation states in the final observed year: sink deviations from a_j + b_j C
/// (SOI effects included, as they propagate through the AR(1) recursion) and the
/// budget imbalance.
struct TerminalState {
    int year = 0;
    Eigen::Vector4d levels;  ///< S^L, S^O, E, C
    double x1 = 0.0;
    double x2 = 0.0;
    double x4 = 0.0;
};

[[nodiscard]] inline TerminalState terminal_state(const StructuralTheta& th, const MatrixXd& levels, int last_year) {
    const auto n = levels.rows();
    if (n < 2) {
        throw SampleError("need two observations for the terminal state");
    }
    const auto t = n - 1;
    TerminalState s;
    s.year = last_year;
    s.levels = levels.row(t).transpose();
    const double c = levels(t, kConcentration);
    s.x1 = levels(t, kLandSink) - th.a1 - th.b1 * c;
    s.x2 = levels(t, kOceanSink) - th.a2 - th.b2 * c;
    s.x4 = c - levels(t - 1, kConcentration) - levels(t, kEmissions) + levels(t, kLandSink) + levels(t, kOceanSink);
    return s;
}

/// Synthetic levels generated from the structural equations.
struct SimulationSettings {
    int n_obs = 64;
    int first_year = 1959;
    double c0 = 670.0;
    double e0 = 4.0;
    Eigen::Matrix4d shock_cov = Eigen::Vector4d(0.36, 0.008, 0.035, 0.04).asDiagonal();
    double soi_sd = 0.8;
};

[[nodiscard]] inline AlignedDataset simulate_dataset(const StructuralTheta& th, const SimulationSettings& cfg,
                                                     std::mt19937_64& rng) {
    if (!in_domain(th)) {
        throw DomainError("theta outside the parameter domain");
    }
    const Eigen::LLT<Eigen::Matrix4d> llt(cfg.shock_cov);
    const Eigen::Matrix4d chol = cfg.shock_cov.isZero() ? Eigen::Matrix4d::Zero() : Eigen::Matrix4d(llt.matrixL());
    std::normal_distribution<double> normal(0.0, 1.0);
    AlignedDataset d;
    double x1 = 0.0;
    double x2 = 0.0;
    double x3 = 0.0;
    double x4 = 0.0;
    double c_prev = cfg.c0;
    double e_prev = cfg.e0;
    for (int i = 0; i < cfg.n_obs; ++i) {
        const double soi = cfg.soi_sd * normal(rng);
        Eigen::Vector4d z;
        for (int j = 0; j < 4; ++j) {
            z(j) = normal(rng);
        }
        const Eigen::Vector4d eps = chol * z;
        x1 = th.phi1 * x1 + th.b3 * soi + eps(0);
        x2 = th.phi2 * x2 + th.b4 * soi + eps(1);
        x3 = th.phi3 * x3 + eps(2);
        x4 = th.phi4 * x4 + eps(3);
        double e = 0.0;
        double c = 0.0;
        if (i == 0) {
            e = cfg.e0;
            c = cfg.c0;
        } else {
            e = e_prev + th.d + x3;
            c = (c_prev + e - th.a1 - th.a2 - x1 - x2 + x4) / th.c();
        }
        d.years.push_back(cfg.first_year + i);
        d.land_sink.push_back(th.a1 + th.b1 * c + x1);
        d.ocean_sink.push_back(th.a2 + th.b2 * c + x2);
        d.emissions.push_back(e);
        d.concentration.push_back(c);
        d.soi.push_back(soi);
        c_prev = c;
        e_prev = e;
    }
    return d;
}

}  // namespace structural
}  // namespace gcb
