#pragma once

#include <cmath>
#include <functional>
#include <limits>

#include <Eigen/Dense>

namespace gcb::opt {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Objective to minimise; returns +inf outside the admissible domain.
using Objective = std::function<double(const VectorXd&)>;

/// Central-difference gradient with per-coordinate steps.
[[nodiscard]] inline VectorXd numerical_gradient(const Objective& f, const VectorXd& x, const VectorXd& steps) {
    VectorXd g(x.size());
    VectorXd xp = x;
    for (Eigen::Index j = 0; j < x.size(); ++j) {
        const double h = steps(j);
        xp(j) = x(j) + h;
        const double fp = f(xp);
        xp(j) = x(j) - h;
        const double fm = f(xp);
        xp(j) = x(j);
        g(j) = (fp - fm) / (2.0 * h);
    }
    return g;
}

/// Central-difference Hessian with per-coordinate steps.
[[nodiscard]] inline MatrixXd numerical_hessian(const Objective& f, const VectorXd& x, const VectorXd& steps) {
    const Eigen::Index n = x.size();
    MatrixXd h(n, n);
    const double f0 = f(x);
    VectorXd y = x;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double hi = steps(i);
        y(i) = x(i) + hi;
        const double fp = f(y);
        y(i) = x(i) - hi;
        const double fm = f(y);
        y(i) = x(i);
        h(i, i) = (fp - 2.0 * f0 + fm) / (hi * hi);
        for (Eigen::Index j = 0; j < i; ++j) {
            const double hj = steps(j);
            y(i) = x(i) + hi;
            y(j) = x(j) + hj;
            const double fpp = f(y);
            y(j) = x(j) - hj;
            const double fpm = f(y);
            y(i) = x(i) - hi;
            const double fmm = f(y);
            y(j) = x(j) + hj;
            const double fmp = f(y);
            y(i) = x(i);
            y(j) = x(j);
            h(i, j) = h(j, i) = (fpp - fpm - fmp + fmm) / (4.0 * hi * hj);
        }
    }
    return h;
}

struct BfgsOptions {
    double gradient_tolerance = 1e-6;  ///< infinity norm of the gradient in scaled coordinates
    int max_iterations = 2000;
    double gradient_step = 1e-5;  ///< finite-difference step in scaled coordinates
    int max_halvings = 60;
    /// When no step decreases the objective any more (the finite-difference noise floor),
    /// the point counts as converged if the gradient norm is below this looser bound.
    double stall_gradient_tolerance = 1e-3;
};

struct BfgsResult {
    VectorXd x;
    double value = std::numeric_limits<double>::infinity();
    double gradient_norm = std::numeric_limits<double>::infinity();
    int iterations = 0;
    bool converged = false;
};

/// BFGS on z = (x - x0) / scale with numerical gradients and a backtracking
/// line search that halves the step until the objective is finite and decreases.
[[nodiscard]] inline BfgsResult minimize_bfgs(const Objective& f, const VectorXd& x0, const VectorXd& scale,
                                              const BfgsOptions& options = {}) {
    const Eigen::Index n = x0.size();
    const auto to_x = [&](const VectorXd& z) -> VectorXd { return x0 + scale.cwiseProduct(z); };
    const Objective fz = [&](const VectorXd& z) { return f(to_x(z)); };
    const VectorXd steps = VectorXd::Constant(n, options.gradient_step);

    BfgsResult out;
    VectorXd z = VectorXd::Zero(n);
    double fval = fz(z);
    if (!std::isfinite(fval)) {
        out.x = x0;
        return out;
    }
    VectorXd g = numerical_gradient(fz, z, steps);
    MatrixXd hinv = MatrixXd::Identity(n, n);
    int stalls = 0;
    bool stalled = false;
    for (int it = 0; it < options.max_iterations; ++it) {
        out.iterations = it;
        if (g.lpNorm<Eigen::Infinity>() < options.gradient_tolerance) {
            out.converged = true;
            break;
        }
        VectorXd dir = -hinv * g;
        if (dir.dot(g) >= 0.0) {
            hinv.setIdentity();
            dir = -g;
        }
        double step = 1.0;
        const double slope = dir.dot(g);
        VectorXd z_new;
        double f_new = std::numeric_limits<double>::infinity();
        bool accepted = false;
        for (int k = 0; k < options.max_halvings; ++k) {
            z_new = z + step * dir;
            f_new = fz(z_new);
            if (std::isfinite(f_new) && f_new <= fval + 1e-4 * step * slope) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) {
            if (!hinv.isIdentity()) {
                hinv.setIdentity();
                continue;
            }
            stalled = true;
            break;
        }
        const VectorXd g_new = numerical_gradient(fz, z_new, steps);
        const VectorXd s = z_new - z;
        const VectorXd y = g_new - g;
        const double sy = s.dot(y);
        if (sy > 1e-12 * s.norm() * y.norm()) {
            const double rho = 1.0 / sy;
            const MatrixXd eye = MatrixXd::Identity(n, n);
            if (it == 0) {
                hinv *= sy / y.squaredNorm();
            }
            hinv = (eye - rho * s * y.transpose()) * hinv * (eye - rho * y * s.transpose()) + rho * s * s.transpose();
        }
        stalls = (fval - f_new) <= 1e-15 * (1.0 + std::abs(fval)) ? stalls + 1 : 0;
        z = z_new;
        fval = f_new;
        g = g_new;
        out.iterations = it + 1;
        if (stalls >= 5) {
            stalled = true;
            break;
        }
    }
    out.x = to_x(z);
    out.value = fval;
    out.gradient_norm = g.lpNorm<Eigen::Infinity>();
    out.converged = out.gradient_norm < options.gradient_tolerance ||
                    (stalled && out.gradient_norm < options.stall_gradient_tolerance);
    return out;
}

}  // namespace gcb::opt
