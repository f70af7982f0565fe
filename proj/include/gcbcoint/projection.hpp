#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <span>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "gcbcoint/data_ingest.hpp"
#include "gcbcoint/stats.hpp"
#include "gcbcoint/structural_model.hpp"

namespace gcb {

/// Mid-century sink weakening fractions and the implied exponential decay rates.
struct FeedbackSpec {
    double p1 = 0.0;
    double p2 = 0.0;
    double gamma1 = 0.0;
    double gamma2 = 0.0;
};

/// Time-varying drift reproducing the emissions scenario from the last observed value.
struct DriftPath {
    std::vector<int> years;
    std::vector<double> d;
    double e_anchor = 0.0;
};

/// Sink intercepts and slopes in a given projection year.
struct SinkCoefficients {
    double a1 = 0.0;
    double b1 = 0.0;
    double a2 = 0.0;
    double b2 = 0.0;
};

/// Levels plus deviation states. x1, x2 are sink deviations from a_{j,t} + b_{j,t} C_t
/// and x4 is the budget imbalance.
struct SystemState {
    int year = 0;
    double land_sink = 0.0;
    double ocean_sink = 0.0;
    double emissions = 0.0;
    double concentration = 0.0;
    double x1 = 0.0;
    double x2 = 0.0;
    double x4 = 0.0;
};

enum class SoiMode { Zero, Bootstrap };
enum class ShockLaw { StructuralGaussian, Diagonal, Off };

struct ProjectionOptions {
    int n_paths = 100000;
    std::uint64_t seed = 42;
    int last_year = 2100;
    SoiMode soi_mode = SoiMode::Zero;
    ShockLaw shocks = ShockLaw::StructuralGaussian;
    int workers = 1;
    std::vector<double> probs{0.025, 0.5, 0.975};
};

/// Everything the simulator needs from an estimated restricted model.
struct ProjectionModel {
    StructuralTheta theta;
    Eigen::Matrix4d sigma_u = Eigen::Matrix4d::Zero();
    structural::TerminalState anchor;
    std::vector<double> soi_history;
};

/// Pointwise quantiles per variable; `bands[v][q][year index]`.
struct ProjectionResult {
    std::vector<int> years;
    std::vector<double> probs;
    std::array<std::vector<std::vector<double>>, 4> bands;
    int n_paths = 0;
    std::uint64_t seed = 0;
    int n_singular = 0;
    int n_negative_concentration = 0;
};

/// All simulated values; `values[v][year index][path]`, v over (S^L, S^O, E, C, X4).
struct PathEnsemble {
    std::vector<int> years;
    std::array<std::vector<std::vector<double>>, 5> values;
    std::vector<char> singular;
    std::vector<char> negative_concentration;
    int n_paths = 0;
    std::uint64_t seed = 0;
    SystemState initial;
};

namespace proj {

inline constexpr double kFeedbackHorizonYears = 28.0;

/// gamma(p) = -log(1 - p) / 28: the sink response is scaled by 1 - p after 28 years.
[[nodiscard]] inline double feedback_gamma(double p_half) {
    if (!(p_half >= 0.0) || p_half >= 1.0) {
        throw DomainError("feedback fraction must lie in [0, 1)");
    }
    return -std::log1p(-p_half) / kFeedbackHorizonYears;
}

[[nodiscard]] inline FeedbackSpec make_feedback(double p_land, double p_ocean) {
    return {p_land, p_ocean, feedback_gamma(p_land), feedback_gamma(p_ocean)};
}

[[nodiscard]] inline DriftPath build_drift(const EmissionScenario& scenario, double e_last, int first_year,
                                           int last_year) {
    if (scenario.years.empty() || scenario.years.front() != first_year) {
        throw ScenarioAlignmentError("scenario must start in " + std::to_string(first_year));
    }
    for (std::size_t i = 1; i < scenario.years.size(); ++i) {
        if (scenario.years[i] != scenario.years[i - 1] + 1) {
            throw ScenarioAlignmentError("scenario has a gap after " + std::to_string(scenario.years[i - 1]));
        }
    }
    if (scenario.years.back() < last_year) {
        throw ScenarioAlignmentError("scenario ends in " + std::to_string(scenario.years.back()) + ", before " +
                                     std::to_string(last_year));
    }
    DriftPath out;
    out.e_anchor = e_last;
    double prev = e_last;
    for (std::size_t i = 0; i < scenario.years.size() && scenario.years[i] <= last_year; ++i) {
        out.years.push_back(scenario.years[i]);
        out.d.push_back(scenario.emissions[i] - prev);
        prev = scenario.emissions[i];
    }
    return out;
}

[[nodiscard]] inline DriftPath build_drift(const EmissionScenario& scenario, double e_last) {
    if (scenario.years.empty()) {
        throw ScenarioAlignmentError("empty scenario");
    }
    return build_drift(scenario, e_last, scenario.years.front(), scenario.years.back());
}

/// Intercept and slope of each sink scaled by exp(-gamma_j (year - base_year)).
[[nodiscard]] inline SinkCoefficients decay_coeffs(const StructuralTheta& th, const FeedbackSpec& fb, int year,
                                                   int base_year = 2022) {
    const double dt = static_cast<double>(year - base_year);
    const double f1 = std::exp(-fb.gamma1 * dt);
    const double f2 = std::exp(-fb.gamma2 * dt);
    return {th.a1 * f1, th.b1 * f1, th.a2 * f2, th.b2 * f2};
}

/// Advances the system one year. Emissions follow the drift exactly; the budget
/// identity dC = E - S^L - S^O + X4 holds by construction.
[[nodiscard]] inline SystemState step_system(const SystemState& s, const SinkCoefficients& k, double drift,
                                             double soi, const std::array<double, 3>& shocks,
                                             const StructuralTheta& th) {
    const double denom = 1.0 + k.b1 + k.b2;
    if (!(denom > 0.0)) {
        throw DomainError("feedback singularity: 1 + b1 + b2 <= 0");
    }
    SystemState n;
    n.year = s.year + 1;
    n.x1 = th.phi1 * s.x1 + th.b3 * soi + shocks[0];
    n.x2 = th.phi2 * s.x2 + th.b4 * soi + shocks[1];
    n.x4 = th.phi4 * s.x4 + shocks[2];
    n.emissions = s.emissions + drift;
    n.concentration = (s.concentration + n.emissions - k.a1 - k.a2 - n.x1 - n.x2 + n.x4) / denom;
    n.land_sink = k.a1 + k.b1 * n.concentration + n.x1;
    n.ocean_sink = k.a2 + k.b2 * n.concentration + n.x2;
    return n;
}

/// Counter-based stream: draw i of path j depends only on (seed, j, i).
class PathStream {
public:
    PathStream(std::uint64_t seed, std::uint64_t path) : key_(mix(seed ^ mix(path + 0x632BE59BD9B4E019ULL))) {}

    [[nodiscard]] std::uint64_t next_u64() { return mix(key_ + 0x9E3779B97F4A7C15ULL * ++counter_); }

    /// Uniform on (0, 1).
    [[nodiscard]] double next_uniform() { return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53; }

    /// Standard normal by Box-Muller; the second variate of each pair is cached.
    [[nodiscard]] double next_normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = next_uniform();
        const double u2 = next_uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

    static constexpr std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

[[nodiscard]] inline ProjectionModel make_projection_model(const StructuralFit& fit, const AlignedDataset& d) {
    const auto s = system_data(d);
    ProjectionModel m;
    m.theta = fit.theta;
    m.sigma_u = fit.sigma_u;
    m.anchor = structural::terminal_state(fit.theta, s.levels, d.last_year());
    m.soi_history = d.soi;
    return m;
}

/// Lower Cholesky factor of the covariance of (eps1, eps2, eps4); eps3 is shut off.
[[nodiscard]] inline Eigen::Matrix3d shock_factor(const ProjectionModel& model, ShockLaw law) {
    if (law == ShockLaw::Off) {
        return Eigen::Matrix3d::Zero();
    }
    const auto sys = structural::theta_to_structural(model.theta);
    const Eigen::Matrix4d cov_eps = sys.a0 * model.sigma_u * sys.a0.transpose();
    Eigen::Matrix3d cov;
    const int idx[3] = {0, 1, 3};
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            cov(i, j) = cov_eps(idx[i], idx[j]);
        }
    }
    if (law == ShockLaw::Diagonal) {
        return cov.diagonal().cwiseMax(0.0).cwiseSqrt().asDiagonal();
    }
    const Eigen::LDLT<Eigen::Matrix3d> ldlt(cov);
    if (ldlt.info() != Eigen::Success || (ldlt.vectorD().array() < -1e-14).any()) {
        throw ConditioningError("structural shock covariance is not positive semi-definite");
    }
    // L D^1/2 with the permutation undone; positive semi-definite covariances are allowed.
    const Eigen::Matrix3d l = ldlt.matrixL();
    const Eigen::Vector3d dsqrt = ldlt.vectorD().cwiseMax(0.0).cwiseSqrt();
    Eigen::Matrix3d factor = ldlt.transpositionsP().transpose() * (l * dsqrt.asDiagonal());
    return factor;
}

/// Callback receiving, after each simulated year, the states of all paths.
using YearObserver = std::function<void(std::size_t year_index, std::span<const SystemState> states,
                                        std::span<const char> singular)>;

/// Lockstep simulation of `options.n_paths` paths from the anchor year to `options.last_year`.
/// Paths are split across workers by index; the draws of a path never depend on the split.
inline void simulate(const ProjectionModel& model, const EmissionScenario& scenario, const FeedbackSpec& feedback,
                     const ProjectionOptions& options, const YearObserver& observer) {
    if (options.n_paths <= 0) {
        throw DomainError("n_paths must be positive");
    }
    const int base_year = model.anchor.year;
    const auto drift = build_drift(scenario, model.anchor.levels(kEmissions), base_year + 1, options.last_year);
    const Eigen::Matrix3d factor = shock_factor(model, options.shocks);
    if (options.soi_mode == SoiMode::Bootstrap && model.soi_history.empty()) {
        throw DomainError("bootstrap SOI requires the historical SOI series");
    }

    SystemState init;
    init.year = base_year;
    init.land_sink = model.anchor.levels(kLandSink);
    init.ocean_sink = model.anchor.levels(kOceanSink);
    init.emissions = model.anchor.levels(kEmissions);
    init.concentration = model.anchor.levels(kConcentration);
    init.x1 = model.anchor.x1;
    init.x2 = model.anchor.x2;
    init.x4 = model.anchor.x4;

    const auto n = static_cast<std::size_t>(options.n_paths);
    std::vector<SystemState> states(n, init);
    std::vector<PathStream> streams;
    streams.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        streams.emplace_back(options.seed, i);
    }
    std::vector<char> singular(n, 0);
    const bool draw = options.shocks != ShockLaw::Off;
    const auto hist_n = static_cast<double>(model.soi_history.size());

    const auto advance = [&](std::size_t lo, std::size_t hi, std::size_t yi) {
        const SinkCoefficients k = decay_coeffs(model.theta, feedback, drift.years[yi], base_year);
        for (std::size_t i = lo; i < hi; ++i) {
            if (singular[i] != 0) {
                continue;
            }
            auto& rng = streams[i];
            double soi = 0.0;
            if (options.soi_mode == SoiMode::Bootstrap) {
                const auto j = std::min(static_cast<std::size_t>(rng.next_uniform() * hist_n),
                                        model.soi_history.size() - 1);
                soi = model.soi_history[j];
            }
            std::array<double, 3> shocks{0.0, 0.0, 0.0};
            if (draw) {
                const Eigen::Vector3d z(rng.next_normal(), rng.next_normal(), rng.next_normal());
                const Eigen::Vector3d e = factor * z;
                shocks = {e(0), e(1), e(2)};
            }
            const double denom = 1.0 + k.b1 + k.b2;
            if (!(denom > 0.0)) {
                singular[i] = 1;
                states[i] = SystemState{drift.years[yi], NAN, NAN, states[i].emissions + drift.d[yi], NAN, NAN, NAN, NAN};
                continue;
            }
            states[i] = step_system(states[i], k, drift.d[yi], soi, shocks, model.theta);
        }
    };

    const int workers = std::max(1, options.workers);
    for (std::size_t yi = 0; yi < drift.years.size(); ++yi) {
        if (workers == 1 || n < 2) {
            advance(0, n, yi);
        } else {
            std::vector<std::thread> pool;
            const std::size_t chunk = (n + static_cast<std::size_t>(workers) - 1) / static_cast<std::size_t>(workers);
            for (std::size_t lo = 0; lo < n; lo += chunk) {
                pool.emplace_back(advance, lo, std::min(n, lo + chunk), yi);
            }
            for (auto& t : pool) {
                t.join();
            }
        }
        observer(yi, states, singular);
    }
}

[[nodiscard]] inline PathEnsemble simulate_paths(const ProjectionModel& model, const EmissionScenario& scenario,
                                                 const FeedbackSpec& feedback, const ProjectionOptions& options) {
    PathEnsemble ens;
    ens.n_paths = options.n_paths;
    ens.seed = options.seed;
    ens.negative_concentration.assign(static_cast<std::size_t>(options.n_paths), 0);
    ens.initial.year = model.anchor.year;
    ens.initial.land_sink = model.anchor.levels(kLandSink);
    ens.initial.ocean_sink = model.anchor.levels(kOceanSink);
    ens.initial.emissions = model.anchor.levels(kEmissions);
    ens.initial.concentration = model.anchor.levels(kConcentration);
    ens.initial.x1 = model.anchor.x1;
    ens.initial.x2 = model.anchor.x2;
    ens.initial.x4 = model.anchor.x4;
    simulate(model, scenario, feedback, options,
             [&](std::size_t, std::span<const SystemState> states, std::span<const char> singular) {
                 ens.years.push_back(states.front().year);
                 for (auto& v : ens.values) {
                     v.emplace_back(states.size());
                 }
                 for (std::size_t i = 0; i < states.size(); ++i) {
                     const auto& s = states[i];
                     ens.values[0].back()[i] = s.land_sink;
                     ens.values[1].back()[i] = s.ocean_sink;
                     ens.values[2].back()[i] = s.emissions;
                     ens.values[3].back()[i] = s.concentration;
                     ens.values[4].back()[i] = s.x4;
                     if (s.concentration < 0.0) {
                         ens.negative_concentration[i] = 1;
                     }
                 }
                 ens.singular.assign(singular.begin(), singular.end());
             });
    return ens;
}

namespace detail {

inline void append_quantiles(ProjectionResult& out, int v, std::vector<double>& buf) {
    std::sort(buf.begin(), buf.end());
    for (std::size_t q = 0; q < out.probs.size(); ++q) {
        out.bands[static_cast<std::size_t>(v)][q].push_back(
            buf.empty() ? std::numeric_limits<double>::quiet_NaN() : stats::quantile_sorted(buf, out.probs[q]));
    }
}

inline ProjectionResult empty_result(std::span<const double> probs, int n_paths, std::uint64_t seed) {
    ProjectionResult out;
    out.probs.assign(probs.begin(), probs.end());
    for (auto& b : out.bands) {
        b.assign(out.probs.size(), {});
    }
    out.n_paths = n_paths;
    out.seed = seed;
    return out;
}

}  // namespace detail

/// Pointwise type-7 quantiles over the non-singular paths.
[[nodiscard]] inline ProjectionResult quantile_fan(const PathEnsemble& ens,
                                                   std::span<const double> probs = std::array{0.025, 0.5, 0.975}) {
    if (ens.n_paths <= 0 || ens.years.empty()) {
        throw DegenerateInputError("empty path ensemble");
    }
    auto out = detail::empty_result(probs, ens.n_paths, ens.seed);
    out.years = ens.years;
    std::vector<double> buf;
    for (std::size_t y = 0; y < ens.years.size(); ++y) {
        for (int v = 0; v < 4; ++v) {
            buf.clear();
            const auto& vals = ens.values[static_cast<std::size_t>(v)][y];
            for (std::size_t i = 0; i < vals.size(); ++i) {
                if (ens.singular.empty() || ens.singular[i] == 0) {
                    buf.push_back(vals[i]);
                }
            }
            detail::append_quantiles(out, v, buf);
        }
    }
    for (std::size_t i = 0; i < ens.singular.size(); ++i) {
        out.n_singular += ens.singular[i] != 0 ? 1 : 0;
        out.n_negative_concentration += ens.negative_concentration[i] != 0 ? 1 : 0;
    }
    return out;
}

/// Simulation and quantile reduction in one pass without storing the paths.
[[nodiscard]] inline ProjectionResult project(const ProjectionModel& model, const EmissionScenario& scenario,
                                              const FeedbackSpec& feedback, const ProjectionOptions& options) {
    auto out = detail::empty_result(options.probs, options.n_paths, options.seed);
    std::vector<char> negative(static_cast<std::size_t>(options.n_paths), 0);
    std::vector<char> last_singular;
    std::vector<double> buf;
    buf.reserve(static_cast<std::size_t>(options.n_paths));
    simulate(model, scenario, feedback, options,
             [&](std::size_t, std::span<const SystemState> states, std::span<const char> singular) {
                 out.years.push_back(states.front().year);
                 for (int v = 0; v < 4; ++v) {
                     buf.clear();
                     for (std::size_t i = 0; i < states.size(); ++i) {
                         if (singular[i] != 0) {
                             continue;
                         }
                         const auto& s = states[i];
                         const double x = v == 0 ? s.land_sink
                                          : v == 1 ? s.ocean_sink
                                          : v == 2 ? s.emissions
                                                   : s.concentration;
                         buf.push_back(x);
                         if (v == 3 && x < 0.0) {
                             negative[i] = 1;
                         }
                     }
                     detail::append_quantiles(out, v, buf);
                 }
                 last_singular.assign(singular.begin(), singular.end());
             });
    for (std::size_t i = 0; i < last_singular.size(); ++i) {
        out.n_singular += last_singular[i] != 0 ? 1 : 0;
        out.n_negative_concentration += negative[i] != 0 ? 1 : 0;
    }
    return out;
}

}  // namespace proj
}  // namespace gcb
