#pragma once

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <fmt/core.h>
#include <fmt/ostream.h>

#include "CLI11.hpp"
#include "gcbcoint/gcbcoint.hpp"

namespace gcb::cli {

namespace fs = std::filesystem;
using nlohmann::json;

enum ExitCode : int { kOk = 0, kUsage = 2, kNumerical = 3 };

/// Settings shared by all subcommands. Values come from defaults, then the
/// config file, then command-line flags.
struct RunConfig {
    std::string gcb;
    std::string soi;
    std::string data;
    std::string scenario;
    std::string scenario_name = "scenario";
    std::string scenario_unit = "PgC";
    std::string fit;
    std::string overlay;
    std::string residuals;
    int first_year = 1959;
    int last_year = 2022;
    int k = 1;
    bool include_soi = true;
    int rank = 3;
    int n_paths = 100000;
    std::uint64_t seed = 42;
    std::optional<double> p_land;
    std::optional<double> p_ocean;
    std::vector<std::string> feedback{"none", "low", "high"};
    std::string soi_mode = "zero";
    std::string shocks = "gaussian";
    int horizon = 2100;
    int workers = 1;
    int n_starts = 5;
    std::string model = "restricted";
    std::string which = "all";
    std::string variable;
    std::string se_method = "hessian";
    bool all_specs = false;
    std::string out_dir = ".";
    bool json_out = false;
};

class UsageError : public Error {
public:
    using Error::Error;
};

namespace detail {

inline void apply_config_file(RunConfig& c, const std::string& path) {
    const json j = io::read_json_file(path);
    const auto get = [&](const char* key, auto& target) {
        if (j.contains(key) && !j.at(key).is_null()) {
            target = j.at(key).get<std::remove_reference_t<decltype(target)>>();
        }
    };
    get("gcb", c.gcb);
    get("soi", c.soi);
    get("data", c.data);
    get("scenario", c.scenario);
    get("scenario_name", c.scenario_name);
    get("scenario_unit", c.scenario_unit);
    get("fit", c.fit);
    get("overlay", c.overlay);
    get("residuals", c.residuals);
    get("first_year", c.first_year);
    get("last_year", c.last_year);
    get("k", c.k);
    get("include_soi", c.include_soi);
    get("rank", c.rank);
    get("n_paths", c.n_paths);
    get("seed", c.seed);
    get("feedback", c.feedback);
    get("soi_mode", c.soi_mode);
    get("shocks", c.shocks);
    get("horizon", c.horizon);
    get("workers", c.workers);
    get("n_starts", c.n_starts);
    get("model", c.model);
    get("which", c.which);
    get("variable", c.variable);
    get("se_method", c.se_method);
    get("all_specs", c.all_specs);
    get("out_dir", c.out_dir);
    get("json", c.json_out);
    if (j.contains("p_land")) {
        c.p_land = j.at("p_land").get<double>();
    }
    if (j.contains("p_ocean")) {
        c.p_ocean = j.at("p_ocean").get<double>();
    }
    // Relative paths in a config file resolve against the file's directory.
    const fs::path base = fs::path(path).parent_path();
    for (std::string* p : {&c.gcb, &c.soi, &c.data, &c.scenario, &c.fit, &c.overlay, &c.residuals, &c.out_dir}) {
        if (!p->empty() && fs::path(*p).is_relative()) {
            *p = (base / *p).lexically_normal().string();
        }
    }
}

inline AlignedDataset load_dataset(const RunConfig& c, std::ostream& err) {
    AlignedDataset d;
    if (!c.data.empty()) {
        d = ingest::read_canonical(c.data);
    } else {
        if (c.gcb.empty()) {
            throw UsageError("no input data: pass --data or --gcb and --soi");
        }
        if (c.soi.empty()) {
            throw SchemaError("SOI file required (--soi)");
        }
        const auto raw = ingest::load_gcb(c.gcb);
        const auto soi = ingest::load_soi(c.soi, c.first_year, c.last_year);
        d = ingest::align(raw, soi, c.first_year, c.last_year);
    }
    const auto report = ingest::validate(d);
    report.write(err);
    if (!report.ok()) {
        throw AlignmentError("dataset failed validation");
    }
    return d;
}

inline int variable_index(const std::string& name) {
    for (int v = 0; v < 4; ++v) {
        if (name == kVariableNames[v]) {
            return v;
        }
    }
    throw UsageError("unknown variable '" + name + "' (expected sL, sO, E or C)");
}

inline fs::path out_path(const RunConfig& c, const std::string& name) {
    fs::create_directories(c.out_dir);
    return fs::path(c.out_dir) / name;
}

inline void write_json(const fs::path& path, const json& j) {
    std::ofstream os(path);
    if (!os) {
        throw Error("cannot write " + path.string());
    }
    os << j.dump(2) << '\n';
}

inline const char* diff_label(int v) {
    static const char* labels[] = {"dsL", "dsO", "dE", "dC"};
    return labels[v];
}

inline std::string spec_title(const VecmSpec& s) {
    return fmt::format("{} SOI, k={} lag{}", s.include_soi ? "With" : "No", s.lagged_differences,
                       s.lagged_differences == 1 ? "" : "s");
}

inline void print_trace(std::ostream& os, const VecmSpec& spec, const TraceTestResult& r) {
    fmt::print(os, "{:^60}\n", spec_title(spec));
    fmt::print(os, "{:>3} {:>5} {:>11} {:>9} {:>12} {:>9}\n", "r", "p-r", "Eigenvalue", "Trace", "5% critical",
               "P-value");
    const auto p = static_cast<int>(r.eigenvalues.size());
    for (int i = 0; i < p; ++i) {
        fmt::print(os, "{:>3} {:>5} {:>11.4f} {:>9.2f} {:>12.2f} {:>9.3f}\n", i, p - i, r.eigenvalues(i),
                   r.trace_stats[static_cast<std::size_t>(i)], r.critical_5pct[static_cast<std::size_t>(i)],
                   r.p_values[static_cast<std::size_t>(i)]);
    }
    fmt::print(os, "selected rank: {}\n\n", r.selected_rank);
}

inline void print_diagnostics(std::ostream& os, const std::string& title, const DiagnosticsTable& t) {
    fmt::print(os, "{:^70}\n", title);
    fmt::print(os, "{:<8} {:>8} {:>8} {:>8} {:>8} {:>8} {:>8}\n", "Variable", "Std Dev", "Skew", "Kurt", "JB",
               "LB(5)", "LB(10)");
    for (const auto& r : t.rows) {
        if (r.error) {
            fmt::print(os, "{:<8} error: {}\n", r.label, *r.error);
            continue;
        }
        fmt::print(os, "{:<8} {:>8.3f} {:>8.3f} {:>8.3f} {:>8.3f} {:>8.3f} {:>8.3f}\n", r.label, r.std_dev,
                   r.skewness, r.kurtosis, r.jb_p, r.lb5_p, r.lb10_p);
    }
    if (t.system_row.error) {
        fmt::print(os, "{:<8} error: {}\n\n", "System", *t.system_row.error);
    } else {
        fmt::print(os, "{:<8} {:>8} {:>8} {:>8} {:>8.3f} {:>8.3f} {:>8.3f}\n\n", "System", "", "", "",
                   t.system_row.jb_p, t.system_row.lb5_p, t.system_row.lb10_p);
    }
}

inline FitOptions fit_options(const RunConfig& c) {
    FitOptions o;
    o.n_starts = c.n_starts;
    o.seed = c.seed;
    return o;
}

struct RestrictedRun {
    StructuralFit fit;
    VecmEstimate benchmark;
    LrTestResult lr;
};

inline RestrictedRun run_restricted(const RunConfig& c, const AlignedDataset& d) {
    RestrictedRun out;
    out.fit = structural::fit_mle(d, fit_options(c));
    const SeMethod method = c.se_method == "sandwich" ? SeMethod::Sandwich : SeMethod::Hessian;
    try {
        out.fit.se = structural::standard_errors(out.fit, d, method);
    } catch (const ConditioningError&) {
        if (out.fit.converged) {
            throw;
        }
        out.fit.se = VectorXd::Constant(StructuralTheta::kSize, std::numeric_limits<double>::quiet_NaN());
    }
    out.benchmark = cvar::estimate(d, {3, 1, true});
    out.lr = structural::lr_restricted_vs_benchmark(out.fit, out.benchmark);
    return out;
}

inline void write_residual_csv(const fs::path& path, const std::vector<int>& years, const MatrixXd& u,
                               const MatrixXd* eps) {
    std::ofstream os(path);
    os << "year,u_sL,u_sO,u_E,u_C";
    if (eps != nullptr) {
        os << ",eps_sL,eps_sO,eps_E,eps_C";
    }
    os << '\n';
    for (Eigen::Index i = 0; i < u.rows(); ++i) {
        os << years[static_cast<std::size_t>(i)];
        for (Eigen::Index j = 0; j < u.cols(); ++j) {
            os << ',' << csv::exact(u(i, j));
        }
        if (eps != nullptr) {
            for (Eigen::Index j = 0; j < eps->cols(); ++j) {
                os << ',' << csv::exact((*eps)(i, j));
            }
        }
        os << '\n';
    }
}

inline MatrixXd read_residual_csv(const std::string& path) {
    const auto table = csv::read_file(path);
    std::vector<std::size_t> cols;
    for (std::size_t j = 0; j < table.header.size(); ++j) {
        if (table.header[j].rfind("u_", 0) == 0) {
            cols.push_back(j);
        }
    }
    if (cols.empty()) {
        for (std::size_t j = 0; j < table.header.size(); ++j) {
            if (csv::lower(table.header[j]) != "year") {
                cols.push_back(j);
            }
        }
    }
    MatrixXd u(static_cast<Eigen::Index>(table.rows.size()), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        for (std::size_t k = 0; k < cols.size(); ++k) {
            if (cols[k] >= table.rows[i].size()) {
                throw ParseError("short row", table.line_numbers[i], cols[k] + 1);
            }
            u(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
                csv::parse_number(table.rows[i][cols[k]], table.line_numbers[i], cols[k] + 1);
        }
    }
    return u;
}

}  // namespace detail

inline int cmd_ingest(const RunConfig& c, std::ostream& out, std::ostream& err) {
    const auto d = detail::load_dataset(c, err);
    const auto path = detail::out_path(c, "dataset.csv");
    ingest::write_canonical(path.string(), d);
    if (c.json_out) {
        out << json{{"dataset", path.string()},
                    {"first_year", d.first_year()},
                    {"last_year", d.last_year()},
                    {"rows", d.size()},
                    {"E_last", d.emissions.back()},
                    {"C_last", d.concentration.back()}}
                   .dump(2)
            << '\n';
    } else {
        fmt::print(out, "wrote {} ({} rows, {}-{})\n", path.string(), d.size(), d.first_year(), d.last_year());
        fmt::print(out, "E_{} = {:.4f} PgC/yr, C_{} = {:.2f} PgC ({:.2f} ppm)\n", d.last_year(), d.emissions.back(),
                   d.last_year(), d.concentration.back(), d.concentration.back() * Constants{}.ppm_per_pgc);
    }
    return kOk;
}

inline int cmd_rank_test(const RunConfig& c, std::ostream& out, std::ostream& err) {
    const auto d = detail::load_dataset(c, err);
    json all = json::array();
    for (int k : {0, 1}) {
        for (bool soi : {false, true}) {
            const VecmSpec spec{c.rank, k, soi};
            const auto m = cvar::concentrate(d, spec);
            for (const auto& w : m.warnings) {
                err << "warning: " << w << '\n';
            }
            const auto r = cvar::trace_test(m);
            auto j = io::to_json(r);
            j["include_soi"] = soi;
            j["lagged_differences"] = k;
            all.push_back(j);
            if (!c.json_out) {
                detail::print_trace(out, spec, r);
            }
        }
    }
    detail::write_json(detail::out_path(c, "rank_test.json"), all);
    if (c.json_out) {
        out << all.dump(2) << '\n';
    }
    return kOk;
}

inline int cmd_fit(const RunConfig& c, std::ostream& out, std::ostream& err) {
    const auto d = detail::load_dataset(c, err);
    if (c.model == "benchmark") {
        const VecmSpec spec{c.rank, c.k, c.include_soi};
        const auto m = cvar::concentrate(d, spec);
        const auto est = cvar::solve_rrr(m, c.rank);
        const auto j = io::to_json(est);
        detail::write_json(detail::out_path(c, "fit_benchmark.json"), j);
        const std::vector<int> years(d.years.begin() + est.first_row, d.years.end());
        detail::write_residual_csv(detail::out_path(c, "residuals_benchmark.csv"), years, est.residuals, nullptr);
        if (c.json_out) {
            out << j.dump(2) << '\n';
        } else {
            fmt::print(out, "Unrestricted VECM ({}, r={}), T={}\n", detail::spec_title(spec), c.rank, est.T);
            fmt::print(out, "loglik = {:.3f}\nfree parameters = {}\n", est.loglik, est.n_free_params);
        }
        return kOk;
    }
    if (c.model != "restricted") {
        throw UsageError("--model must be benchmark or restricted");
    }
    const auto run = detail::run_restricted(c, d);
    const auto& fit = run.fit;
    const auto model = proj::make_projection_model(fit, d);
    auto j = io::to_json(fit, model);
    j["lr_vs_benchmark"] = io::to_json(run.lr);
    j["se_method"] = c.se_method;
    detail::write_json(detail::out_path(c, "fit_restricted.json"), j);
    detail::write_residual_csv(detail::out_path(c, "residuals_restricted.csv"), fit.years, fit.residuals_u,
                               &fit.residuals_eps);
    const auto s = system_data(d);
    const MatrixXd fitted = structural::fitted_differences(fit, s.levels);
    {
        std::ofstream os(detail::out_path(c, "fitted_differences.csv"));
        os << "year,actual_dsL,fitted_dsL,actual_dsO,fitted_dsO,actual_dE,fitted_dE,actual_dC,fitted_dC\n";
        std::ofstream plot(detail::out_path(c, "plot_fitted_differences.csv"));
        plot << "variable,year,series,value\n";
        for (int i = 0; i < fit.T; ++i) {
            const int t = fit.first_row + i;
            os << fit.years[static_cast<std::size_t>(i)];
            for (int v = 0; v < 4; ++v) {
                const double actual = s.levels(t, v) - s.levels(t - 1, v);
                os << ',' << csv::exact(actual) << ',' << csv::exact(fitted(i, v));
                plot << detail::diff_label(v) << ',' << fit.years[static_cast<std::size_t>(i)] << ",actual,"
                     << csv::exact(actual) << '\n';
                plot << detail::diff_label(v) << ',' << fit.years[static_cast<std::size_t>(i)] << ",fitted,"
                     << csv::exact(fitted(i, v)) << '\n';
            }
            os << '\n';
        }
    }
    if (c.json_out) {
        out << j.dump(2) << '\n';
    } else {
        fmt::print(out, "Restricted model, T={}\n", fit.T);
        fmt::print(out, "{:<10} {:>10} {:>15}\n", "Parameter", "Estimate", "Standard error");
        const VectorXd v = fit.theta.to_vector();
        for (int i = 0; i < StructuralTheta::kSize; ++i) {
            fmt::print(out, "{:<10} {:>10.4f} {:>15.4f}\n", StructuralTheta::kNames[static_cast<std::size_t>(i)],
                       v(i), fit.se(i));
        }
        fmt::print(out, "loglik = {:.3f} (benchmark {:.3f})\n", fit.loglik, run.benchmark.loglik);
        fmt::print(out, "LR vs benchmark = {:.3f}, df {}, p = {:.3f}\n", run.lr.statistic, run.lr.df, run.lr.p_value);
        fmt::print(out, "converged: {} ({} iterations, start {})\n", fit.converged ? "yes" : "no", fit.n_iter,
                   fit.start_index);
    }
    if (!fit.converged) {
        err << "error: optimizer did not converge; best point written to fit_restricted.json\n"
            << j.at("theta").dump(2) << '\n';
        return kNumerical;
    }
    return kOk;
}

inline int cmd_test(const RunConfig& c, std::ostream& out, std::ostream& err) {
    if (c.which != "all" && c.which != "exclusion" && c.which != "exogeneity") {
        throw UsageError("--which must be exclusion, exogeneity or all");
    }
    std::vector<int> vars{0, 1, 2, 3};
    if (!c.variable.empty()) {
        vars = {detail::variable_index(c.variable)};
    }
    const auto d = detail::load_dataset(c, err);
    const VecmSpec spec{3, 1, true};
    const auto m = cvar::concentrate(d, spec);
    json rows = json::array();
    if (!c.json_out) {
        fmt::print(out, "{:<9} {:>10} {:>8} {:>16} {:>8}\n", "Variable", "Exclusion", "P-value", "Weak exogeneity",
                   "P-value");
    }
    for (int v : vars) {
        json row{{"variable", kVariableNames[v]}};
        std::string ex_s = "", ex_p = "", we_s = "", we_p = "";
        if (c.which != "exogeneity") {
            const auto r = hyp::exclusion_test(m, spec.rank, v);
            row["exclusion"] = io::to_json(r);
            ex_s = fmt::format("{:.3f}", r.statistic);
            ex_p = fmt::format("{:.3f}", r.p_value);
        }
        if (c.which != "exclusion") {
            const auto r = hyp::weak_exogeneity_test(m, spec.rank, v);
            row["weak_exogeneity"] = io::to_json(r);
            we_s = fmt::format("{:.3f}", r.statistic);
            we_p = fmt::format("{:.3f}", r.p_value);
        }
        rows.push_back(row);
        if (!c.json_out) {
            fmt::print(out, "{:<9} {:>10} {:>8} {:>16} {:>8}\n", kVariableNames[v], ex_s, ex_p, we_s, we_p);
        }
    }
    detail::write_json(detail::out_path(c, "lr_tests.json"), rows);
    if (c.json_out) {
        out << rows.dump(2) << '\n';
    } else {
        fmt::print(out, "All statistics are asymptotically chi^2({}).\n", spec.rank);
    }
    return kOk;
}

inline int cmd_diagnose(const RunConfig& c, std::ostream& out, std::ostream& err) {
    const std::vector<std::string> labels{"dsL", "dsO", "dE", "dC"};
    json all = json::array();
    const auto emit = [&](const std::string& title, const DiagnosticsTable& t) {
        auto j = io::to_json(t);
        j["model"] = title;
        all.push_back(j);
        if (!c.json_out) {
            detail::print_diagnostics(out, title, t);
        }
    };
    if (!c.residuals.empty()) {
        const MatrixXd u = detail::read_residual_csv(c.residuals);
        if (u.rows() == 0 || u.cols() == 0) {
            throw UsageError("residual file is empty");
        }
        std::vector<std::string> l;
        for (Eigen::Index j = 0; j < u.cols(); ++j) {
            l.push_back(j < 4 ? labels[static_cast<std::size_t>(j)] : "u" + std::to_string(j));
        }
        emit("Residuals from " + c.residuals, diag::diagnostics_table(u, l, c.k));
    } else {
        const auto d = detail::load_dataset(c, err);
        if (c.all_specs) {
            for (int k : {0, 1}) {
                for (bool soi : {false, true}) {
                    const VecmSpec spec{c.rank, k, soi};
                    const auto est = cvar::estimate(d, spec);
                    emit("Unrestricted VAR, " + detail::spec_title(spec), diag::diagnostics_table(est.residuals, labels, k));
                }
            }
        } else if (c.model == "restricted") {
            StructuralFit fit = structural::fit_mle(d, detail::fit_options(c));
            emit("Restricted model", diag::diagnostics_table(fit.residuals_u, labels, 1));
        } else if (c.model == "benchmark") {
            const VecmSpec spec{c.rank, c.k, c.include_soi};
            const auto est = cvar::estimate(d, spec);
            emit("Unrestricted VAR, " + detail::spec_title(spec), diag::diagnostics_table(est.residuals, labels, c.k));
        } else {
            throw UsageError("--model must be benchmark or restricted");
        }
    }
    detail::write_json(detail::out_path(c, "diagnostics.json"), all);
    if (c.json_out) {
        out << all.dump(2) << '\n';
    }
    return kOk;
}

inline int cmd_project(const RunConfig& c, std::ostream& out, std::ostream& err) {
    if (c.scenario.empty()) {
        throw UsageError("--scenario is required");
    }
    ProjectionModel model;
    if (!c.fit.empty()) {
        model = io::projection_model_from_json(io::read_json_file(c.fit));
    } else {
        const auto d = detail::load_dataset(c, err);
        const auto fit = structural::fit_mle(d, detail::fit_options(c));
        if (!fit.converged) {
            err << "error: restricted fit did not converge\n";
            return kNumerical;
        }
        model = proj::make_projection_model(fit, d);
    }
    const auto unit = csv::lower(c.scenario_unit) == "gtco2" ? ingest::EmissionUnit::GtCO2 : ingest::EmissionUnit::PgC;
    const auto scenario = ingest::load_scenario(c.scenario, c.scenario_name, model.anchor.year + 1, unit);

    ProjectionOptions opt;
    opt.n_paths = c.n_paths;
    opt.seed = c.seed;
    opt.last_year = c.horizon;
    opt.workers = c.workers;
    if (c.soi_mode == "zero") {
        opt.soi_mode = SoiMode::Zero;
    } else if (c.soi_mode == "bootstrap") {
        opt.soi_mode = SoiMode::Bootstrap;
    } else {
        throw UsageError("--soi-mode must be zero or bootstrap");
    }
    if (c.shocks == "gaussian") {
        opt.shocks = ShockLaw::StructuralGaussian;
    } else if (c.shocks == "diagonal") {
        opt.shocks = ShockLaw::Diagonal;
    } else if (c.shocks == "off") {
        opt.shocks = ShockLaw::Off;
    } else {
        throw UsageError("--shocks must be gaussian, diagonal or off");
    }

    std::vector<std::pair<std::string, FeedbackSpec>> levels;
    if (c.p_land || c.p_ocean) {
        levels.emplace_back("custom", proj::make_feedback(c.p_land.value_or(0.0), c.p_ocean.value_or(0.0)));
    } else {
        for (const auto& name : c.feedback) {
            if (name == "none") {
                levels.emplace_back(name, proj::make_feedback(0.0, 0.0));
            } else if (name == "low") {
                levels.emplace_back(name, proj::make_feedback(0.25, 0.25));
            } else if (name == "high") {
                levels.emplace_back(name, proj::make_feedback(0.5, 0.5));
            } else {
                throw UsageError("unknown feedback level '" + name + "'");
            }
        }
    }

    std::vector<std::pair<int, double>> overlay;
    if (!c.overlay.empty()) {
        const auto t = csv::read_file(c.overlay, false);
        for (std::size_t i = 0; i < t.rows.size(); ++i) {
            if (t.rows[i].size() < 2 || !ingest::detail::looks_numeric(t.rows[i][0])) {
                continue;
            }
            overlay.emplace_back(static_cast<int>(csv::parse_number(t.rows[i][0], t.line_numbers[i], 1)),
                                 csv::parse_number(t.rows[i][1], t.line_numbers[i], 2));
        }
    }

    static const char* qnames[] = {"q2.5", "q50", "q97.5"};
    std::ofstream plot(detail::out_path(c, "plot_projection.csv"));
    plot << "variable,year,series,value\n";
    json meta{{"seed", c.seed},
              {"n_paths", c.n_paths},
              {"soi_mode", c.soi_mode},
              {"shocks", c.shocks},
              {"scenario", c.scenario_name},
              {"last_year", c.horizon},
              {"runs", json::array()}};
    if (!c.json_out) {
        fmt::print(out, "Scenario {} ({} paths, seed {})\n", c.scenario_name, c.n_paths, c.seed);
        fmt::print(out, "{:<8} {:>6} {:>6} {:>12} {:>12} {:>12}\n", "feedback", "p1", "p2",
                   fmt::format("C_{} q2.5", c.horizon), "q50", "q97.5");
    }
    for (const auto& [name, fb] : levels) {
        const auto r = proj::project(model, scenario, fb, opt);
        json files = json::array();
        for (int v = 0; v < 4; ++v) {
            const auto fname = fmt::format("fan_{}_{}.csv", name, kVariableNames[v]);
            std::ofstream os(detail::out_path(c, fname));
            os << "year,q2.5,q50,q97.5\n";
            for (std::size_t y = 0; y < r.years.size(); ++y) {
                os << r.years[y];
                for (std::size_t q = 0; q < r.probs.size(); ++q) {
                    const double val = r.bands[static_cast<std::size_t>(v)][q][y];
                    os << ',' << csv::fixed(val);
                    plot << kVariableNames[v] << ',' << r.years[y] << ',' << name << '_' << qnames[q] << ','
                         << csv::fixed(val) << '\n';
                }
                os << '\n';
            }
            files.push_back(fname);
        }
        meta["runs"].push_back({{"feedback", name},
                                {"p_land", fb.p1},
                                {"p_ocean", fb.p2},
                                {"gamma_land", fb.gamma1},
                                {"gamma_ocean", fb.gamma2},
                                {"files", files},
                                {"n_singular", r.n_singular},
                                {"n_negative_concentration", r.n_negative_concentration},
                                {"C_last", {r.bands[3][0].back(), r.bands[3][1].back(), r.bands[3][2].back()}}});
        if (!c.json_out) {
            fmt::print(out, "{:<8} {:>6.2f} {:>6.2f} {:>12.2f} {:>12.2f} {:>12.2f}\n", name, fb.p1, fb.p2,
                       r.bands[3][0].back(), r.bands[3][1].back(), r.bands[3][2].back());
        }
    }
    for (const auto& [year, value] : overlay) {
        plot << "C," << year << ",overlay," << csv::fixed(value) << '\n';
    }
    detail::write_json(detail::out_path(c, "projection_meta.json"), meta);
    if (c.json_out) {
        out << meta.dump(2) << '\n';
    }
    return kOk;
}

/// Parses `argv` and dispatches to a subcommand. Returns the process exit code.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"Cointegrated carbon-budget estimation, testing and projection"};
    app.require_subcommand(1);
    app.fallthrough();

    RunConfig flags;
    std::string config_path;
    app.add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
    auto* o_out = app.add_option("--out-dir", flags.out_dir, "Directory for output files");
    auto* o_json = app.add_flag("--json", flags.json_out, "Machine-readable output on stdout");
    auto* o_seed = app.add_option("--seed", flags.seed, "Random seed");
    auto* o_gcb = app.add_option("--gcb", flags.gcb, "GCB global budget CSV");
    auto* o_soi = app.add_option("--soi", flags.soi, "SOI CSV (annual or monthly rows)");
    auto* o_data = app.add_option("--data", flags.data, "Canonical dataset CSV (replaces --gcb/--soi)");
    auto* o_first = app.add_option("--first-year", flags.first_year, "First sample year");
    auto* o_last = app.add_option("--last-year", flags.last_year, "Last sample year");

    auto* ingest = app.add_subcommand("ingest", "Align GCB and SOI files into the canonical dataset");
    auto* rank = app.add_subcommand("rank-test", "Johansen trace tests for the four specifications");
    auto* fit = app.add_subcommand("fit", "Estimate the benchmark VECM or the restricted model");
    auto* test = app.add_subcommand("test", "Variable exclusion and weak exogeneity LR tests");
    auto* diagnose = app.add_subcommand("diagnose", "Residual diagnostics");
    auto* project = app.add_subcommand("project", "Monte Carlo projections under an emissions scenario");

    std::vector<CLI::Option*> opts;
    opts.push_back(fit->add_option("--model", flags.model, "benchmark or restricted"));
    opts.push_back(fit->add_option("-k,--lags", flags.k, "Lagged differences (benchmark)"));
    opts.push_back(fit->add_option("--rank", flags.rank, "Cointegration rank (benchmark)"));
    bool no_soi = false;
    auto* o_nosoi = fit->add_flag("--no-soi", no_soi, "Exclude SOI (benchmark)");
    opts.push_back(fit->add_option("--n-starts", flags.n_starts, "Optimizer starts"));
    opts.push_back(fit->add_option("--se", flags.se_method, "hessian or sandwich"));
    opts.push_back(test->add_option("--which", flags.which, "exclusion, exogeneity or all"));
    opts.push_back(test->add_option("--variable", flags.variable, "sL, sO, E or C"));
    opts.push_back(diagnose->add_option("--model", flags.model, "benchmark or restricted"));
    opts.push_back(diagnose->add_option("-k,--lags", flags.k, "Lagged differences (benchmark)"));
    bool no_soi_d = false;
    auto* o_nosoi_d = diagnose->add_flag("--no-soi", no_soi_d, "Exclude SOI (benchmark)");
    opts.push_back(diagnose->add_flag("--all-specs", flags.all_specs, "All four unrestricted specifications"));
    opts.push_back(diagnose->add_option("--residuals", flags.residuals, "Residual CSV to diagnose"));
    opts.push_back(project->add_option("--fit", flags.fit, "Restricted fit JSON (fit on the fly if absent)"));
    opts.push_back(project->add_option("--scenario", flags.scenario, "Emissions scenario CSV"));
    opts.push_back(project->add_option("--scenario-name", flags.scenario_name, "Scenario label"));
    opts.push_back(project->add_option("--scenario-unit", flags.scenario_unit, "PgC or GtCO2"));
    opts.push_back(project->add_option("--n-paths", flags.n_paths, "Number of simulated paths"));
    opts.push_back(project->add_option("--feedback", flags.feedback, "Feedback levels: none, low, high")->delimiter(','));
    auto* o_pl = project->add_option("--p-land", flags.p_land, "Land sink weakening by mid-century");
    auto* o_po = project->add_option("--p-ocean", flags.p_ocean, "Ocean sink weakening by mid-century");
    opts.push_back(project->add_option("--soi-mode", flags.soi_mode, "zero or bootstrap"));
    opts.push_back(project->add_option("--shocks", flags.shocks, "gaussian, diagonal or off"));
    opts.push_back(project->add_option("--horizon", flags.horizon, "Last projected year"));
    opts.push_back(project->add_option("--workers", flags.workers, "Worker threads"));
    opts.push_back(project->add_option("--overlay", flags.overlay, "External concentration path (year, PgC)"));
    opts.push_back(project->add_option("--n-starts", flags.n_starts, "Optimizer starts for on-the-fly fits"));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kUsage;
    }

    try {
        RunConfig c;
        if (!config_path.empty()) {
            detail::apply_config_file(c, config_path);
        }
        const auto take = [&](CLI::Option* o, auto& dst, const auto& src) {
            if (o->count() > 0) {
                dst = src;
            }
        };
        take(o_out, c.out_dir, flags.out_dir);
        take(o_json, c.json_out, flags.json_out);
        take(o_seed, c.seed, flags.seed);
        take(o_gcb, c.gcb, flags.gcb);
        take(o_soi, c.soi, flags.soi);
        take(o_data, c.data, flags.data);
        take(o_first, c.first_year, flags.first_year);
        take(o_last, c.last_year, flags.last_year);
        take(o_pl, c.p_land, flags.p_land);
        take(o_po, c.p_ocean, flags.p_ocean);
        if (o_nosoi->count() > 0 || o_nosoi_d->count() > 0) {
            c.include_soi = !(no_soi || no_soi_d);
        }
        for (auto* o : opts) {
            if (o->count() == 0) {
                continue;
            }
            const std::string n = o->get_name();
            if (n == "--model") c.model = flags.model;
            else if (n == "-k" || n == "--lags") c.k = flags.k;
            else if (n == "--rank") c.rank = flags.rank;
            else if (n == "--n-starts") c.n_starts = flags.n_starts;
            else if (n == "--se") c.se_method = flags.se_method;
            else if (n == "--which") c.which = flags.which;
            else if (n == "--variable") c.variable = flags.variable;
            else if (n == "--all-specs") c.all_specs = flags.all_specs;
            else if (n == "--residuals") c.residuals = flags.residuals;
            else if (n == "--fit") c.fit = flags.fit;
            else if (n == "--scenario") c.scenario = flags.scenario;
            else if (n == "--scenario-name") c.scenario_name = flags.scenario_name;
            else if (n == "--scenario-unit") c.scenario_unit = flags.scenario_unit;
            else if (n == "--n-paths") c.n_paths = flags.n_paths;
            else if (n == "--feedback") c.feedback = flags.feedback;
            else if (n == "--soi-mode") c.soi_mode = flags.soi_mode;
            else if (n == "--shocks") c.shocks = flags.shocks;
            else if (n == "--horizon") c.horizon = flags.horizon;
            else if (n == "--workers") c.workers = flags.workers;
            else if (n == "--overlay") c.overlay = flags.overlay;
        }

        if (ingest->parsed()) return cmd_ingest(c, out, err);
        if (rank->parsed()) return cmd_rank_test(c, out, err);
        if (fit->parsed()) return cmd_fit(c, out, err);
        if (test->parsed()) return cmd_test(c, out, err);
        if (diagnose->parsed()) return cmd_diagnose(c, out, err);
        if (project->parsed()) return cmd_project(c, out, err);
        return kUsage;
    } catch (const NumericalRankError& e) {
        err << "numerical error: " << e.what() << '\n';
        return kNumerical;
    } catch (const ConditioningError& e) {
        err << "numerical error: " << e.what() << '\n';
        return kNumerical;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const json::exception& e) {
        err << "error: " << e.what() << '\n';
        return kUsage;
    }
}

}  // namespace gcb::cli
