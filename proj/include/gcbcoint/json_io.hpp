#pragma once

#include <fstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include <nlohmann/json.hpp>

#include "gcbcoint/cvar_core.hpp"
#include "gcbcoint/diagnostics.hpp"
#include "gcbcoint/hypothesis_tests.hpp"
#include "gcbcoint/projection.hpp"
#include "gcbcoint/structural_model.hpp"

namespace gcb::io {

using nlohmann::json;

template <typename Derived>
[[nodiscard]] json matrix_to_json(const Eigen::MatrixBase<Derived>& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            row.push_back(m(i, j));
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

template <typename Derived>
[[nodiscard]] json vector_to_json(const Eigen::MatrixBase<Derived>& v) {
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        out.push_back(v(i));
    }
    return out;
}

[[nodiscard]] inline Eigen::MatrixXd matrix_from_json(const json& j) {
    const auto rows = static_cast<Eigen::Index>(j.size());
    const auto cols = rows > 0 ? static_cast<Eigen::Index>(j.at(0).size()) : 0;
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        if (static_cast<Eigen::Index>(j.at(i).size()) != cols) {
            throw SchemaError("ragged matrix in JSON");
        }
        for (Eigen::Index k = 0; k < cols; ++k) {
            m(i, k) = j.at(i).at(k).get<double>();
        }
    }
    return m;
}

[[nodiscard]] inline json to_json(const VecmEstimate& e) {
    return json{{"model", "benchmark"},
                {"rank", e.spec.rank},
                {"lagged_differences", e.spec.lagged_differences},
                {"include_soi", e.soi_used},
                {"T", e.T},
                {"eigenvalues", vector_to_json(e.eigenvalues)},
                {"alpha", matrix_to_json(e.alpha)},
                {"beta", matrix_to_json(e.beta)},
                {"mu", vector_to_json(e.mu)},
                {"gamma1", matrix_to_json(e.gamma1)},
                {"phi_soi", vector_to_json(e.phi_soi)},
                {"sigma", matrix_to_json(e.sigma)},
                {"loglik", e.loglik},
                {"n_free_params", e.n_free_params}};
}

[[nodiscard]] inline json to_json(const TraceTestResult& r) {
    json rows = json::array();
    for (std::size_t i = 0; i < r.trace_stats.size(); ++i) {
        rows.push_back({{"r", i},
                        {"p_minus_r", r.eigenvalues.size() - static_cast<Eigen::Index>(i)},
                        {"eigenvalue", r.eigenvalues(static_cast<Eigen::Index>(i))},
                        {"trace", r.trace_stats[i]},
                        {"critical_5pct", r.critical_5pct[i]},
                        {"p_value", r.p_values[i]}});
    }
    return json{{"T", r.T}, {"rows", rows}, {"selected_rank", r.selected_rank}};
}

[[nodiscard]] inline json to_json(const LrTestResult& r) {
    return json{{"hypothesis", r.hypothesis},
                {"statistic", r.statistic},
                {"df", r.df},
                {"p_value", r.p_value},
                {"restricted_loglik", r.restricted_loglik},
                {"unrestricted_loglik", r.unrestricted_loglik}};
}

[[nodiscard]] inline json to_json(const StructuralTheta& th) {
    json j;
    const VectorXd v = th.to_vector();
    for (int i = 0; i < StructuralTheta::kSize; ++i) {
        j[StructuralTheta::kNames[static_cast<std::size_t>(i)]] = v(i);
    }
    return j;
}

[[nodiscard]] inline StructuralTheta theta_from_json(const json& j) {
    VectorXd v(StructuralTheta::kSize);
    for (int i = 0; i < StructuralTheta::kSize; ++i) {
        const char* name = StructuralTheta::kNames[static_cast<std::size_t>(i)];
        if (!j.contains(name)) {
            throw SchemaError(std::string("fit JSON lacks theta.") + name);
        }
        v(i) = j.at(name).get<double>();
    }
    return StructuralTheta::from_vector(v);
}

/// Restricted fit plus the anchor the projection engine needs.
[[nodiscard]] inline json to_json(const StructuralFit& fit, const ProjectionModel& anchor) {
    json se;
    for (Eigen::Index i = 0; i < fit.se.size(); ++i) {
        se[StructuralTheta::kNames[static_cast<std::size_t>(i)]] = fit.se(i);
    }
    return json{{"model", "restricted"},
                {"theta", to_json(fit.theta)},
                {"se", se},
                {"loglik", fit.loglik},
                {"T", fit.T},
                {"first_year", fit.years.empty() ? 0 : fit.years.front()},
                {"converged", fit.converged},
                {"n_iter", fit.n_iter},
                {"start_index", fit.start_index},
                {"gradient_norm", fit.gradient_norm},
                {"sigma_u", matrix_to_json(fit.sigma_u)},
                {"anchor",
                 {{"year", anchor.anchor.year},
                  {"sL", anchor.anchor.levels(kLandSink)},
                  {"sO", anchor.anchor.levels(kOceanSink)},
                  {"E", anchor.anchor.levels(kEmissions)},
                  {"C", anchor.anchor.levels(kConcentration)},
                  {"x1", anchor.anchor.x1},
                  {"x2", anchor.anchor.x2},
                  {"x4", anchor.anchor.x4}}},
                {"soi_history", anchor.soi_history}};
}

[[nodiscard]] inline ProjectionModel projection_model_from_json(const json& j) {
    if (j.value("model", std::string()) != "restricted") {
        throw SchemaError("fit JSON is not a restricted-model fit");
    }
    ProjectionModel m;
    m.theta = theta_from_json(j.at("theta"));
    const Eigen::MatrixXd sigma = matrix_from_json(j.at("sigma_u"));
    if (sigma.rows() != 4 || sigma.cols() != 4) {
        throw SchemaError("sigma_u must be 4 x 4");
    }
    m.sigma_u = sigma;
    const auto& a = j.at("anchor");
    m.anchor.year = a.at("year").get<int>();
    m.anchor.levels << a.at("sL").get<double>(), a.at("sO").get<double>(), a.at("E").get<double>(),
        a.at("C").get<double>();
    m.anchor.x1 = a.at("x1").get<double>();
    m.anchor.x2 = a.at("x2").get<double>();
    m.anchor.x4 = a.at("x4").get<double>();
    if (j.contains("soi_history")) {
        m.soi_history = j.at("soi_history").get<std::vector<double>>();
    }
    return m;
}

[[nodiscard]] inline json to_json(const DiagnosticsTable& t) {
    json rows = json::array();
    for (const auto& r : t.rows) {
        json row{{"label", r.label}};
        if (r.error) {
            row["error"] = *r.error;
        } else {
            row.update({{"std_dev", r.std_dev},
                        {"skewness", r.skewness},
                        {"kurtosis", r.kurtosis},
                        {"jb_p", r.jb_p},
                        {"lb5_p", r.lb5_p},
                        {"lb10_p", r.lb10_p}});
        }
        rows.push_back(std::move(row));
    }
    json sys;
    if (t.system_row.error) {
        sys["error"] = *t.system_row.error;
    } else {
        sys = {{"jb_p", t.system_row.jb_p}, {"lb5_p", t.system_row.lb5_p}, {"lb10_p", t.system_row.lb10_p}};
    }
    return json{{"rows", rows}, {"system", sys}};
}

[[nodiscard]] inline json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw SchemaError("cannot open " + path);
    }
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw SchemaError("invalid JSON in " + path + ": " + e.what());
    }
}

}  // namespace gcb::io
