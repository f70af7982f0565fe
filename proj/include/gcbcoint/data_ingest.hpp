#pragma once

#include <cmath>
#include <fstream>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "gcbcoint/csv.hpp"
#include "gcbcoint/errors.hpp"

namespace gcb {

/// Physical constants; PgC throughout.
struct Constants {
    double c_preindustrial = 593.0;   ///< atmospheric carbon in 1750
    double c_initial_1959 = 670.0;    ///< anchor of the concentration level series
    double ppm_per_pgc = 1.0 / 2.12;  ///< output-only unit transform
};

/// Annual levels of the system variables plus SOI on a contiguous block of years.
struct AlignedDataset {
    std::vector<int> years;
    std::vector<double> land_sink;      ///< S^L, PgC/yr
    std::vector<double> ocean_sink;     ///< S^O, PgC/yr
    std::vector<double> emissions;      ///< E, PgC/yr
    std::vector<double> concentration;  ///< C, PgC
    std::vector<double> soi;            ///< dimensionless

    [[nodiscard]] std::size_t size() const noexcept { return years.size(); }
    [[nodiscard]] int first_year() const { return years.front(); }
    [[nodiscard]] int last_year() const { return years.back(); }

    friend bool operator==(const AlignedDataset&, const AlignedDataset&) = default;
};

/// Exogenous emissions trajectory for the projection period.
struct EmissionScenario {
    std::string name;
    std::vector<int> years;
    std::vector<double> emissions;  ///< PgC/yr
};

namespace ingest {

inline constexpr double kGtCo2PerPgC = 3.664;

/// Columns of the GCB global budget table that the model uses. Missing cells are NaN.
struct GcbTable {
    std::vector<int> years;
    std::vector<double> fossil;
    std::vector<double> land_use;
    std::vector<double> cement_carbonation;
    std::vector<double> atmospheric_growth;
    std::vector<double> land_sink;
    std::vector<double> ocean_sink;

    [[nodiscard]] std::size_t size() const noexcept { return years.size(); }
};

namespace detail {

struct ColumnRule {
    const char* name;
    std::vector<const char*> keys;
};

inline std::size_t find_column(const std::vector<std::string>& header, const ColumnRule& rule) {
    for (std::size_t j = 0; j < header.size(); ++j) {
        if (csv::lower(header[j]) == rule.name) {
            return j;
        }
    }
    for (std::size_t j = 0; j < header.size(); ++j) {
        const std::string h = csv::lower(header[j]);
        for (const char* key : rule.keys) {
            if (h.find(key) != std::string::npos) {
                return j;
            }
        }
    }
    throw SchemaError("missing column: \"" + std::string(rule.name) + "\"");
}

inline int parse_year(const std::string& cell, std::size_t row, std::size_t col) {
    const double y = csv::parse_number(cell, row, col);
    if (y != std::floor(y)) {
        throw ParseError("year is not an integer: '" + cell + "'", row, col);
    }
    return static_cast<int>(y);
}

inline void require_contiguous(const std::vector<int>& years, const std::string& what) {
    for (std::size_t i = 1; i < years.size(); ++i) {
        if (years[i] != years[i - 1] + 1) {
            throw AlignmentError(what + ": years not contiguous between " + std::to_string(years[i - 1]) +
                                 " and " + std::to_string(years[i]));
        }
    }
}

inline bool looks_numeric(const std::string& cell) {
    try {
        (void)csv::parse_number(cell, 0, 0);
        return true;
    } catch (const ParseError&) {
        return false;
    }
}

}  // namespace detail

[[nodiscard]] inline GcbTable parse_gcb(const csv::Table& table) {
    using detail::ColumnRule;
    static const ColumnRule year{"year", {"year"}};
    static const ColumnRule fossil{"fossil emissions excluding carbonation", {"fossil"}};
    static const ColumnRule luc{"land-use change emissions", {"land-use", "land use", "luc"}};
    static const ColumnRule cement{"cement carbonation sink", {"carbonation", "cement"}};
    static const ColumnRule growth{"atmospheric growth", {"atmospheric growth", "growth"}};
    static const ColumnRule land{"land sink", {"land sink"}};
    static const ColumnRule ocean{"ocean sink", {"ocean sink"}};

    const std::size_t cy = detail::find_column(table.header, year);
    const std::size_t cf = detail::find_column(table.header, fossil);
    const std::size_t cl = detail::find_column(table.header, luc);
    const std::size_t cc = detail::find_column(table.header, cement);
    const std::size_t cg = detail::find_column(table.header, growth);
    const std::size_t cls = detail::find_column(table.header, land);
    const std::size_t cos = detail::find_column(table.header, ocean);

    GcbTable out;
    const auto value = [&](const std::vector<std::string>& row, std::size_t col, std::size_t line) {
        if (col >= row.size()) {
            return std::numeric_limits<double>::quiet_NaN();
        }
        bool missing = false;
        const double v = csv::parse_number(row[col], line, col + 1, &missing);
        return missing ? std::numeric_limits<double>::quiet_NaN() : v;
    };
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const auto& row = table.rows[i];
        const std::size_t line = table.line_numbers[i];
        if (cy >= row.size() || row[cy].empty()) {
            throw ParseError("missing year", line, cy + 1);
        }
        out.years.push_back(detail::parse_year(row[cy], line, cy + 1));
        out.fossil.push_back(value(row, cf, line));
        out.land_use.push_back(value(row, cl, line));
        out.cement_carbonation.push_back(value(row, cc, line));
        out.atmospheric_growth.push_back(value(row, cg, line));
        out.land_sink.push_back(value(row, cls, line));
        out.ocean_sink.push_back(value(row, cos, line));
    }
    return out;
}

/// Reads the CSV export of the GCB global budget sheet.
[[nodiscard]] inline GcbTable load_gcb(const std::string& path) { return parse_gcb(csv::read_file(path)); }

/// E_t = fossil_t + land-use_t - cement carbonation_t.
[[nodiscard]] inline std::vector<double> compose_emissions(const GcbTable& raw) {
    const std::size_t n = raw.fossil.size();
    if (raw.land_use.size() != n || raw.cement_carbonation.size() != n) {
        throw AlignmentError("compose_emissions: component columns differ in length");
    }
    std::vector<double> e(n);
    for (std::size_t i = 0; i < n; ++i) {
        e[i] = raw.fossil[i] + raw.land_use[i] - raw.cement_carbonation[i];
    }
    return e;
}

/// Concentration levels anchored at `constants.c_initial_1959` in the first row,
/// accumulated from the atmospheric-growth column thereafter.
[[nodiscard]] inline std::vector<double> build_concentration(const GcbTable& raw, const Constants& constants = {}) {
    const std::size_t n = raw.atmospheric_growth.size();
    std::vector<double> c(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (i == 0) {
            c[i] = constants.c_initial_1959;
            continue;
        }
        const double g = raw.atmospheric_growth[i];
        if (std::isnan(g)) {
            throw AlignmentError("build_concentration: missing atmospheric growth in " +
                                 (i < raw.years.size() ? std::to_string(raw.years[i]) : std::to_string(i)));
        }
        c[i] = c[i - 1] + g;
    }
    return c;
}

/// Annual SOI values keyed by year.
struct SoiSeries {
    std::vector<int> years;
    std::vector<double> values;
};

/// Reads an SOI file. Two layouts are accepted: (year, annual value) and
/// (year, 12 monthly values); monthly rows are averaged over the calendar year.
/// Values <= -99 are treated as missing. The result is restricted to [first, last]
/// and must cover it without gaps.
[[nodiscard]] inline SoiSeries parse_soi(const csv::Table& table, int first, int last) {
    std::vector<int> years;
    std::vector<double> values;
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const auto& row = table.rows[i];
        const std::size_t line = table.line_numbers[i];
        if (row.empty() || !detail::looks_numeric(row.front())) {
            if (i == 0) {
                continue;  // header
            }
            throw ParseError("non-numeric year '" + (row.empty() ? std::string() : row.front()) + "'", line, 1);
        }
        const int year = detail::parse_year(row[0], line, 1);
        std::vector<double> cells;
        for (std::size_t j = 1; j < row.size(); ++j) {
            if (row[j].empty()) {
                continue;
            }
            cells.push_back(csv::parse_number(row[j], line, j + 1));
        }
        if (cells.size() != 1 && cells.size() != 12) {
            throw SchemaError("SOI row for " + std::to_string(year) + " must hold 1 annual or 12 monthly values");
        }
        double sum = 0.0;
        bool missing = false;
        for (double v : cells) {
            missing = missing || v <= -99.0;
            sum += v;
        }
        if (year < first || year > last) {
            continue;
        }
        if (missing) {
            throw AlignmentError("SOI value missing in " + std::to_string(year));
        }
        years.push_back(year);
        values.push_back(sum / static_cast<double>(cells.size()));
    }
    if (years.empty() || years.front() != first || years.back() != last) {
        throw AlignmentError("SOI file does not cover " + std::to_string(first) + "-" + std::to_string(last));
    }
    detail::require_contiguous(years, "SOI");
    return {std::move(years), std::move(values)};
}

[[nodiscard]] inline SoiSeries load_soi(const std::string& path, int first = 1959, int last = 2022) {
    return parse_soi(csv::read_file(path, false), first, last);
}

enum class EmissionUnit { PgC, GtCO2 };

/// Reads a (year, emissions [, unit]) scenario file. A third column reading
/// "GtCO2" marks the row as GtCO2/yr; `unit` sets the default for rows without a flag.
[[nodiscard]] inline EmissionScenario parse_scenario(const csv::Table& table, std::string name, int first_year,
                                                     EmissionUnit unit = EmissionUnit::PgC,
                                                     std::optional<int> last_year = std::nullopt) {
    EmissionScenario s;
    s.name = std::move(name);
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const auto& row = table.rows[i];
        const std::size_t line = table.line_numbers[i];
        if (row.empty() || !detail::looks_numeric(row.front())) {
            if (i == 0) {
                continue;
            }
            throw ParseError("non-numeric year", line, 1);
        }
        if (row.size() < 2) {
            throw SchemaError("scenario row lacks an emissions value (line " + std::to_string(line) + ")");
        }
        const int year = detail::parse_year(row[0], line, 1);
        if (year < first_year || (last_year && year > *last_year)) {
            continue;
        }
        double value = csv::parse_number(row[1], line, 2);
        EmissionUnit row_unit = unit;
        if (row.size() >= 3 && !row[2].empty()) {
            const std::string flag = csv::lower(row[2]);
            if (flag == "gtco2") {
                row_unit = EmissionUnit::GtCO2;
            } else if (flag == "pgc" || flag == "gtc") {
                row_unit = EmissionUnit::PgC;
            } else {
                throw ParseError("unknown unit flag '" + row[2] + "'", line, 3);
            }
        }
        if (row_unit == EmissionUnit::GtCO2) {
            value /= kGtCo2PerPgC;
        }
        s.years.push_back(year);
        s.emissions.push_back(value);
    }
    if (s.years.empty() || s.years.front() != first_year) {
        throw ScenarioAlignmentError("scenario '" + s.name + "' must start in " + std::to_string(first_year));
    }
    for (std::size_t i = 1; i < s.years.size(); ++i) {
        if (s.years[i] != s.years[i - 1] + 1) {
            throw ScenarioAlignmentError("scenario '" + s.name + "' has a gap after " + std::to_string(s.years[i - 1]));
        }
    }
    return s;
}

[[nodiscard]] inline EmissionScenario load_scenario(const std::string& path, std::string name, int first_year = 2023,
                                                    EmissionUnit unit = EmissionUnit::PgC) {
    return parse_scenario(csv::read_file(path, false), std::move(name), first_year, unit);
}

/// Outcome of `validate`: hard errors break dataset invariants, notes are informational.
struct ValidationReport {
    std::vector<std::string> errors;
    std::vector<std::string> notes;

    [[nodiscard]] bool ok() const noexcept { return errors.empty(); }

    void write(std::ostream& os) const {
        for (const auto& e : errors) {
            os << "error: " << e << '\n';
        }
        for (const auto& n : notes) {
            os << "note: " << n << '\n';
        }
    }
};

[[nodiscard]] inline ValidationReport validate(const AlignedDataset& d) {
    ValidationReport r;
    const std::size_t n = d.years.size();
    if (d.land_sink.size() != n || d.ocean_sink.size() != n || d.emissions.size() != n ||
        d.concentration.size() != n || d.soi.size() != n) {
        r.errors.emplace_back("columns differ in length");
        return r;
    }
    if (n == 0) {
        r.errors.emplace_back("dataset is empty");
        return r;
    }
    for (std::size_t i = 1; i < n; ++i) {
        if (d.years[i] != d.years[i - 1] + 1) {
            r.errors.push_back("years not contiguous at " + std::to_string(d.years[i]));
        }
    }
    const std::vector<const std::vector<double>*> cols{&d.land_sink, &d.ocean_sink, &d.emissions, &d.concentration,
                                                       &d.soi};
    static const char* names[] = {"sL", "sO", "E", "C", "soi"};
    for (std::size_t c = 0; c < cols.size(); ++c) {
        for (std::size_t i = 0; i < n; ++i) {
            if (!std::isfinite((*cols[c])[i])) {
                r.errors.push_back(std::string("missing ") + names[c] + " in " + std::to_string(d.years[i]));
            }
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (!(d.concentration[i] > 0.0)) {
            r.errors.push_back("concentration not positive in " + std::to_string(d.years[i]));
        }
        if (i > 0 && !(d.concentration[i] > d.concentration[i - 1])) {
            r.errors.push_back("concentration not increasing in " + std::to_string(d.years[i]));
        }
    }
    r.notes.push_back("years " + std::to_string(d.years.front()) + "-" + std::to_string(d.years.back()) + " (" +
                      std::to_string(n) + " rows)");
    return r;
}

/// Restricts the GCB table to [first, last], joins SOI and builds the canonical dataset.
[[nodiscard]] inline AlignedDataset align(const GcbTable& raw, const SoiSeries& soi, int first = 1959, int last = 2022,
                                          const Constants& constants = {}) {
    GcbTable sub;
    for (std::size_t i = 0; i < raw.size(); ++i) {
        if (raw.years[i] < first || raw.years[i] > last) {
            continue;
        }
        sub.years.push_back(raw.years[i]);
        sub.fossil.push_back(raw.fossil[i]);
        sub.land_use.push_back(raw.land_use[i]);
        sub.cement_carbonation.push_back(raw.cement_carbonation[i]);
        sub.atmospheric_growth.push_back(raw.atmospheric_growth[i]);
        sub.land_sink.push_back(raw.land_sink[i]);
        sub.ocean_sink.push_back(raw.ocean_sink[i]);
    }
    if (sub.years.empty() || sub.years.front() != first || sub.years.back() != last) {
        throw AlignmentError("GCB table does not cover " + std::to_string(first) + "-" + std::to_string(last));
    }
    detail::require_contiguous(sub.years, "GCB table");
    if (soi.years.size() != sub.years.size() || soi.years.front() != first) {
        throw AlignmentError("SOI series does not match the GCB years");
    }

    AlignedDataset d;
    d.years = sub.years;
    d.land_sink = sub.land_sink;
    d.ocean_sink = sub.ocean_sink;
    d.emissions = compose_emissions(sub);
    d.concentration = build_concentration(sub, constants);
    d.soi = soi.values;
    const auto report = validate(d);
    if (!report.ok()) {
        throw AlignmentError("aligned dataset invalid: " + report.errors.front());
    }
    return d;
}

inline constexpr const char* kCanonicalHeader = "year,sL,sO,E,C,soi";

/// Canonical CSV with 6-decimal fixed precision.
inline void write_canonical(std::ostream& os, const AlignedDataset& d) {
    os << kCanonicalHeader << '\n';
    for (std::size_t i = 0; i < d.size(); ++i) {
        os << d.years[i] << ',' << csv::fixed(d.land_sink[i]) << ',' << csv::fixed(d.ocean_sink[i]) << ','
           << csv::fixed(d.emissions[i]) << ',' << csv::fixed(d.concentration[i]) << ',' << csv::fixed(d.soi[i])
           << '\n';
    }
}

inline void write_canonical(const std::string& path, const AlignedDataset& d) {
    std::ofstream os(path);
    if (!os) {
        throw Error("cannot write " + path);
    }
    write_canonical(os, d);
}

[[nodiscard]] inline AlignedDataset parse_canonical(const csv::Table& table) {
    static const char* cols[] = {"year", "sl", "so", "e", "c", "soi"};
    std::size_t idx[6];
    for (std::size_t k = 0; k < 6; ++k) {
        bool found = false;
        for (std::size_t j = 0; j < table.header.size(); ++j) {
            if (csv::lower(table.header[j]) == cols[k]) {
                idx[k] = j;
                found = true;
                break;
            }
        }
        if (!found) {
            throw SchemaError(std::string("missing column: \"") + cols[k] + "\"");
        }
    }
    AlignedDataset d;
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const auto& row = table.rows[i];
        const std::size_t line = table.line_numbers[i];
        const auto cell = [&](std::size_t k) -> const std::string& {
            if (idx[k] >= row.size()) {
                throw ParseError("short row", line, idx[k] + 1);
            }
            return row[idx[k]];
        };
        d.years.push_back(detail::parse_year(cell(0), line, idx[0] + 1));
        d.land_sink.push_back(csv::parse_number(cell(1), line, idx[1] + 1));
        d.ocean_sink.push_back(csv::parse_number(cell(2), line, idx[2] + 1));
        d.emissions.push_back(csv::parse_number(cell(3), line, idx[3] + 1));
        d.concentration.push_back(csv::parse_number(cell(4), line, idx[4] + 1));
        d.soi.push_back(csv::parse_number(cell(5), line, idx[5] + 1));
    }
    detail::require_contiguous(d.years, "canonical dataset");
    return d;
}

[[nodiscard]] inline AlignedDataset read_canonical(std::istream& in) { return parse_canonical(csv::read_stream(in)); }

[[nodiscard]] inline AlignedDataset read_canonical(const std::string& path) {
    return parse_canonical(csv::read_file(path));
}

}  // namespace ingest
}  // namespace gcb
