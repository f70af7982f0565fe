#pragma once

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "gcbcoint/errors.hpp"

namespace gcb::csv {

/// A parsed delimited text file: header cells plus raw data cells.
struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    /// 1-based line number of each data row in the source file.
    std::vector<std::size_t> line_numbers;
};

[[nodiscard]] inline std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n\"");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r\n\"");
    return std::string(s.substr(first, last - first + 1));
}

[[nodiscard]] inline std::string lower(std::string s) {
    for (auto& c : s) {
        if (c >= 'A' && c <= 'Z') {
            c = static_cast<char>(c - 'A' + 'a');
        }
    }
    return s;
}

[[nodiscard]] inline std::vector<std::string> split_line(const std::string& line, char delim) {
    std::vector<std::string> out;
    std::string cell;
    bool quoted = false;
    for (char c : line) {
        if (c == '"') {
            quoted = !quoted;
        } else if (c == delim && !quoted) {
            out.push_back(trim(cell));
            cell.clear();
        } else {
            cell.push_back(c);
        }
    }
    out.push_back(trim(cell));
    return out;
}

/// Reads a comma-separated file. Blank lines and lines starting with '#' are skipped.
/// When `has_header` is false the header is left empty.
[[nodiscard]] inline Table read_stream(std::istream& in, bool has_header = true, char delim = ',') {
    Table table;
    std::string line;
    std::size_t lineno = 0;
    bool header_done = !has_header;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t.front() == '#') {
            continue;
        }
        auto cells = split_line(line, delim);
        if (!header_done) {
            table.header = std::move(cells);
            header_done = true;
            continue;
        }
        table.rows.push_back(std::move(cells));
        table.line_numbers.push_back(lineno);
    }
    return table;
}

[[nodiscard]] inline Table read_file(const std::string& path, bool has_header = true, char delim = ',') {
    std::ifstream in(path);
    if (!in) {
        throw SchemaError("cannot open file: " + path);
    }
    return read_stream(in, has_header, delim);
}

/// Parses a numeric cell; empty or "NA"/"NaN" cells report `missing = true`.
[[nodiscard]] inline double parse_number(const std::string& cell, std::size_t row, std::size_t column,
                                         bool* missing = nullptr) {
    const std::string l = lower(cell);
    if (cell.empty() || l == "na" || l == "nan") {
        if (missing != nullptr) {
            *missing = true;
            return 0.0;
        }
        throw ParseError("missing value", row, column);
    }
    double value = 0.0;
    const char* begin = cell.data();
    const char* end = cell.data() + cell.size();
    const auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc{} || ptr != end) {
        throw ParseError("non-numeric cell '" + cell + "'", row, column);
    }
    if (missing != nullptr) {
        *missing = false;
    }
    return value;
}

/// Fixed-precision formatting used by every CSV this library writes.
[[nodiscard]] inline std::string fixed(double value, int decimals = 6) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", decimals, value);
    return buf;
}

/// Shortest round-trip representation.
[[nodiscard]] inline std::string exact(double value) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, ptr);
}

}  // namespace gcb::csv
