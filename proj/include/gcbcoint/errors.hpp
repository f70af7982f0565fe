#pragma once

#include <stdexcept>
#include <string>

namespace gcb {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Input file lacks a required column.
class SchemaError : public Error {
public:
    using Error::Error;
};

/// A cell could not be parsed as a number.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t row, std::size_t column)
        : Error(what + " (row " + std::to_string(row) + ", column " + std::to_string(column) + ")"),
          row_(row),
          column_(column) {}

    [[nodiscard]] std::size_t row() const noexcept { return row_; }
    [[nodiscard]] std::size_t column() const noexcept { return column_; }

private:
    std::size_t row_;
    std::size_t column_;
};

/// Year coverage or array lengths do not line up.
class AlignmentError : public Error {
public:
    using Error::Error;
};

/// Emissions scenario does not start right after the historical sample or has gaps.
class ScenarioAlignmentError : public AlignmentError {
public:
    using AlignmentError::AlignmentError;
};

/// A regressor or covariance matrix is (numerically) rank deficient.
class NumericalRankError : public Error {
public:
    using Error::Error;
};

/// Eigenvalues or Hessians outside the admissible region.
class ConditioningError : public Error {
public:
    using Error::Error;
};

/// Parameter outside its admissible domain.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Sample too short or samples of two models do not match.
class SampleError : public Error {
public:
    using Error::Error;
};

/// Degenerate input to a diagnostic (e.g. zero variance).
class DegenerateInputError : public Error {
public:
    using Error::Error;
};

}  // namespace gcb
