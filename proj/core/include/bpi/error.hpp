#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace bpi {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A caller violated a documented precondition (bad k, bad fraction, ...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Malformed CSV or JSON input. `row` is 1-based; 0 when not applicable.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t row)
      : Error(row == 0 ? what : "row " + std::to_string(row) + ": " + what),
        row_(row) {}
  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

/// The data violate the continuous-density model (duplicates, zero radii,
/// non-finite plug-in values). `point` is the offending evaluation index.
class DataQualityError : public Error {
 public:
  DataQualityError(const std::string& what, std::size_t point)
      : Error(what), point_(point) {}
  std::size_t point() const noexcept { return point_; }

 private:
  std::size_t point_;
};

/// The boundary detector labelled every evaluation point as boundary.
class NoInteriorPoints : public Error {
 public:
  NoInteriorPoints()
      : Error("no interior points; increase T or adjust config") {}
};

}  // namespace bpi
