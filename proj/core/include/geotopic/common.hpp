#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace geotopic {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration or arguments (CLI exit code 1).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed or insufficient input data (CLI exit code 2).
class DataError : public Error {
 public:
  using Error::Error;
};

/// Unknown identifier, e.g. a region id missing from the registry.
class LookupError : public Error {
 public:
  using Error::Error;
};

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view bytes,
                      std::uint64_t basis = 0xcbf29ce484222325ULL);

/// Derives an independent sub-seed from a master seed and a purpose tag.
/// Stable across platforms and runs.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view purpose);

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  const std::vector<double>& data() const { return data_; }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// A parsed CSV file with a header row. Supports double-quoted fields.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Index of a header column; throws DataError when absent.
  std::size_t column(std::string_view name) const;
};

CsvTable read_csv(const std::filesystem::path& path);
std::vector<std::string> split_csv_line(std::string_view line);

/// Quotes a CSV field when it contains a comma, quote or newline.
std::string csv_escape(std::string_view field);

/// Shortest decimal representation that round-trips to the same double.
std::string format_exact(double value);
/// Fixed-point representation with the given number of decimals.
std::string format_fixed(double value, int decimals);

double parse_double(std::string_view text, std::string_view what);
long long parse_int(std::string_view text, std::string_view what);

std::string trim(std::string_view s);

}  // namespace geotopic
