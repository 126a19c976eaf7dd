/**
 * @file error.hpp
 * @brief Exception types shared by every qpemerge module.
 *
 * Each error carries a category that the command line tool maps onto its
 * documented exit status (usage 1, data 2, numeric 3).
 */
#pragma once

#include <stdexcept>
#include <string>

namespace qpemerge {

enum class ErrorKind { Usage, Data, Numeric };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Malformed, inconsistent, or missing input data.
class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(ErrorKind::Data, what) {}
};

/// Non-finite values or divergence during numeric work.
class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what) : Error(ErrorKind::Numeric, what) {}
};

/// Bad arguments or configuration.
class UsageError : public Error {
 public:
  explicit UsageError(const std::string& what) : Error(ErrorKind::Usage, what) {}
};

/// A verification metric has no defined value for the given samples
/// (zero variance, zero observed total, no events).
class UndefinedMetric : public DataError {
 public:
  explicit UndefinedMetric(const std::string& what) : DataError(what) {}
};

}  // namespace qpemerge
