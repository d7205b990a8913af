// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace adr {

// Exit codes used by the command-line tool. Each exception class below maps
// onto one of them.
enum class ExitCode : int { kOk = 0, kUsage = 1, kData = 2, kNumerical = 3 };

class Error : public std::runtime_error {
 public:
  Error(ExitCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ExitCode code() const noexcept { return code_; }

 private:
  ExitCode code_;
};

// Bad arguments, violated preconditions, incompatible shapes or configs.
class UsageError : public Error {
 public:
  explicit UsageError(const std::string& what) : Error(ExitCode::kUsage, what) {}
};

class DimensionError : public UsageError {
 public:
  using UsageError::UsageError;
};

// Malformed or inconsistent input files.
class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(ExitCode::kData, what) {}
};

// NaN/Inf in a loss or gradient.
class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what)
      : Error(ExitCode::kNumerical, what) {}
};

}  // namespace adr
