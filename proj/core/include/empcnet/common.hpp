#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace empcnet {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Bounds at or beyond this magnitude are treated as absent.
inline constexpr double kInfiniteBound = 1e12;

// Base of every exception thrown by the library. `exit_code` follows the
// command-line contract so tools can forward it unchanged.
class Error : public std::runtime_error {
 public:
  Error(const std::string& what, int exit_code)
      : std::runtime_error(what), exit_code_(exit_code) {}
  int exit_code() const noexcept { return exit_code_; }

 private:
  int exit_code_;
};

// Malformed input: bad dimensions, invalid matrices, unreadable files.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(what, 4) {}
};

// Numerical breakdown: iteration limits, non-finite values, unbounded LPs.
class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what) : Error(what, 3) {}
};

inline bool all_finite(const Vec& v) { return v.allFinite(); }

}  // namespace empcnet
