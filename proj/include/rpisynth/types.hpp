#pragma once

#include <Eigen/Dense>

#include <limits>
#include <stdexcept>
#include <string>

namespace rpisynth {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

constexpr double kInf = std::numeric_limits<double>::infinity();

/// Base class for every error raised by the library. `exit_code()` maps the
/// failure class onto the CLI exit status.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
  virtual int exit_code() const { return 1; }
};

/// Malformed input: dimension mismatch, bad document, bad option.
class InputError : public Error {
 public:
  using Error::Error;
  int exit_code() const override { return 2; }
};

/// A standing assumption does not hold (unstable A, g <= 0, s_max exceeded).
class AssumptionError : public Error {
 public:
  using Error::Error;
  int exit_code() const override { return 3; }
};

/// An LP came back with a status the caller cannot continue from.
class SolverError : public Error {
 public:
  using Error::Error;
  int exit_code() const override { return 4; }
};

namespace detail {
inline void require(bool ok, const char* msg) {
  if (!ok) throw InputError(msg);
}
}  // namespace detail

}  // namespace rpisynth
