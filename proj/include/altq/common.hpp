#pragma once

#include <Eigen/Core>

#include <stdexcept>
#include <string>
#include <vector>

namespace altq {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

struct ShapeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConvergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DefinitenessError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Validation problems are collected, not thrown one at a time.
struct ConfigError : std::runtime_error {
  explicit ConfigError(std::vector<std::string> problems)
      : std::runtime_error(join(problems)), issues(std::move(problems)) {}
  std::vector<std::string> issues;

 private:
  static std::string join(const std::vector<std::string>& v) {
    std::string s = "invalid configuration:";
    for (const auto& p : v) {
      s += "\n  - " + p;
    }
    return s;
  }
};

inline void require_finite(const Vec& v, const char* what) {
  if (!v.allFinite()) throw NumericError(std::string(what) + ": non-finite entries");
}

inline void require_finite(double x, const char* what) {
  if (!std::isfinite(x)) throw NumericError(std::string(what) + ": non-finite value");
}

inline void require_same_size(const Vec& a, const Vec& b, const char* what) {
  if (a.size() != b.size()) {
    throw ShapeError(std::string(what) + ": size mismatch (" + std::to_string(a.size()) +
                     " vs " + std::to_string(b.size()) + ")");
  }
}

}  // namespace altq
