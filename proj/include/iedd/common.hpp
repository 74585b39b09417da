#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <chrono>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#ifndef IEDD_VERSION
#define IEDD_VERSION "0.1.0"
#endif

namespace iedd {

using Index = Eigen::Index;
using IndexSet = std::vector<Index>;
using Point = std::array<double, 3>;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline constexpr const char* version = IEDD_VERSION;

/// Invalid configuration or violated precondition.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A numerical procedure failed (non-convergence, loss of definiteness, ...).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NotPositiveDefinite : public NumericalError {
 public:
  NotPositiveDefinite(const std::string& what, Index pivot)
      : NumericalError(what), pivot_(pivot) {}
  /// 0-based position of the first non-positive pivot.
  Index pivot() const noexcept { return pivot_; }

 private:
  Index pivot_;
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw ConfigError(msg);
}

class Stopwatch {
 public:
  Stopwatch() : start_(clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(clock::now() - start_).count();
  }
  void reset() { start_ = clock::now(); }

 private:
  using clock = std::chrono::steady_clock;
  clock::time_point start_;
};

inline double distance(const Point& a, const Point& b, int dim) {
  double s = 0.0;
  for (int k = 0; k < dim; ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
  return std::sqrt(s);
}

}  // namespace iedd
