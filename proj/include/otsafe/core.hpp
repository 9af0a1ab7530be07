#pragma once

#include <cmath>
#include <cstddef>
#include <numeric>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace otsafe {

using Rng = std::mt19937_64;

enum class Errc {
  DimensionMismatch,
  NonConvergence,
  SupportTooLarge,
  NonFiniteInput,
  InvalidProbability,
  InvalidPolicy,
  InvalidArgument,
  SteppedAfterTerminal,
  UnknownScenario,
  WindowTooLarge,
  InvalidConfig,
};

inline const char* to_string(Errc code) {
  switch (code) {
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::NonConvergence: return "NonConvergence";
    case Errc::SupportTooLarge: return "SupportTooLarge";
    case Errc::NonFiniteInput: return "NonFiniteInput";
    case Errc::InvalidProbability: return "InvalidProbability";
    case Errc::InvalidPolicy: return "InvalidPolicy";
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::SteppedAfterTerminal: return "SteppedAfterTerminal";
    case Errc::UnknownScenario: return "UnknownScenario";
    case Errc::WindowTooLarge: return "WindowTooLarge";
    case Errc::InvalidConfig: return "InvalidConfig";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool square() const noexcept { return rows_ == cols_; }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  double row_sum(std::size_t i) const {
    auto r = row(i);
    return std::accumulate(r.begin(), r.end(), 0.0);
  }
  double col_sum(std::size_t j) const {
    double s = 0.0;
    for (std::size_t i = 0; i < rows_; ++i) s += (*this)(i, j);
    return s;
  }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Probability vector over a finite support. Construction validates
/// nonnegativity and unit mass (absolute tolerance 1e-9).
class ProbVec {
 public:
  static constexpr double kSumTolerance = 1e-9;

  ProbVec() = default;
  explicit ProbVec(std::vector<double> weights) : w_(std::move(weights)) {
    if (w_.empty()) throw Error(Errc::InvalidProbability, "empty probability vector");
    double sum = 0.0;
    for (double x : w_) {
      if (!std::isfinite(x)) throw Error(Errc::NonFiniteInput, "probability entry is not finite");
      if (x < 0.0) throw Error(Errc::InvalidProbability, "negative probability entry");
      sum += x;
    }
    if (std::abs(sum - 1.0) > kSumTolerance)
      throw Error(Errc::InvalidProbability, "entries sum to " + std::to_string(sum));
  }
  ProbVec(std::initializer_list<double> weights) : ProbVec(std::vector<double>(weights)) {}

  static ProbVec uniform(std::size_t n) {
    if (n == 0) throw Error(Errc::InvalidProbability, "empty support");
    return ProbVec(std::vector<double>(n, 1.0 / static_cast<double>(n)));
  }

  std::size_t size() const noexcept { return w_.size(); }
  double operator[](std::size_t i) const { return w_[i]; }
  std::span<const double> weights() const noexcept { return w_; }
  auto begin() const noexcept { return w_.begin(); }
  auto end() const noexcept { return w_.end(); }

  friend bool operator==(const ProbVec&, const ProbVec&) = default;

 private:
  std::vector<double> w_;
};

inline void require(bool cond, Errc code, const std::string& what) {
  if (!cond) throw Error(code, what);
}

}  // namespace otsafe
