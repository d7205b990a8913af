// SPDX-License-Identifier: Apache-2.0
//
// Dense double-precision matrices and the handful of differentiable
// functions the tagger needs. Gradients are written by hand in the model and
// checked against finite_difference_gradient().
#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace adr {

using Vector = std::vector<double>;

class Matrix {
 public:
  Matrix() = default;
  // Zero-filled. Both dimensions must be positive.
  Matrix(std::size_t rows, std::size_t cols);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> values);
  static Matrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return values_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }
  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  std::span<double> row(std::size_t r) { return {values_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const {
    return {values_.data() + r * cols_, cols_};
  }

  void fill(double v);
  bool same_shape(const Matrix& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }
  std::string shape_string() const;
  bool all_finite() const;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

// A trainable weight with its gradient accumulator and Adam moments.
struct Parameter {
  Parameter() = default;
  Parameter(std::string name, std::size_t rows, std::size_t cols);

  std::string name;
  Matrix value;
  Matrix grad;
  Matrix adam_m;
  Matrix adam_v;

  void zero_grad() { grad.fill(0.0); }
};

Matrix matmul(const Matrix& a, const Matrix& b);
Matrix sigmoid(const Matrix& x);
Matrix tanh_op(const Matrix& x);

double sigmoid(double x);

// out += m * x
void matvec_accumulate(const Matrix& m, std::span<const double> x, std::span<double> out);
// out += m^T * y
void matvec_transposed_accumulate(const Matrix& m, std::span<const double> y,
                                  std::span<double> out);
// m += y x^T
void outer_accumulate(Matrix& m, std::span<const double> y, std::span<const double> x);

// Max-subtracted softmax. Throws UsageError on empty input.
Vector softmax(std::span<const double> logits);

// -ln(max(dist[target], 1e-12)).
double cross_entropy(std::span<const double> dist, std::size_t target);

inline constexpr double kProbabilityFloor = 1e-12;

// Central differences over every entry of every parameter's value. The loss
// callback reads the parameters in place; each entry is restored exactly
// after it has been perturbed. Returns one gradient matrix per parameter.
std::vector<Matrix> finite_difference_gradient(const std::function<double()>& loss_fn,
                                               std::span<Parameter* const> params,
                                               double epsilon);

// |a-b| / max(|a|, |b|, floor). The floor keeps near-zero gradients from
// producing huge ratios out of rounding noise.
double relative_error(double analytic, double numeric, double floor = 1e-8);

}  // namespace adr
