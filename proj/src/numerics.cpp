// SPDX-License-Identifier: Apache-2.0
#include "adr/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "adr/error.hpp"

namespace adr {

Matrix::Matrix(std::size_t rows, std::size_t cols) : Matrix(rows, cols, {}) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  if (rows == 0 || cols == 0) {
    throw DimensionError("matrix dimensions must be positive, got " +
                         std::to_string(rows) + "x" + std::to_string(cols));
  }
  if (values_.empty()) {
    values_.assign(rows * cols, 0.0);
  } else if (values_.size() != rows * cols) {
    throw DimensionError("matrix " + std::to_string(rows) + "x" + std::to_string(cols) +
                         " given " + std::to_string(values_.size()) + " values");
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

void Matrix::fill(double v) { std::fill(values_.begin(), values_.end(), v); }

std::string Matrix::shape_string() const {
  return "(" + std::to_string(rows_) + "x" + std::to_string(cols_) + ")";
}

bool Matrix::all_finite() const {
  return std::all_of(values_.begin(), values_.end(),
                     [](double v) { return std::isfinite(v); });
}

Parameter::Parameter(std::string name_in, std::size_t rows, std::size_t cols)
    : name(std::move(name_in)),
      value(rows, cols),
      grad(rows, cols),
      adam_m(rows, cols),
      adam_v(rows, cols) {}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul shape mismatch: " + a.shape_string() + " * " +
                         b.shape_string());
  }
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      auto brow = b.row(k);
      auto orow = out.row(i);
      for (std::size_t j = 0; j < b.cols(); ++j) orow[j] += aik * brow[j];
    }
  }
  return out;
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Matrix sigmoid(const Matrix& x) {
  Matrix out = x;
  for (double& v : out.values()) v = sigmoid(v);
  return out;
}

Matrix tanh_op(const Matrix& x) {
  Matrix out = x;
  for (double& v : out.values()) v = std::tanh(v);
  return out;
}

void matvec_accumulate(const Matrix& m, std::span<const double> x, std::span<double> out) {
  if (m.cols() != x.size() || m.rows() != out.size()) {
    throw DimensionError("matvec shape mismatch: " + m.shape_string() + " * (" +
                         std::to_string(x.size()) + ") -> (" +
                         std::to_string(out.size()) + ")");
  }
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    double acc = 0.0;
    for (std::size_t c = 0; c < row.size(); ++c) acc += row[c] * x[c];
    out[r] += acc;
  }
}

void matvec_transposed_accumulate(const Matrix& m, std::span<const double> y,
                                  std::span<double> out) {
  if (m.rows() != y.size() || m.cols() != out.size()) {
    throw DimensionError("transposed matvec shape mismatch: " + m.shape_string() +
                         "^T * (" + std::to_string(y.size()) + ")");
  }
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const double yr = y[r];
    if (yr == 0.0) continue;
    auto row = m.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) out[c] += row[c] * yr;
  }
}

void outer_accumulate(Matrix& m, std::span<const double> y, std::span<const double> x) {
  if (m.rows() != y.size() || m.cols() != x.size()) {
    throw DimensionError("outer product shape mismatch for " + m.shape_string());
  }
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const double yr = y[r];
    if (yr == 0.0) continue;
    auto row = m.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) row[c] += yr * x[c];
  }
}

Vector softmax(std::span<const double> logits) {
  if (logits.empty()) throw UsageError("softmax of an empty vector");
  const double peak = *std::max_element(logits.begin(), logits.end());
  Vector out(logits.size());
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - peak);
    total += out[i];
  }
  for (double& v : out) v /= total;
  return out;
}

double cross_entropy(std::span<const double> dist, std::size_t target) {
  if (target >= dist.size()) {
    throw UsageError("cross_entropy target " + std::to_string(target) +
                     " out of range for " + std::to_string(dist.size()) + " classes");
  }
  return -std::log(std::max(dist[target], kProbabilityFloor));
}

std::vector<Matrix> finite_difference_gradient(const std::function<double()>& loss_fn,
                                               std::span<Parameter* const> params,
                                               double epsilon) {
  if (!(epsilon > 0.0)) throw UsageError("finite difference epsilon must be > 0");
  std::vector<Matrix> estimates;
  estimates.reserve(params.size());
  for (Parameter* p : params) {
    Matrix est(p->value.rows(), p->value.cols());
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      const double original = p->value[i];
      p->value[i] = original + epsilon;
      const double plus = loss_fn();
      p->value[i] = original - epsilon;
      const double minus = loss_fn();
      p->value[i] = original;
      if (!std::isfinite(plus) || !std::isfinite(minus)) {
        std::ostringstream msg;
        msg << "non-finite loss while perturbing " << p->name << "[" << i / p->value.cols()
            << "," << i % p->value.cols() << "]";
        throw NumericalError(msg.str());
      }
      est[i] = (plus - minus) / (2.0 * epsilon);
    }
    estimates.push_back(std::move(est));
  }
  return estimates;
}

double relative_error(double analytic, double numeric, double floor) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / scale;
}

}  // namespace adr
