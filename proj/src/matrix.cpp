#include "synguide/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace synguide {

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    std::ostringstream msg;
    msg << "matrix data length " << data_.size() << " does not match shape " << rows_ << "x"
        << cols_;
    throw std::invalid_argument(msg.str());
  }
}

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t n = rows.size();
  const std::size_t m = n == 0 ? 0 : rows.begin()->size();
  std::vector<double> data;
  data.reserve(n * m);
  for (const auto& r : rows) {
    if (r.size() != m) throw std::invalid_argument("ragged rows in Matrix::from_rows");
    data.insert(data.end(), r.begin(), r.end());
  }
  return Matrix(n, m, std::move(data));
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

bool Matrix::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

std::string Matrix::shape_string() const {
  return std::to_string(rows_) + "x" + std::to_string(cols_);
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw std::invalid_argument("matmul dimension mismatch: " + a.shape_string() + " times " +
                                b.shape_string());
  }
  Matrix out(a.rows(), b.cols());
  // i-k-j loop order keeps the inner loop contiguous in both b and out.
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto out_row = out.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      const auto b_row = b.row(k);
      for (std::size_t j = 0; j < b.cols(); ++j) out_row[j] += aik * b_row[j];
    }
  }
  return out;
}

Matrix transpose(const Matrix& m) {
  Matrix t(m.cols(), m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) t(j, i) = m(i, j);
  return t;
}

Matrix row_softmax(const Matrix& m, double temperature) {
  if (!(temperature > 0.0)) {
    throw std::invalid_argument("row_softmax temperature must be positive, got " +
                                std::to_string(temperature));
  }
  Matrix out(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const auto in = m.row(i);
    auto o = out.row(i);
    if (in.empty()) continue;
    const double mx = *std::max_element(in.begin(), in.end());
    double total = 0.0;
    for (std::size_t j = 0; j < in.size(); ++j) {
      o[j] = std::exp((in[j] - mx) / temperature);
      total += o[j];
    }
    for (double& v : o) v /= total;
  }
  return out;
}

namespace {

// -ln softmax(z)[label], evaluated without cancellation when label is the max.
double row_nll(std::span<const double> z, std::size_t label) {
  const double mx = *std::max_element(z.begin(), z.end());
  if (z[label] == mx) {
    double others = 0.0;
    for (std::size_t k = 0; k < z.size(); ++k)
      if (k != label) others += std::exp(z[k] - mx);
    return std::log1p(others);
  }
  double total = 0.0;
  for (double v : z) total += std::exp(v - mx);
  return (mx - z[label]) + std::log(total);
}

}  // namespace

CrossEntropy cross_entropy(const Matrix& logits, std::span<const int> labels) {
  if (labels.size() != logits.rows()) {
    throw std::invalid_argument("cross_entropy: " + std::to_string(labels.size()) +
                                " labels for " + std::to_string(logits.rows()) + " rows");
  }
  const auto classes = static_cast<int>(logits.cols());
  CrossEntropy out;
  out.per_sample.resize(logits.rows());
  double total = 0.0;
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    const int y = labels[i];
    if (y < 0 || y >= classes) {
      throw std::out_of_range("cross_entropy: label " + std::to_string(y) + " at row " +
                              std::to_string(i) + " outside [0, " + std::to_string(classes) +
                              ")");
    }
    out.per_sample[i] = row_nll(logits.row(i), static_cast<std::size_t>(y));
    total += out.per_sample[i];
  }
  out.loss = logits.rows() == 0 ? 0.0 : total / static_cast<double>(logits.rows());
  out.probs = row_softmax(logits, 1.0);
  return out;
}

Matrix finite_diff_grad(const ScalarFunction& f, const Matrix& x, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("finite_diff_grad step must be positive");
  Matrix grad(x.rows(), x.cols());
  Matrix probe = x;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double saved = probe.values()[k];
    probe.values()[k] = saved + h;
    const double up = f(probe);
    probe.values()[k] = saved - h;
    const double down = f(probe);
    probe.values()[k] = saved;
    grad.values()[k] = (up - down) / (2.0 * h);
  }
  return grad;
}

}  // namespace synguide
