#ifndef SYNGUIDE_MATRIX_HPP
#define SYNGUIDE_MATRIX_HPP

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace synguide {

// Dense row-major matrix of doubles. The numeric carrier for features,
// logits, distance matrices and layer weights.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);
  static Matrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }

  bool all_finite() const;
  std::string shape_string() const;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix matmul(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& m);

// Row-wise softmax of m / temperature with max subtraction.
Matrix row_softmax(const Matrix& m, double temperature);

struct CrossEntropy {
  double loss = 0.0;               // mean over rows
  Matrix probs;                    // row_softmax(logits, 1)
  std::vector<double> per_sample;  // -ln p[label] for each row
};

CrossEntropy cross_entropy(const Matrix& logits, std::span<const int> labels);

using ScalarFunction = std::function<double(const Matrix&)>;

// Central-difference gradient of f at x. Test oracle only.
Matrix finite_diff_grad(const ScalarFunction& f, const Matrix& x, double h);

}  // namespace synguide

#endif  // SYNGUIDE_MATRIX_HPP
