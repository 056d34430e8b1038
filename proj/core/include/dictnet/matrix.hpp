#pragma once

#include <cstddef>
#include <vector>

namespace dictnet {

/// Dense 2-D array of doubles in row-major layout: element (i, j) lives at
/// data()[i * cols() + j]. This is the universal carrier for weights,
/// dictionaries, kernels and activation batches; every module shares this
/// one layout. Zero-row/zero-column shapes are permitted (empty results);
/// operations that need non-empty operands check for themselves.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  static Matrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::vector<double>& raw() { return data_; }
  const std::vector<double>& raw() const { return data_; }

  double* row(std::size_t i) { return data_.data() + i * cols_; }
  const double* row(std::size_t i) const { return data_.data() + i * cols_; }

  bool all_finite() const;
  void fill(double v);

  /// New matrix holding the given rows, in the given order.
  Matrix gather_rows(const std::vector<std::size_t>& idx) const;
  /// New matrix holding columns [begin, begin+count).
  Matrix slice_cols(std::size_t begin, std::size_t count) const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// a * b. Throws ShapeError on mismatch; result is checked finite.
Matrix matmul(const Matrix& a, const Matrix& b);
/// a^T * b without materializing the transpose.
Matrix matmul_tn(const Matrix& a, const Matrix& b);
/// a * b^T without materializing the transpose.
Matrix matmul_nt(const Matrix& a, const Matrix& b);

Matrix transpose(const Matrix& a);

void add_in_place(Matrix& a, const Matrix& b);          // a += b
void sub_in_place(Matrix& a, const Matrix& b);          // a -= b
void scale_in_place(Matrix& a, double s);               // a *= s
void axpy(Matrix& a, double s, const Matrix& b);        // a += s*b

/// max_ij |a_ij - b_ij|
double max_abs_diff(const Matrix& a, const Matrix& b);
/// Frobenius norm.
double frobenius_norm(const Matrix& a);

/// Solve k * x = b for symmetric positive definite k via Cholesky.
/// Never forms an inverse. Throws NotSpdError on a non-positive pivot and
/// ShapeError on dimension mismatch.
Matrix solve_spd(const Matrix& k, const Matrix& b);

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Returns eigenvalues ascending; columns of `vectors` are the matching
/// orthonormal eigenvectors. Intended for the modest sizes that whitening
/// needs, not large-scale spectra.
struct SymmetricEigen {
  std::vector<double> values;
  Matrix vectors;
};
SymmetricEigen symmetric_eigen(const Matrix& a);

}  // namespace dictnet
