#include "dictnet/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dictnet/error.hpp"

namespace dictnet {

namespace {
std::string shape_str(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

void check_finite(const Matrix& m, const char* op) {
  if (!m.all_finite())
    throw NumericError(std::string(op) + ": produced non-finite values");
}
}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_)
    throw ShapeError("Matrix: data length " + std::to_string(data_.size()) +
                     " != " + std::to_string(rows_ * cols_));
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

bool Matrix::all_finite() const {
  for (double v : data_)
    if (!std::isfinite(v)) return false;
  return true;
}

void Matrix::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

Matrix Matrix::gather_rows(const std::vector<std::size_t>& idx) const {
  Matrix out(idx.size(), cols_);
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] >= rows_) throw IndexError("gather_rows: row index out of range");
    std::copy(row(idx[i]), row(idx[i]) + cols_, out.row(i));
  }
  return out;
}

Matrix Matrix::slice_cols(std::size_t begin, std::size_t count) const {
  if (begin + count > cols_) throw IndexError("slice_cols: column range out of range");
  Matrix out(rows_, count);
  for (std::size_t i = 0; i < rows_; ++i)
    std::copy(row(i) + begin, row(i) + begin + count, out.row(i));
  return out;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows())
    throw ShapeError("matmul: " + shape_str(a) + " * " + shape_str(b));
  Matrix out(a.rows(), b.cols());
  const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
  for (std::size_t i = 0; i < n; ++i) {
    double* oi = out.row(i);
    const double* ai = a.row(i);
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = ai[p];
      const double* bp = b.row(p);
      for (std::size_t j = 0; j < m; ++j) oi[j] += aip * bp[j];
    }
  }
  check_finite(out, "matmul");
  return out;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows())
    throw ShapeError("matmul_tn: " + shape_str(a) + "^T * " + shape_str(b));
  Matrix out(a.cols(), b.cols());
  const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
  for (std::size_t p = 0; p < n; ++p) {
    const double* ap = a.row(p);
    const double* bp = b.row(p);
    for (std::size_t i = 0; i < k; ++i) {
      const double api = ap[i];
      double* oi = out.row(i);
      for (std::size_t j = 0; j < m; ++j) oi[j] += api * bp[j];
    }
  }
  check_finite(out, "matmul_tn");
  return out;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols())
    throw ShapeError("matmul_nt: " + shape_str(a) + " * " + shape_str(b) + "^T");
  Matrix out(a.rows(), b.rows());
  const std::size_t n = a.rows(), k = a.cols(), m = b.rows();
  for (std::size_t i = 0; i < n; ++i) {
    const double* ai = a.row(i);
    double* oi = out.row(i);
    for (std::size_t j = 0; j < m; ++j) {
      const double* bj = b.row(j);
      double acc = 0.0;
      for (std::size_t p = 0; p < k; ++p) acc += ai[p] * bj[p];
      oi[j] = acc;
    }
  }
  check_finite(out, "matmul_nt");
  return out;
}

Matrix transpose(const Matrix& a) {
  Matrix out(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
  return out;
}

void add_in_place(Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw ShapeError("add: " + shape_str(a) + " + " + shape_str(b));
  double* pa = a.data();
  const double* pb = b.data();
  for (std::size_t i = 0; i < a.size(); ++i) pa[i] += pb[i];
}

void sub_in_place(Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw ShapeError("sub: " + shape_str(a) + " - " + shape_str(b));
  double* pa = a.data();
  const double* pb = b.data();
  for (std::size_t i = 0; i < a.size(); ++i) pa[i] -= pb[i];
}

void scale_in_place(Matrix& a, double s) {
  for (double& v : a.raw()) v *= s;
}

void axpy(Matrix& a, double s, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw ShapeError("axpy: " + shape_str(a) + " += s*" + shape_str(b));
  double* pa = a.data();
  const double* pb = b.data();
  for (std::size_t i = 0; i < a.size(); ++i) pa[i] += s * pb[i];
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw ShapeError("max_abs_diff: " + shape_str(a) + " vs " + shape_str(b));
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  return m;
}

double frobenius_norm(const Matrix& a) {
  double s = 0.0;
  for (double v : a.raw()) s += v * v;
  return std::sqrt(s);
}

Matrix solve_spd(const Matrix& k, const Matrix& b) {
  const std::size_t n = k.rows();
  if (k.cols() != n) throw ShapeError("solve_spd: matrix not square: " + shape_str(k));
  if (b.rows() != n)
    throw ShapeError("solve_spd: rhs rows " + std::to_string(b.rows()) +
                     " != " + std::to_string(n));
  if (n == 0) throw ShapeError("solve_spd: empty system");

  // In-place lower Cholesky factor of a working copy.
  Matrix l = k;
  for (std::size_t j = 0; j < n; ++j) {
    double d = l(j, j);
    for (std::size_t p = 0; p < j; ++p) d -= l(j, p) * l(j, p);
    if (!(d > 0.0) || !std::isfinite(d))
      throw NotSpdError("solve_spd: non-positive pivot at row " + std::to_string(j) +
                        " (matrix not positive definite; increase lambda?)");
    const double ljj = std::sqrt(d);
    l(j, j) = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = l(i, j);
      for (std::size_t p = 0; p < j; ++p) s -= l(i, p) * l(j, p);
      l(i, j) = s / ljj;
    }
  }

  // Solve L y = b, then L^T x = y, all right-hand sides at once.
  Matrix x = b;
  const std::size_t m = b.cols();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t p = 0; p < i; ++p) {
      const double lip = l(i, p);
      for (std::size_t c = 0; c < m; ++c) x(i, c) -= lip * x(p, c);
    }
    const double inv = 1.0 / l(i, i);
    for (std::size_t c = 0; c < m; ++c) x(i, c) *= inv;
  }
  for (std::size_t ii = n; ii-- > 0;) {
    for (std::size_t p = ii + 1; p < n; ++p) {
      const double lpi = l(p, ii);
      for (std::size_t c = 0; c < m; ++c) x(ii, c) -= lpi * x(p, c);
    }
    const double inv = 1.0 / l(ii, ii);
    for (std::size_t c = 0; c < m; ++c) x(ii, c) *= inv;
  }
  check_finite(x, "solve_spd");
  return x;
}

SymmetricEigen symmetric_eigen(const Matrix& a) {
  const std::size_t n = a.rows();
  if (a.cols() != n) throw ShapeError("symmetric_eigen: matrix not square");
  Matrix d = a;
  Matrix v = Matrix::identity(n);

  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) off += d(i, j) * d(i, j);
    if (off < 1e-24) break;

    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        if (std::abs(d(p, q)) < 1e-300) continue;
        const double theta = (d(q, q) - d(p, p)) / (2.0 * d(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t i = 0; i < n; ++i) {
          const double dip = d(i, p), diq = d(i, q);
          d(i, p) = c * dip - s * diq;
          d(i, q) = s * dip + c * diq;
        }
        for (std::size_t i = 0; i < n; ++i) {
          const double dpi = d(p, i), dqi = d(q, i);
          d(p, i) = c * dpi - s * dqi;
          d(q, i) = s * dpi + c * dqi;
        }
        for (std::size_t i = 0; i < n; ++i) {
          const double vip = v(i, p), viq = v(i, q);
          v(i, p) = c * vip - s * viq;
          v(i, q) = s * vip + c * viq;
        }
      }
    }
  }

  // Sort eigenpairs ascending.
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t x, std::size_t y) { return d(x, x) < d(y, y); });
  SymmetricEigen e;
  e.values.resize(n);
  e.vectors = Matrix(n, n);
  for (std::size_t k = 0; k < n; ++k) {
    e.values[k] = d(order[k], order[k]);
    for (std::size_t i = 0; i < n; ++i) e.vectors(i, k) = v(i, order[k]);
  }
  return e;
}

}  // namespace dictnet
