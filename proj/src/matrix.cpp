#include "lessketch/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace lessketch {

namespace {

void require_finite(std::span<const double> values, const char* what) {
    for (double v : values) {
        if (!std::isfinite(v)) throw std::invalid_argument(std::string(what) + ": non-finite entry");
    }
}

void require_same_shape(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) throw std::invalid_argument("matrix shape mismatch");
}

}  // namespace

DenseVector::DenseVector(std::size_t len, double fill) : data_(len, fill) {
    require_finite(data_, "DenseVector");
}

DenseVector::DenseVector(std::vector<double> values) : data_(std::move(values)) {
    require_finite(data_, "DenseVector");
}

DenseVector::DenseVector(std::initializer_list<double> values) : data_(values) {
    require_finite(data_, "DenseVector");
}

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {
    if (rows == 0 || cols == 0) throw std::invalid_argument("DenseMatrix needs rows >= 1 and cols >= 1");
    require_finite(data_, "DenseMatrix");
}

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> row_major)
    : rows_(rows), cols_(cols), data_(std::move(row_major)) {
    if (rows == 0 || cols == 0) throw std::invalid_argument("DenseMatrix needs rows >= 1 and cols >= 1");
    if (data_.size() != rows * cols) throw std::invalid_argument("DenseMatrix data length != rows * cols");
    require_finite(data_, "DenseMatrix");
}

DenseMatrix::DenseMatrix(std::initializer_list<std::initializer_list<double>> rows)
    : rows_(rows.size()), cols_(rows.size() ? rows.begin()->size() : 0) {
    if (rows_ == 0 || cols_ == 0) throw std::invalid_argument("DenseMatrix needs rows >= 1 and cols >= 1");
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
        if (r.size() != cols_) throw std::invalid_argument("ragged initializer for DenseMatrix");
        data_.insert(data_.end(), r.begin(), r.end());
    }
    require_finite(data_, "DenseMatrix");
}

DenseMatrix DenseMatrix::identity(std::size_t n) {
    DenseMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

void DenseMatrix::truncate_rows(std::size_t rows) {
    if (rows == 0 || rows > rows_) throw std::invalid_argument("truncate_rows: bad row count");
    rows_ = rows;
    data_.resize(rows_ * cols_);
    data_.shrink_to_fit();
}

DenseMatrix DenseMatrix::transposed() const {
    DenseMatrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
}

double DenseMatrix::frobenius_norm() const noexcept { return norm2(data_); }

double dot(std::span<const double> x, std::span<const double> y) noexcept {
    double s = 0.0;
    const std::size_t n = std::min(x.size(), y.size());
    for (std::size_t i = 0; i < n; ++i) s += x[i] * y[i];
    return s;
}

double squared_norm(std::span<const double> x) noexcept { return dot(x, x); }

double norm2(std::span<const double> x) noexcept {
    // scaled accumulation so huge or tiny entries don't overflow/underflow
    double scale = 0.0;
    for (double v : x) scale = std::max(scale, std::abs(v));
    if (scale == 0.0) return 0.0;
    double s = 0.0;
    for (double v : x) {
        const double t = v / scale;
        s += t * t;
    }
    return scale * std::sqrt(s);
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) noexcept {
    const std::size_t n = std::min(x.size(), y.size());
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

DenseVector operator-(const DenseVector& x, const DenseVector& y) {
    if (x.size() != y.size()) throw std::invalid_argument("vector length mismatch");
    DenseVector out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] - y[i];
    return out;
}

DenseVector operator+(const DenseVector& x, const DenseVector& y) {
    if (x.size() != y.size()) throw std::invalid_argument("vector length mismatch");
    DenseVector out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] + y[i];
    return out;
}

DenseVector operator*(double alpha, const DenseVector& x) {
    DenseVector out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = alpha * x[i];
    return out;
}

DenseMatrix operator-(const DenseMatrix& a, const DenseMatrix& b) {
    require_same_shape(a, b);
    DenseMatrix out(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) out(i, j) = a(i, j) - b(i, j);
    return out;
}

DenseMatrix operator+(const DenseMatrix& a, const DenseMatrix& b) {
    require_same_shape(a, b);
    DenseMatrix out(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) out(i, j) = a(i, j) + b(i, j);
    return out;
}

DenseMatrix operator*(double alpha, const DenseMatrix& a) {
    DenseMatrix out(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) out(i, j) = alpha * a(i, j);
    return out;
}

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.cols() != b.rows()) throw std::invalid_argument("matmul: inner dimension mismatch");
    DenseMatrix c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        auto ci = c.row(i);
        for (std::size_t k = 0; k < a.cols(); ++k) axpy(a(i, k), b.row(k), ci);
    }
    return c;
}

DenseVector matvec(const DenseMatrix& a, std::span<const double> x) {
    if (x.size() != a.cols()) throw std::invalid_argument("matvec: dimension mismatch");
    DenseVector y(a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) y[i] = dot(a.row(i), x);
    return y;
}

DenseVector matvec_transposed(const DenseMatrix& a, std::span<const double> y) {
    if (y.size() != a.rows()) throw std::invalid_argument("matvec_transposed: dimension mismatch");
    DenseVector x(a.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) axpy(y[i], a.row(i), x.span());
    return x;
}

DenseMatrix gram(const DenseMatrix& a) {
    const std::size_t d = a.cols();
    DenseMatrix g(d, d);
    for (std::size_t i = 0; i < a.rows(); ++i) {
        auto r = a.row(i);
        for (std::size_t j = 0; j < d; ++j) {
            const double rj = r[j];
            if (rj == 0.0) continue;
            for (std::size_t k = j; k < d; ++k) g(j, k) += rj * r[k];
        }
    }
    for (std::size_t j = 0; j < d; ++j)
        for (std::size_t k = 0; k < j; ++k) g(j, k) = g(k, j);
    return g;
}

double max_abs_entry(const DenseMatrix& a) noexcept {
    double m = 0.0;
    for (double v : a.values()) m = std::max(m, std::abs(v));
    return m;
}

double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b) {
    require_same_shape(a, b);
    double m = 0.0;
    for (std::size_t i = 0; i < a.values().size(); ++i)
        m = std::max(m, std::abs(a.values()[i] - b.values()[i]));
    return m;
}

double trace(const DenseMatrix& a) {
    if (a.rows() != a.cols()) throw std::invalid_argument("trace of non-square matrix");
    double t = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i) t += a(i, i);
    return t;
}

double squared_residual(const DenseMatrix& a, std::span<const double> x, std::span<const double> b) {
    if (x.size() != a.cols() || b.size() != a.rows()) throw std::invalid_argument("squared_residual: dimension mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const double r = dot(a.row(i), x) - b[i];
        s += r * r;
    }
    return s;
}

}  // namespace lessketch
