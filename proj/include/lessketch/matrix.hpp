#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace lessketch {

/// Real vector with finite entries. The finiteness check runs in the
/// constructors; element writes through operator[] are unchecked.
class DenseVector {
public:
    DenseVector() = default;
    explicit DenseVector(std::size_t len, double fill = 0.0);
    explicit DenseVector(std::vector<double> values);
    DenseVector(std::initializer_list<double> values);

    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    double& operator[](std::size_t i) noexcept { return data_[i]; }
    double operator[](std::size_t i) const noexcept { return data_[i]; }

    std::span<double> span() noexcept { return data_; }
    std::span<const double> span() const noexcept { return data_; }
    const std::vector<double>& values() const noexcept { return data_; }
    double* data() noexcept { return data_.data(); }
    const double* data() const noexcept { return data_.data(); }

    bool operator==(const DenseVector&) const = default;

private:
    std::vector<double> data_;
};

/// Row-major dense matrix, rows >= 1 and cols >= 1, finite entries on construction.
class DenseMatrix {
public:
    DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0);
    DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> row_major);
    DenseMatrix(std::initializer_list<std::initializer_list<double>> rows);

    static DenseMatrix identity(std::size_t n);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }

    double& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * cols_ + j]; }

    std::span<double> row(std::size_t i) noexcept { return {data_.data() + i * cols_, cols_}; }
    std::span<const double> row(std::size_t i) const noexcept { return {data_.data() + i * cols_, cols_}; }

    std::span<const double> values() const noexcept { return data_; }
    double* data() noexcept { return data_.data(); }
    const double* data() const noexcept { return data_.data(); }

    /// Keep the leading `rows` rows and release the rest of the storage.
    void truncate_rows(std::size_t rows);

    DenseMatrix transposed() const;
    double frobenius_norm() const noexcept;

    bool operator==(const DenseMatrix&) const = default;

private:
    std::size_t rows_;
    std::size_t cols_;
    std::vector<double> data_;
};

double dot(std::span<const double> x, std::span<const double> y) noexcept;
double norm2(std::span<const double> x) noexcept;
double squared_norm(std::span<const double> x) noexcept;
/// y += alpha * x
void axpy(double alpha, std::span<const double> x, std::span<double> y) noexcept;

DenseVector operator-(const DenseVector& x, const DenseVector& y);
DenseVector operator+(const DenseVector& x, const DenseVector& y);
DenseVector operator*(double alpha, const DenseVector& x);

DenseMatrix operator-(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix operator+(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix operator*(double alpha, const DenseMatrix& a);

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);
/// a x
DenseVector matvec(const DenseMatrix& a, std::span<const double> x);
/// a^T y
DenseVector matvec_transposed(const DenseMatrix& a, std::span<const double> y);
/// a^T a
DenseMatrix gram(const DenseMatrix& a);

double max_abs_entry(const DenseMatrix& a) noexcept;
double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b);
double trace(const DenseMatrix& a);

/// ||a x - b||^2
double squared_residual(const DenseMatrix& a, std::span<const double> x, std::span<const double> b);

}  // namespace lessketch
