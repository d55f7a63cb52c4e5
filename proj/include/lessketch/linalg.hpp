#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "lessketch/errors.hpp"
#include "lessketch/matrix.hpp"

namespace lessketch {

/// |R_ii| <= kRankTolerance * ||A||_F is treated as a rank deficiency.
inline constexpr double kRankTolerance = 1e-12;

struct QrFactors {
    DenseMatrix q;  // n x d, orthonormal columns
    DenseMatrix r;  // d x d, upper triangular with positive diagonal
};

/// Thin Householder QR of an n x d matrix with n >= d. Throws RankDeficient.
QrFactors thin_qr(const DenseMatrix& a);

/// x* = argmin ||a x - b||^2 through Householder QR. Throws RankDeficient.
DenseVector lstsq_exact(const DenseMatrix& a, std::span<const double> b);

/// In-place Householder triangularization. On return the upper triangle of the
/// leading d rows of `a` holds R, the entries below the diagonal hold the
/// reflectors, and `rhs` (length a.rows()) has been overwritten by Q^T rhs.
/// Returns the d reflector coefficients. Throws RankDeficient; R has a
/// positive diagonal.
std::vector<double> householder_in_place(DenseMatrix& a, std::span<double> rhs);

/// Solve R x = y for upper-triangular R (only the upper triangle is read).
DenseVector solve_upper(const DenseMatrix& r, std::span<const double> y);
DenseMatrix upper_triangular_inverse(const DenseMatrix& r);

/// Lower Cholesky factor of a symmetric positive definite matrix. Throws
/// RankDeficient when a pivot is not positive relative to the diagonal scale.
DenseMatrix cholesky(const DenseMatrix& spd);
DenseMatrix spd_inverse(const DenseMatrix& spd);

/// Eigenvalues of a symmetric matrix in ascending order.
std::vector<double> symmetric_eigenvalues(const DenseMatrix& sym);
/// Singular values in descending order.
std::vector<double> singular_values(const DenseMatrix& a);
double condition_number(const DenseMatrix& a);
/// Spectral norm of a symmetric matrix (largest |eigenvalue|).
double symmetric_spectral_norm(const DenseMatrix& sym);

struct CgSolution {
    DenseVector x;
    std::size_t iterations = 0;
    double relative_residual = 0.0;  // ||A^T(Ax - b)|| / ||A^T b||
};

/// Linear operator view over the leading upper triangle of a matrix; used to
/// run CG on a sketch after in-place triangularization.
class UpperTriangularView {
public:
    UpperTriangularView(const DenseMatrix& storage, std::size_t d) : s_(storage), d_(d) {}
    std::size_t rows() const noexcept { return d_; }
    std::size_t cols() const noexcept { return d_; }
    void apply(std::span<const double> x, std::span<double> y) const noexcept {
        for (std::size_t i = 0; i < d_; ++i) {
            double acc = 0.0;
            for (std::size_t j = i; j < d_; ++j) acc += s_(i, j) * x[j];
            y[i] = acc;
        }
    }
    void apply_transposed(std::span<const double> y, std::span<double> x) const noexcept {
        for (std::size_t j = 0; j < d_; ++j) x[j] = 0.0;
        for (std::size_t i = 0; i < d_; ++i)
            for (std::size_t j = i; j < d_; ++j) x[j] += s_(i, j) * y[i];
    }

private:
    const DenseMatrix& s_;
    std::size_t d_;
};

class DenseOperator {
public:
    explicit DenseOperator(const DenseMatrix& a) : a_(a) {}
    std::size_t rows() const noexcept { return a_.rows(); }
    std::size_t cols() const noexcept { return a_.cols(); }
    void apply(std::span<const double> x, std::span<double> y) const noexcept {
        for (std::size_t i = 0; i < a_.rows(); ++i) y[i] = dot(a_.row(i), x);
    }
    void apply_transposed(std::span<const double> y, std::span<double> x) const noexcept {
        for (std::size_t j = 0; j < a_.cols(); ++j) x[j] = 0.0;
        for (std::size_t i = 0; i < a_.rows(); ++i) axpy(y[i], a_.row(i), x);
    }

private:
    const DenseMatrix& a_;
};

namespace detail {
inline void precond_apply(const DenseMatrix& p, std::span<const double> y, std::span<double> x) {
    for (std::size_t i = 0; i < p.rows(); ++i) x[i] = dot(p.row(i), y);
}
inline void precond_apply_transposed(const DenseMatrix& p, std::span<const double> t, std::span<double> s) {
    for (std::size_t j = 0; j < p.cols(); ++j) s[j] = 0.0;
    for (std::size_t i = 0; i < p.rows(); ++i) axpy(t[i], p.row(i), s);
}
}  // namespace detail

/// Conjugate gradient on the normal equations of min ||A P y - b||, x = P y
/// (CGLS in the preconditioned variable). Stops once
/// ||A^T(A x - b)|| <= tol ||A^T b||. Throws NotConverged with the last iterate
/// after max_iters iterations.
template <class Op>
CgSolution pcg_normal(const Op& a, std::span<const double> b, const DenseMatrix& precond, double tol,
                      std::size_t max_iters) {
    const std::size_t m = a.rows();
    const std::size_t d = a.cols();
    if (b.size() != m) throw std::invalid_argument("pcg_normal: rhs length mismatch");
    if (precond.rows() != d || precond.cols() != d) throw std::invalid_argument("pcg_normal: preconditioner shape");
    if (!(tol > 0.0)) throw std::invalid_argument("pcg_normal: tol must be positive");

    std::vector<double> y(d, 0.0), r(b.begin(), b.end()), t(d), s(d), p(d), pp(d), q(m);
    a.apply_transposed(r, t);
    const double target = tol * norm2(t);
    CgSolution out{DenseVector(d), 0, 0.0};
    if (target == 0.0) return out;  // A^T b = 0 -> x = 0

    detail::precond_apply_transposed(precond, t, s);
    p = s;
    double gamma = squared_norm(s);
    double residual = norm2(t);
    for (std::size_t it = 1; it <= max_iters; ++it) {
        detail::precond_apply(precond, p, pp);
        a.apply(pp, q);
        const double qq = squared_norm(q);
        if (!(qq > 0.0)) throw RankDeficient("pcg_normal: zero curvature direction");
        const double alpha = gamma / qq;
        axpy(alpha, p, y);
        axpy(-alpha, q, r);
        a.apply_transposed(r, t);
        residual = norm2(t);
        if (residual <= target) {
            detail::precond_apply(precond, y, out.x.span());
            out.iterations = it;
            out.relative_residual = residual * tol / target;
            return out;
        }
        detail::precond_apply_transposed(precond, t, s);
        const double gamma_next = squared_norm(s);
        const double beta = gamma_next / gamma;
        gamma = gamma_next;
        for (std::size_t j = 0; j < d; ++j) p[j] = s[j] + beta * p[j];
    }
    std::vector<double> x(d);
    detail::precond_apply(precond, y, x);
    throw NotConverged(max_iters, residual * tol / target, std::move(x));
}

inline CgSolution pcg_normal(const DenseMatrix& a, std::span<const double> b, const DenseMatrix& precond,
                             double tol, std::size_t max_iters) {
    return pcg_normal(DenseOperator(a), b, precond, tol, max_iters);
}

}  // namespace lessketch
