#include "lessketch/linalg.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace lessketch {

namespace {

struct Reflectors {
    std::vector<double> tau;
    std::vector<bool> flipped;  // row k of R (and column k of Q) negated to make R_kk > 0
};

// Householder vectors are normalized so that v_k = 1 and stored below the
// diagonal of column k.
Reflectors triangularize(DenseMatrix& a, std::span<double> rhs) {
    const std::size_t n = a.rows();
    const std::size_t d = a.cols();
    if (n < d) throw std::invalid_argument("QR needs rows >= cols");
    if (!rhs.empty() && rhs.size() != n) throw std::invalid_argument("QR rhs length mismatch");
    const double threshold = kRankTolerance * a.frobenius_norm();

    Reflectors out{std::vector<double>(d, 0.0), std::vector<bool>(d, false)};
    std::vector<double> w(d);
    for (std::size_t k = 0; k < d; ++k) {
        double scale = 0.0;
        for (std::size_t i = k; i < n; ++i) scale = std::max(scale, std::abs(a(i, k)));
        double normx = 0.0;
        if (scale > 0.0) {
            double s = 0.0;
            for (std::size_t i = k; i < n; ++i) {
                const double t = a(i, k) / scale;
                s += t * t;
            }
            normx = scale * std::sqrt(s);
        }
        if (!(normx > threshold)) {
            throw RankDeficient("matrix is rank deficient: |R[" + std::to_string(k) + "," + std::to_string(k) +
                                "]| = " + std::to_string(normx) + " <= 1e-12 * ||A||_F");
        }
        const double akk = a(k, k);
        const double alpha = akk >= 0.0 ? -normx : normx;
        const double v0 = akk - alpha;  // nonzero: |v0| = |akk| + normx > 0
        for (std::size_t i = k + 1; i < n; ++i) a(i, k) /= v0;
        // 2 / ||v||^2 for the normalized reflector v = (1, a(k+1:, k))
        const double tau = -v0 / alpha;
        out.tau[k] = tau;
        a(k, k) = alpha;

        for (std::size_t j = k + 1; j < d; ++j) {
            double acc = a(k, j);
            for (std::size_t i = k + 1; i < n; ++i) acc += a(i, k) * a(i, j);
            w[j] = tau * acc;
        }
        for (std::size_t j = k + 1; j < d; ++j) a(k, j) -= w[j];
        for (std::size_t i = k + 1; i < n; ++i) {
            const double vi = a(i, k);
            if (vi == 0.0) continue;
            auto row = a.row(i);
            for (std::size_t j = k + 1; j < d; ++j) row[j] -= vi * w[j];
        }
        if (!rhs.empty()) {
            double acc = rhs[k];
            for (std::size_t i = k + 1; i < n; ++i) acc += a(i, k) * rhs[i];
            acc *= tau;
            rhs[k] -= acc;
            for (std::size_t i = k + 1; i < n; ++i) rhs[i] -= a(i, k) * acc;
        }
    }
    for (std::size_t k = 0; k < d; ++k) {
        if (a(k, k) < 0.0) {
            out.flipped[k] = true;
            for (std::size_t j = k; j < d; ++j) a(k, j) = -a(k, j);
            if (!rhs.empty()) rhs[k] = -rhs[k];
        }
    }
    return out;
}

}  // namespace

std::vector<double> householder_in_place(DenseMatrix& a, std::span<double> rhs) {
    return triangularize(a, rhs).tau;
}

QrFactors thin_qr(const DenseMatrix& a) {
    const std::size_t n = a.rows();
    const std::size_t d = a.cols();
    DenseMatrix work = a;
    const Reflectors refl = triangularize(work, {});

    DenseMatrix r(d, d);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = i; j < d; ++j) r(i, j) = work(i, j);

    // Q = H_0 ... H_{d-1} [I_d; 0], accumulated backwards.
    DenseMatrix q(n, d);
    for (std::size_t k = 0; k < d; ++k) q(k, k) = 1.0;
    std::vector<double> w(d);
    for (std::size_t kk = d; kk-- > 0;) {
        const double tau = refl.tau[kk];
        for (std::size_t j = kk; j < d; ++j) {
            double acc = q(kk, j);
            for (std::size_t i = kk + 1; i < n; ++i) acc += work(i, kk) * q(i, j);
            w[j] = tau * acc;
        }
        for (std::size_t j = kk; j < d; ++j) q(kk, j) -= w[j];
        for (std::size_t i = kk + 1; i < n; ++i) {
            const double vi = work(i, kk);
            if (vi == 0.0) continue;
            for (std::size_t j = kk; j < d; ++j) q(i, j) -= vi * w[j];
        }
    }
    for (std::size_t k = 0; k < d; ++k) {
        if (!refl.flipped[k]) continue;
        for (std::size_t i = 0; i < n; ++i) q(i, k) = -q(i, k);
    }
    return {std::move(q), std::move(r)};
}

DenseVector lstsq_exact(const DenseMatrix& a, std::span<const double> b) {
    if (b.size() != a.rows()) throw std::invalid_argument("lstsq_exact: rhs length mismatch");
    DenseMatrix work = a;
    std::vector<double> rhs(b.begin(), b.end());
    triangularize(work, rhs);
    return solve_upper(work, std::span<const double>(rhs).first(a.cols()));
}

DenseVector solve_upper(const DenseMatrix& r, std::span<const double> y) {
    const std::size_t d = r.cols();
    if (y.size() != d || r.rows() < d) throw std::invalid_argument("solve_upper: dimension mismatch");
    DenseVector x(d);
    for (std::size_t ii = d; ii-- > 0;) {
        double acc = y[ii];
        for (std::size_t j = ii + 1; j < d; ++j) acc -= r(ii, j) * x[j];
        if (r(ii, ii) == 0.0) throw RankDeficient("solve_upper: zero diagonal");
        x[ii] = acc / r(ii, ii);
    }
    return x;
}

DenseMatrix upper_triangular_inverse(const DenseMatrix& r) {
    const std::size_t d = r.cols();
    if (r.rows() != d) throw std::invalid_argument("upper_triangular_inverse: not square");
    DenseMatrix inv(d, d);
    for (std::size_t col = 0; col < d; ++col) {
        // solve R z = e_col; z is zero below row col
        for (std::size_t ii = col + 1; ii-- > 0;) {
            double acc = ii == col ? 1.0 : 0.0;
            for (std::size_t j = ii + 1; j <= col; ++j) acc -= r(ii, j) * inv(j, col);
            if (r(ii, ii) == 0.0) throw RankDeficient("upper_triangular_inverse: zero diagonal");
            inv(ii, col) = acc / r(ii, ii);
        }
    }
    return inv;
}

DenseMatrix cholesky(const DenseMatrix& spd) {
    const std::size_t d = spd.rows();
    if (spd.cols() != d) throw std::invalid_argument("cholesky: not square");
    double diag_scale = 0.0;
    for (std::size_t i = 0; i < d; ++i) diag_scale = std::max(diag_scale, std::abs(spd(i, i)));
    DenseMatrix l(d, d);
    for (std::size_t j = 0; j < d; ++j) {
        double s = spd(j, j);
        for (std::size_t k = 0; k < j; ++k) s -= l(j, k) * l(j, k);
        if (!(s > 1e-14 * diag_scale)) throw RankDeficient("cholesky: matrix is not positive definite");
        const double ljj = std::sqrt(s);
        l(j, j) = ljj;
        for (std::size_t i = j + 1; i < d; ++i) {
            double t = spd(i, j);
            for (std::size_t k = 0; k < j; ++k) t -= l(i, k) * l(j, k);
            l(i, j) = t / ljj;
        }
    }
    return l;
}

DenseMatrix spd_inverse(const DenseMatrix& spd) {
    const std::size_t d = spd.rows();
    // spd^{-1} = L^{-T} L^{-1}; L^T is upper triangular
    const DenseMatrix lt_inv = upper_triangular_inverse(cholesky(spd).transposed());
    DenseMatrix inv(d, d);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = i; j < d; ++j) {
            double acc = 0.0;
            for (std::size_t k = std::max(i, j); k < d; ++k) acc += lt_inv(i, k) * lt_inv(j, k);
            inv(i, j) = acc;
            inv(j, i) = acc;
        }
    return inv;
}

namespace {
Eigen::MatrixXd to_eigen(const DenseMatrix& a) {
    Eigen::MatrixXd m(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) m(i, j) = a(i, j);
    return m;
}
}  // namespace

std::vector<double> symmetric_eigenvalues(const DenseMatrix& sym) {
    if (sym.rows() != sym.cols()) throw std::invalid_argument("symmetric_eigenvalues: not square");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(to_eigen(sym), Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) throw NumericalError("symmetric eigenvalue solver failed");
    const auto& ev = solver.eigenvalues();
    return {ev.data(), ev.data() + ev.size()};
}

std::vector<double> singular_values(const DenseMatrix& a) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(to_eigen(a));
    const auto& sv = svd.singularValues();
    return {sv.data(), sv.data() + sv.size()};
}

double condition_number(const DenseMatrix& a) {
    const auto sv = singular_values(a);
    if (sv.back() == 0.0) return INFINITY;
    return sv.front() / sv.back();
}

double symmetric_spectral_norm(const DenseMatrix& sym) {
    const auto ev = symmetric_eigenvalues(sym);
    return std::max(std::abs(ev.front()), std::abs(ev.back()));
}

}  // namespace lessketch
