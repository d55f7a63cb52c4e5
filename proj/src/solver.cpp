#include "lessketch/solver.hpp"

#include <stdexcept>
#include <string>

#include "lessketch/errors.hpp"
#include "lessketch/linalg.hpp"

namespace lessketch {

namespace {

void require_solvable(const SketchAccumulator& acc) {
    if (acc.local_rows() < acc.dims())
        throw RankDeficient("sketch has " + std::to_string(acc.local_rows()) + " rows for d = " +
                            std::to_string(acc.dims()) + "; increase m");
}

}  // namespace

EstimateBundle solve_sketched(SketchAccumulator&& acc, const Preconditioner& pre, double tol, std::size_t max_iters) {
    require_solvable(acc);
    const std::size_t d = acc.dims();
    if (pre.dims() != d) throw std::invalid_argument("solve_sketched: preconditioner dimension mismatch");
    if (max_iters == 0) max_iters = 4 * d;
    DenseMatrix& sa = acc.mutable_sa();
    DenseVector& sb = acc.mutable_sb();
    householder_in_place(sa, sb.span());
    const UpperTriangularView r(sa, d);
    const CgSolution sol = pcg_normal(r, sb.span().first(d), pre.p, tol, max_iters);
    return {sol.x, sol.iterations, acc.config().seed};
}

EstimateBundle solve_sketched_direct(SketchAccumulator&& acc) {
    require_solvable(acc);
    const std::size_t d = acc.dims();
    DenseMatrix& sa = acc.mutable_sa();
    DenseVector& sb = acc.mutable_sb();
    householder_in_place(sa, sb.span());
    return {solve_upper(sa, sb.span().first(d)), 0, acc.config().seed};
}

double gamma_factor(std::size_t m, std::size_t d) {
    if (m <= d)
        throw GammaUndefined("gamma = m/(m-d) needs m > d (m = " + std::to_string(m) + ", d = " + std::to_string(d) +
                             ")");
    return static_cast<double>(m) / static_cast<double>(m - d);
}

DenseMatrix sketched_inverse_covariance(const SketchAccumulator& acc) {
    require_solvable(acc);
    return spd_inverse(gram(acc.sa()));
}

GammaInverse gamma_inverse_covariance(const SketchAccumulator& acc) {
    const double gamma = gamma_factor(acc.config().m, acc.dims());
    DenseMatrix q = sketched_inverse_covariance(acc);
    return {(1.0 / gamma) * q, gamma};
}

DenseVector average_estimates(std::span<const EstimateBundle> bundles) {
    if (bundles.empty()) throw EmptyInput("average_estimates: no estimates");
    const std::size_t d = bundles.front().x.size();
    DenseVector mean(d);
    for (const auto& b : bundles) {
        if (b.x.size() != d) throw DimensionMismatch("average_estimates: estimates differ in dimension");
        axpy(1.0, b.x.span(), mean.span());
    }
    const double inv = 1.0 / static_cast<double>(bundles.size());
    for (std::size_t j = 0; j < d; ++j) mean[j] *= inv;
    return mean;
}

LossOracle::LossOracle(const DenseMatrix& a, const DenseVector& b)
    : a_(a), b_(b), x_star_(lstsq_exact(a, b.span())), loss_(squared_residual(a, x_star_.span(), b.span())),
      b_squared_(squared_norm(b.span())) {}

double LossOracle::loss(std::span<const double> x) const { return squared_residual(a_, x, b_.span()); }

double LossOracle::relative_excess_loss(std::span<const double> x) const {
    if (x.size() != a_.cols()) throw std::invalid_argument("relative_excess_loss: dimension mismatch");
    if (!(loss_ > 1e-12 * b_squared_))
        throw ConsistentSystem("relative excess loss undefined: L(x*) = " + std::to_string(loss_) +
                               " is negligible against ||b||^2");
    std::vector<double> diff(x.begin(), x.end());
    axpy(-1.0, x_star_.span(), diff);
    double excess = 0.0;
    for (std::size_t i = 0; i < a_.rows(); ++i) {
        const double t = dot(a_.row(i), diff);
        excess += t * t;
    }
    return excess / loss_;
}

double relative_excess_loss(const DenseMatrix& a, const DenseVector& b, std::span<const double> x) {
    return LossOracle(a, b).relative_excess_loss(x);
}

}  // namespace lessketch
