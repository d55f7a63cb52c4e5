#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

#include "lessketch/leverage.hpp"
#include "lessketch/less.hpp"
#include "lessketch/matrix.hpp"

namespace lessketch {

inline constexpr double kDefaultCgTolerance = 1e-10;

struct EstimateBundle {
    DenseVector x;
    std::size_t cg_iters = 0;
    std::uint64_t seed = 0;
};

struct GammaInverse {
    DenseMatrix q;  // (gamma (SA)^T SA)^{-1}
    double gamma = 1.0;
};

/// x~ = argmin ||(SA) x - Sb||. The sketch is triangularized in place (so the
/// accumulator is consumed) and CG preconditioned with pre.p is run on the
/// d x d triangular system, which has the same normal equations.
/// max_iters = 0 means 4d. Throws RankDeficient or NotConverged.
EstimateBundle solve_sketched(SketchAccumulator&& acc, const Preconditioner& pre,
                              double tol = kDefaultCgTolerance, std::size_t max_iters = 0);

/// Same estimate by back substitution on the triangularized sketch.
EstimateBundle solve_sketched_direct(SketchAccumulator&& acc);

/// gamma = m / (m - d). Throws GammaUndefined when m <= d.
double gamma_factor(std::size_t m, std::size_t d);

/// Throws GammaUndefined or RankDeficient.
GammaInverse gamma_inverse_covariance(const SketchAccumulator& acc);
/// ((SA)^T SA)^{-1} without the correction.
DenseMatrix sketched_inverse_covariance(const SketchAccumulator& acc);

/// Coordinate-wise mean. Throws EmptyInput on an empty list.
DenseVector average_estimates(std::span<const EstimateBundle> bundles);

/// Exact least-squares solution and loss of (a, b), reused across many
/// relative-excess-loss evaluations.
class LossOracle {
public:
    LossOracle(const DenseMatrix& a, const DenseVector& b);

    const DenseVector& x_star() const noexcept { return x_star_; }
    double optimal_loss() const noexcept { return loss_; }
    /// (L(x) - L(x*)) / L(x*) in the Pythagorean form ||A(x - x*)||^2 / L(x*).
    /// Throws ConsistentSystem when L(x*) <= 1e-12 ||b||^2.
    double relative_excess_loss(std::span<const double> x) const;
    double loss(std::span<const double> x) const;

private:
    const DenseMatrix& a_;
    const DenseVector& b_;
    DenseVector x_star_;
    double loss_ = 0.0;
    double b_squared_ = 0.0;
};

double relative_excess_loss(const DenseMatrix& a, const DenseVector& b, std::span<const double> x);

}  // namespace lessketch
