#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "lessketch/less.hpp"
#include "lessketch/matrix.hpp"
#include "lessketch/rows.hpp"

namespace lessketch {

struct LeverageScores {
    std::vector<double> scores;
    double beta1 = 1.0;  // l_i <= beta1 * approx_i
    double beta2 = 1.0;  // sum(approx) <= beta2 * d
    bool exact = false;
};

/// Squared row norms of Q from a thin QR of a. Throws RankDeficient.
LeverageScores exact_leverage_scores(const DenseMatrix& a);

inline constexpr std::size_t kDefaultProbeWidth = 16;

/// P = R^{-1} for the R factor of a sketch of A, together with the probe
/// `reduced` = P G (G a d x k Gaussian) used to estimate row norms of A P.
struct Preconditioner {
    DenseMatrix p;
    DenseMatrix reduced;
    double probe_scale = 1.0;  // 1/k for a Gaussian probe, 1 for the identity probe
    double floor = 0.0;        // smallest score ever returned

    std::size_t dims() const noexcept { return p.rows(); }
    std::size_t probe_width() const noexcept { return reduced.cols(); }
};

/// Score floor 1e-12 * d / n keeps every inclusion probability positive.
double score_floor(std::size_t n, std::size_t d);

/// Attaches a fresh Gaussian probe of width k (seeded) to P.
Preconditioner make_preconditioner(DenseMatrix p, std::size_t k, std::uint64_t seed, std::size_t n);
/// Diagnostic probe G = I: approx scores become ||a_i^T P||^2 exactly.
Preconditioner make_identity_probe(DenseMatrix p, std::size_t n);
/// P = R^{-1} from the upper triangle of the first d rows of `r_storage`.
Preconditioner preconditioner_from_r(const DenseMatrix& r_storage, std::size_t k, std::uint64_t seed, std::size_t n);

/// One-pass LessUniform configuration for the preconditioner sketch: row
/// density chosen so each sketch row has max(s, ln(d)^2) expected nonzeros.
LessConfig preconditioner_sketch_config(std::size_t n, std::size_t d, std::size_t m, double s, std::uint64_t seed);

/// Streams A once into a LessUniform sketch, factors it and returns P = R^{-1}
/// with a width-k probe. Throws RankDeficient when the sketch is singular.
Preconditioner build_preconditioner(RowStream& a_stream, const LessConfig& embed_cfg, std::size_t k,
                                    std::uint64_t seed);

/// max(probe_scale * ||row^T reduced||^2, floor).
double approx_leverage_score(std::span<const double> row, const Preconditioner& pre);

/// Scores for every row of a (one pass); beta fields left at 1.
LeverageScores approx_leverage_scores(const DenseMatrix& a, const Preconditioner& pre);

/// Fills beta1 = max_i l_i / approx_i and beta2 = sum(approx) / d from exact
/// scores (both at least 1).
void record_empirical_betas(LeverageScores& approx, const LeverageScores& exact);

}  // namespace lessketch
